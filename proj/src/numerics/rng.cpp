#include "adarank/numerics/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace adarank {
namespace {

constexpr std::uint64_t splitmix64(std::uint64_t& x) noexcept {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) noexcept {
  std::uint64_t x = seed;
  for (auto& word : s_) word = splitmix64(x);
}

Rng Rng::stream(std::uint64_t seed, std::string_view tag, std::uint64_t a,
                std::uint64_t b) noexcept {
  std::uint64_t key = seed;
  std::uint64_t mixed = splitmix64(key);
  key = mixed ^ fnv1a64(tag);
  mixed = splitmix64(key);
  key = mixed ^ a;
  mixed = splitmix64(key);
  key = mixed ^ b;
  return Rng(splitmix64(key));
}

std::uint64_t Rng::next_u64() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_int: empty range");
  // Rejection on the top of the range keeps the draw unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::gaussian() noexcept {
  // Box-Muller without caching the second value, so each draw consumes
  // exactly two words of the stream.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

bool Rng::bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bernoulli: p outside [0, 1]");
  return uniform() < p;
}

std::size_t Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("categorical: negative or non-finite weight");
    }
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("categorical: weights sum to zero");
  const double target = uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    acc += weights[i];
    if (target < acc) return i;
  }
  return last_positive;
}

void check_probability_vector(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("probability vector is empty");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("probability vector has a negative or non-finite entry");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("probability vector sums to " + std::to_string(total) +
                                ", expected 1");
  }
}

std::vector<std::size_t> Rng::multinomial(std::size_t n, std::span<const double> probs) {
  check_probability_vector(probs);
  std::vector<std::size_t> counts(probs.size(), 0);
  for (std::size_t i = 0; i < n; ++i) ++counts[categorical(probs)];
  return counts;
}

double Rng::log_gamma_draw(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
  if (shape < 1.0) {
    // Gamma(a) = Gamma(a + 1) * U^(1/a), evaluated in log space.
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return log_gamma_draw(shape + 1.0) + std::log(u) / shape;
  }
  // Marsaglia-Tsang.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = gaussian();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    double u = uniform();
    while (u <= 0.0) u = uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return std::log(d * v);
  }
}

std::vector<double> Rng::dirichlet(double alpha, std::size_t k) {
  if (k == 0) throw std::invalid_argument("dirichlet: k must be positive");
  std::vector<double> logs(k);
  double peak = -INFINITY;
  for (auto& l : logs) {
    l = log_gamma_draw(alpha);
    peak = std::max(peak, l);
  }
  double total = 0.0;
  std::vector<double> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    out[i] = std::exp(logs[i] - peak);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

}  // namespace adarank
