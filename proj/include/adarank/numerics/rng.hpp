#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace adarank {

/// 64-bit FNV-1a, used to turn purpose tags into stream keys.
constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// xoshiro256** seeded through SplitMix64. Streams are keyed by
/// (seed, purpose tag, a, b) so any sampling site can derive its own
/// substream without depending on the order in which other sites drew.
///
/// Only integer arithmetic and IEEE double operations are used, so a given
/// key produces the same stream on every platform (gaussian draws depend on
/// std::log / std::cos / std::sqrt being correctly rounded).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept;

  /// Independent substream for (seed, tag, a, b).
  static Rng stream(std::uint64_t seed, std::string_view tag, std::uint64_t a = 0,
                    std::uint64_t b = 0) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);
  double gaussian() noexcept;
  bool bernoulli(double p);
  /// Index drawn proportionally to nonnegative weights with a positive sum.
  std::size_t categorical(std::span<const double> weights);
  /// Counts over probs.size() outcomes summing to n. probs must be
  /// nonnegative and sum to 1 within 1e-9.
  std::vector<std::size_t> multinomial(std::size_t n, std::span<const double> probs);
  /// log of a Gamma(shape, 1) draw; stays finite for very small shapes.
  double log_gamma_draw(double shape);
  /// Symmetric Dirichlet(alpha) over k outcomes.
  std::vector<double> dirichlet(double alpha, std::size_t k);

 private:
  std::uint64_t s_[4];
};

/// Validates a probability vector: nonnegative entries summing to 1 within
/// 1e-9. Throws std::invalid_argument otherwise.
void check_probability_vector(std::span<const double> probs);

}  // namespace adarank
