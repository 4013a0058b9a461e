// End-to-end acceptance checks, one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <cstring>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "adarank/cli/commands.hpp"
#include "adarank/data/interactions.hpp"
#include "adarank/data/prepare.hpp"
#include "adarank/data/sampling.hpp"
#include "adarank/data/synthetic.hpp"
#include "adarank/eval/evaluate.hpp"
#include "adarank/eval/metrics.hpp"
#include "adarank/model/grad_checks.hpp"
#include "adarank/train/checkpoint.hpp"
#include "adarank/train/param_count.hpp"
#include "adarank/train/trainer.hpp"

using namespace adarank;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void progress(const std::string& msg) { std::cerr << "  .. " << msg << std::endl; }

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Desk configuration shared by the directional criteria.
struct Desk {
  std::size_t dim = 32;
  std::size_t hidden = 32;
  std::size_t slots = 10;
  double lr = 1e-3;
  std::size_t batch_size = 256;
  std::size_t max_epochs = 10;
  std::size_t patience = 3;

  model::RankerConfig ranker(const data::Dataset& ds) const {
    model::RankerConfig rc;
    rc.num_items = ds.catalog.num_items();
    rc.num_users = ds.num_users;
    rc.dim = dim;
    rc.hidden = hidden;
    return rc;
  }
  model::AdaptorConfig adaptor() const {
    model::AdaptorConfig ac;
    ac.slots = slots;
    return ac;
  }
  train::TrainConfig training(std::uint64_t seed) const {
    train::TrainConfig tc;
    tc.lr = lr;
    tc.batch_size = batch_size;
    tc.max_epochs = max_epochs;
    tc.patience = patience;
    tc.seed = seed;
    return tc;
  }
};

const std::vector<std::uint64_t> kSeeds{1, 2, 3};

/// Small trained pair for the property checks.
struct ToyModels {
  data::Dataset ds;
  model::RankerConfig rc;
  model::Model base;
  model::Model ada;
};

ToyModels toy_models() {
  data::SyntheticConfig sc;
  sc.num_users = 200;
  sc.num_items = 200;
  sc.num_categories = 5;
  ToyModels t;
  t.ds = data::prepare_dataset(data::generate_synthetic(sc, 11), data::PrepareConfig{}, 11);
  t.rc.num_items = t.ds.catalog.num_items();
  t.rc.num_users = t.ds.num_users;
  t.rc.dim = 16;
  t.rc.hidden = 16;
  train::TrainConfig tc;
  tc.batch_size = 64;
  tc.max_epochs = 2;
  tc.seed = 11;
  t.base = train::train_base(t.rc, t.ds.train, t.ds.valid, tc).model;
  tc.max_steps = 30;
  model::AdaptorConfig ac;
  ac.slots = 4;
  t.ada = train::train_adapter(t.base.ranker, t.rc, ac, t.ds.train, t.ds.valid, tc,
                               train::Strategy::kFinetuneAdaptor)
              .model;
  return t;
}

data::CandidateGroup random_group(Rng& rng, const model::RankerConfig& rc) {
  data::CandidateGroup g;
  g.user = static_cast<data::UserId>(rng.uniform_int(rc.num_users));
  const std::size_t len = 1 + rng.uniform_int(50);
  for (std::size_t i = 0; i < len; ++i) g.history.push_back(static_cast<data::ItemId>(rng.uniform_int(rc.num_items)));
  std::set<data::ItemId> used;
  while (used.size() < data::kGroupSize) used.insert(static_cast<data::ItemId>(rng.uniform_int(rc.num_items)));
  std::vector<data::ItemId> c(used.begin(), used.end());
  for (std::size_t i = c.size(); i > 1; --i) std::swap(c[i - 1], c[rng.uniform_int(i)]);
  g.positive = c[0];
  std::copy(c.begin() + 1, c.end(), g.negatives.begin());
  return g;
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string where;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    model::LossCheckSetup setup;  // d=8, seq=5, m=6, L=3, double precision
    setup.seed = seed;
    const auto report = model::full_loss_grad_check(setup);
    if (report.max_rel_error >= worst) {
      worst = report.max_rel_error;
      where = report.worst_parameter;
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 60.0,
          fmt("max relative error %.2e (worst tensor %s) over 3 seeds, %.2f s", worst, where.c_str(), secs)};
}

Outcome criterion2(const ToyModels& t) {
  const fs::path dir = fs::temp_directory_path() / "adarank_acceptance_c2";
  fs::create_directories(dir);
  train::save_checkpoint(dir / "base.ckpt", {t.base, ""});
  train::save_checkpoint(dir / "ada.ckpt", {t.ada, ""});
  const auto base = train::load_checkpoint(dir / "base.ckpt");
  const auto ada = train::load_checkpoint(dir / "ada.ckpt");
  fs::remove_all(dir);
  Rng rng(2);
  model::Scorer scorer;
  std::size_t equal = 0, differs_on = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto g = random_group(rng, t.rc);
    const auto off = scorer.score(ada.model, g, false);
    const auto ref = scorer.score(base.model, g, false);
    const auto on = scorer.score(ada.model, g, true);
    equal += std::memcmp(off.data(), ref.data(), sizeof off) == 0;
    differs_on += std::memcmp(on.data(), ref.data(), sizeof on) != 0;
  }
  return {equal == 1000, fmt("%zu/1000 groups bitwise identical with the adaptor off (adaptor on differs on %zu)",
                             equal, differs_on)};
}

Outcome criterion3(const ToyModels& t) {
  Rng rng(3);
  std::size_t stable = 0, total = 0;
  for (int i = 0; i < 100; ++i) {
    const auto g = random_group(rng, t.rc);
    const auto cands = g.candidates();
    std::vector<std::uint32_t> order(cands.begin(), cands.end());
    auto extract = [&](const std::vector<std::uint32_t>& ids) {
      Graph<float> graph;
      const auto theta = model::bind(graph, t.ada.ranker.params, false);
      const auto phi = model::bind(graph, t.ada.adaptor->params, false);
      const Var q = graph.gather_rows(theta["item_embedding"], ids);
      const auto d = model::extract_distribution(graph, phi, model::ExtractorMode::kNp, q, model::Phase::kEval, nullptr);
      return std::pair{Tensor<float>(graph.value(d.mu)), Tensor<float>(graph.value(d.log_sigma))};
    };
    const auto ref = extract(order);
    for (int p = 0; p < 20; ++p) {
      for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.uniform_int(k)]);
      const auto got = extract(order);
      stable += got.first == ref.first && got.second == ref.second;
      ++total;
    }
  }
  return {stable == total, fmt("%zu/%zu permutations leave (mu, sigma) bitwise unchanged", stable, total)};
}

Outcome criterion4(const ToyModels& t) {
  const auto before = train::section_checksum(t.base.ranker.params, "theta");
  train::TrainConfig tc;
  tc.batch_size = 32;
  tc.max_epochs = 1000;
  tc.patience = 1000;
  tc.max_steps = 100;
  tc.seed = 4;
  tc.lr = 1e-2;
  model::AdaptorConfig ac;
  ac.slots = 4;
  const auto r = train::train_adapter(t.base.ranker, t.rc, ac, t.ds.train, t.ds.valid, tc,
                                      train::Strategy::kFinetuneAdaptor);
  const auto after = train::section_checksum(r.model.ranker.params, "theta");
  return {before == after && r.steps == 100,
          fmt("theta crc32 %08x before, %08x after %zu steps", before, after, r.steps)};
}

Outcome criterion5() {
  Rng rng(5);
  std::size_t ok = 0, with_ties = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<float> scores(20), labels(20, 0.0f);
    std::vector<data::ItemId> items(20);
    std::iota(items.begin(), items.end(), 0u);
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng.uniform_int(i)]);
    for (auto& s : scores) s = static_cast<float>(rng.uniform_int(6)) / 5.0f;
    const std::size_t pos = rng.uniform_int(20);
    labels[pos] = 1.0f;
    double wins = 0.0;
    std::size_t rank = 1, ties = 0;
    for (std::size_t j = 0; j < 20; ++j) {
      if (j == pos) continue;
      wins += scores[pos] > scores[j] ? 1.0 : scores[pos] == scores[j] ? 0.5 : 0.0;
      rank += scores[j] > scores[pos] || (scores[j] == scores[pos] && items[j] < items[pos]);
      ties += scores[j] == scores[pos];
    }
    with_ties += ties > 0;
    ok += eval::group_auc(scores, labels) == wins / 19.0 &&
          eval::group_ndcg(scores, labels, items) == 1.0 / std::log2(static_cast<double>(rank) + 1.0);
  }
  return {ok == 100, fmt("%zu/100 groups match the brute-force oracles exactly (%zu with ties)", ok, with_ties)};
}

Outcome criterion6() {
  data::SyntheticConfig sc;
  const auto ds = data::load_base_dataset(data::generate_synthetic(sc, 6), 10);
  Rng rng(6);
  std::array<std::size_t, 4> by_d{};
  std::size_t pop = 0;
  const std::size_t n = 10000;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& seq = ds.sequences[rng.uniform_int(ds.sequences.size())];
    data::MixerTrace trace;
    data::mixer_sample_negatives(rng, seq.items[rng.uniform_int(seq.items.size())], ds.catalog, &trace);
    ++by_d[static_cast<std::size_t>(trace.num_categories)];
    pop += trace.popularity_branch;
  }
  double worst_d = 0.0;
  for (int d = 1; d <= 3; ++d) worst_d = std::max(worst_d, std::abs(by_d[d] / double(n) - 1.0 / 3.0));
  const double pop_rate = pop / double(n);

  data::RecallConfig rc;
  rc.dim = 16;
  rc.mf_epochs = 2;
  rc.i2i_epochs = 1;
  auto index = data::build_dataset_index(ds, rc, 6);
  std::size_t budgets_ok = 0, recall_n = 0;
  for (const auto& mix : {std::array<double, 3>{0.2, 0.5, 0.3}, std::array<double, 3>{0.4, 0.1, 0.5}}) {
    for (std::size_t i = 0; i < 5000; ++i) {
      const auto& seq = ds.sequences[rng.uniform_int(ds.sequences.size())];
      const std::size_t pos = seq.items.size() - 1;
      data::RecallTrace trace;
      data::recall_sample_negatives(rng, seq.user, std::span(seq.items).first(pos), seq.items[pos], index, mix, &trace);
      budgets_ok += trace.counts[0] + trace.counts[1] + trace.counts[2] == 19;
      ++recall_n;
    }
  }
  const bool pass = worst_d <= 0.02 && std::abs(pop_rate - 0.5) <= 0.02 && budgets_ok == recall_n;
  return {pass, fmt("P(d=1,2,3) = %.4f %.4f %.4f (max dev %.4f), popularity branch %.4f, %zu/%zu recall budgets sum "
                    "to 19",
                    by_d[1] / double(n), by_d[2] / double(n), by_d[3] / double(n), worst_d, pop_rate, budgets_ok,
                    recall_n)};
}

/// Shape walk over the declared default architecture, written out by hand.
std::pair<std::size_t, std::size_t> shape_walk(std::size_t n, std::size_t d, std::size_t h, std::size_t L) {
  const std::vector<std::pair<std::size_t, std::size_t>> theta{
      {n, d}, {d, 3 * d}, {d, 3 * d}, {1, 3 * d}, {1, 3 * d}, {2 * d, h}, {1, h}, {h, 1}, {1, 1}};
  std::vector<std::pair<std::size_t, std::size_t>> phi{{d, d}, {1, d}, {d, d}, {1, d}, {d, d}, {d, d}, {d, d},
                                                       {d, d}, {1, d}, {d, 1}, {1, 1},  // film scale
                                                       {d, d}, {1, d}, {d, 1}, {1, 1}};  // film shift
  for (std::size_t numel : {2 * d * h, h, h, std::size_t{1}}) {
    phi.push_back({L, numel});
    phi.push_back({L, d});
  }
  auto total = [](const auto& shapes) {
    std::size_t s = 0;
    for (const auto& [r, c] : shapes) s += r * c;
    return s;
  };
  return {total(theta), total(phi)};
}

Outcome criterion7() {
  const fs::path dir = fs::temp_directory_path() / "adarank_acceptance_c7";
  fs::create_directories(dir);
  std::string detail;
  bool pass = true;
  for (std::size_t items : {std::size_t{500}, std::size_t{10676}}) {
    model::RankerConfig rc;
    rc.num_items = items;
    rc.num_users = 100;
    Rng rng(7);
    model::Model m{model::BaseRanker<float>::init(rc, rng), model::Adaptor<float>::init(model::AdaptorConfig{}, rc, rng)};
    train::save_checkpoint(dir / "default.ckpt", {m, ""});
    std::ostringstream out, err;
    const int code = cli::run_cli({"inspect", "--checkpoint", (dir / "default.ckpt").string(), "--out", dir.string()},
                                  out, err);
    std::size_t theta = 0, phi = 0;
    std::ifstream in(dir / "params.tsv");
    for (std::string line; std::getline(in, line);) {
      if (line.rfind("params\ttheta\tcounted\t", 0) == 0) theta = std::stoul(line.substr(line.rfind('\t') + 1));
      if (line.rfind("params\tphi\tcounted\t", 0) == 0) phi = std::stoul(line.substr(line.rfind('\t') + 1));
    }
    const auto [want_theta, want_phi] = shape_walk(items, 64, 64, 10);
    const double ratio = static_cast<double>(phi) / static_cast<double>(theta);
    pass &= code == 0 && theta == want_theta && phi == want_phi && phi == 114828;
    if (items == 10676) pass &= ratio < 0.20;
    detail += fmt("%s%zu items: |theta| %zu (walk %zu), |phi| %zu (walk %zu), ratio %.3f", detail.empty() ? "" : "; ",
                  items, theta, want_theta, phi, want_phi, ratio);
  }
  fs::remove_all(dir);
  return {pass, detail};
}

struct MixerRun {
  double base_ndcg = 0.0;
  std::map<train::Strategy, double> ndcg;
  double seconds_c8 = 0.0;
};

MixerRun mixer_run(const Desk& desk, std::uint64_t seed) {
  const auto t0 = Clock::now();
  data::SyntheticConfig sc;  // 2000 users, 500 items, 10 categories
  const auto ds = data::prepare_dataset(data::generate_synthetic(sc, seed), data::PrepareConfig{}, seed);
  const auto rc = desk.ranker(ds);
  const auto tc = desk.training(seed);
  MixerRun r;
  const auto base = train::train_base(rc, ds.train, ds.valid, tc);
  r.base_ndcg = eval::evaluate(base.model, ds.test, false).overall.ndcg;
  progress(fmt("seed %llu base: best epoch %zu, test NDCG %.4f (%.0f s)", (unsigned long long)seed, base.best_epoch,
               r.base_ndcg, seconds_since(t0)));
  for (auto s : {train::Strategy::kFinetuneAdaptor, train::Strategy::kFinetuneJoint, train::Strategy::kScratchJoint}) {
    const auto ada = train::train_adapter(base.model.ranker, rc, desk.adaptor(), ds.train, ds.valid, tc, s);
    r.ndcg[s] = eval::evaluate(ada.model, ds.test, true).overall.ndcg;
    if (s == train::Strategy::kFinetuneAdaptor) r.seconds_c8 = seconds_since(t0);
    progress(fmt("seed %llu %s: best epoch %zu, test NDCG %.4f (%.0f s)", (unsigned long long)seed,
                 train::to_string(s), ada.best_epoch, r.ndcg[s], seconds_since(t0)));
  }
  return r;
}

struct DualRun {
  double rel_same = 0.0, rel_new = 0.0;
};

DualRun dual_run(const Desk& desk, std::uint64_t seed) {
  const auto t0 = Clock::now();
  data::PrepareConfig pc;
  pc.sampler = data::SamplerKind::kRecall;
  std::optional<data::RecallIndex> index;
  const auto ds = data::prepare_dataset(data::generate_synthetic(data::SyntheticConfig{}, seed), pc, seed, &index);
  const auto rc = desk.ranker(ds);
  const auto tc = desk.training(seed);
  const auto base = train::train_base(rc, ds.train, ds.valid, tc);
  const auto ada = train::train_adapter(base.model.ranker, rc, desk.adaptor(), ds.train, ds.valid, tc,
                                        train::Strategy::kFinetuneAdaptor);
  const auto r = eval::dual_distribution_eval(base.model, ada.model, ds, *index, pc, seed);
  progress(fmt("seed %llu dual: NDCG base/ada same %.4f/%.4f new %.4f/%.4f (%.0f s)", (unsigned long long)seed,
               r.base_same.overall.ndcg, r.ada_same.overall.ndcg, r.base_new.overall.ndcg, r.ada_new.overall.ndcg,
               seconds_since(t0)));
  return {r.rel_ndcg_same, r.rel_ndcg_new};
}

Outcome criterion11() {
  const fs::path root = fs::temp_directory_path() / "adarank_acceptance_c11";
  fs::remove_all(root);
  std::vector<std::string> metrics;
  int failures = 0;
  for (const char* run : {"a", "b"}) {
    const std::string out = (root / run).string();
    const std::vector<std::string> common{"--out", out, "--seed", "9", "--num-users", "300", "--num-items", "200",
                                          "--num-categories", "5", "--dim", "16", "--hidden", "16", "--slots", "4",
                                          "--max-epochs", "3"};
    for (const char* c : {"generate", "prepare", "train-base", "train-adapt", "eval"}) {
      std::vector<std::string> args{c};
      args.insert(args.end(), common.begin(), common.end());
      std::ostringstream o, e;
      failures += cli::run_cli(args, o, e) != 0;
    }
    std::ifstream in(root / run / "metrics.tsv", std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    metrics.push_back(s.str());
  }
  std::size_t files = 0, same = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    std::ifstream a(entry.path(), std::ios::binary), b(root / "b" / entry.path().filename(), std::ios::binary);
    std::ostringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    ++files;
    same += sa.str() == sb.str();
  }
  fs::remove_all(root);
  const bool pass = failures == 0 && !metrics[0].empty() && metrics[0] == metrics[1] && same == files;
  return {pass, fmt("metric files %s; %zu/%zu artifacts byte-identical across two runs", metrics[0] == metrics[1] ?
                    "identical" : "differ", same, files)};
}

}  // namespace

int main(int argc, char** argv) {
  // --allow-red N[,M]: criteria whose failure is documented and does not
  // fail the process. They still print FAIL.
  std::set<int> allow_red;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    auto list = [&](std::set<int>& into) {
      if (i + 1 >= argc) return;
      std::stringstream ss(argv[++i]);
      for (std::string x; std::getline(ss, x, ',');) into.insert(std::stoi(x));
    };
    if (a == "--allow-red") list(allow_red);
    if (a == "--only") list(only);
  }
  auto wanted = [&](int c) { return only.empty() || only.contains(c); };

  std::vector<std::pair<int, Outcome>> results;
  std::vector<std::string> names(12);
  names[1] = "gradient correctness";
  names[2] = "plug-and-play bit-equivalence";
  names[3] = "NP permutation invariance";
  names[4] = "freeze invariant";
  names[5] = "metric oracles";
  names[6] = "sampler statistics";
  names[7] = "parameter accounting";
  names[8] = "synthetic NDCG gain of the adapted GRU";
  names[9] = "larger relative gain under New_Dis";
  names[10] = "strategy ordering";
  names[11] = "end-to-end determinism";

  auto record = [&](int c, Outcome o) {
    std::cerr << (o.pass ? "PASS " : "FAIL ") << c << std::endl;
    results.emplace_back(c, std::move(o));
  };

  if (wanted(1)) record(1, criterion1());
  if (wanted(2) || wanted(3) || wanted(4)) {
    progress("training toy models");
    const auto toy = toy_models();
    if (wanted(2)) record(2, criterion2(toy));
    if (wanted(3)) record(3, criterion3(toy));
    if (wanted(4)) record(4, criterion4(toy));
  }
  if (wanted(5)) record(5, criterion5());
  if (wanted(6)) record(6, criterion6());
  if (wanted(7)) record(7, criterion7());

  const Desk desk;
  if (wanted(8) || wanted(10)) {
    std::vector<MixerRun> runs;
    for (auto seed : kSeeds) runs.push_back(mixer_run(desk, seed));
    if (wanted(8)) {
      bool pass = true;
      double secs = 0.0;
      std::string gains;
      for (const auto& r : runs) {
        const double gain = r.ndcg.at(train::Strategy::kFinetuneAdaptor) - r.base_ndcg;
        pass &= gain >= 0.01;
        secs += r.seconds_c8;
        gains += fmt("%s%+.4f", gains.empty() ? "" : ", ", gain);
      }
      pass &= secs < 15 * 60;
      record(8, {pass, "test NDCG gain per seed " + gains + fmt(" (need >= +0.01 each); %.0f s total", secs)});
    }
    if (wanted(10)) {
      std::map<train::Strategy, double> mean;
      for (const auto& r : runs) {
        for (const auto& [s, v] : r.ndcg) mean[s] += v / static_cast<double>(runs.size());
      }
      const double scratch = mean[train::Strategy::kScratchJoint];
      const double joint = mean[train::Strategy::kFinetuneJoint];
      const double adaptor = mean[train::Strategy::kFinetuneAdaptor];
      record(10, {scratch <= std::min(joint, adaptor),
                  fmt("mean test NDCG scratch_joint %.4f, finetune_joint %.4f, finetune_adaptor %.4f", scratch, joint,
                      adaptor)});
    }
  }
  if (wanted(9)) {
    int wins = 0;
    std::string detail;
    for (auto seed : kSeeds) {
      const auto r = dual_run(desk, seed);
      wins += r.rel_new > r.rel_same;
      detail += fmt("%sseed %llu same %+.4f new %+.4f", detail.empty() ? "" : "; ", (unsigned long long)seed,
                    r.rel_same, r.rel_new);
    }
    record(9, {wins >= 2, fmt("New_Dis gain larger on %d/3 seeds (relative NDCG: ", wins) + detail + ")"});
  }
  if (wanted(11)) record(11, criterion11());

  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  bool ok = true;
  for (const auto& [c, o] : results) {
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c << " (" << names[c] << "): " << o.detail;
    if (!o.pass && allow_red.contains(c)) std::cout << " [known red, see decisions ledger]";
    std::cout << '\n';
    ok &= o.pass || allow_red.contains(c);
  }
  return ok ? 0 : 1;
}
