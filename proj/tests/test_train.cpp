#include <cmath>
#include <filesystem>
#include <sstream>
#include <vector>

#include "adarank/data/prepare.hpp"
#include "adarank/data/synthetic.hpp"
#include "adarank/eval/evaluate.hpp"
#include "adarank/train/checkpoint.hpp"
#include "adarank/train/param_count.hpp"
#include "adarank/train/trainer.hpp"
#include "doctest.h"

using namespace adarank;
using namespace adarank::train;
using model::AdaptorConfig;
using model::RankerConfig;

namespace {

struct Toy {
  data::Dataset dataset;
  RankerConfig rc;

  Toy() {
    data::SyntheticConfig sc;
    sc.num_users = 60;
    sc.num_items = 120;
    sc.num_categories = 4;
    dataset = data::prepare_dataset(data::generate_synthetic(sc, 3), data::PrepareConfig{}, 3);
    rc.num_items = dataset.catalog.num_items();
    rc.num_users = dataset.num_users;
    rc.dim = 8;
    rc.hidden = 8;
  }

  std::span<const data::CandidateGroup> train(std::size_t n = 50) const {
    return std::span(dataset.train).first(std::min(n, dataset.train.size()));
  }
};

TrainConfig quick(std::size_t steps, std::size_t batch = 10) {
  TrainConfig c;
  c.batch_size = batch;
  c.max_epochs = 1000;
  c.patience = 1000;
  c.max_steps = steps;
  c.seed = 7;
  c.lr = 1e-2;
  return c;
}

double mean_eval_loss(const model::Model& m, std::span<const data::CandidateGroup> groups, bool adaptor) {
  model::Scorer scorer;
  double sum = 0.0;
  for (const auto& g : groups) sum += group_loss(scorer.score(m, g, adaptor));
  return sum / static_cast<double>(groups.size());
}

std::vector<float> all_scores(const model::Model& m, std::span<const data::CandidateGroup> groups, bool adaptor) {
  model::Scorer scorer;
  std::vector<float> out;
  for (const auto& g : groups) {
    const auto s = scorer.score(m, g, adaptor);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

}  // namespace

TEST_CASE("bce loss reference values") {
  std::vector<float> half(20, 0.5f);
  CHECK(group_loss(half) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  std::vector<float> perfect(20, 0.0f);
  perfect[0] = 1.0f;
  CHECK(group_loss(perfect) == doctest::Approx(1e-7).epsilon(1e-6));
  // In single precision the clamp 1 - 1e-7 rounds to 1 - 2^-23.
  Graph<float> g;
  Tensor<float> s(20, 1), labels(20, 1);
  s[0] = 1.0f;
  labels[0] = 1.0f;
  const double loss = g.value(g.bce_mean(g.constant(s), labels))[0];
  CHECK(loss > 1e-7);
  CHECK(loss == doctest::Approx(1.19e-7).epsilon(0.01));
}

TEST_CASE("base training lowers the training loss and logs every epoch") {
  Toy toy;
  const auto train = toy.train();
  Rng rng = Rng::stream(7, "init/theta");
  model::Model init{model::BaseRanker<float>::init(toy.rc, rng), std::nullopt};
  const auto result = train_base(toy.rc, train, toy.dataset.valid, quick(200));
  CHECK(result.steps == 200);
  REQUIRE(result.log.size() == 41);
  CHECK(std::isnan(result.log[0].loss));
  CHECK(result.log[0].step == 0);
  CHECK(result.log.back().step == 200);
  CHECK(result.log.back().loss < result.log[1].loss);

  CHECK(mean_eval_loss(result.model, train, false) < mean_eval_loss(init, train, false));
  CHECK(result.log[0].valid_gauc == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("training is deterministic for a fixed seed") {
  Toy toy;
  const auto a = train_base(toy.rc, toy.train(), toy.dataset.valid, quick(30));
  const auto b = train_base(toy.rc, toy.train(), toy.dataset.valid, quick(30));
  CHECK(serialize({a.model, ""}) == serialize({b.model, ""}));
  std::ostringstream la, lb;
  write_log(la, a.log);
  write_log(lb, b.log);
  CHECK(la.str() == lb.str());
}

TEST_CASE("early stopping keeps the best validation epoch") {
  Toy toy;
  TrainConfig c = quick(0, 50);
  c.max_epochs = 30;
  c.patience = 3;
  const auto r = train_base(toy.rc, toy.train(), toy.dataset.valid, c);
  double best = r.log[0].valid_gauc;
  std::size_t best_epoch = 0;
  for (const auto& row : r.log) {
    if (row.valid_gauc > best) {
      best = row.valid_gauc;
      best_epoch = row.epoch;
    }
  }
  CHECK(r.best_epoch == best_epoch);
  CHECK(r.best_valid_gauc == best);
  CHECK(eval::evaluate(r.model, toy.dataset.valid, false).overall.gauc == best);
  if (r.log.size() < 31) CHECK(r.log.back().epoch - best_epoch == 3);
}

TEST_CASE("finetune_adaptor never changes theta") {
  Toy toy;
  const auto base = train_base(toy.rc, toy.train(), toy.dataset.valid, quick(20));
  const auto before = section_checksum(base.model.ranker.params, "theta");
  AdaptorConfig ac;
  ac.slots = 3;
  const auto r = train_adapter(base.model.ranker, toy.rc, ac, toy.train(), toy.dataset.valid, quick(100),
                               Strategy::kFinetuneAdaptor);
  CHECK(r.steps == 100);
  CHECK(section_checksum(r.model.ranker.params, "theta") == before);
  Rng rng = Rng::stream(7, "init/phi");
  const auto init_phi = model::Adaptor<float>::init(ac, toy.rc, rng);
  CHECK(section_checksum(r.model.adaptor->params, "phi") != section_checksum(init_phi.params, "phi"));
}

TEST_CASE("joint strategies update theta and need a base when finetuning") {
  Toy toy;
  const auto base = train_base(toy.rc, toy.train(), toy.dataset.valid, quick(10));
  AdaptorConfig ac;
  ac.slots = 3;
  const auto joint = train_adapter(base.model.ranker, toy.rc, ac, toy.train(), toy.dataset.valid, quick(10),
                                   Strategy::kFinetuneJoint);
  CHECK(section_checksum(joint.model.ranker.params, "theta") !=
        section_checksum(base.model.ranker.params, "theta"));
  const auto scratch =
      train_adapter(std::nullopt, toy.rc, ac, toy.train(), toy.dataset.valid, quick(10), Strategy::kScratchJoint);
  CHECK(scratch.model.adaptor.has_value());
  CHECK_THROWS_AS(train_adapter(std::nullopt, toy.rc, ac, toy.train(), toy.dataset.valid, quick(10),
                                Strategy::kFinetuneAdaptor),
                  std::invalid_argument);
  RankerConfig other = toy.rc;
  other.dim = 4;
  CHECK_THROWS_AS(train_adapter(base.model.ranker, other, ac, toy.train(), toy.dataset.valid, quick(10),
                                Strategy::kFinetuneJoint),
                  std::invalid_argument);
  CHECK(parse_strategy("finetune_adaptor") == Strategy::kFinetuneAdaptor);
  CHECK(parse_strategy("scratch_joint") == Strategy::kScratchJoint);
  CHECK(parse_strategy("finetune_joint") == Strategy::kFinetuneJoint);
  CHECK_THROWS_AS(parse_strategy("joint"), std::invalid_argument);
}

TEST_CASE("identity-initialized adaptor starts at the base model's validation metrics") {
  Toy toy;
  const auto base = train_base(toy.rc, toy.train(), toy.dataset.valid, quick(20));
  const auto report = eval::evaluate(base.model, toy.dataset.valid, false);
  const auto r = train_adapter(base.model.ranker, toy.rc, AdaptorConfig{.slots = 3}, toy.train(),
                               toy.dataset.valid, quick(1), Strategy::kFinetuneAdaptor);
  // Pool softmax weights sum to one only up to rounding, so scores agree to
  // float precision and ties may rarely flip.
  CHECK(r.log[0].valid_gauc == doctest::Approx(report.overall.gauc).epsilon(1e-3));
  CHECK(r.log[0].valid_ndcg == doctest::Approx(report.overall.ndcg).epsilon(1e-3));
}

TEST_CASE("non-finite parameters abort with a divergence diagnostic") {
  Toy toy;
  auto base = train_base(toy.rc, toy.train(), toy.dataset.valid, quick(2)).model.ranker;
  base.params.at("pred_b2")[0] = std::nanf("");
  CHECK_THROWS_AS(train_adapter(base, toy.rc, AdaptorConfig{.slots = 3}, toy.train(), toy.dataset.valid,
                                quick(5), Strategy::kFinetuneAdaptor),
                  TrainingDiverged);
  TrainConfig bad = quick(5);
  bad.lr = 0.0;
  CHECK_THROWS_AS(train_base(toy.rc, toy.train(), toy.dataset.valid, bad), std::invalid_argument);
}

TEST_CASE("checkpoints round-trip bitwise and reject corruption") {
  Toy toy;
  const auto base = train_base(toy.rc, toy.train(), toy.dataset.valid, quick(5));
  const auto ada = train_adapter(base.model.ranker, toy.rc, AdaptorConfig{.slots = 3}, toy.train(),
                                 toy.dataset.valid, quick(5), Strategy::kFinetuneAdaptor);
  for (const auto* m : {&base.model, &ada.model}) {
    const Checkpoint c{*m, "seed=7\n"};
    const std::string bytes = serialize(c);
    const auto back = deserialize(bytes);
    CHECK(serialize(back) == bytes);
    CHECK(back.run_config == "seed=7\n");
    CHECK(back.model.adaptor.has_value() == m->adaptor.has_value());

    const auto path = std::filesystem::temp_directory_path() / "adarank_test.ckpt";
    save_checkpoint(path, c);
    CHECK(serialize(load_checkpoint(path)) == bytes);
    std::filesystem::remove(path);

    std::string flipped = bytes;
    flipped[bytes.size() - 10] ^= 0x1;
    CHECK_THROWS_AS(deserialize(flipped), CheckpointError);
    CHECK_THROWS_AS(deserialize(bytes.substr(0, bytes.size() - 3)), CheckpointError);
    CHECK_THROWS_AS(deserialize("XDRK" + bytes.substr(4)), CheckpointError);
    std::string version = bytes;
    version[4] = 9;
    CHECK_THROWS_AS(deserialize(version), CheckpointError);
    CHECK_THROWS_AS(deserialize(bytes + "x"), CheckpointError);
  }
}

TEST_CASE("plug-and-play: adaptor off reproduces the base checkpoint bitwise") {
  Toy toy;
  const auto base = train_base(toy.rc, toy.train(), toy.dataset.valid, quick(10));
  const auto ada = train_adapter(base.model.ranker, toy.rc, AdaptorConfig{.slots = 3}, toy.train(),
                                 toy.dataset.valid, quick(10), Strategy::kFinetuneAdaptor);
  const auto base_ck = deserialize(serialize({base.model, ""}));
  const auto ada_ck = deserialize(serialize({ada.model, ""}));
  const auto& groups = toy.dataset.train;
  REQUIRE(groups.size() >= 1000);
  const std::span first(groups.data(), 1000);
  CHECK(all_scores(ada_ck.model, first, false) == all_scores(base_ck.model, first, true));
}

TEST_CASE("parameter counts match the closed forms for every mode") {
  RankerConfig rc;
  rc.num_items = 500;
  rc.num_users = 100;
  rc.dim = 64;
  rc.hidden = 64;
  Rng rng(1);
  model::Model m{model::BaseRanker<float>::init(rc, rng), model::Adaptor<float>::init(AdaptorConfig{}, rc, rng)};
  const auto counts = count_params(m);
  CHECK(counts.phi == 114828);
  const auto expected = expected_params(rc, &m.adaptor->config);
  CHECK(counts.breakdown == expected.breakdown);
  std::size_t pools = 0;
  for (const auto& [k, v] : counts.breakdown) pools += k.rfind("pool:", 0) == 0;
  CHECK(pools == 4);
  CHECK(asymptotic_adaptor_size(rc, m.adaptor->config) == 10 * 4 * (64 * 64 + 64) + 64 * 64);

  using model::EncoderKind;
  using model::ExtractorMode;
  using model::FilmMode;
  using model::PoolMode;
  for (EncoderKind enc : {EncoderKind::kGru, EncoderKind::kMf}) {
    RankerConfig small{.num_items = 30, .num_users = 7, .dim = 5, .hidden = 3, .encoder = enc};
    model::Model base{model::BaseRanker<float>::init(small, rng), std::nullopt};
    const auto bc = count_params(base);
    CHECK(bc.phi == 0);
    CHECK(bc.theta == expected_params(small, nullptr).theta);
    CHECK(bc.breakdown == expected_params(small, nullptr).breakdown);
    for (auto ex : {ExtractorMode::kNp, ExtractorMode::kAvg}) {
      for (auto film : {FilmMode::kScalar, FilmMode::kVector, FilmMode::kPerItem, FilmMode::kAddBias,
                        FilmMode::kNone}) {
        for (auto pool : {PoolMode::kMemNet, PoolMode::kFreePara, PoolMode::kNoGlobal, PoolMode::kAddBias1,
                          PoolMode::kAddBias2, PoolMode::kNone}) {
          const AdaptorConfig ac{ex, film, pool, 4};
          model::Model am{base.ranker, model::Adaptor<float>::init(ac, small, rng)};
          const auto got = count_params(am);
          const auto want = expected_params(small, &ac);
          CHECK(got.theta == want.theta);
          CHECK(got.phi == want.phi);
          CHECK(got.breakdown == want.breakdown);
        }
      }
    }
  }

  // Vocabulary of 10,676 items with the default GRU: Φ stays under 20% of Θ.
  RankerConfig large = rc;
  large.num_items = 10676;
  const auto big = expected_params(large, &m.adaptor->config);
  CHECK(big.theta == 683264 + 24960 + 8321);
  CHECK(static_cast<double>(big.phi) / static_cast<double>(big.theta) < 0.20);
}
