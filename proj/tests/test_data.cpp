#include "doctest.h"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "adarank/data/interactions.hpp"
#include "adarank/data/prepare.hpp"
#include "adarank/data/recall_index.hpp"
#include "adarank/data/sampling.hpp"
#include "adarank/data/synthetic.hpp"

using namespace adarank;
using namespace adarank::data;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("adarank_test_" + name);
  std::ofstream(path) << text;
  return path;
}

InteractionLog toy_log(const std::vector<std::pair<UserId, std::size_t>>& lengths) {
  InteractionLog log;
  for (auto [user, n] : lengths) {
    for (std::size_t t = 0; t < n; ++t) {
      log.records.push_back({user, static_cast<ItemId>((user * 7 + t) % 40),
                             static_cast<std::int64_t>(t), {static_cast<CategoryId>(t % 3)}});
    }
  }
  return log;
}

SyntheticConfig small_synthetic() {
  SyntheticConfig c;
  c.num_users = 200;
  c.num_items = 300;
  c.num_categories = 6;
  return c;
}

}  // namespace

TEST_CASE("loader reads valid records and reports bad lines") {
  const auto ok = temp_file("ok.tsv", "1\t10\t100\t0,2\n1\t11\t101\t1\n2\t10\t50\t0\n");
  const auto log = load_interactions(ok);
  CHECK(log.records.size() == 3);
  CHECK(log.records[0].categories == std::vector<CategoryId>{0, 2});

  try {
    parse_interactions("1\t10\t100\t0\n1\t11\tnoon\t1\n");
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_interactions(""), DataError);
  CHECK_THROWS_AS(load_interactions(temp_file("empty.tsv", "")), DataError);
  CHECK_THROWS_AS(parse_interactions("1\t10\t100\n"), DataError);
  CHECK_THROWS_AS(parse_interactions("1\t10\t100\t\n"), DataError);
}

TEST_CASE("multi-genre ingest discovers every category") {
  // Movie-style rows: overlapping genre lists over 18 genres.
  std::ostringstream text;
  for (int user = 0; user < 12; ++user) {
    for (int k = 0; k < 10; ++k) {
      const int item = user * 10 + k;
      text << user << '\t' << item << '\t' << 978300000 + k << '\t' << item % 18;
      if (item % 4 == 0) text << ',' << (item + 5) % 18;
      text << '\n';
    }
  }
  const auto log = parse_interactions(text.str());
  const auto catalog = Catalog::from_log(log);
  CHECK(catalog.nonempty_categories().size() == 18);
}

TEST_CASE("write and reload interactions") {
  const auto log = toy_log({{1, 12}, {2, 10}});
  const auto path = std::filesystem::temp_directory_path() / "adarank_test_roundtrip.tsv";
  write_interactions(path, log, {"config_hash=abc"});
  const auto back = load_interactions(path);
  REQUIRE(back.records.size() == log.records.size());
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    CHECK(back.records[i].user == log.records[i].user);
    CHECK(back.records[i].item == log.records[i].item);
    CHECK(back.records[i].timestamp == log.records[i].timestamp);
    CHECK(back.records[i].categories == log.records[i].categories);
  }
}

TEST_CASE("sequence building filters, sorts and keeps ties stable") {
  InteractionLog log = toy_log({{5, 9}});
  const std::vector<std::int64_t> stamps{40, 10, 30, 20, 120, 90, 60, 50, 110, 100, 80, 70};
  for (std::size_t k = 0; k < stamps.size(); ++k) {
    log.records.push_back({7, static_cast<ItemId>(100 + k), stamps[k], {0}});
  }
  log.records.push_back({8, 1, 5, {0}});
  log.records.push_back({8, 2, 5, {0}});
  for (int k = 0; k < 8; ++k) log.records.push_back({8, static_cast<ItemId>(3 + k), 6 + k, {0}});

  const auto seqs = build_sequences(log, 10);
  REQUIRE(seqs.size() == 2);
  CHECK(seqs[0].user == 7);
  CHECK(seqs[1].user == 8);
  std::vector<ItemId> expected{101, 103, 102, 100, 107, 106, 111, 110, 105, 109, 108, 104};
  CHECK(seqs[0].items == expected);
  CHECK(seqs[1].items[0] == 1);
  CHECK(seqs[1].items[1] == 2);
  CHECK(build_sequences(toy_log({{1, 9}})).empty());
}

TEST_CASE("leave-one-out split") {
  UserSequence s{3, {10, 11, 12, 13, 14, 15, 16, 17, 18, 19}};
  const auto split = leave_one_out_split({s});
  REQUIRE(split.test.size() == 1);
  REQUIRE(split.valid.size() == 1);
  CHECK(s.items[split.test[0].position] == 19);
  CHECK(s.items[split.valid[0].position] == 18);
  REQUIRE(split.train.size() == 7);
  for (std::size_t k = 0; k < 7; ++k) CHECK(s.items[split.train[k].position] == 11 + k);

  const std::vector<std::size_t> lengths{10, 11, 14, 20, 12};
  std::vector<UserSequence> corpus;
  for (std::size_t u = 0; u < lengths.size(); ++u) {
    corpus.push_back({static_cast<UserId>(u), std::vector<ItemId>(lengths[u], 1)});
  }
  // (10-3) + (11-3) + (14-3) + (20-3) + (12-3) = 7 + 8 + 11 + 17 + 9
  CHECK(leave_one_out_split(corpus).train.size() == 52);

  const auto prefixes = training_prefixes({s});
  CHECK(prefixes[0].items.size() == 8);
}

TEST_CASE("history window keeps the most recent items") {
  UserSequence s{0, {1, 2, 3, 4, 5, 6}};
  CHECK(history_window(s, 5, 3) == std::vector<ItemId>{3, 4, 5});
  CHECK(history_window(s, 2, 10) == std::vector<ItemId>{1, 2});
}

TEST_CASE("mixer negatives") {
  const auto log = generate_synthetic(small_synthetic(), 11);
  Catalog catalog = Catalog::from_log(log);
  catalog.set_popularity(build_sequences(log));

  SUBCASE("budget split") {
    CHECK(split_budget(19, 3) == std::vector<std::size_t>{7, 6, 6});
    CHECK(split_budget(19, 2) == std::vector<std::size_t>{10, 9});
    CHECK(split_budget(19, 1) == std::vector<std::size_t>{19});
  }

  SUBCASE("structure and branch statistics") {
    Rng rng = Rng::stream(5, "mixer-test");
    const auto known = catalog.known_items();
    std::array<int, 4> d_counts{};
    int popular = 0;
    const int n = 10000;
    for (int g = 0; g < n; ++g) {
      const ItemId positive = known[rng.uniform_int(known.size())];
      MixerTrace trace;
      const auto negs = mixer_sample_negatives(rng, positive, catalog, &trace);
      ++d_counts[trace.num_categories];
      popular += trace.popularity_branch;

      CandidateGroup group;
      group.positive = positive;
      group.negatives = negs;
      validate_group(group);
      const auto own = catalog.categories(positive);
      REQUIRE(std::find(own.begin(), own.end(), trace.categories[0]) != own.end());
      if (trace.num_categories == 1) {
        for (ItemId v : negs) {
          const auto cats = catalog.categories(v);
          REQUIRE(std::find(cats.begin(), cats.end(), trace.categories[0]) != cats.end());
        }
      }
      if (trace.num_categories == 3) {
        CHECK(trace.budget == std::vector<std::size_t>{7, 6, 6});
        // Every involved category contributes, none outside is used.
        std::set<CategoryId> spanned;
        for (ItemId v : negs) {
          for (CategoryId c : catalog.categories(v)) {
            if (std::find(trace.categories.begin(), trace.categories.end(), c) != trace.categories.end()) {
              spanned.insert(c);
            }
          }
        }
        REQUIRE(spanned.size() == 3);
      }
    }
    for (int d = 1; d <= 3; ++d) CHECK(std::abs(d_counts[d] / double(n) - 1.0 / 3.0) < 0.02);
    CHECK(std::abs(popular / double(n) - 0.5) < 0.02);
  }

  SUBCASE("excluded items are never drawn") {
    Rng rng = Rng::stream(6, "mixer-test");
    const std::vector<ItemId> seen{0, 1, 2, 3, 4, 5, 6, 7};
    for (int g = 0; g < 200; ++g) {
      const auto negs = mixer_sample_negatives(rng, 9, catalog, nullptr, seen);
      for (ItemId v : negs) CHECK(std::find(seen.begin(), seen.end(), v) == seen.end());
    }
  }

  SUBCASE("tiny catalog is rejected") {
    InteractionLog tiny;
    for (ItemId i = 0; i < 19; ++i) tiny.records.push_back({0, i, 0, {0}});
    const auto small = Catalog::from_log(tiny);
    Rng rng(1);
    CHECK_THROWS_AS(mixer_sample_negatives(rng, 0, small), DataError);
  }
}

TEST_CASE("recall index basics") {
  // Popularity {A=0:5, B=1:3, C=2:3}.
  InteractionLog log;
  std::vector<UserSequence> seqs;
  const std::vector<std::pair<ItemId, int>> counts{{0, 5}, {1, 3}, {2, 3}};
  UserSequence seq{0, {}};
  for (auto [item, c] : counts) {
    for (int k = 0; k < c; ++k) {
      log.records.push_back({0, item, 0, {0}});
      seq.items.push_back(item);
    }
  }
  seqs.push_back(seq);
  Catalog catalog = Catalog::from_log(log);
  catalog.set_popularity(seqs);
  RecallConfig config;
  config.dim = 8;
  Rng rng(3);
  auto index = build_recall_index(seqs, catalog, config, rng);
  CHECK(index.popularity_order() == std::vector<ItemId>{0, 1, 2});
  CHECK(index.dim() == 8);

  float dot = 0.0f;
  for (std::size_t k = 0; k < 8; ++k) dot += index.user_embedding()(0, k) * index.item_embedding()(1, k);
  CHECK(index.mf_score(0, 1) == doctest::Approx(dot).epsilon(1e-6));
  const auto& ranked = index.mf_ranking(0);
  CHECK(ranked.size() == 3);
  for (std::size_t k = 1; k < ranked.size(); ++k) {
    CHECK(index.mf_score(0, ranked[k - 1]) >= index.mf_score(0, ranked[k]));
  }

  InteractionLog one;
  one.records.push_back({0, 0, 0, {0}});
  Catalog single = Catalog::from_log(one);
  CHECK_THROWS_AS(build_recall_index({}, single, config, rng), DataError);
}

TEST_CASE("item2item ranks the co-occurring partner first") {
  InteractionLog log;
  std::vector<UserSequence> seqs;
  for (UserId u = 0; u < 30; ++u) {
    UserSequence s{u, {}};
    for (int k = 0; k < 6; ++k) {
      if (u % 2 == 0) {
        s.items.push_back(0);
        s.items.push_back(1);
      } else {
        s.items.push_back(2);
      }
    }
    for (ItemId v : s.items) log.records.push_back({u, v, 0, {0}});
    seqs.push_back(s);
  }
  Catalog catalog = Catalog::from_log(log);
  catalog.set_popularity(seqs);
  RecallConfig config;
  config.dim = 8;
  config.i2i_epochs = 20;
  Rng rng(4);
  auto index = build_recall_index(seqs, catalog, config, rng);
  const auto& around0 = index.i2i_ranking(0);
  REQUIRE(around0.size() == 2);
  CHECK(around0[0] == 1);
  CHECK(index.i2i_ranking(1)[0] == 0);
}

TEST_CASE("recall negatives") {
  SyntheticConfig sc;
  sc.num_users = 150;
  sc.num_items = 2500;
  sc.num_categories = 10;
  const auto log = generate_synthetic(sc, 21);
  const auto base = load_base_dataset(log, 10);
  RecallConfig rc;
  rc.dim = 8;
  rc.mf_epochs = 1;
  rc.i2i_epochs = 1;
  auto index = build_dataset_index(base, rc, 1);
  CHECK(scale_window(kMfWindow, index.ranking_size()).end <= index.ranking_size());

  std::vector<std::size_t> pop_rank(base.catalog.num_items(), 0);
  for (std::size_t r = 0; r < index.popularity_order().size(); ++r) pop_rank[index.popularity_order()[r]] = r;
  const auto& seq = base.sequences[0];
  const auto history = history_window(seq, seq.items.size() - 1, 50);
  const ItemId positive = seq.items.back();
  const std::size_t pop_end = scale_window(kPopularityWindow, index.ranking_size()).end;

  SUBCASE("popularity only") {
    Rng rng(8);
    const std::array<double, 3> d{1.0, 0.0, 0.0};
    for (int g = 0; g < 50; ++g) {
      const auto negs = recall_sample_negatives(rng, seq.user, history, positive, index, d);
      for (ItemId v : negs) CHECK(pop_rank[v] < pop_end);
    }
  }

  SUBCASE("multinomial budgets") {
    Rng rng(9);
    const std::array<double, 3> d{0.2, 0.5, 0.3};
    std::array<double, 3> mean{};
    const int n = 5000;
    for (int g = 0; g < n; ++g) {
      RecallTrace trace;
      const auto negs = recall_sample_negatives(rng, seq.user, history, positive, index, d, &trace);
      CandidateGroup group;
      group.positive = positive;
      group.negatives = negs;
      validate_group(group);
      for (int k = 0; k < 3; ++k) mean[k] += trace.counts[k] / double(n);
      const auto recent = std::span<const ItemId>(history).last(5);
      CHECK(std::find(recent.begin(), recent.end(), trace.anchor) != recent.end());
    }
    CHECK(mean[0] == doctest::Approx(3.8).epsilon(0.03));
    CHECK(mean[1] == doctest::Approx(9.5).epsilon(0.03));
    CHECK(mean[2] == doctest::Approx(5.7).epsilon(0.03));

    const std::array<double, 3> shifted{0.4, 0.1, 0.5};
    for (int g = 0; g < 200; ++g) {
      RecallTrace trace;
      recall_sample_negatives(rng, seq.user, history, positive, index, shifted, &trace);
      CHECK(trace.counts[0] + trace.counts[1] + trace.counts[2] == 19);
    }
  }
}

TEST_CASE("synthetic generator") {
  SUBCASE("lengths stay in range") {
    SyntheticConfig c;
    c.num_users = 2000;
    c.num_items = 500;
    c.num_categories = 10;
    const auto seqs = build_sequences(generate_synthetic(c, 1), 1);
    CHECK(seqs.size() == 2000);
    for (const auto& s : seqs) {
      CHECK(s.items.size() >= c.min_seq_len);
      CHECK(s.items.size() <= c.max_seq_len);
    }
  }

  SUBCASE("tiny alpha concentrates users") {
    SyntheticConfig c = small_synthetic();
    c.dirichlet_alpha = 0.01;
    c.multi_category_rate = 0.0;
    const auto log = generate_synthetic(c, 2);
    std::map<UserId, std::map<CategoryId, int>> per_user;
    for (const auto& r : log.records) ++per_user[r.user][r.categories[0]];
    int modal = 0, total = 0;
    for (const auto& [u, hist] : per_user) {
      int best = 0;
      for (const auto& [cat, n] : hist) {
        best = std::max(best, n);
        total += n;
      }
      modal += best;
    }
    CHECK(modal / double(total) >= 0.9);
  }

  SUBCASE("flat Zipf gives uniform item frequencies") {
    SyntheticConfig c;
    c.num_users = 2000;
    c.num_items = 40;
    c.num_categories = 1;
    c.zipf_s = 0.0;
    const auto log = generate_synthetic(c, 3);
    std::vector<double> freq(c.num_items, 0.0);
    for (const auto& r : log.records) freq[r.item] += 1.0;
    const double expected = static_cast<double>(log.records.size()) / c.num_items;
    double chi2 = 0.0;
    for (double f : freq) chi2 += (f - expected) * (f - expected) / expected;
    boost::math::chi_squared dist(static_cast<double>(c.num_items - 1));
    CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.01);
  }

  SUBCASE("items carry one or two categories and determinism holds") {
    const auto a = generate_synthetic(small_synthetic(), 4);
    const auto b = generate_synthetic(small_synthetic(), 4);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].item == b.records[i].item);
      CHECK(a.records[i].categories.size() >= 1);
      CHECK(a.records[i].categories.size() <= 2);
    }
  }

  SUBCASE("infeasible configs") {
    SyntheticConfig c;
    c.num_items = 100;
    c.num_categories = 10;
    CHECK_THROWS_AS(generate_synthetic(c, 1), std::invalid_argument);
    c = SyntheticConfig{};
    c.min_seq_len = 40;
    CHECK_THROWS_AS(generate_synthetic(c, 1), std::invalid_argument);
    c = SyntheticConfig{};
    c.dirichlet_alpha = 0.0;
    CHECK_THROWS_AS(generate_synthetic(c, 1), std::invalid_argument);
  }
}

TEST_CASE("prepared dataset and group file round trip") {
  const auto log = generate_synthetic(small_synthetic(), 12);
  PrepareConfig config;
  config.max_seq_len = 8;
  const auto ds = prepare_dataset(log, config, 77);
  const auto split = leave_one_out_split(ds.sequences);
  CHECK(ds.train.size() == split.train.size());
  CHECK(ds.valid.size() == ds.sequences.size());
  CHECK(ds.test.size() == ds.sequences.size());
  for (const auto& g : ds.train) {
    validate_group(g);
    CHECK(g.history.size() <= 8);
    CHECK(!g.history.empty());
  }

  const auto again = prepare_dataset(log, config, 77);
  for (std::size_t i = 0; i < ds.train.size(); ++i) CHECK(again.train[i].negatives == ds.train[i].negatives);

  const auto dir = std::filesystem::temp_directory_path();
  for (auto [split_kind, groups] : {std::pair{Split::kTrain, &ds.train}, std::pair{Split::kValid, &ds.valid},
                                    std::pair{Split::kTest, &ds.test}}) {
    const auto path = dir / (std::string("adarank_test_groups_") + to_string(split_kind) + ".tsv");
    write_groups(path, *groups, {"config_hash=1234"});
    const auto back = read_groups(path, ds.sequences, split_kind, config.max_seq_len);
    REQUIRE(back.size() == groups->size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].user == (*groups)[i].user);
      CHECK(back[i].positive == (*groups)[i].positive);
      CHECK(back[i].negatives == (*groups)[i].negatives);
      CHECK(back[i].history == (*groups)[i].history);
      CHECK(back[i].provenance == (*groups)[i].provenance);
    }
  }

  const std::string bad = std::to_string(ds.test[0].user) + "\t99999\t1,2,3\tmixer\n";
  CHECK_THROWS_AS(parse_groups(bad, ds.sequences, Split::kTest, 8), DataError);
  const auto& g = ds.test[0];
  std::string wrong = std::to_string(g.user) + "\t" + std::to_string(g.positive) + "\t";
  for (std::size_t i = 0; i < kNegatives; ++i) wrong += (i ? "," : "") + std::to_string(g.negatives[i]);
  CHECK_THROWS_AS(parse_groups(wrong + "\tfoo\n", ds.sequences, Split::kTest, 8), DataError);
  CHECK(parse_groups(wrong + "\tmixer\n", ds.sequences, Split::kTest, 8).size() == 1);
}

TEST_CASE("provenance tags") {
  const auto p = Provenance::recall({0.2, 0.5, 0.3});
  CHECK(p.tag() == "recall(0.2,0.5,0.3)");
  CHECK(Provenance::parse(p.tag()) == p);
  CHECK(Provenance::parse("mixer") == Provenance::mixer());
  CHECK_THROWS_AS(Provenance::parse("recall(0.2,0.5)"), DataError);
}
