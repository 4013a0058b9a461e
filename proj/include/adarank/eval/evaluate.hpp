#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "adarank/data/prepare.hpp"
#include "adarank/model/model.hpp"

namespace adarank::eval {

struct UserMetrics {
  data::UserId user = 0;
  double gauc = 0.0;
  double ndcg = 0.0;
  std::size_t groups = 0;
};

struct MetricSummary {
  double gauc = 0.0;
  double ndcg = 0.0;
  std::size_t users = 0;
  std::size_t groups = 0;
};

struct EvaluationReport {
  bool adaptor = false;
  /// Per-user means over that user's groups, ascending user id.
  std::vector<UserMetrics> users;
  /// Unweighted means over users.
  MetricSummary overall;
  /// The same aggregation restricted to each provenance tag, tag order.
  std::vector<std::pair<std::string, MetricSummary>> by_provenance;
};

/// Scores every group and aggregates per user. When `diagnostics` is given
/// and the adaptor is on, it receives one entry per group in input order.
/// Throws std::invalid_argument on an empty group set.
EvaluationReport evaluate(const model::Model& model, std::span<const data::CandidateGroup> groups,
                          bool use_adaptor,
                          std::vector<model::GroupDiagnostics>* diagnostics = nullptr);

/// Two-sided paired t-test on per-element differences a - b. Returns 1 when
/// every difference is zero. Throws std::invalid_argument when the lengths
/// differ or n < 2.
double paired_test(std::span<const double> a, std::span<const double> b);

/// Per-user metric columns of a report, in user order.
std::vector<double> user_gauc(const EvaluationReport& report);
std::vector<double> user_ndcg(const EvaluationReport& report);

/// One cell of a report: `metric<TAB>model<TAB>setting<TAB>value`.
struct ReportRow {
  std::string metric;
  std::string model;
  std::string setting;
  double value = 0.0;
};

void write_tsv(std::ostream& out, std::span<const ReportRow> rows,
               const std::vector<std::string>& header = {});
/// Aligned human-readable table of the same rows.
void write_table(std::ostream& out, std::span<const ReportRow> rows);

/// Overall and per-provenance rows of one report.
std::vector<ReportRow> report_rows(const EvaluationReport& report, const std::string& model_name,
                                   const std::string& setting);

inline constexpr std::array<double, 3> kSameDistribution{0.2, 0.5, 0.3};
inline constexpr std::array<double, 3> kNewDistribution{0.4, 0.1, 0.5};

struct DualDistributionReport {
  EvaluationReport base_same, ada_same, base_new, ada_new;
  /// (ada - base) / base per setting.
  double rel_gauc_same = 0.0, rel_ndcg_same = 0.0;
  double rel_gauc_new = 0.0, rel_ndcg_new = 0.0;
  double p_ndcg_same = 1.0, p_ndcg_new = 1.0;

  /// 2 models x 2 settings x 2 metrics, then the relative improvements and
  /// p-values.
  std::vector<ReportRow> rows() const;
};

/// Builds Same_Dis and New_Dis test groups on the same test positives with
/// the recall sampler and evaluates the base model (adaptor off) and the
/// adapted model (adaptor on) on both.
DualDistributionReport dual_distribution_eval(const model::Model& base, const model::Model& ada,
                                              const data::Dataset& dataset, data::RecallIndex& index,
                                              const data::PrepareConfig& prepare, std::uint64_t seed,
                                              std::array<double, 3> d_same = kSameDistribution,
                                              std::array<double, 3> d_new = kNewDistribution);

}  // namespace adarank::eval
