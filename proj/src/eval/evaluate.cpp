#include "adarank/eval/evaluate.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "adarank/eval/metrics.hpp"

namespace adarank::eval {
namespace {

struct Sums {
  double gauc = 0.0, ndcg = 0.0;
  std::size_t groups = 0;
};

MetricSummary summarize(const std::map<data::UserId, Sums>& per_user, std::vector<UserMetrics>* out) {
  MetricSummary s;
  for (const auto& [user, sums] : per_user) {
    const double n = static_cast<double>(sums.groups);
    const UserMetrics m{user, sums.gauc / n, sums.ndcg / n, sums.groups};
    if (out) out->push_back(m);
    s.gauc += m.gauc;
    s.ndcg += m.ndcg;
    s.groups += sums.groups;
  }
  s.users = per_user.size();
  if (s.users) {
    s.gauc /= static_cast<double>(s.users);
    s.ndcg /= static_cast<double>(s.users);
  }
  return s;
}

}  // namespace

EvaluationReport evaluate(const model::Model& model, std::span<const data::CandidateGroup> groups,
                          bool use_adaptor, std::vector<model::GroupDiagnostics>* diagnostics) {
  if (groups.empty()) throw std::invalid_argument("evaluation needs at least one group");
  EvaluationReport report;
  report.adaptor = use_adaptor && model.adaptor.has_value();
  if (diagnostics) diagnostics->clear();

  model::Scorer scorer;
  const auto labels = data::CandidateGroup::labels();
  std::map<data::UserId, Sums> per_user;
  std::map<std::string, std::map<data::UserId, Sums>> per_tag;
  for (const auto& group : groups) {
    model::GroupDiagnostics diag;
    const auto scores = scorer.score(model, group, use_adaptor, diagnostics ? &diag : nullptr);
    if (diagnostics) diagnostics->push_back(std::move(diag));
    const auto items = group.candidates();
    const double auc = group_auc(scores, labels);
    const double ndcg = group_ndcg(scores, labels, items);
    for (auto* table : {&per_user, &per_tag[group.provenance.tag()]}) {
      Sums& s = (*table)[group.user];
      s.gauc += auc;
      s.ndcg += ndcg;
      ++s.groups;
    }
  }
  report.overall = summarize(per_user, &report.users);
  for (const auto& [tag, table] : per_tag) report.by_provenance.emplace_back(tag, summarize(table, nullptr));
  return report;
}

double paired_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired test needs samples of equal length");
  const std::size_t n = a.size();
  if (n < 2) throw std::invalid_argument("paired test needs at least two pairs");
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  bool all_zero = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = a[i] - b[i];
    all_zero &= diff == 0.0;
    ss += (diff - mean) * (diff - mean);
  }
  if (all_zero) return 1.0;
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  // Constant nonzero differences: infinitely significant.
  if (sd == 0.0) return 0.0;
  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

std::vector<double> user_gauc(const EvaluationReport& report) {
  std::vector<double> out;
  for (const auto& u : report.users) out.push_back(u.gauc);
  return out;
}

std::vector<double> user_ndcg(const EvaluationReport& report) {
  std::vector<double> out;
  for (const auto& u : report.users) out.push_back(u.ndcg);
  return out;
}

void write_tsv(std::ostream& out, std::span<const ReportRow> rows, const std::vector<std::string>& header) {
  for (const auto& h : header) out << "# " << h << '\n';
  out << "metric\tmodel\tsetting\tvalue\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    out << r.metric << '\t' << r.model << '\t' << r.setting << '\t' << buf << '\n';
  }
}

void write_table(std::ostream& out, std::span<const ReportRow> rows) {
  std::size_t w_metric = 6, w_model = 5, w_setting = 7;
  for (const auto& r : rows) {
    w_metric = std::max(w_metric, r.metric.size());
    w_model = std::max(w_model, r.model.size());
    w_setting = std::max(w_setting, r.setting.size());
  }
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size() + 2, ' '); };
  out << pad("metric", w_metric) << pad("model", w_model) << pad("setting", w_setting) << "value\n";
  char buf[64];
  for (const auto& r : rows) {
    const bool integral = std::floor(r.value) == r.value && std::abs(r.value) < 1e15;
    std::snprintf(buf, sizeof buf, integral ? "%.0f" : "%.6f", r.value);
    out << pad(r.metric, w_metric) << pad(r.model, w_model) << pad(r.setting, w_setting) << buf << '\n';
  }
}

std::vector<ReportRow> report_rows(const EvaluationReport& report, const std::string& model_name,
                                   const std::string& setting) {
  std::vector<ReportRow> rows{{"gauc", model_name, setting, report.overall.gauc},
                              {"ndcg", model_name, setting, report.overall.ndcg},
                              {"users", model_name, setting, static_cast<double>(report.overall.users)},
                              {"groups", model_name, setting, static_cast<double>(report.overall.groups)}};
  if (report.by_provenance.size() > 1) {
    for (const auto& [tag, s] : report.by_provenance) {
      rows.push_back({"gauc", model_name, setting + ":" + tag, s.gauc});
      rows.push_back({"ndcg", model_name, setting + ":" + tag, s.ndcg});
    }
  }
  return rows;
}

std::vector<ReportRow> DualDistributionReport::rows() const {
  return {{"gauc", "base", "same_dis", base_same.overall.gauc},
          {"ndcg", "base", "same_dis", base_same.overall.ndcg},
          {"gauc", "ada", "same_dis", ada_same.overall.gauc},
          {"ndcg", "ada", "same_dis", ada_same.overall.ndcg},
          {"gauc", "base", "new_dis", base_new.overall.gauc},
          {"ndcg", "base", "new_dis", base_new.overall.ndcg},
          {"gauc", "ada", "new_dis", ada_new.overall.gauc},
          {"ndcg", "ada", "new_dis", ada_new.overall.ndcg},
          {"rel_gauc", "ada_over_base", "same_dis", rel_gauc_same},
          {"rel_ndcg", "ada_over_base", "same_dis", rel_ndcg_same},
          {"rel_gauc", "ada_over_base", "new_dis", rel_gauc_new},
          {"rel_ndcg", "ada_over_base", "new_dis", rel_ndcg_new},
          {"p_ndcg_paired_t", "ada_vs_base", "same_dis", p_ndcg_same},
          {"p_ndcg_paired_t", "ada_vs_base", "new_dis", p_ndcg_new}};
}

DualDistributionReport dual_distribution_eval(const model::Model& base, const model::Model& ada,
                                              const data::Dataset& dataset, data::RecallIndex& index,
                                              const data::PrepareConfig& prepare, std::uint64_t seed,
                                              std::array<double, 3> d_same, std::array<double, 3> d_new) {
  if (!ada.adaptor) throw std::invalid_argument("dual-distribution evaluation needs an adapted model");
  const auto split = data::leave_one_out_split(dataset.sequences);
  const auto same = data::recall_groups(split.test, dataset.sequences, index, d_same, prepare, seed, "same_dis");
  const auto fresh = data::recall_groups(split.test, dataset.sequences, index, d_new, prepare, seed, "new_dis");
  DualDistributionReport r;
  r.base_same = evaluate(base, same, false);
  r.ada_same = evaluate(ada, same, true);
  r.base_new = evaluate(base, fresh, false);
  r.ada_new = evaluate(ada, fresh, true);
  auto rel = [](double a, double b) { return b != 0.0 ? (a - b) / b : 0.0; };
  r.rel_gauc_same = rel(r.ada_same.overall.gauc, r.base_same.overall.gauc);
  r.rel_ndcg_same = rel(r.ada_same.overall.ndcg, r.base_same.overall.ndcg);
  r.rel_gauc_new = rel(r.ada_new.overall.gauc, r.base_new.overall.gauc);
  r.rel_ndcg_new = rel(r.ada_new.overall.ndcg, r.base_new.overall.ndcg);
  r.p_ndcg_same = paired_test(user_ndcg(r.ada_same), user_ndcg(r.base_same));
  r.p_ndcg_new = paired_test(user_ndcg(r.ada_new), user_ndcg(r.base_new));
  return r;
}

}  // namespace adarank::eval
