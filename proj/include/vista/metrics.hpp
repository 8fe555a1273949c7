#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vista/scoring.hpp"

namespace vista {

namespace detail {

inline void require_scores(const std::vector<double>& v, const char* who) {
  if (v.empty())
    throw std::invalid_argument(std::string(who) + ": empty score list");
  for (double x : v)
    if (!std::isfinite(x))
      throw std::invalid_argument(std::string(who) + ": non-finite score");
}

}  // namespace detail

/// Probability that a random OOD score exceeds a random ID score, ties
/// counted one-half. Midrank implementation; exactly equal to brute-force
/// pair counting.
inline double auroc(const std::vector<double>& id_scores,
                    const std::vector<double>& ood_scores) {
  detail::require_scores(id_scores, "auroc(id)");
  detail::require_scores(ood_scores, "auroc(ood)");

  struct Tagged {
    double score;
    bool is_ood;
  };
  std::vector<Tagged> all;
  all.reserve(id_scores.size() + ood_scores.size());
  for (double s : id_scores) all.push_back({s, false});
  for (double s : ood_scores) all.push_back({s, true});
  std::sort(all.begin(), all.end(),
            [](const Tagged& a, const Tagged& b) { return a.score < b.score; });

  double ood_rank_sum = 0.0;
  size_t i = 0;
  while (i < all.size()) {
    size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) +
                                  static_cast<double>(j));  // 1-based
    for (size_t k = i; k < j; ++k)
      if (all[k].is_ood) ood_rank_sum += midrank;
    i = j;
  }
  const double n_ood = static_cast<double>(ood_scores.size());
  const double n_id = static_cast<double>(id_scores.size());
  return (ood_rank_sum - n_ood * (n_ood + 1.0) / 2.0) / (n_id * n_ood);
}

/// False-positive rate of OOD at the threshold accepting a fraction q of ID
/// scores (ID is the positive class; ties at the threshold count as ID).
inline double fpr_at_tpr(const std::vector<double>& id_scores,
                         const std::vector<double>& ood_scores,
                         double q = 0.95) {
  detail::require_scores(id_scores, "fpr_at_tpr(id)");
  detail::require_scores(ood_scores, "fpr_at_tpr(ood)");
  const double gamma = calibrate_gamma(id_scores, q);
  size_t accepted = 0;
  for (double s : ood_scores)
    if (s <= gamma) ++accepted;
  return static_cast<double>(accepted) / static_cast<double>(ood_scores.size());
}

struct DistributionSummary {
  double mean = 0.0;
  double stdev = 0.0;
  double min = 0.0;
  double max = 0.0;
};

inline DistributionSummary summarize_scores(const std::vector<double>& v) {
  detail::require_scores(v, "summarize_scores");
  DistributionSummary s;
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - s.mean) * (x - s.mean);
  s.stdev = std::sqrt(sq / static_cast<double>(v.size()));
  return s;
}

struct EvalReport {
  double fpr_at_q = 0.0;
  double auroc = 0.0;
  double q = 0.95;
  size_t n_id = 0;
  size_t n_ood = 0;
  double gamma_used = 0.0;
  DistributionSummary id_summary;
  DistributionSummary ood_summary;
};

inline EvalReport summarize(const std::vector<double>& id_scores,
                            const std::vector<double>& ood_scores,
                            double q = 0.95) {
  EvalReport r;
  r.q = q;
  r.fpr_at_q = fpr_at_tpr(id_scores, ood_scores, q);
  r.auroc = auroc(id_scores, ood_scores);
  r.n_id = id_scores.size();
  r.n_ood = ood_scores.size();
  r.gamma_used = calibrate_gamma(id_scores, q);
  r.id_summary = summarize_scores(id_scores);
  r.ood_summary = summarize_scores(ood_scores);
  return r;
}

/// Aligned human-readable table: FPR and AUROC in percent, two decimals.
inline std::string format_report_table(const EvalReport& r,
                                       const std::string& row_label = "eval") {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << std::left << std::setw(16) << "Method" << std::right << std::setw(12)
     << "FPR95 v" << std::setw(12) << "AUROC ^" << '\n';
  os << std::left << std::setw(16) << row_label << std::right << std::setw(12)
     << 100.0 * r.fpr_at_q << std::setw(12) << 100.0 * r.auroc << '\n';
  return os.str();
}

/// Structured single-line record for machine consumption.
inline std::string format_report_record(const EvalReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "fpr_at_q=" << r.fpr_at_q << " auroc=" << r.auroc << " q=" << r.q
     << " n_id=" << r.n_id << " n_ood=" << r.n_ood
     << " gamma=" << r.gamma_used << " id_mean=" << r.id_summary.mean
     << " id_std=" << r.id_summary.stdev << " ood_mean=" << r.ood_summary.mean
     << " ood_std=" << r.ood_summary.stdev;
  return os.str();
}

}  // namespace vista
