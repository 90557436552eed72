#include "bip/metrics.hpp"

#include "bip/error.hpp"

#include <algorithm>
#include <numeric>

namespace bip {

std::vector<bool> select_features(const Matrix& mpp_eta, double threshold) {
  std::vector<bool> out(static_cast<std::size_t>(mpp_eta.cols()), false);
  for (Index j = 0; j < mpp_eta.cols(); ++j)
    out[static_cast<std::size_t>(j)] = mpp_eta.rows() > 0 && mpp_eta.col(j).maxCoeff() > threshold;
  return out;
}

SelectionReport selection_scores(const std::vector<bool>& selected, const std::vector<Index>& truth) {
  const auto p = static_cast<Index>(selected.size());
  std::vector<bool> is_true(selected.size(), false);
  for (Index j : truth) {
    if (j < 0 || j >= p) throw ValidationError("true signal index out of range");
    is_true[static_cast<std::size_t>(j)] = true;
  }
  SelectionReport rep;
  for (Index j = 0; j < p; ++j) {
    const bool s = selected[static_cast<std::size_t>(j)];
    const bool t = is_true[static_cast<std::size_t>(j)];
    if (s) rep.selected.push_back(j);
    if (s && t) ++rep.true_positives;
    if (s && !t) ++rep.false_positives;
    if (!s && t) ++rep.false_negatives;
  }
  const auto n_true = static_cast<double>(truth.size());
  const double n_null = static_cast<double>(p) - n_true;
  rep.fnr = n_true > 0 ? 100.0 * static_cast<double>(rep.false_negatives) / n_true : 0.0;
  rep.fpr = n_null > 0 ? 100.0 * static_cast<double>(rep.false_positives) / n_null : 0.0;
  const double tp = static_cast<double>(rep.true_positives);
  const double n_sel = static_cast<double>(rep.selected.size());
  const double precision = n_sel > 0 ? tp / n_sel : 0.0;
  const double recall = n_true > 0 ? tp / n_true : 0.0;
  rep.f_measure = precision + recall > 0 ? 100.0 * 2.0 * precision * recall / (precision + recall) : 0.0;
  return rep;
}

double auc_from_mpp(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw ValidationError("scores and labels differ in length");
  // Rank-sum form with midranks for ties.
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t k = i;
    while (k + 1 < n && scores[order[k + 1]] == scores[order[i]]) ++k;
    const double mid = 0.5 * static_cast<double>(i + k) + 1.0;
    for (std::size_t m = i; m <= k; ++m) rank[order[m]] = mid;
    i = k + 1;
  }
  double pos = 0, rank_sum = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (labels[i]) {
      pos += 1;
      rank_sum += rank[i];
    }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0 || neg == 0) throw ValidationError("AUC needs both positive and negative labels");
  return (rank_sum - pos * (pos + 1) / 2) / (pos * neg);
}

std::vector<double> group_scores(const Matrix& mpp_group) {
  std::vector<double> out(static_cast<std::size_t>(mpp_group.cols()), 0.0);
  for (Index k = 0; k < mpp_group.cols(); ++k)
    out[static_cast<std::size_t>(k)] = mpp_group.rows() > 0 ? mpp_group.col(k).maxCoeff() : 0.0;
  return out;
}

double mse(const Vector& pred, const Vector& actual) {
  if (pred.size() != actual.size() || pred.size() == 0) throw ValidationError("mse needs equal, nonempty vectors");
  return (pred - actual).squaredNorm() / static_cast<double>(pred.size());
}

}  // namespace bip
