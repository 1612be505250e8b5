#include "explink/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace explink {

PairCounts& PairCounts::operator+=(const PairCounts& o) {
  true_positive += o.true_positive;
  predicted_pairs += o.predicted_pairs;
  truth_pairs += o.truth_pairs;
  return *this;
}

std::pair<double, long long> dendrogram_purity_terms(
    const Dendrogram& tree, const std::vector<int>& labels_by_point) {
  // Remap the labels occurring in this tree to a dense range.
  std::map<int, int> dense;
  for (int leaf = 0; leaf < tree.n_leaves; ++leaf) {
    dense.emplace(labels_by_point.at(tree.nodes[leaf].point_id),
                  static_cast<int>(dense.size()));
  }
  const int k = static_cast<int>(dense.size());

  std::vector<std::vector<long long>> counts(tree.nodes.size(),
                                             std::vector<long long>(k, 0));
  std::vector<long long> sizes(tree.nodes.size(), 0);
  double purity_sum = 0.0;
  long long within = 0;
  for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
    const auto& nd = tree.nodes[id];
    if (tree.is_leaf(static_cast<int>(id))) {
      counts[id][dense.at(labels_by_point[nd.point_id])] = 1;
      sizes[id] = 1;
      continue;
    }
    const auto& cl = counts[nd.left];
    const auto& cr = counts[nd.right];
    sizes[id] = sizes[nd.left] + sizes[nd.right];
    for (int c = 0; c < k; ++c) {
      counts[id][c] = cl[c] + cr[c];
      // pairs whose LCA is this node
      const long long pairs = cl[c] * cr[c];
      if (pairs > 0) {
        purity_sum += static_cast<double>(pairs) *
                      static_cast<double>(counts[id][c]) /
                      static_cast<double>(sizes[id]);
      }
    }
  }
  std::vector<long long> totals(k, 0);
  for (int leaf = 0; leaf < tree.n_leaves; ++leaf) {
    ++totals[dense.at(labels_by_point[tree.nodes[leaf].point_id])];
  }
  for (long long m : totals) within += m * (m - 1) / 2;
  return {purity_sum, within};
}

double dendrogram_purity(const Dendrogram& tree,
                         const std::vector<int>& labels_by_point) {
  auto [sum, within] = dendrogram_purity_terms(tree, labels_by_point);
  if (within == 0) {
    throw std::invalid_argument("dendrogram purity needs >= 1 within pair");
  }
  return sum / static_cast<double>(within);
}

double dendrogram_purity(std::span<const Dendrogram> trees,
                         const std::vector<int>& labels_by_point) {
  double sum = 0.0;
  long long within = 0;
  for (const auto& tree : trees) {
    auto [s, w] = dendrogram_purity_terms(tree, labels_by_point);
    sum += s;
    within += w;
  }
  if (within == 0) {
    throw std::invalid_argument("dendrogram purity needs >= 1 within pair");
  }
  return sum / static_cast<double>(within);
}

PairCounts pair_counts(const FlatClustering& pred,
                       const std::vector<int>& labels_by_point) {
  PairCounts c;
  std::vector<std::pair<int, int>> items;  // (point id, pred cluster)
  items.reserve(pred.assignment.size());
  for (const auto& [pid, cluster] : pred.assignment) items.emplace_back(pid, cluster);
  std::sort(items.begin(), items.end());
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      const bool same_pred = items[i].second == items[j].second;
      const bool same_true =
          labels_by_point.at(items[i].first) == labels_by_point.at(items[j].first);
      c.predicted_pairs += same_pred;
      c.truth_pairs += same_true;
      c.true_positive += same_pred && same_true;
    }
  }
  return c;
}

double f1_from_counts(const PairCounts& c) {
  if (c.true_positive == 0) return 0.0;
  const double p = static_cast<double>(c.true_positive) /
                   static_cast<double>(c.predicted_pairs);
  const double r = static_cast<double>(c.true_positive) /
                   static_cast<double>(c.truth_pairs);
  return 2.0 * p * r / (p + r);
}

double pairwise_f1(const FlatClustering& pred,
                   const std::vector<int>& labels_by_point) {
  return f1_from_counts(pair_counts(pred, labels_by_point));
}

double tune_threshold(std::span<const Dendrogram> dev_trees,
                      const std::vector<int>& labels_by_point,
                      const std::vector<double>& candidates) {
  if (dev_trees.empty()) throw std::invalid_argument("no dev trees");
  std::vector<double> xs = candidates;
  if (xs.empty()) {
    std::vector<double> heights;
    for (const auto& tree : dev_trees) {
      for (int id = tree.n_leaves; id < static_cast<int>(tree.nodes.size()); ++id) {
        heights.push_back(tree.nodes[id].height);
      }
    }
    if (heights.empty()) heights.push_back(0.0);  // all-singleton trees
    std::sort(heights.begin(), heights.end());
    heights.erase(std::unique(heights.begin(), heights.end()), heights.end());
    xs.push_back(heights.front() - 1.0);
    for (std::size_t i = 0; i + 1 < heights.size(); ++i) {
      xs.push_back(0.5 * (heights[i] + heights[i + 1]));
    }
    xs.push_back(heights.back() + 1.0);
  }
  double best_f1 = -1.0;
  double best_xi = xs.front();
  for (double xi : xs) {
    PairCounts total;
    for (const auto& tree : dev_trees) {
      total += pair_counts(cut_tree(tree, xi), labels_by_point);
    }
    const double f1 = f1_from_counts(total);
    if (f1 > best_f1 || (f1 == best_f1 && xi < best_xi)) {
      best_f1 = f1;
      best_xi = xi;
    }
  }
  return best_xi;
}

double resampled_paired_t_test(std::span<const double> scores_a,
                               std::span<const double> scores_b) {
  if (scores_a.size() != scores_b.size() || scores_a.size() < 2) {
    throw std::invalid_argument("paired t-test needs >= 2 paired scores");
  }
  const std::size_t n = scores_a.size();
  std::vector<double> d(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = scores_a[i] - scores_b[i];
    mean += d[i];
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double di : d) var += (di - mean) * (di - mean);
  var /= static_cast<double>(n - 1);
  if (var == 0.0) return mean == 0.0 ? 1.0 : 0.0;
  const double t = mean / std::sqrt(var / static_cast<double>(n));
  boost::math::students_t_distribution<double> dist(static_cast<double>(n - 1));
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

}  // namespace explink
