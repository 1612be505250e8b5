#ifndef EXPLINK_EVAL_HPP
#define EXPLINK_EVAL_HPP

#include <span>
#include <vector>

#include "explink/hac.hpp"

namespace explink {

// Counts backing pairwise precision/recall; summable across blocks.
struct PairCounts {
  long long true_positive = 0;
  long long predicted_pairs = 0;  // |W-hat|
  long long truth_pairs = 0;      // |W-star|

  PairCounts& operator+=(const PairCounts& o);
};

// Mean over same-cluster point pairs of the class purity of their LCA's
// leaf set. labels_by_point maps point id -> ground-truth cluster.
// O(n K) via per-node left x right class-count products.
double dendrogram_purity(const Dendrogram& tree,
                         const std::vector<int>& labels_by_point);

// Numerator/denominator of the purity sum, for |W-star|-weighted aggregation
// across blocks.
std::pair<double, long long> dendrogram_purity_terms(
    const Dendrogram& tree, const std::vector<int>& labels_by_point);

double dendrogram_purity(std::span<const Dendrogram> trees,
                         const std::vector<int>& labels_by_point);

PairCounts pair_counts(const FlatClustering& pred,
                       const std::vector<int>& labels_by_point);

double f1_from_counts(const PairCounts& c);

double pairwise_f1(const FlatClustering& pred,
                   const std::vector<int>& labels_by_point);

// Threshold maximizing micro-averaged pairwise F1 of cut_tree over the dev
// trees. Candidates default to midpoints between consecutive distinct merge
// heights plus below-min/above-max sentinels; ties pick the smallest xi.
double tune_threshold(std::span<const Dendrogram> dev_trees,
                      const std::vector<int>& labels_by_point,
                      const std::vector<double>& candidates = {});

// Two-sided p-value of the paired Student-t test on per-split score
// differences. Zero variance: p = 1 if all differences are 0, else p = 0.
double resampled_paired_t_test(std::span<const double> scores_a,
                               std::span<const double> scores_b);

}  // namespace explink

#endif
