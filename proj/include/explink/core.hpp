#ifndef EXPLINK_CORE_HPP
#define EXPLINK_CORE_HPP

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace explink {

using Vec = std::vector<double>;

// Elementwise |x - y|; the pair feature used by linear models on point data.
Vec abs_diff(const Vec& x, const Vec& y);

// Labeled points with a common feature dimension.
struct PointDataset {
  std::vector<Vec> points;
  std::vector<int> labels;

  std::size_t size() const { return points.size(); }
  int dim() const { return points.empty() ? 0 : static_cast<int>(points[0].size()); }

  // Throws std::invalid_argument on ragged features or non-contiguous labels.
  void validate() const;
};

// Records grouped into blocks; features exist only for within-block pairs.
struct PairDataset {
  std::vector<int> point_ids;  // external ids, position = internal index
  std::vector<int> labels;
  std::vector<int> blocks;
  std::map<std::pair<int, int>, Vec> pair_features;  // key: (min,max) internal index

  std::size_t size() const { return point_ids.size(); }
  int dim() const;

  // Stored feature for an unordered within-block pair.
  const Vec& feature(int i, int j) const;

  void validate() const;
};

// Ground-truth partition plus the within/across pair sets it induces.
struct GroundTruth {
  std::vector<std::vector<int>> partition;           // point indices per cluster
  std::vector<std::pair<int, int>> within_pairs;     // i < j
  std::vector<std::pair<int, int>> across_pairs;

  static GroundTruth from_labels(const std::vector<int>& labels);
  // Pairs restricted to points sharing a block.
  static GroundTruth from_labels(const std::vector<int>& labels,
                                 const std::vector<int>& blocks);
};

enum class ModelKind { LinearPair, Mahalanobis };

// Learnable dissimilarity: linear on pair features, or (x-y)^T A^T A (x-y).
// Keeps a running parameter average for averaged-perceptron evaluation.
class DissimilarityModel {
 public:
  static DissimilarityModel linear(int dim, std::uint64_t seed);
  static DissimilarityModel linear_from(Vec weights, double bias);
  static DissimilarityModel mahalanobis(int dim, std::uint64_t seed);
  static DissimilarityModel mahalanobis_from(Vec factor_row_major, int dim);
  // Fixed A = I with a square root on top: plain Euclidean distance.
  static DissimilarityModel euclidean(int dim);

  ModelKind kind() const { return kind_; }
  int dim() const { return dim_; }

  // Linear params: d weights then bias. Mahalanobis: A row-major, d*d.
  const Vec& params() const { return params_; }
  void set_params(Vec p);

  double score_feature(const Vec& phi) const;               // LinearPair only
  double score_points(const Vec& x, const Vec& y) const;    // either kind

  // d(dissimilarity)/d(params), same layout as params().
  Vec feature_gradient(const Vec& phi) const;
  Vec point_gradient(const Vec& x, const Vec& y) const;

  // params -= rate * grad, then fold the new params into the running average.
  void apply_update(const Vec& grad, double rate);
  long long update_count() const { return update_count_; }

  // Mean of parameters over all completed update steps (current params if none).
  DissimilarityModel averaged() const;

 private:
  DissimilarityModel(ModelKind kind, int dim, Vec params);

  ModelKind kind_;
  int dim_;
  bool take_root_ = false;  // report sqrt of the quadratic form
  Vec params_;
  Vec avg_sum_;
  long long update_count_ = 0;
};

// Uniform view over both dataset kinds: blocks of labeled points with a
// model-backed dissimilarity and parameter gradients.
class DatasetView {
 public:
  explicit DatasetView(const PointDataset& data);
  DatasetView(const PointDataset& data, std::vector<int> point_subset);
  DatasetView(const PairDataset& data, const std::vector<int>& block_subset);

  int block_count() const { return static_cast<int>(block_points_.size()); }
  const std::vector<int>& block_points(int b) const { return block_points_[b]; }
  std::size_t size() const { return n_; }
  int label(int point) const;
  int dim() const;
  bool is_pair_data() const { return pairs_ != nullptr; }

  double dissim(const DissimilarityModel& model, int i, int j) const;
  // grad += coeff * d f(i,j)/d params
  void add_gradient(const DissimilarityModel& model, int i, int j, double coeff,
                    Vec& grad) const;

  // Within/across pair sets over this view (within blocks for pair data).
  GroundTruth ground_truth() const;

 private:
  const PointDataset* points_ = nullptr;
  const PairDataset* pairs_ = nullptr;
  std::vector<std::vector<int>> block_points_;
  std::size_t n_ = 0;
};

}  // namespace explink

#endif
