#include "explink/core.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <unordered_map>

namespace explink {

Vec abs_diff(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("abs_diff: dimension mismatch");
  }
  Vec out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = std::abs(x[k] - y[k]);
  return out;
}

namespace {

void check_labels_contiguous(const std::vector<int>& labels) {
  std::set<int> seen(labels.begin(), labels.end());
  int expect = 0;
  for (int l : seen) {
    if (l != expect++) {
      throw std::invalid_argument("labels must be {0..K-1} with every id used");
    }
  }
}

}  // namespace

void PointDataset::validate() const {
  if (points.size() != labels.size()) {
    throw std::invalid_argument("points/labels size mismatch");
  }
  if (points.empty()) throw std::invalid_argument("empty dataset");
  const std::size_t d = points[0].size();
  if (d == 0) throw std::invalid_argument("feature dimension must be >= 1");
  for (const auto& p : points) {
    if (p.size() != d) throw std::invalid_argument("ragged feature vectors");
  }
  check_labels_contiguous(labels);
}

int PairDataset::dim() const {
  return pair_features.empty() ? 0
                               : static_cast<int>(pair_features.begin()->second.size());
}

const Vec& PairDataset::feature(int i, int j) const {
  if (i == j) throw std::invalid_argument("pair feature requires distinct points");
  if (blocks[i] != blocks[j]) {
    throw std::invalid_argument("pair feature requested across blocks");
  }
  auto it = pair_features.find({std::min(i, j), std::max(i, j)});
  if (it == pair_features.end()) {
    throw std::runtime_error("missing pair feature for (" + std::to_string(i) +
                             "," + std::to_string(j) + ")");
  }
  return it->second;
}

void PairDataset::validate() const {
  const std::size_t n = point_ids.size();
  if (labels.size() != n || blocks.size() != n) {
    throw std::invalid_argument("point_ids/labels/blocks size mismatch");
  }
  if (n == 0) throw std::invalid_argument("empty dataset");
  check_labels_contiguous(labels);
  const int d = dim();
  for (const auto& [key, phi] : pair_features) {
    if (static_cast<int>(phi.size()) != d) {
      throw std::invalid_argument("ragged pair features");
    }
  }
  // every within-block pair must be present
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (blocks[i] != blocks[j]) continue;
      if (!pair_features.count({static_cast<int>(i), static_cast<int>(j)})) {
        throw std::runtime_error("missing within-block pair feature (" +
                                 std::to_string(point_ids[i]) + "," +
                                 std::to_string(point_ids[j]) + ")");
      }
    }
  }
}

GroundTruth GroundTruth::from_labels(const std::vector<int>& labels) {
  std::vector<int> blocks(labels.size(), 0);
  return from_labels(labels, blocks);
}

GroundTruth GroundTruth::from_labels(const std::vector<int>& labels,
                                     const std::vector<int>& blocks) {
  GroundTruth gt;
  std::unordered_map<int, std::size_t> cluster_of;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = cluster_of.emplace(labels[i], gt.partition.size());
    if (inserted) gt.partition.emplace_back();
    gt.partition[it->second].push_back(static_cast<int>(i));
  }
  const int n = static_cast<int>(labels.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (blocks[i] != blocks[j]) continue;
      if (labels[i] == labels[j]) {
        gt.within_pairs.emplace_back(i, j);
      } else {
        gt.across_pairs.emplace_back(i, j);
      }
    }
  }
  return gt;
}

DissimilarityModel::DissimilarityModel(ModelKind kind, int dim, Vec params)
    : kind_(kind), dim_(dim), params_(std::move(params)),
      avg_sum_(params_.size(), 0.0) {}

DissimilarityModel DissimilarityModel::linear(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  Vec p(dim + 1, 0.0);
  for (int k = 0; k < dim; ++k) p[k] = u(rng);
  return DissimilarityModel(ModelKind::LinearPair, dim, std::move(p));
}

DissimilarityModel DissimilarityModel::linear_from(Vec weights, double bias) {
  const int dim = static_cast<int>(weights.size());
  weights.push_back(bias);
  return DissimilarityModel(ModelKind::LinearPair, dim, std::move(weights));
}

DissimilarityModel DissimilarityModel::mahalanobis(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.01, 0.01);
  Vec a(static_cast<std::size_t>(dim) * dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      a[static_cast<std::size_t>(r) * dim + c] = (r == c ? 1.0 : 0.0) + u(rng);
    }
  }
  return DissimilarityModel(ModelKind::Mahalanobis, dim, std::move(a));
}

DissimilarityModel DissimilarityModel::mahalanobis_from(Vec factor_row_major,
                                                        int dim) {
  if (factor_row_major.size() != static_cast<std::size_t>(dim) * dim) {
    throw std::invalid_argument("mahalanobis factor must be dim x dim");
  }
  return DissimilarityModel(ModelKind::Mahalanobis, dim,
                            std::move(factor_row_major));
}

DissimilarityModel DissimilarityModel::euclidean(int dim) {
  Vec a(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int k = 0; k < dim; ++k) a[static_cast<std::size_t>(k) * dim + k] = 1.0;
  DissimilarityModel m(ModelKind::Mahalanobis, dim, std::move(a));
  m.take_root_ = true;
  return m;
}

void DissimilarityModel::set_params(Vec p) {
  if (p.size() != params_.size()) {
    throw std::invalid_argument("set_params: shape mismatch");
  }
  params_ = std::move(p);
}

double DissimilarityModel::score_feature(const Vec& phi) const {
  if (kind_ != ModelKind::LinearPair) {
    throw std::invalid_argument("score_feature requires a LinearPair model");
  }
  if (static_cast<int>(phi.size()) != dim_) {
    throw std::invalid_argument("score_feature: dimension mismatch");
  }
  double s = params_[dim_];  // bias
  for (int k = 0; k < dim_; ++k) s += params_[k] * phi[k];
  return s;
}

double DissimilarityModel::score_points(const Vec& x, const Vec& y) const {
  if (static_cast<int>(x.size()) != dim_ || static_cast<int>(y.size()) != dim_) {
    throw std::invalid_argument("score_points: dimension mismatch");
  }
  if (kind_ == ModelKind::LinearPair) return score_feature(abs_diff(x, y));
  // ||A (x - y)||^2
  double s = 0.0;
  for (int r = 0; r < dim_; ++r) {
    double row = 0.0;
    for (int c = 0; c < dim_; ++c) {
      row += params_[static_cast<std::size_t>(r) * dim_ + c] * (x[c] - y[c]);
    }
    s += row * row;
  }
  return take_root_ ? std::sqrt(s) : s;
}

Vec DissimilarityModel::feature_gradient(const Vec& phi) const {
  if (kind_ != ModelKind::LinearPair) {
    throw std::invalid_argument("feature_gradient requires a LinearPair model");
  }
  if (static_cast<int>(phi.size()) != dim_) {
    throw std::invalid_argument("feature_gradient: dimension mismatch");
  }
  Vec g(phi);
  g.push_back(1.0);
  return g;
}

Vec DissimilarityModel::point_gradient(const Vec& x, const Vec& y) const {
  if (static_cast<int>(x.size()) != dim_ || static_cast<int>(y.size()) != dim_) {
    throw std::invalid_argument("point_gradient: dimension mismatch");
  }
  if (kind_ == ModelKind::LinearPair) return feature_gradient(abs_diff(x, y));
  // d/dA (x-y)^T A^T A (x-y) = 2 A d d^T,  d = x - y
  Vec d(dim_);
  for (int k = 0; k < dim_; ++k) d[k] = x[k] - y[k];
  Vec ad(dim_, 0.0);
  for (int r = 0; r < dim_; ++r) {
    for (int c = 0; c < dim_; ++c) {
      ad[r] += params_[static_cast<std::size_t>(r) * dim_ + c] * d[c];
    }
  }
  double scale = 2.0;
  if (take_root_) {
    double q = 0.0;
    for (double v : ad) q += v * v;
    scale = q > 0.0 ? 1.0 / std::sqrt(q) : 0.0;
  }
  Vec g(params_.size());
  for (int r = 0; r < dim_; ++r) {
    for (int c = 0; c < dim_; ++c) {
      g[static_cast<std::size_t>(r) * dim_ + c] = scale * ad[r] * d[c];
    }
  }
  return g;
}

void DissimilarityModel::apply_update(const Vec& grad, double rate) {
  if (grad.size() != params_.size()) {
    throw std::invalid_argument("apply_update: shape mismatch");
  }
  for (std::size_t k = 0; k < params_.size(); ++k) {
    params_[k] -= rate * grad[k];
    avg_sum_[k] += params_[k];
  }
  ++update_count_;
}

DissimilarityModel DissimilarityModel::averaged() const {
  if (update_count_ == 0) return *this;
  Vec mean(params_.size());
  for (std::size_t k = 0; k < params_.size(); ++k) {
    mean[k] = avg_sum_[k] / static_cast<double>(update_count_);
  }
  DissimilarityModel m(kind_, dim_, std::move(mean));
  m.take_root_ = take_root_;
  return m;
}

DatasetView::DatasetView(const PointDataset& data) : points_(&data) {
  std::vector<int> all(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) all[i] = static_cast<int>(i);
  block_points_.push_back(std::move(all));
  n_ = data.size();
}

DatasetView::DatasetView(const PointDataset& data, std::vector<int> point_subset)
    : points_(&data) {
  n_ = point_subset.size();
  block_points_.push_back(std::move(point_subset));
}

DatasetView::DatasetView(const PairDataset& data,
                         const std::vector<int>& block_subset)
    : pairs_(&data) {
  for (int b : block_subset) {
    std::vector<int> pts;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.blocks[i] == b) pts.push_back(static_cast<int>(i));
    }
    if (pts.empty()) {
      throw std::invalid_argument("block " + std::to_string(b) + " is empty");
    }
    n_ += pts.size();
    block_points_.push_back(std::move(pts));
  }
}

int DatasetView::label(int point) const {
  return points_ ? points_->labels[point] : pairs_->labels[point];
}

int DatasetView::dim() const { return points_ ? points_->dim() : pairs_->dim(); }

double DatasetView::dissim(const DissimilarityModel& model, int i, int j) const {
  if (points_) return model.score_points(points_->points[i], points_->points[j]);
  return model.score_feature(pairs_->feature(i, j));
}

void DatasetView::add_gradient(const DissimilarityModel& model, int i, int j,
                               double coeff, Vec& grad) const {
  Vec g = points_ ? model.point_gradient(points_->points[i], points_->points[j])
                  : model.feature_gradient(pairs_->feature(i, j));
  if (grad.size() != g.size()) grad.resize(g.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) grad[k] += coeff * g[k];
}

GroundTruth DatasetView::ground_truth() const {
  GroundTruth gt;
  std::unordered_map<int, std::size_t> cluster_of;
  for (const auto& block : block_points_) {
    for (std::size_t a = 0; a < block.size(); ++a) {
      const int i = block[a];
      auto [it, inserted] = cluster_of.emplace(label(i), gt.partition.size());
      if (inserted) gt.partition.emplace_back();
      gt.partition[it->second].push_back(i);
      for (std::size_t b = a + 1; b < block.size(); ++b) {
        const int j = block[b];
        if (label(i) == label(j)) {
          gt.within_pairs.emplace_back(i, j);
        } else {
          gt.across_pairs.emplace_back(i, j);
        }
      }
    }
  }
  return gt;
}

}  // namespace explink
