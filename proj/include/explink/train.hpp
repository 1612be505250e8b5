#ifndef EXPLINK_TRAIN_HPP
#define EXPLINK_TRAIN_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "explink/core.hpp"
#include "explink/linkage.hpp"

namespace explink {

enum class TrainMethod { AP, TRP, BST, MST, ExpMinus, ExpZero, ExpPlus, ExpAlpha };

std::string to_string(TrainMethod m);
TrainMethod train_method_from_string(const std::string& s);

struct TrainConfig {
  TrainMethod method = TrainMethod::AP;
  int epochs = 100;
  double rate_theta = 0.01;
  double rate_alpha = 0.05;
  double threshold = 0.0;
  double margin = 2.0;
  int triplet_multiplier = 100;
  bool use_margin = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  DissimilarityModel model;        // averaged over all update steps
  DissimilarityModel final_model;  // parameters after the last update
  std::optional<Alpha> alpha;
  std::vector<double> loss_trace;       // one entry per epoch
  std::vector<char> merge_purity_log;   // explink methods: 1 per training merge
};

struct LossGrad {
  double loss = 0.0;
  Vec grad;  // parameter-shaped
};

// Hinge losses over explicit pair sets. Margin mode: within pairs pay
// max(0, f - (tau - mu)), across pairs pay max(0, (tau + mu) - f). Raw mode:
// sum of within f minus sum of across f.
LossGrad pair_hinge_losses(const DissimilarityModel& model,
                           const DatasetView& view,
                           std::span<const std::pair<int, int>> within,
                           std::span<const std::pair<int, int>> across,
                           double tau, double mu, bool use_margin);

// (anchor, positive, negative) triples: anchor uniform over points, positive
// uniform over the anchor's cluster, negative uniform over out-of-cluster
// points in the anchor's block. Emits multiplier * |view| triples.
std::vector<std::array<int, 3>> sample_triplets(const DatasetView& view,
                                                int multiplier,
                                                std::uint64_t seed);

// For each point: its most similar same-cluster point (within pair, skipped
// for singleton clusters) and most similar different-cluster point (across
// pair), under the current model.
void best_edges(const DatasetView& view, const DissimilarityModel& model,
                std::vector<std::pair<int, int>>& within,
                std::vector<std::pair<int, int>>& across);

// Minimum spanning tree of the complete graph on the given points (Prim,
// dense). Ties broken by smallest point index.
std::vector<std::pair<int, int>> mst_edges(
    std::span<const int> points, const std::function<double(int, int)>& weight);

std::vector<std::pair<int, int>> mst_edges(std::span<const int> points,
                                           const DatasetView& view,
                                           const DissimilarityModel& model);

// One epoch of the supervised-HAC loss: run HAC rounds that only ever merge
// the cheapest pure cluster pair, charging each round for impure pairs that
// would undercut it. Gradients accumulate into theta_grad (if non-null, via
// the model) and alpha_grad (if non-null and alpha is finite).
struct ExplinkEpoch {
  double loss = 0.0;
  std::vector<char> merge_purity;  // 1 entry per merge performed
};

ExplinkEpoch explink_training_epoch(const DatasetView& view,
                                    const DissimilarityModel& model,
                                    Alpha alpha, double tau, double mu,
                                    bool use_margin, Vec* theta_grad,
                                    double* alpha_grad);

struct FitAlphaResult {
  Alpha alpha;
  std::vector<double> loss_trace;
};

// Descent on the supervised-HAC loss over alpha alone, theta frozen,
// initialized at Finite(0).
FitAlphaResult fit_alpha(const DatasetView& view,
                         const DissimilarityModel& model,
                         const TrainConfig& config);

// Dispatch on config.method. init is the untrained model (its kind decides
// linear vs Mahalanobis).
TrainResult train(const DatasetView& view, DissimilarityModel init,
                  const TrainConfig& config);

}  // namespace explink

#endif
