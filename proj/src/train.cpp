#include "explink/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "explink/hac.hpp"

namespace explink {

std::string to_string(TrainMethod m) {
  switch (m) {
    case TrainMethod::AP: return "ap";
    case TrainMethod::TRP: return "trp";
    case TrainMethod::BST: return "bst";
    case TrainMethod::MST: return "mst";
    case TrainMethod::ExpMinus: return "exp-";
    case TrainMethod::ExpZero: return "exp0";
    case TrainMethod::ExpPlus: return "exp+";
    case TrainMethod::ExpAlpha: return "expalpha";
  }
  return "?";
}

TrainMethod train_method_from_string(const std::string& s) {
  if (s == "ap") return TrainMethod::AP;
  if (s == "trp") return TrainMethod::TRP;
  if (s == "bst") return TrainMethod::BST;
  if (s == "mst") return TrainMethod::MST;
  if (s == "exp-" || s == "exp-minus") return TrainMethod::ExpMinus;
  if (s == "exp0" || s == "exp-zero") return TrainMethod::ExpZero;
  if (s == "exp+" || s == "exp-plus") return TrainMethod::ExpPlus;
  if (s == "expalpha" || s == "exp-alpha") return TrainMethod::ExpAlpha;
  throw std::invalid_argument("unknown training method: " + s);
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (rate_theta <= 0) throw std::invalid_argument("rate_theta must be > 0");
  if (rate_alpha < 0) throw std::invalid_argument("rate_alpha must be >= 0");
  if (margin < 0) throw std::invalid_argument("margin must be >= 0");
  if (triplet_multiplier < 1) {
    throw std::invalid_argument("triplet_multiplier must be >= 1");
  }
}

LossGrad pair_hinge_losses(const DissimilarityModel& model,
                           const DatasetView& view,
                           std::span<const std::pair<int, int>> within,
                           std::span<const std::pair<int, int>> across,
                           double tau, double mu, bool use_margin) {
  LossGrad out;
  for (const auto& [i, j] : within) {
    const double f = view.dissim(model, i, j);
    if (use_margin) {
      const double h = f - (tau - mu);
      if (h > 0) {
        out.loss += h;
        view.add_gradient(model, i, j, 1.0, out.grad);
      }
    } else {
      out.loss += f;
      view.add_gradient(model, i, j, 1.0, out.grad);
    }
  }
  for (const auto& [i, j] : across) {
    const double f = view.dissim(model, i, j);
    if (use_margin) {
      const double h = (tau + mu) - f;
      if (h > 0) {
        out.loss += h;
        view.add_gradient(model, i, j, -1.0, out.grad);
      }
    } else {
      out.loss -= f;
      view.add_gradient(model, i, j, -1.0, out.grad);
    }
  }
  if (out.grad.empty()) out.grad.assign(model.params().size(), 0.0);
  return out;
}

std::vector<std::array<int, 3>> sample_triplets(const DatasetView& view,
                                                int multiplier,
                                                std::uint64_t seed) {
  // cluster and block membership per point
  std::vector<int> all_points;
  std::vector<std::vector<int>> same_cluster(view.size());
  std::vector<std::vector<int>> out_of_cluster(view.size());
  for (int b = 0; b < view.block_count(); ++b) {
    const auto& pts = view.block_points(b);
    for (int i : pts) {
      all_points.push_back(i);
      for (int j : pts) {
        if (i == j) continue;
        (view.label(i) == view.label(j) ? same_cluster[i] : out_of_cluster[i])
            .push_back(j);
      }
    }
  }
  bool any_valid = false;
  for (int i : all_points) {
    if (!same_cluster[i].empty() && !out_of_cluster[i].empty()) any_valid = true;
  }
  if (!any_valid) {
    throw std::invalid_argument("no point has both a positive and a negative");
  }
  const std::size_t n_triplets = static_cast<std::size_t>(multiplier) * view.size();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_anchor(0, all_points.size() - 1);
  std::vector<std::array<int, 3>> out;
  out.reserve(n_triplets);
  while (out.size() < n_triplets) {
    const int a = all_points[pick_anchor(rng)];
    if (same_cluster[a].empty() || out_of_cluster[a].empty()) continue;
    std::uniform_int_distribution<std::size_t> pick_pos(0, same_cluster[a].size() - 1);
    std::uniform_int_distribution<std::size_t> pick_neg(0, out_of_cluster[a].size() - 1);
    out.push_back({a, same_cluster[a][pick_pos(rng)], out_of_cluster[a][pick_neg(rng)]});
  }
  return out;
}

void best_edges(const DatasetView& view, const DissimilarityModel& model,
                std::vector<std::pair<int, int>>& within,
                std::vector<std::pair<int, int>>& across) {
  within.clear();
  across.clear();
  for (int b = 0; b < view.block_count(); ++b) {
    const auto& pts = view.block_points(b);
    for (int i : pts) {
      int best_within = -1, best_across = -1;
      double fw = std::numeric_limits<double>::infinity();
      double fa = std::numeric_limits<double>::infinity();
      for (int j : pts) {
        if (i == j) continue;
        const double f = view.dissim(model, i, j);
        if (view.label(i) == view.label(j)) {
          if (f < fw) { fw = f; best_within = j; }
        } else {
          if (f < fa) { fa = f; best_across = j; }
        }
      }
      if (best_within >= 0) within.emplace_back(i, best_within);
      if (best_across >= 0) across.emplace_back(i, best_across);
    }
  }
}

std::vector<std::pair<int, int>> mst_edges(
    std::span<const int> points, const std::function<double(int, int)>& weight) {
  const std::size_t n = points.size();
  std::vector<std::pair<int, int>> edges;
  if (n <= 1) return edges;
  std::vector<char> in_tree(n, 0);
  std::vector<double> key(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);
  key[0] = 0.0;
  for (std::size_t it = 0; it < n; ++it) {
    std::size_t u = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (!in_tree[v] && (u == n || key[v] < key[u])) u = v;
    }
    in_tree[u] = 1;
    if (parent[u] >= 0) edges.emplace_back(points[parent[u]], points[u]);
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double w = weight(points[u], points[v]);
      if (w < key[v]) {
        key[v] = w;
        parent[v] = static_cast<int>(u);
      }
    }
  }
  return edges;
}

std::vector<std::pair<int, int>> mst_edges(std::span<const int> points,
                                           const DatasetView& view,
                                           const DissimilarityModel& model) {
  return mst_edges(points, [&](int i, int j) { return view.dissim(model, i, j); });
}

namespace {

// One epoch of Algorithm 1: MST edges of each cluster on the within side,
// each point's nearest out-of-cluster dissimilarity on the across side.
LossGrad sl_epoch(const DatasetView& view, const DissimilarityModel& model,
                  double tau, double mu, bool use_margin) {
  std::vector<std::pair<int, int>> within, across;
  const GroundTruth gt = view.ground_truth();
  for (const auto& cluster : gt.partition) {
    for (auto e : mst_edges(cluster, view, model)) within.push_back(e);
  }
  // nearest out-of-cluster point for every point, within its block
  for (int b = 0; b < view.block_count(); ++b) {
    const auto& pts = view.block_points(b);
    for (int i : pts) {
      int best = -1;
      double fa = std::numeric_limits<double>::infinity();
      for (int j : pts) {
        if (i == j || view.label(i) == view.label(j)) continue;
        const double f = view.dissim(model, i, j);
        if (f < fa) { fa = f; best = j; }
      }
      if (best >= 0) across.emplace_back(i, best);
    }
  }
  return pair_hinge_losses(model, view, within, across, tau, mu, use_margin);
}

}  // namespace

ExplinkEpoch explink_training_epoch(const DatasetView& view,
                                    const DissimilarityModel& model,
                                    Alpha alpha, double tau, double mu,
                                    bool use_margin, Vec* theta_grad,
                                    double* alpha_grad) {
  ExplinkEpoch epoch;
  const LinkageSpec spec = LinkageSpec::exp(alpha);

  for (int b = 0; b < view.block_count(); ++b) {
    const auto& pts = view.block_points(b);
    const int n = static_cast<int>(pts.size());
    HacEngine engine(
        n, [&](int i, int j) { return view.dissim(model, pts[i], pts[j]); },
        spec);
    // every cluster stays pure during training, so one label per cluster
    std::vector<int> cluster_label(n);
    for (int i = 0; i < n; ++i) cluster_label[i] = view.label(pts[i]);

    // dLoss/dPsi contribution of one cluster pair, applied through the raw
    // cross-pair f values
    auto backprop = [&](int a, int c, double coeff) {
      if (coeff == 0.0 || (!theta_grad && !alpha_grad)) return;
      std::vector<double> f;
      std::vector<std::pair<int, int>> raw;
      for (int i : engine.members(a)) {
        for (int j : engine.members(c)) {
          raw.emplace_back(pts[i], pts[j]);
          f.push_back(view.dissim(model, pts[i], pts[j]));
        }
      }
      if (theta_grad) {
        const auto g = explink_f_gradients(f, alpha);
        for (std::size_t k = 0; k < raw.size(); ++k) {
          if (g[k] != 0.0) {
            view.add_gradient(model, raw[k].first, raw[k].second, coeff * g[k],
                              *theta_grad);
          }
        }
      }
      if (alpha_grad && alpha.is_finite()) {
        *alpha_grad += coeff * explink_alpha_gradient(f, alpha);
      }
    };

    while (engine.active_count() > 1) {
      // cheapest pure pair; stop the round loop once none exists
      const auto& act = engine.active();
      double best_pure = std::numeric_limits<double>::infinity();
      std::pair<int, int> pure_pair{-1, -1};
      for (std::size_t i = 0; i < act.size(); ++i) {
        for (std::size_t j = i + 1; j < act.size(); ++j) {
          if (cluster_label[act[i]] != cluster_label[act[j]]) continue;
          const double v = engine.pair_value(act[i], act[j]);
          if (v < best_pure) {
            best_pure = v;
            pure_pair = {act[i], act[j]};
          }
        }
      }
      if (pure_pair.first < 0) break;

      double pure_coeff = 0.0;
      for (std::size_t i = 0; i < act.size(); ++i) {
        for (std::size_t j = i + 1; j < act.size(); ++j) {
          if (cluster_label[act[i]] == cluster_label[act[j]]) continue;
          const double v = engine.pair_value(act[i], act[j]);
          if (use_margin) {
            const double h = (tau + mu) - v;
            if (h > 0) {
              epoch.loss += h;
              backprop(act[i], act[j], -1.0);
            }
          } else if (v < best_pure) {
            epoch.loss += best_pure - v;
            pure_coeff += 1.0;
            backprop(act[i], act[j], -1.0);
          }
        }
      }
      if (use_margin) {
        const double h = best_pure - (tau - mu);
        if (h > 0) {
          epoch.loss += h;
          pure_coeff = 1.0;
        }
      }
      backprop(pure_pair.first, pure_pair.second, pure_coeff);

      cluster_label.push_back(cluster_label[pure_pair.first]);
      engine.merge(pure_pair.first, pure_pair.second);
      epoch.merge_purity.push_back(1);
    }
  }
  return epoch;
}

namespace {

Alpha initial_alpha(const TrainConfig& config) {
  switch (config.method) {
    case TrainMethod::ExpMinus: return Alpha::neg_inf();
    case TrainMethod::ExpZero: return Alpha::finite(0.0);
    case TrainMethod::ExpPlus: return Alpha::pos_inf();
    case TrainMethod::ExpAlpha: {
      std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      return Alpha::finite(u(rng));
    }
    default:
      throw std::invalid_argument("not an explink training method");
  }
}

TrainResult train_explink(const DatasetView& view, DissimilarityModel model,
                          const TrainConfig& config) {
  Alpha alpha = initial_alpha(config);
  const bool joint = config.method == TrainMethod::ExpAlpha;
  TrainResult result{model, model, alpha, {}, {}};
  for (int t = 0; t < config.epochs; ++t) {
    Vec theta_grad(model.params().size(), 0.0);
    double alpha_grad = 0.0;
    const auto epoch = explink_training_epoch(
        view, model, alpha, config.threshold, config.margin, config.use_margin,
        &theta_grad, joint ? &alpha_grad : nullptr);
    result.loss_trace.push_back(epoch.loss);
    result.merge_purity_log.insert(result.merge_purity_log.end(),
                                   epoch.merge_purity.begin(),
                                   epoch.merge_purity.end());
    model.apply_update(theta_grad, config.rate_theta);
    if (joint) {
      alpha = Alpha::finite(alpha.value - config.rate_alpha * alpha_grad);
    }
  }
  result.model = model.averaged();
  result.final_model = model;
  result.alpha = alpha;
  return result;
}

}  // namespace

FitAlphaResult fit_alpha(const DatasetView& view,
                         const DissimilarityModel& model,
                         const TrainConfig& config) {
  config.validate();
  Alpha alpha = Alpha::finite(0.0);
  FitAlphaResult result;
  for (int t = 0; t < config.epochs; ++t) {
    double alpha_grad = 0.0;
    const auto epoch = explink_training_epoch(
        view, model, alpha, config.threshold, config.margin, config.use_margin,
        nullptr, &alpha_grad);
    result.loss_trace.push_back(epoch.loss);
    alpha = Alpha::finite(alpha.value - config.rate_alpha * alpha_grad);
  }
  result.alpha = alpha;
  return result;
}

TrainResult train(const DatasetView& view, DissimilarityModel init,
                  const TrainConfig& config) {
  config.validate();
  const GroundTruth gt = view.ground_truth();
  if (gt.partition.size() < 2) {
    throw std::invalid_argument("training needs >= 2 ground-truth clusters");
  }
  switch (config.method) {
    case TrainMethod::ExpMinus:
    case TrainMethod::ExpZero:
    case TrainMethod::ExpPlus:
    case TrainMethod::ExpAlpha:
      return train_explink(view, std::move(init), config);
    default:
      break;
  }

  DissimilarityModel model = std::move(init);
  TrainResult result{model, model, std::nullopt, {}, {}};
  std::vector<std::pair<int, int>> within, across;
  for (int t = 0; t < config.epochs; ++t) {
    LossGrad lg;
    switch (config.method) {
      case TrainMethod::AP:
        lg = pair_hinge_losses(model, view, gt.within_pairs, gt.across_pairs,
                               config.threshold, config.margin, config.use_margin);
        break;
      case TrainMethod::TRP: {
        const auto triplets = sample_triplets(
            view, config.triplet_multiplier,
            config.seed + 0x100000001ULL * static_cast<std::uint64_t>(t));
        within.clear();
        across.clear();
        for (const auto& [a, p, ng] : triplets) {
          within.emplace_back(a, p);
          across.emplace_back(a, ng);
        }
        lg = pair_hinge_losses(model, view, within, across, config.threshold,
                               config.margin, config.use_margin);
        break;
      }
      case TrainMethod::BST:
        best_edges(view, model, within, across);
        lg = pair_hinge_losses(model, view, within, across, config.threshold,
                               config.margin, config.use_margin);
        break;
      case TrainMethod::MST:
        lg = sl_epoch(view, model, config.threshold, config.margin,
                      config.use_margin);
        break;
      default:
        break;
    }
    result.loss_trace.push_back(lg.loss);
    model.apply_update(lg.grad, config.rate_theta);
  }
  result.model = model.averaged();
  result.final_model = model;
  return result;
}

}  // namespace explink
