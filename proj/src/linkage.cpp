#include "explink/linkage.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace explink {

Alpha Alpha::finite(double v) {
  return {Kind::Finite, std::clamp(v, -kAlphaMax, kAlphaMax)};
}

namespace {

double finite_or_zero(Alpha a) { return a.is_finite() ? a.value : 0.0; }

void require_nonempty(long long count) {
  if (count < 1) throw std::invalid_argument("linkage over an empty pair set");
}

void require_same_alpha(Alpha built, Alpha asked) {
  if (!(built == asked)) {
    throw std::invalid_argument("linkage stats were built under a different alpha");
  }
}

}  // namespace

LinkageStats LinkageStats::from_values(std::span<const double> f, Alpha alpha) {
  if (f.empty()) throw std::invalid_argument("linkage stats need >= 1 pair");
  const double a = finite_or_zero(alpha);
  LinkageStats s;
  s.alpha = alpha;
  s.count = static_cast<long long>(f.size());
  s.min_f = *std::min_element(f.begin(), f.end());
  s.max_f = *std::max_element(f.begin(), f.end());
  s.shift = a >= 0 ? a * s.max_f : a * s.min_f;  // max of a*f
  for (double v : f) {
    s.sum_f += v;
    const double w = std::exp(a * v - s.shift);
    s.w_sum += w;
    s.wf_sum += w * v;
  }
  return s;
}

LinkageStats LinkageStats::single_value(double f, Alpha alpha) {
  return from_values(std::span<const double>(&f, 1), alpha);
}

double explink_value(const LinkageStats& stats, Alpha alpha) {
  require_nonempty(stats.count);
  require_same_alpha(stats.alpha, alpha);
  switch (alpha.kind) {
    case Alpha::Kind::NegInf:
      return stats.min_f;
    case Alpha::Kind::PosInf:
      return stats.max_f;
    case Alpha::Kind::Finite:
      break;
  }
  const double v = stats.wf_sum / stats.w_sum;
  return std::clamp(v, stats.min_f, stats.max_f);
}

double classic_linkage(const LinkageStats& stats, LinkageKind kind) {
  require_nonempty(stats.count);
  switch (kind) {
    case LinkageKind::Single:
      return stats.min_f;
    case LinkageKind::Average:
      return stats.sum_f / static_cast<double>(stats.count);
    case LinkageKind::Complete:
      return stats.max_f;
    case LinkageKind::Exp:
      break;
  }
  throw std::invalid_argument("classic_linkage: use explink for Exp");
}

double linkage_value(const LinkageStats& stats, const LinkageSpec& spec) {
  if (spec.kind == LinkageKind::Exp) return explink_value(stats, spec.alpha);
  return classic_linkage(stats, spec.kind);
}

LinkageStats merge_stats(const LinkageStats& a, const LinkageStats& b,
                         Alpha alpha) {
  require_nonempty(a.count);
  require_nonempty(b.count);
  require_same_alpha(a.alpha, alpha);
  require_same_alpha(b.alpha, alpha);
  LinkageStats s;
  s.alpha = alpha;
  s.count = a.count + b.count;
  s.sum_f = a.sum_f + b.sum_f;
  s.min_f = std::min(a.min_f, b.min_f);
  s.max_f = std::max(a.max_f, b.max_f);
  s.shift = std::max(a.shift, b.shift);
  const double ra = std::exp(a.shift - s.shift);
  const double rb = std::exp(b.shift - s.shift);
  s.w_sum = a.w_sum * ra + b.w_sum * rb;
  s.wf_sum = a.wf_sum * ra + b.wf_sum * rb;
  return s;
}

namespace {

// Normalized softmax weights for finite alpha.
std::vector<double> softmax_weights(std::span<const double> f, double a) {
  double m = a * f[0];
  for (double v : f) m = std::max(m, a * v);
  std::vector<double> w(f.size());
  double total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    w[i] = std::exp(a * f[i] - m);
    total += w[i];
  }
  for (double& wi : w) wi /= total;
  return w;
}

}  // namespace

double explink_alpha_gradient(std::span<const double> f, Alpha alpha) {
  if (f.empty()) throw std::invalid_argument("alpha gradient over empty pair set");
  if (!alpha.is_finite()) {
    throw std::invalid_argument("alpha gradient undefined at infinite alpha");
  }
  const auto w = softmax_weights(f, alpha.value);
  double mean = 0.0, mean_sq = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    mean += w[i] * f[i];
    mean_sq += w[i] * f[i] * f[i];
  }
  return std::max(0.0, mean_sq - mean * mean);
}

std::vector<double> explink_f_gradients(std::span<const double> f, Alpha alpha) {
  if (f.empty()) throw std::invalid_argument("f gradients over empty pair set");
  if (!alpha.is_finite()) {
    // Subgradient concentrated on the first extremal pair.
    std::vector<double> g(f.size(), 0.0);
    std::size_t best = 0;
    for (std::size_t i = 1; i < f.size(); ++i) {
      const bool better = alpha.kind == Alpha::Kind::NegInf ? f[i] < f[best]
                                                            : f[i] > f[best];
      if (better) best = i;
    }
    g[best] = 1.0;
    return g;
  }
  const double a = alpha.value;
  const auto w = softmax_weights(f, a);
  double psi = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) psi += w[i] * f[i];
  std::vector<double> g(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    g[i] = w[i] * (1.0 + a * (f[i] - psi));
  }
  return g;
}

}  // namespace explink
