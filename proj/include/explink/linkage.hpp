#ifndef EXPLINK_LINKAGE_HPP
#define EXPLINK_LINKAGE_HPP

#include <span>
#include <vector>

namespace explink {

// Finite alphas are clamped to this magnitude; beyond it the softmax is
// numerically identical to min/max.
inline constexpr double kAlphaMax = 50.0;

// Interpolation parameter of the exponential linkage family.
// NegInf = single linkage, Finite(0) = average, PosInf = complete.
struct Alpha {
  enum class Kind { NegInf, Finite, PosInf };
  Kind kind = Kind::Finite;
  double value = 0.0;

  static Alpha neg_inf() { return {Kind::NegInf, 0.0}; }
  static Alpha pos_inf() { return {Kind::PosInf, 0.0}; }
  static Alpha finite(double v);

  bool is_finite() const { return kind == Kind::Finite; }
  bool operator==(const Alpha& o) const {
    return kind == o.kind && (kind != Kind::Finite || value == o.value);
  }
};

enum class LinkageKind { Single, Average, Complete, Exp };

struct LinkageSpec {
  LinkageKind kind = LinkageKind::Single;
  Alpha alpha;  // Exp only

  static LinkageSpec single() { return {LinkageKind::Single, Alpha::neg_inf()}; }
  static LinkageSpec average() { return {LinkageKind::Average, Alpha::finite(0)}; }
  static LinkageSpec complete() { return {LinkageKind::Complete, Alpha::pos_inf()}; }
  static LinkageSpec exp(Alpha a) { return {LinkageKind::Exp, a}; }
};

// Sufficient statistics of the cross-cluster pair dissimilarities of one
// cluster pair. The exponential sums are kept in shifted form
// w_sum = sum exp(a f - shift) for the finite alpha the stats were built with,
// so merging stays stable for large |a f|.
struct LinkageStats {
  long long count = 0;
  double sum_f = 0.0;
  double min_f = 0.0;
  double max_f = 0.0;
  double shift = 0.0;
  double w_sum = 0.0;
  double wf_sum = 0.0;
  Alpha alpha;

  static LinkageStats from_values(std::span<const double> f, Alpha alpha);
  static LinkageStats single_value(double f, Alpha alpha);
};

// Psi^alpha: softmax-weighted mean of the pair dissimilarities.
// NegInf -> min, PosInf -> max, Finite(a) -> sum e^{a f} f / sum e^{a f}.
double explink_value(const LinkageStats& stats, Alpha alpha);

double classic_linkage(const LinkageStats& stats, LinkageKind kind);

double linkage_value(const LinkageStats& stats, const LinkageSpec& spec);

// Stats of the disjoint union of two pair sets built under the same alpha.
LinkageStats merge_stats(const LinkageStats& a, const LinkageStats& b, Alpha alpha);

// d Psi / d alpha: the softmax-weighted variance of the f values. Finite alpha
// only.
double explink_alpha_gradient(std::span<const double> f, Alpha alpha);

// d Psi / d f_i per pair. Finite(a): w_i (1 + a (f_i - Psi)). Infinite alpha:
// subgradient 1 on the first extremal pair, 0 elsewhere.
std::vector<double> explink_f_gradients(std::span<const double> f, Alpha alpha);

}  // namespace explink

#endif
