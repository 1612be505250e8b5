#ifndef EXPLINK_TESTS_TEST_UTIL_HPP
#define EXPLINK_TESTS_TEST_UTIL_HPP

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testutil {

// Central finite difference of a scalar function of one coordinate.
inline double central_diff(const std::function<double(double)>& f, double x,
                           double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Relative error with an absolute floor for tiny reference values.
inline bool grad_close(double analytic, double numeric, double rel_tol,
                       double tiny = 1e-8) {
  if (std::abs(numeric) < tiny && std::abs(analytic) < tiny) {
    return std::abs(analytic - numeric) <= tiny;
  }
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  return std::abs(analytic - numeric) <= rel_tol * scale;
}

inline std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n,
                                      double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace testutil

#endif
