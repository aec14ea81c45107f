#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace pla::detail {

// A column is constant when its spread is at rounding level of its magnitude.
inline bool is_degenerate(double sd, double max_abs) {
  return sd == 0.0 || !(sd > 64.0 * std::numeric_limits<double>::epsilon() * max_abs);
}

// Row of the largest-magnitude entry; near-ties resolve to the lowest row.
inline Eigen::Index dominant_index(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double max_abs = v.cwiseAbs().maxCoeff();
  const double cutoff = max_abs * (1.0 - 1e-12);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) >= cutoff) return i;
  }
  return 0;
}

}  // namespace pla::detail
