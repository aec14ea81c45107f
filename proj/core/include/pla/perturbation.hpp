#pragma once

#include <pla/dispersion.hpp>

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace pla {

/// A dispersion matrix together with a symmetric additive perturbation.
class PerturbationPair {
 public:
  PerturbationPair(DispersionMatrix base, Eigen::MatrixXd delta);

  const DispersionMatrix& base() const noexcept { return base_; }
  const Eigen::MatrixXd& delta() const noexcept { return delta_; }
  double frobenius_norm() const noexcept { return frobenius_norm_; }
  Eigen::MatrixXd perturbed() const { return base_.entries() + delta_; }

 private:
  DispersionMatrix base_;
  Eigen::MatrixXd delta_;
  double frobenius_norm_;
};

/// Per-eigenvector perturbation bound 2^{3/2} ||delta||_F / eigengap_j.
/// `implies_below_tau[j]` is the sufficient condition bound_j < tau; false
/// carries no information.
struct BoundDiagnostic {
  Eigen::VectorXd eigengaps;
  Eigen::VectorXd bounds;
  std::vector<bool> implies_below_tau;
  double tau = 0.0;
  double delta_frobenius = 0.0;
};

BoundDiagnostic eigengap_bound(const EigenSystem& base_es, const PerturbationPair& pair, double tau);

/// ||v~_j - s_j v_j||_inf for every j, where s_j = +-1 aligns the signs of
/// the perturbed and unperturbed eigenvectors (matched by position).
Eigen::VectorXd eigenvector_shift(const EigenSystem& base, const EigenSystem& perturbed);

/// One point of a variance sweep.
struct SensitivityPoint {
  double increment = 0.0;
  bool tracked = false;
  double overlap = 0.0;  ///< smallest |<v, v'>| over the tracking sub-steps
  std::optional<std::string> error;
  Eigen::VectorXd abs_entries;      ///< |v_delta^{(i)}| after the increment
  Eigen::VectorXd forward_diffs;    ///< finite differences against the previous point
};

/// Finite-difference sensitivities of |v_delta| to an increase of Var(X_d).
struct SensitivityProfile {
  Eigen::Index target_variable = 0;
  Eigen::Index probed_eigenvector = 0;
  Eigen::VectorXd base_abs_entries;
  std::vector<SensitivityPoint> points;

  /// True if every tracked difference for i != d is <= tol and the d entry
  /// difference is >= -tol, restricted to rows where 0 < |v_delta^{(i)}| and
  /// |v_delta^{(d)}| < 1 held at the start.
  bool signs_match(double tol = 1e-8) const;
};

/// Increases m(d, d) by each grid increment (strictly positive, increasing),
/// re-decomposes, tracks the probed eigenvector by maximal |inner product|
/// with the previous grid point (halving the step where it rotates fast), and
/// differentiates |entries| forward.
///
/// The probed eigenvector is the one with the largest eigenvalue among those
/// with a non-negligible entry in row d.
SensitivityProfile variance_sensitivity(const DispersionMatrix& m, Eigen::Index d,
                                        const std::vector<double>& increments,
                                        double min_overlap = 0.7);

/// Geometric grid of `steps` increments from `first` to `last`.
std::vector<double> geometric_grid(double first, double last, int steps);

}  // namespace pla
