#include <pla/errors.hpp>
#include <pla/perturbation.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace pla {

PerturbationPair::PerturbationPair(DispersionMatrix base, Eigen::MatrixXd delta)
    : base_(std::move(base)), delta_(std::move(delta)) {
  if (delta_.rows() != base_.size() || delta_.cols() != base_.size()) {
    throw DimensionError("perturbation must have the same shape as the base matrix");
  }
  if (!delta_.allFinite()) throw NumericalError("perturbation has non-finite entries");
  const double defect = (delta_ - delta_.transpose()).cwiseAbs().maxCoeff();
  if (defect > 1e-12 * std::max(1.0, delta_.cwiseAbs().maxCoeff())) {
    throw SymmetryError("perturbation is not symmetric");
  }
  frobenius_norm_ = delta_.norm();
}

BoundDiagnostic eigengap_bound(const EigenSystem& base_es, const PerturbationPair& pair, double tau) {
  const Eigen::Index m = base_es.size();
  if (m != pair.base().size()) throw DimensionError("eigensystem does not belong to the perturbation base");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  const double scale = std::pow(2.0, 1.5) * pair.frobenius_norm();
  const auto& l = base_es.eigenvalues;

  BoundDiagnostic out;
  out.tau = tau;
  out.delta_frobenius = pair.frobenius_norm();
  out.eigengaps.resize(m);
  out.bounds.resize(m);
  out.implies_below_tau.resize(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    const double above = j == 0 ? kInf : l(j - 1) - l(j);
    const double below = j + 1 == m ? kInf : l(j) - l(j + 1);
    const double gap = std::max(0.0, std::min(above, below));
    out.eigengaps(j) = gap;
    out.bounds(j) = gap > 0.0 ? scale / gap : kInf;
    out.implies_below_tau[static_cast<std::size_t>(j)] = out.bounds(j) < tau;
  }
  return out;
}

Eigen::VectorXd eigenvector_shift(const EigenSystem& base, const EigenSystem& perturbed) {
  if (base.size() != perturbed.size()) throw DimensionError("eigensystems differ in size");
  Eigen::VectorXd shift(base.size());
  for (Eigen::Index j = 0; j < base.size(); ++j) {
    const double sign = perturbed.eigenvectors.col(j).dot(base.eigenvectors.col(j)) < 0.0 ? -1.0 : 1.0;
    shift(j) = (sign * perturbed.eigenvectors.col(j) - base.eigenvectors.col(j)).cwiseAbs().maxCoeff();
  }
  return shift;
}

namespace {

constexpr double kZeroEntry = 1e-12;

struct TrackStep {
  std::optional<Eigen::VectorXd> vector;
  double overlap = 1.0;  ///< smallest overlap over the sub-steps taken
};

// Follows `from` (an eigenvector at increment mu_from) to mu_to. Sub-steps
// whose best overlap is below kSmooth are halved, so an avoided crossing is
// followed through its rotation instead of jumping to the neighbouring
// eigenvector. Once halving is exhausted, min_overlap decides.
TrackStep track(const Eigen::MatrixXd& base, Eigen::Index d, const Eigen::VectorXd& from, double mu_from,
                double mu_to, double min_overlap) {
  constexpr double kSmooth = 0.999;
  constexpr int kMaxHalvings = 40;
  TrackStep out;
  Eigen::VectorXd current = from;
  double at = mu_from;
  double step = mu_to - mu_from;
  int halvings = 0;
  while (at < mu_to) {
    const double next = std::min(mu_to, at + step);
    Eigen::MatrixXd shifted = base;
    shifted(d, d) += next;
    const EigenSystem es = symmetric_eigen(shifted);
    Eigen::Index best = 0;
    const double overlap = (es.eigenvectors.transpose() * current).cwiseAbs().maxCoeff(&best);
    if (overlap < kSmooth && halvings < kMaxHalvings) {
      step *= 0.5;
      ++halvings;
      continue;
    }
    out.overlap = std::min(out.overlap, overlap);
    if (overlap < min_overlap) return out;
    Eigen::VectorXd v = es.eigenvectors.col(best);
    if (v.dot(current) < 0.0) v = -v;
    current = std::move(v);
    at = next;
    if (halvings > 0) {
      step *= 2.0;
      --halvings;
    }
  }
  out.vector = std::move(current);
  return out;
}

}  // namespace

bool SensitivityProfile::signs_match(double tol) const {
  const auto d = target_variable;
  const bool d_below_one = base_abs_entries(d) < 1.0 - kZeroEntry;
  for (const auto& p : points) {
    if (!p.tracked) continue;
    for (Eigen::Index i = 0; i < p.forward_diffs.size(); ++i) {
      if (i == d) {
        if (d_below_one && p.forward_diffs(i) < -tol) return false;
      } else if (base_abs_entries(i) > kZeroEntry && d_below_one && p.forward_diffs(i) > tol) {
        return false;
      }
    }
  }
  return true;
}

SensitivityProfile variance_sensitivity(const DispersionMatrix& m, Eigen::Index d,
                                        const std::vector<double>& increments, double min_overlap) {
  if (m.kind() != DispersionKind::kCovariance) {
    throw ConsistencyError("variance sensitivity needs a covariance matrix");
  }
  if (d < 0 || d >= m.size()) throw std::out_of_range("variable index out of range");
  double last = 0.0;
  for (double mu : increments) {
    if (!(mu > last)) throw std::invalid_argument("increments must be positive and strictly increasing");
    last = mu;
  }

  const EigenSystem base = symmetric_eigen(m.entries());
  Eigen::Index delta = 0;
  while (delta + 1 < base.size() && std::abs(base.eigenvectors(d, delta)) <= 1e-8) ++delta;

  SensitivityProfile profile;
  profile.target_variable = d;
  profile.probed_eigenvector = delta;
  profile.base_abs_entries = base.eigenvectors.col(delta).cwiseAbs();

  Eigen::VectorXd previous = base.eigenvectors.col(delta);
  Eigen::VectorXd previous_abs = profile.base_abs_entries;
  double previous_mu = 0.0;

  for (double mu : increments) {
    SensitivityPoint point;
    point.increment = mu;
    try {
      const auto step = track(m.entries(), d, previous, previous_mu, mu, min_overlap);
      point.overlap = step.overlap;
      if (!step.vector) {
        std::ostringstream msg;
        msg << "TrackingError: best overlap " << step.overlap << " below " << min_overlap;
        point.error = msg.str();
      } else {
        point.tracked = true;
        point.abs_entries = step.vector->cwiseAbs();
        point.forward_diffs = (point.abs_entries - previous_abs) / (mu - previous_mu);
        previous = *step.vector;
        previous_abs = point.abs_entries;
        previous_mu = mu;
      }
    } catch (const Error& e) {
      point.error = e.code() + ": " + e.what();
    }
    profile.points.push_back(std::move(point));
  }
  return profile;
}

std::vector<double> geometric_grid(double first, double last, int steps) {
  if (!(first > 0.0 && last > first) || steps < 2) {
    throw std::invalid_argument("geometric grid needs 0 < first < last and at least 2 steps");
  }
  std::vector<double> grid(static_cast<std::size_t>(steps));
  const double ratio = std::pow(last / first, 1.0 / (steps - 1));
  double value = first;
  for (int i = 0; i < steps; ++i) {
    grid[static_cast<std::size_t>(i)] = value;
    value *= ratio;
  }
  grid.back() = last;
  return grid;
}

}  // namespace pla
