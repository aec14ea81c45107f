#include "internal.hpp"

#include <pla/dispersion.hpp>
#include <pla/errors.hpp>

#include <algorithm>
#include <numeric>
#include <sstream>

namespace pla {

namespace {

double symmetry_defect(const Eigen::MatrixXd& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

void require_square(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionError("matrix must be square and non-empty, got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  }
}

void require_symmetric(const Eigen::MatrixXd& m, double tol) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double defect = symmetry_defect(m);
  if (!(defect <= tol * scale)) {
    std::ostringstream msg;
    msg << "matrix is not symmetric (max |m_ij - m_ji| = " << defect << ")";
    throw SymmetryError(msg.str());
  }
}

Eigen::MatrixXd centered_cross_product(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd c = (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
  return 0.5 * (c + c.transpose());
}

}  // namespace

std::string to_string(DispersionKind kind) {
  return kind == DispersionKind::kCovariance ? "covariance" : "correlation";
}

DispersionMatrix::DispersionMatrix(Eigen::MatrixXd entries, DispersionKind kind,
                                   std::optional<Eigen::Index> source_n, const DispersionTolerances& tol)
    : entries_(std::move(entries)), kind_(kind), source_n_(source_n) {
  require_square(entries_);
  if (!entries_.allFinite()) throw NumericalError("dispersion matrix has non-finite entries");
  require_symmetric(entries_, tol.symmetry);

  if (kind_ == DispersionKind::kCorrelation) {
    for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
      if (std::abs(entries_(i, i) - 1.0) > tol.unit_diagonal) {
        throw NumericalError("correlation matrix diagonal entry " + std::to_string(i + 1) + " is not 1");
      }
    }
    if (entries_.cwiseAbs().maxCoeff() > 1.0 + tol.unit_diagonal) {
      throw NumericalError("correlation matrix has an entry with |r| > 1");
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(entries_, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("eigenvalue computation did not converge");
  const double floor = -tol.psd * entries_.norm();
  if (solver.eigenvalues().minCoeff() < floor) {
    std::ostringstream msg;
    msg << "matrix is not positive semi-definite (min eigenvalue " << solver.eigenvalues().minCoeff() << ")";
    throw NumericalError(msg.str());
  }
}

DispersionMatrix sample_covariance(const DataMatrix& data) {
  if (data.n_rows() < 2) throw DimensionError("covariance needs at least 2 observations");
  return DispersionMatrix(centered_cross_product(data.values()), DispersionKind::kCovariance, data.n_rows());
}

namespace {

Eigen::MatrixXd scale_to_correlation(const Eigen::MatrixXd& cov, const Eigen::VectorXd& sd,
                                     const std::vector<std::string>& names) {
  for (Eigen::Index i = 0; i < sd.size(); ++i) {
    if (!(sd(i) > 0.0)) {
      throw DegenerateColumnError("variable '" + names[static_cast<std::size_t>(i)] + "' has zero variance");
    }
  }
  const Eigen::VectorXd inv = sd.cwiseInverse();
  Eigen::MatrixXd r = inv.asDiagonal() * cov * inv.asDiagonal();
  r = 0.5 * (r + r.transpose());
  r = r.cwiseMax(-1.0).cwiseMin(1.0);
  r.diagonal().setOnes();
  return r;
}

}  // namespace

DispersionMatrix sample_correlation(const DataMatrix& data) {
  const auto& x = data.values();
  const Eigen::VectorXd sd = column_std(x);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    if (detail::is_degenerate(sd(c), x.col(c).cwiseAbs().maxCoeff())) {
      throw DegenerateColumnError("column '" + data.names()[static_cast<std::size_t>(c)] + "' has zero variance");
    }
  }
  const Eigen::MatrixXd cov = centered_cross_product(x);
  return DispersionMatrix(scale_to_correlation(cov, cov.diagonal().cwiseSqrt(), data.names()),
                          DispersionKind::kCorrelation, data.n_rows());
}

DispersionMatrix correlation_from_covariance(const DispersionMatrix& covariance) {
  if (covariance.kind() == DispersionKind::kCorrelation) return covariance;
  const auto& c = covariance.entries();
  return DispersionMatrix(scale_to_correlation(c, c.diagonal().cwiseMax(0.0).cwiseSqrt(), default_names(c.rows())),
                          DispersionKind::kCorrelation, covariance.source_n());
}

void apply_sign_convention(Eigen::MatrixXd& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    const Eigen::Index lead = detail::dominant_index(vectors.col(j));
    if (vectors(lead, j) < 0.0) vectors.col(j) *= -1.0;
  }
}

EigenSystem symmetric_eigen(const Eigen::MatrixXd& m, DispersionKind kind, const DispersionTolerances& tol) {
  require_square(m);
  if (!m.allFinite()) throw NumericalError("matrix has non-finite entries");
  require_symmetric(m, tol.symmetry);

  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericalError("eigensolver did not converge");

  const Eigen::Index n = sym.rows();
  // Eigen returns ascending order.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = n - 1 - i;

  const Eigen::VectorXd& values = solver.eigenvalues();
  const Eigen::MatrixXd& vectors = solver.eigenvectors();
  const double tie = tol.degenerate_eigen * values.cwiseAbs().sum();

  // Within runs of (numerically) tied eigenvalues, order by dominant row.
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t end = start + 1;
    while (end < order.size()) {
      const double gap = values(order[end - 1]) - values(order[end]);
      if (!(gap < tie || gap == 0.0)) break;
      ++end;
    }
    if (end - start > 1) {
      std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(start),
                       order.begin() + static_cast<std::ptrdiff_t>(end),
                       [&](Eigen::Index a, Eigen::Index b) {
                         return detail::dominant_index(vectors.col(a)) < detail::dominant_index(vectors.col(b));
                       });
    }
    start = end;
  }

  EigenSystem es;
  es.kind = kind;
  es.eigenvalues.resize(n);
  es.eigenvectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    es.eigenvalues(j) = values(order[static_cast<std::size_t>(j)]);
    es.eigenvectors.col(j) = vectors.col(order[static_cast<std::size_t>(j)]);
  }
  apply_sign_convention(es.eigenvectors);
  return es;
}

EigenSystem eigendecompose(const DispersionMatrix& m, const DispersionTolerances& tol) {
  EigenSystem es = symmetric_eigen(m.entries(), m.kind(), tol);
  const double floor = -tol.psd * m.entries().norm();
  for (Eigen::Index j = 0; j < es.size(); ++j) {
    if (es.eigenvalues(j) < 0.0) {
      if (es.eigenvalues(j) < floor) throw NumericalError("negative eigenvalue beyond tolerance");
      es.eigenvalues(j) = 0.0;
      ++es.clamped;
    }
  }
  return es;
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> degenerate_pairs(const EigenSystem& es,
                                                                     const DispersionTolerances& tol) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  const double tie = tol.degenerate_eigen * es.eigenvalues.cwiseAbs().sum();
  for (Eigen::Index j = 0; j + 1 < es.size(); ++j) {
    const double gap = std::abs(es.eigenvalues(j) - es.eigenvalues(j + 1));
    if (gap < tie || gap == 0.0) pairs.emplace_back(j, j + 1);
  }
  return pairs;
}

}  // namespace pla
