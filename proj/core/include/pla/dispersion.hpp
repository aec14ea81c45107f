#pragma once

#include <pla/ingest.hpp>

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pla {

enum class DispersionKind { kCovariance, kCorrelation };

std::string to_string(DispersionKind kind);

/// Tolerances used when validating and decomposing dispersion matrices.
struct DispersionTolerances {
  double symmetry = 1e-12;      ///< relative to max(1, max|entry|)
  double psd = 1e-10;           ///< eigenvalues >= -psd * ||m||_F
  double unit_diagonal = 1e-12;
  double degenerate_eigen = 1e-8;  ///< ties: |l_i - l_j| < degenerate_eigen * tr(m)
};

/// Symmetric positive semi-definite M x M matrix tagged covariance or
/// correlation. The constructor enforces symmetry, PSD (up to rounding noise)
/// and, for correlations, unit diagonal and |r_ij| <= 1.
class DispersionMatrix {
 public:
  DispersionMatrix(Eigen::MatrixXd entries, DispersionKind kind,
                   std::optional<Eigen::Index> source_n = std::nullopt,
                   const DispersionTolerances& tol = {});

  const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  DispersionKind kind() const noexcept { return kind_; }
  std::optional<Eigen::Index> source_n() const noexcept { return source_n_; }
  Eigen::Index size() const noexcept { return entries_.rows(); }

 private:
  Eigen::MatrixXd entries_;
  DispersionKind kind_;
  std::optional<Eigen::Index> source_n_;
};

/// Eigenvalues in non-increasing order with the matching orthonormal
/// eigenvectors as columns. In each eigenvector the entry of largest absolute
/// value is positive (ties go to the lowest row index).
struct EigenSystem {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  DispersionKind kind = DispersionKind::kCovariance;
  /// Number of negative eigenvalues clamped to zero.
  int clamped = 0;

  Eigen::Index size() const noexcept { return eigenvalues.size(); }
};

DispersionMatrix sample_covariance(const DataMatrix& data);
DispersionMatrix sample_correlation(const DataMatrix& data);

/// Rescales a covariance matrix to a correlation matrix. Throws
/// DegenerateColumnError for a zero variance.
DispersionMatrix correlation_from_covariance(const DispersionMatrix& covariance);

/// Decomposes a validated dispersion matrix. Eigenvalues in
/// [-psd * ||m||_F, 0) are clamped to zero.
EigenSystem eigendecompose(const DispersionMatrix& m, const DispersionTolerances& tol = {});

/// Decomposes any symmetric matrix (no PSD requirement, no clamping) with the
/// same ordering and sign conventions. Throws SymmetryError / NumericalError.
EigenSystem symmetric_eigen(const Eigen::MatrixXd& m, DispersionKind kind = DispersionKind::kCovariance,
                            const DispersionTolerances& tol = {});

/// Index pairs (i, i+1) whose eigenvalues are closer than
/// tol.degenerate_eigen * sum of |eigenvalues|.
std::vector<std::pair<Eigen::Index, Eigen::Index>> degenerate_pairs(const EigenSystem& es,
                                                                     const DispersionTolerances& tol = {});

/// Flips each column so that its largest-magnitude entry is positive.
void apply_sign_convention(Eigen::MatrixXd& vectors);

}  // namespace pla
