#pragma once

#include <pla/dispersion.hpp>
#include <pla/ingest.hpp>

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pla {

/// Which dispersion matrix drives block detection, and whether its
/// eigenvectors are rescaled to unit max-abs entry first.
enum class Mode { kCovariance, kCorrelation, kCovarianceRescaled, kCorrelationRescaled };

enum class EvFormula { kExact, kApprox };

std::string to_string(Mode mode);
std::string to_string(EvFormula formula);
Mode parse_mode(const std::string& text);
EvFormula parse_ev_formula(const std::string& text);

bool uses_correlation(Mode mode) noexcept;
bool uses_rescaling(Mode mode) noexcept;

struct PlaConfig {
  double tau = 0.6;
  Mode mode = Mode::kCorrelationRescaled;
  double ev_cutoff = 0.05;
  EvFormula ev_formula = EvFormula::kExact;
  DispersionTolerances tolerances{};

  /// Throws std::invalid_argument unless 0 < tau < 1 and 0 <= ev_cutoff < 1.
  void validate() const;
};

/// Eigenvector entries used for the structure check, one eigenvector per
/// column. Either raw eigenvectors or eigenvectors divided by their
/// largest absolute entry.
struct LoadingMatrix {
  Eigen::MatrixXd values;
};

LoadingMatrix raw_loadings(const EigenSystem& es);

/// Divides every eigenvector by its largest absolute entry, so each column's
/// max-abs entry is exactly 1.
LoadingMatrix rescale_eigenvectors(const EigenSystem& es);

/// Variables co-supported with an equally sized set of eigenvectors.
/// Indices are zero-based.
struct Block {
  std::vector<Eigen::Index> variables;
  std::vector<Eigen::Index> eigen_indices;
  /// Covariance eigenvectors credited to the block by the approximate
  /// formula. Equal to eigen_indices in covariance modes.
  std::vector<Eigen::Index> covariance_eigen_indices;
  double ev_exact = 0.0;
  double ev_approx = 0.0;
  bool discardable = false;

  friend bool operator==(const Block&, const Block&) = default;
};

struct BlockPartition {
  std::vector<Block> blocks;
  /// Variables in components whose variable and eigenvector counts differ.
  std::vector<Eigen::Index> residual;
  /// Eigenvectors of those unbalanced components.
  std::vector<Eigen::Index> residual_eigen;
  /// Explained-variance shares of the residual variables (exact / approx).
  double residual_ev_exact = 0.0;
  double residual_ev_approx = 0.0;
  double tau_used = 0.0;
  std::optional<Mode> mode_used;
  std::vector<std::string> warnings;

  /// Same variable and eigenvector sets, ignoring EV figures.
  bool same_structure(const BlockPartition& other) const;
};

/// Connected components of the bipartite graph variables <-> eigenvectors
/// with an edge wherever |loading| > tau. Balanced components become blocks
/// (ordered by their smallest eigenvector index); the others go to residual.
BlockPartition detect_blocks(const LoadingMatrix& loadings, double tau);

/// Share of total variance carried by the block's variables, summing the
/// squared entries of *all* eigenvectors over the block rows.
double explained_variance_exact(const Block& block, const EigenSystem& cov_es);

/// Share of total variance of the block's own eigenvalues.
double explained_variance_approx(const Block& block, const EigenSystem& cov_es);

/// Dispersion inputs when no raw data is available.
struct DispersionInput {
  std::optional<DispersionMatrix> covariance;
  std::optional<DispersionMatrix> correlation;
};

struct PlaReport {
  BlockPartition partition;
  std::vector<std::string> variable_names;
  Eigen::VectorXd covariance_eigenvalues;
  Eigen::VectorXd correlation_eigenvalues;  ///< empty in covariance modes without data
  std::vector<std::string> warnings;
  std::vector<std::string> recommendation;
  PlaConfig config;
};

PlaReport run_pla(const DataMatrix& data, const PlaConfig& config);
PlaReport run_pla(const DispersionInput& input, const PlaConfig& config,
                  std::vector<std::string> names = {});

/// Drops the recommended columns, keeping the original order.
DataMatrix discard(const DataMatrix& data, const PlaReport& report);

}  // namespace pla
