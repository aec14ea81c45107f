#pragma once

#include <pla/ingest.hpp>
#include <pla/pla.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pla {

enum class ScenarioKind { kSingleVars, kOneBlock };

std::string to_string(ScenarioKind kind);
ScenarioKind parse_scenario(const std::string& text);

/// Parameters of the factor construction for correlated blocks:
/// C = A A^T + ridge * I with A ~ N(0,1) of rank min(size, rank_cap),
/// rescaled to unit diagonal.
struct CorrelatedCoreParams {
  int rank_cap = 5;
  double ridge = 0.1;
};

struct ScenarioSpec {
  int m_total = 20;
  ScenarioKind kind = ScenarioKind::kSingleVars;
  int planted = 1;  ///< k singletons, or the block size kappa
  int n_sample = 5000;
  double tau = 0.4;
  Mode mode = Mode::kCorrelationRescaled;
  double epsilon_scale = 0.0;
  CorrelatedCoreParams core{};

  /// Throws DimensionError unless k >= 1, M - k >= 2 (single-vars) or
  /// 2 <= kappa <= M - 2 (one-block), and N >= 2.
  void validate() const;
};

struct MonteCarloSpec {
  int iterations = 2000;
  std::uint64_t master_seed = 42;
  /// 0 = use PLA_THREADS or the hardware concurrency.
  int threads = 0;
};

/// Mean-zero Gaussian population with an explicit covariance. Planted
/// variables occupy the last positions.
struct PopulationModel {
  Eigen::MatrixXd covariance;
  std::vector<Eigen::Index> planted;
  ScenarioKind kind = ScenarioKind::kSingleVars;
};

struct ErrorEstimate {
  int failures = 0;
  int iterations = 0;
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  std::vector<std::uint64_t> seeds;
  std::vector<bool> failed;
  std::vector<std::string> errors;  ///< "iteration <s>: <message>" per numerical failure
};

/// splitmix64 mix of (master_seed, iteration).
std::uint64_t iteration_seed(std::uint64_t master_seed, std::uint64_t iteration);

PopulationModel generate_population(const ScenarioSpec& spec, std::uint64_t seed);

/// N i.i.d. rows via the Cholesky factor of the population covariance.
/// Throws FactorizationError if the covariance is not positive definite.
DataMatrix draw_sample(const PopulationModel& pop, int n, std::uint64_t seed);

/// True iff the planted structure is recovered by `partition`: the planted
/// block appears as exactly one block, or every planted singleton lies in a
/// block made of planted variables only.
bool planted_recovered(const PopulationModel& pop, const BlockPartition& partition);

/// Wilson score interval at 95%.
std::pair<double, double> wilson_interval(int failures, int trials);

ErrorEstimate type_one_error(const ScenarioSpec& scenario, const MonteCarloSpec& mc);

/// Same as calling type_one_error once per tau (identical seeds), sharing the
/// sample and decomposition across thresholds.
std::vector<ErrorEstimate> type_one_error_sweep(const ScenarioSpec& scenario,
                                                const std::vector<double>& taus,
                                                const MonteCarloSpec& mc);

enum class TableId { kSingleVariables, kSingleBlock };

TableId parse_table(const std::string& text);

struct TableFilter {
  std::optional<int> m_total;
  std::optional<int> planted;
  std::optional<int> n_sample;
  std::optional<double> tau;
};

struct TableCell {
  int m_total = 0;
  int planted = 0;
  int n_sample = 0;
  double tau = 0.0;
};

/// The published grid: M in 20..200 step 20, N in {5000, 10000},
/// k in 1..5 with tau in {0.4..0.7} (table I) or kappa in 2..6 with tau in
/// {0.6..0.9} (table II).
std::vector<TableCell> table_grid(TableId table, const TableFilter& filter = {});

struct TableRow {
  TableCell cell;
  ErrorEstimate estimate;
};

std::vector<TableRow> reproduce_table(TableId table, const TableFilter& filter, const MonteCarloSpec& mc);

/// Header "M,k_or_kappa,N,tau,rate,ci_low,ci_high,S" plus one line per row.
std::string table_csv(const std::vector<TableRow>& rows);

/// Thread count from an explicit request, then PLA_THREADS, then hardware.
int resolve_threads(int requested);

}  // namespace pla
