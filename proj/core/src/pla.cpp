#include <pla/errors.hpp>
#include <pla/pla.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace pla {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::kCovariance: return "covariance";
    case Mode::kCorrelation: return "correlation";
    case Mode::kCovarianceRescaled: return "covariance-rescaled";
    case Mode::kCorrelationRescaled: return "correlation-rescaled";
  }
  return "unknown";
}

std::string to_string(EvFormula formula) { return formula == EvFormula::kExact ? "exact" : "approx"; }

Mode parse_mode(const std::string& text) {
  for (Mode m : {Mode::kCovariance, Mode::kCorrelation, Mode::kCovarianceRescaled, Mode::kCorrelationRescaled}) {
    if (to_string(m) == text) return m;
  }
  throw std::invalid_argument("unknown mode '" + text + "'");
}

EvFormula parse_ev_formula(const std::string& text) {
  if (text == "exact") return EvFormula::kExact;
  if (text == "approx") return EvFormula::kApprox;
  throw std::invalid_argument("unknown ev formula '" + text + "'");
}

bool uses_correlation(Mode mode) noexcept {
  return mode == Mode::kCorrelation || mode == Mode::kCorrelationRescaled;
}

bool uses_rescaling(Mode mode) noexcept {
  return mode == Mode::kCovarianceRescaled || mode == Mode::kCorrelationRescaled;
}

void PlaConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
  if (!(ev_cutoff >= 0.0 && ev_cutoff < 1.0)) throw std::invalid_argument("ev_cutoff must lie in [0, 1)");
}

LoadingMatrix raw_loadings(const EigenSystem& es) { return LoadingMatrix{es.eigenvectors}; }

LoadingMatrix rescale_eigenvectors(const EigenSystem& es) {
  LoadingMatrix out{es.eigenvectors};
  for (Eigen::Index j = 0; j < out.values.cols(); ++j) {
    const double max_abs = out.values.col(j).cwiseAbs().maxCoeff();
    if (!(max_abs > 0.0)) throw InvariantViolation("eigenvector " + std::to_string(j + 1) + " is zero");
    out.values.col(j) /= max_abs;
  }
  return out;
}

bool BlockPartition::same_structure(const BlockPartition& other) const {
  if (blocks.size() != other.blocks.size() || residual != other.residual) return false;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].variables != other.blocks[b].variables ||
        blocks[b].eigen_indices != other.blocks[b].eigen_indices) {
      return false;
    }
  }
  return true;
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

std::string join_indices(const std::vector<Eigen::Index>& idx, const char* prefix) {
  std::ostringstream out;
  for (std::size_t i = 0; i < idx.size(); ++i) out << (i ? "," : "") << prefix << idx[i] + 1;
  return out.str();
}

double total_variance(const EigenSystem& es) {
  const double trace = es.eigenvalues.sum();
  if (!(trace > 0.0)) throw ZeroTraceError("eigenvalues sum to zero; explained variance is undefined");
  return trace;
}

void check_indices(const std::vector<Eigen::Index>& idx, Eigen::Index m, const char* what) {
  for (auto i : idx) {
    if (i < 0 || i >= m) throw std::out_of_range(std::string(what) + " index out of range");
  }
}

double row_mass(const EigenSystem& es, const std::vector<Eigen::Index>& rows) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < es.size(); ++j) {
    double mass = 0.0;
    for (auto d : rows) mass += es.eigenvectors(d, j) * es.eigenvectors(d, j);
    sum += es.eigenvalues(j) * mass;
  }
  return sum;
}

double eigen_mass(const EigenSystem& es, const std::vector<Eigen::Index>& eig) {
  double sum = 0.0;
  for (auto j : eig) sum += es.eigenvalues(j);
  return sum;
}

}  // namespace

BlockPartition detect_blocks(const LoadingMatrix& loadings, double tau) {
  const auto& l = loadings.values;
  if (l.rows() != l.cols() || l.rows() == 0) throw DimensionError("loading matrix must be square");
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");

  const auto m = static_cast<std::size_t>(l.rows());
  DisjointSets sets(2 * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (std::abs(l(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) > tau) sets.unite(i, m + j);
    }
  }

  std::map<std::size_t, std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>>> components;
  for (std::size_t i = 0; i < m; ++i) components[sets.find(i)].first.push_back(static_cast<Eigen::Index>(i));
  for (std::size_t j = 0; j < m; ++j) components[sets.find(m + j)].second.push_back(static_cast<Eigen::Index>(j));

  BlockPartition out;
  out.tau_used = tau;
  for (auto& [root, members] : components) {
    auto& [vars, eigs] = members;
    if (!vars.empty() && vars.size() == eigs.size()) {
      Block block;
      block.variables = vars;
      block.eigen_indices = eigs;
      block.covariance_eigen_indices = eigs;
      out.blocks.push_back(std::move(block));
      continue;
    }
    if (!vars.empty()) {
      std::ostringstream msg;
      msg << "variables {" << join_indices(vars, "X") << "} share " << eigs.size()
          << " eigenvector(s); not a balanced block at tau=" << tau;
      out.warnings.push_back(msg.str());
    } else {
      out.warnings.push_back("eigenvector(s) {" + join_indices(eigs, "eig") + "} have no loading above tau");
    }
    out.residual.insert(out.residual.end(), vars.begin(), vars.end());
    out.residual_eigen.insert(out.residual_eigen.end(), eigs.begin(), eigs.end());
  }
  std::sort(out.blocks.begin(), out.blocks.end(),
            [](const Block& a, const Block& b) { return a.eigen_indices.front() < b.eigen_indices.front(); });
  std::sort(out.residual.begin(), out.residual.end());
  std::sort(out.residual_eigen.begin(), out.residual_eigen.end());
  return out;
}

double explained_variance_exact(const Block& block, const EigenSystem& cov_es) {
  check_indices(block.variables, cov_es.size(), "variable");
  return row_mass(cov_es, block.variables) / total_variance(cov_es);
}

double explained_variance_approx(const Block& block, const EigenSystem& cov_es) {
  check_indices(block.eigen_indices, cov_es.size(), "eigenvector");
  return eigen_mass(cov_es, block.eigen_indices) / total_variance(cov_es);
}

namespace {

// Credits every covariance eigenvector to one group of variables (blocks,
// then the residual), largest squared-loading mass first, with at most
// |variables| eigenvectors per group.
std::vector<std::vector<Eigen::Index>> assign_covariance_eigenvectors(
    const EigenSystem& cov_es, const std::vector<std::vector<Eigen::Index>>& groups) {
  struct Candidate {
    double mass;
    Eigen::Index eigen;
    std::size_t group;
  };
  std::vector<Candidate> candidates;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (Eigen::Index j = 0; j < cov_es.size(); ++j) {
      double mass = 0.0;
      for (auto d : groups[g]) mass += cov_es.eigenvectors(d, j) * cov_es.eigenvectors(d, j);
      candidates.push_back({mass, j, g});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(b.mass, a.eigen, a.group) < std::tie(a.mass, b.eigen, b.group);
  });

  std::vector<std::vector<Eigen::Index>> assigned(groups.size());
  std::vector<bool> taken(static_cast<std::size_t>(cov_es.size()), false);
  for (const auto& c : candidates) {
    if (taken[static_cast<std::size_t>(c.eigen)] || assigned[c.group].size() >= groups[c.group].size()) continue;
    taken[static_cast<std::size_t>(c.eigen)] = true;
    assigned[c.group].push_back(c.eigen);
  }
  for (auto& a : assigned) std::sort(a.begin(), a.end());
  return assigned;
}

void warn_degenerate(const EigenSystem& es, const DispersionTolerances& tol, std::vector<std::string>& warnings) {
  for (auto [a, b] : degenerate_pairs(es, tol)) {
    std::ostringstream msg;
    msg << "degenerate " << to_string(es.kind) << " eigenvalues " << a + 1 << " and " << b + 1 << " ("
        << es.eigenvalues(a) << "); eigenvectors inside the tied eigenspace are not unique";
    warnings.push_back(msg.str());
  }
  if (es.clamped > 0) {
    warnings.push_back(std::to_string(es.clamped) + " negative " + to_string(es.kind) +
                       " eigenvalue(s) clamped to zero");
  }
  for (Eigen::Index j = 0; j < es.size(); ++j) {
    if (es.eigenvalues(j) == 0.0) {
      warnings.push_back(to_string(es.kind) + " eigenvalue " + std::to_string(j + 1) + " is exactly zero");
    }
  }
}

PlaReport run_pipeline(const DispersionMatrix& covariance, const std::optional<DispersionMatrix>& correlation,
                       const PlaConfig& config, std::vector<std::string> names) {
  config.validate();
  const Eigen::Index m = covariance.size();
  if (names.empty()) names = default_names(m);
  if (static_cast<Eigen::Index>(names.size()) != m) throw DimensionError("variable names do not match matrix size");
  if (correlation && correlation->size() != m) {
    throw DimensionError("covariance and correlation matrices differ in size");
  }

  PlaReport report;
  report.config = config;
  report.variable_names = std::move(names);

  const EigenSystem cov_es = eigendecompose(covariance, config.tolerances);
  report.covariance_eigenvalues = cov_es.eigenvalues;
  warn_degenerate(cov_es, config.tolerances, report.warnings);

  std::optional<EigenSystem> corr_es;
  if (correlation) {
    corr_es = eigendecompose(*correlation, config.tolerances);
    report.correlation_eigenvalues = corr_es->eigenvalues;
    if (uses_correlation(config.mode)) warn_degenerate(*corr_es, config.tolerances, report.warnings);
  }

  const EigenSystem& detect_es = uses_correlation(config.mode) ? *corr_es : cov_es;
  const LoadingMatrix loadings = uses_rescaling(config.mode) ? rescale_eigenvectors(detect_es) : raw_loadings(detect_es);

  BlockPartition partition = detect_blocks(loadings, config.tau);
  partition.mode_used = config.mode;

  std::vector<std::vector<Eigen::Index>> credited;
  if (uses_correlation(config.mode)) {
    std::vector<std::vector<Eigen::Index>> groups;
    for (const auto& b : partition.blocks) groups.push_back(b.variables);
    groups.push_back(partition.residual);
    credited = assign_covariance_eigenvectors(cov_es, groups);
  } else {
    for (const auto& b : partition.blocks) credited.push_back(b.eigen_indices);
    credited.push_back(partition.residual_eigen);
  }

  const double trace = total_variance(cov_es);
  for (std::size_t b = 0; b < partition.blocks.size(); ++b) {
    Block& block = partition.blocks[b];
    block.covariance_eigen_indices = credited[b];
    block.ev_exact = row_mass(cov_es, block.variables) / trace;
    block.ev_approx = eigen_mass(cov_es, credited[b]) / trace;
    const double share = config.ev_formula == EvFormula::kExact ? block.ev_exact : block.ev_approx;
    block.discardable = share <= config.ev_cutoff;
  }
  partition.residual_ev_exact = row_mass(cov_es, partition.residual) / trace;
  partition.residual_ev_approx = eigen_mass(cov_es, credited.back()) / trace;

  for (const auto& w : partition.warnings) report.warnings.push_back(w);

  std::vector<Eigen::Index> dropped;
  for (const auto& block : partition.blocks) {
    if (block.discardable) dropped.insert(dropped.end(), block.variables.begin(), block.variables.end());
  }
  std::sort(dropped.begin(), dropped.end());
  for (auto d : dropped) report.recommendation.push_back(report.variable_names[static_cast<std::size_t>(d)]);

  report.partition = std::move(partition);
  return report;
}

}  // namespace

PlaReport run_pla(const DataMatrix& data, const PlaConfig& config) {
  config.validate();
  DispersionMatrix covariance = sample_covariance(data);
  std::optional<DispersionMatrix> correlation;
  if (uses_correlation(config.mode)) correlation = sample_correlation(data);
  return run_pipeline(covariance, correlation, config, data.names());
}

PlaReport run_pla(const DispersionInput& input, const PlaConfig& config, std::vector<std::string> names) {
  if (input.covariance && input.covariance->kind() != DispersionKind::kCovariance) {
    throw ConsistencyError("covariance input is tagged as a correlation matrix");
  }
  if (input.correlation && input.correlation->kind() != DispersionKind::kCorrelation) {
    throw ConsistencyError("correlation input is tagged as a covariance matrix");
  }
  if (!input.covariance) {
    throw InsufficientInputError("explained variance needs covariance eigenvalues; supply data or a covariance matrix");
  }
  if (uses_correlation(config.mode) && !input.correlation) {
    throw InsufficientInputError("mode " + to_string(config.mode) + " needs a correlation matrix as well");
  }
  return run_pipeline(*input.covariance, input.correlation, config, std::move(names));
}

DataMatrix discard(const DataMatrix& data, const PlaReport& report) {
  if (report.variable_names != data.names()) {
    throw ConsistencyError("report variables do not match the data columns");
  }
  std::set<std::string> drop(report.recommendation.begin(), report.recommendation.end());
  for (const auto& name : drop) {
    if (data.index_of(name) < 0) throw ConsistencyError("recommended variable '" + name + "' is not in the data");
  }
  if (drop.size() == static_cast<std::size_t>(data.n_cols())) {
    throw DimensionError("refusing to discard every variable");
  }
  if (drop.empty()) return data;

  std::vector<Eigen::Index> keep;
  std::vector<std::string> names;
  for (Eigen::Index c = 0; c < data.n_cols(); ++c) {
    const auto& name = data.names()[static_cast<std::size_t>(c)];
    if (!drop.count(name)) {
      keep.push_back(c);
      names.push_back(name);
    }
  }
  Eigen::MatrixXd values(data.n_rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) values.col(static_cast<Eigen::Index>(k)) = data.values().col(keep[k]);
  return DataMatrix(std::move(values), std::move(names));
}

}  // namespace pla
