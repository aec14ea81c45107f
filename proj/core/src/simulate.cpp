#include <pla/errors.hpp>
#include <pla/simulate.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <map>
#include <random>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace pla {

std::string to_string(ScenarioKind kind) { return kind == ScenarioKind::kSingleVars ? "single-vars" : "one-block"; }

ScenarioKind parse_scenario(const std::string& text) {
  if (text == "single-vars") return ScenarioKind::kSingleVars;
  if (text == "one-block") return ScenarioKind::kOneBlock;
  throw std::invalid_argument("unknown scenario '" + text + "'");
}

void ScenarioSpec::validate() const {
  if (kind == ScenarioKind::kSingleVars) {
    if (planted < 1 || m_total - planted < 2) {
      throw DimensionError("single-vars needs k >= 1 and M - k >= 2 (M=" + std::to_string(m_total) +
                           ", k=" + std::to_string(planted) + ")");
    }
  } else if (planted < 2 || planted > m_total - 2) {
    throw DimensionError("one-block needs 2 <= kappa <= M - 2 (M=" + std::to_string(m_total) +
                         ", kappa=" + std::to_string(planted) + ")");
  }
  if (n_sample < 2) throw DimensionError("sample size must be at least 2");
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
  if (!(epsilon_scale >= 0.0)) throw std::invalid_argument("epsilon scale must be non-negative");
  if (core.rank_cap < 1 || !(core.ridge > 0.0)) throw std::invalid_argument("invalid correlated-core parameters");
}

std::uint64_t iteration_seed(std::uint64_t master_seed, std::uint64_t iteration) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  return mix(mix(master_seed) ^ iteration);
}

namespace {

Eigen::MatrixXd to_unit_diagonal(const Eigen::MatrixXd& c) {
  const Eigen::VectorXd inv = c.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd r = inv.asDiagonal() * c * inv.asDiagonal();
  r = 0.5 * (r + r.transpose());
  r.diagonal().setOnes();
  return r;
}

Eigen::MatrixXd correlated_block(int size, const CorrelatedCoreParams& params, std::mt19937_64& rng) {
  const int rank = std::min(size, params.rank_cap);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(size, rank);
  for (int i = 0; i < size; ++i) {
    for (int k = 0; k < rank; ++k) a(i, k) = normal(rng);
  }
  Eigen::MatrixXd c = a * a.transpose();
  c.diagonal().array() += params.ridge;
  return to_unit_diagonal(c);
}

}  // namespace

PopulationModel generate_population(const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  const int m = spec.m_total;
  const int remainder = m - spec.planted;

  PopulationModel pop;
  pop.kind = spec.kind;
  pop.covariance = Eigen::MatrixXd::Identity(m, m);
  pop.covariance.topLeftCorner(remainder, remainder) = correlated_block(remainder, spec.core, rng);
  if (spec.kind == ScenarioKind::kOneBlock) {
    pop.covariance.bottomRightCorner(spec.planted, spec.planted) = correlated_block(spec.planted, spec.core, rng);
  }
  for (int i = remainder; i < m; ++i) pop.planted.push_back(i);

  if (spec.epsilon_scale > 0.0) {
    // Block label per variable: remainder 0, planted block 1, singletons 1 + i.
    std::vector<int> label(static_cast<std::size_t>(m), 0);
    for (int i = remainder; i < m; ++i) {
      label[static_cast<std::size_t>(i)] = spec.kind == ScenarioKind::kOneBlock ? 1 : 1 + i;
    }
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        if (label[static_cast<std::size_t>(i)] == label[static_cast<std::size_t>(j)]) continue;
        const double e = spec.epsilon_scale * uniform(rng);
        pop.covariance(i, j) += e;
        pop.covariance(j, i) += e;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(pop.covariance, Eigen::EigenvaluesOnly);
    const double min_eig = solver.eigenvalues().minCoeff();
    if (min_eig < 1e-6) {
      pop.covariance.diagonal().array() += 1e-6 - min_eig;
      pop.covariance = to_unit_diagonal(pop.covariance);
    }
  }
  return pop;
}

DataMatrix draw_sample(const PopulationModel& pop, int n, std::uint64_t seed) {
  if (n < 2) throw DimensionError("sample size must be at least 2");
  Eigen::LLT<Eigen::MatrixXd> llt(pop.covariance);
  if (llt.info() != Eigen::Success) throw FactorizationError("population covariance is not positive definite");
  const Eigen::Index m = pop.covariance.rows();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(n, m);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) z(r, c) = normal(rng);
  }
  Eigen::MatrixXd x = z * llt.matrixL().transpose();
  return DataMatrix(std::move(x));
}

bool planted_recovered(const PopulationModel& pop, const BlockPartition& partition) {
  auto has_block = [&](const std::vector<Eigen::Index>& vars) {
    return std::any_of(partition.blocks.begin(), partition.blocks.end(),
                       [&](const Block& b) { return b.variables == vars; });
  };
  if (pop.kind == ScenarioKind::kOneBlock) return has_block(pop.planted);
  // Unit-variance singletons share one eigenvalue, so their sample
  // eigenvectors mix freely among themselves. A planted variable counts as
  // dropped when it sits in a block made of planted variables only.
  auto is_planted = [&](Eigen::Index v) { return std::binary_search(pop.planted.begin(), pop.planted.end(), v); };
  return std::all_of(pop.planted.begin(), pop.planted.end(), [&](Eigen::Index p) {
    return std::any_of(partition.blocks.begin(), partition.blocks.end(), [&](const Block& b) {
      return std::find(b.variables.begin(), b.variables.end(), p) != b.variables.end() &&
             std::all_of(b.variables.begin(), b.variables.end(), is_planted);
    });
  });
}

std::pair<double, double> wilson_interval(int failures, int trials) {
  if (trials <= 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double n = trials;
  const double p = failures / n;
  const double denom = 1.0 + z * z / n;
  const double center = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  const double lo = failures == 0 ? 0.0 : std::clamp(center - half, 0.0, 1.0);
  const double hi = failures == trials ? 1.0 : std::clamp(center + half, 0.0, 1.0);
  return {lo, hi};
}

int resolve_threads(int requested) {
  int threads = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PLA_THREADS")) {
    int cap = 0;
    const char* end = env + std::char_traits<char>::length(env);
    if (std::from_chars(env, end, cap).ec == std::errc{} && cap > 0) threads = std::min(threads, cap);
  }
  return std::max(threads, 1);
}

namespace {

template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
}

}  // namespace

std::vector<ErrorEstimate> type_one_error_sweep(const ScenarioSpec& scenario, const std::vector<double>& taus,
                                                const MonteCarloSpec& mc) {
  scenario.validate();
  if (mc.iterations < 1) throw std::invalid_argument("iterations must be at least 1");
  for (double tau : taus) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
  }

  const auto s_count = static_cast<std::size_t>(mc.iterations);
  std::vector<std::uint64_t> seeds(s_count);
  std::vector<std::vector<char>> failed(taus.size(), std::vector<char>(s_count, 0));
  std::vector<std::string> errors(s_count);

  parallel_for(mc.iterations, resolve_threads(mc.threads), [&](int s) {
    const auto idx = static_cast<std::size_t>(s);
    const std::uint64_t seed = iteration_seed(mc.master_seed, idx);
    seeds[idx] = seed;
    try {
      const PopulationModel pop = generate_population(scenario, iteration_seed(seed, 0));
      const DataMatrix sample = draw_sample(pop, scenario.n_sample, iteration_seed(seed, 1));
      DispersionInput input;
      input.covariance = sample_covariance(sample);
      if (uses_correlation(scenario.mode)) input.correlation = sample_correlation(sample);
      for (std::size_t t = 0; t < taus.size(); ++t) {
        PlaConfig config;
        config.tau = taus[t];
        config.mode = scenario.mode;
        config.ev_cutoff = 0.0;
        const PlaReport report = run_pla(input, config, sample.names());
        failed[t][idx] = planted_recovered(pop, report.partition) ? 0 : 1;
      }
    } catch (const Error& e) {
      for (auto& f : failed) f[idx] = 1;
      errors[idx] = "iteration " + std::to_string(s) + ": " + e.code() + ": " + e.what();
    }
  });

  std::vector<std::string> logged;
  for (auto& e : errors) {
    if (!e.empty()) logged.push_back(std::move(e));
  }

  std::vector<ErrorEstimate> out;
  for (std::size_t t = 0; t < taus.size(); ++t) {
    ErrorEstimate est;
    est.iterations = mc.iterations;
    est.failures = static_cast<int>(std::count(failed[t].begin(), failed[t].end(), 1));
    est.rate = static_cast<double>(est.failures) / mc.iterations;
    std::tie(est.ci_low, est.ci_high) = wilson_interval(est.failures, mc.iterations);
    est.seeds = seeds;
    est.failed.assign(failed[t].begin(), failed[t].end());
    est.errors = logged;
    out.push_back(std::move(est));
  }
  return out;
}

ErrorEstimate type_one_error(const ScenarioSpec& scenario, const MonteCarloSpec& mc) {
  return type_one_error_sweep(scenario, {scenario.tau}, mc).front();
}

TableId parse_table(const std::string& text) {
  if (text == "I" || text == "1") return TableId::kSingleVariables;
  if (text == "II" || text == "2") return TableId::kSingleBlock;
  throw std::invalid_argument("unknown table '" + text + "' (expected I or II)");
}

std::vector<TableCell> table_grid(TableId table, const TableFilter& filter) {
  const bool singles = table == TableId::kSingleVariables;
  const std::vector<int> planted = singles ? std::vector<int>{1, 2, 3, 4, 5} : std::vector<int>{2, 3, 4, 5, 6};
  const std::vector<double> taus = singles ? std::vector<double>{0.4, 0.5, 0.6, 0.7}
                                           : std::vector<double>{0.6, 0.7, 0.8, 0.9};
  std::vector<TableCell> cells;
  for (int n : {5000, 10000}) {
    for (int m = 20; m <= 200; m += 20) {
      for (int k : planted) {
        for (double tau : taus) {
          if (filter.m_total && *filter.m_total != m) continue;
          if (filter.planted && *filter.planted != k) continue;
          if (filter.n_sample && *filter.n_sample != n) continue;
          if (filter.tau && std::abs(*filter.tau - tau) > 1e-9) continue;
          cells.push_back({m, k, n, tau});
        }
      }
    }
  }
  return cells;
}

std::vector<TableRow> reproduce_table(TableId table, const TableFilter& filter, const MonteCarloSpec& mc) {
  const auto cells = table_grid(table, filter);
  // Cells sharing (M, k, N) differ only in tau and reuse the same samples.
  std::map<std::tuple<int, int, int>, std::vector<std::size_t>> groups;
  std::vector<std::tuple<int, int, int>> order;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto key = std::make_tuple(cells[i].n_sample, cells[i].m_total, cells[i].planted);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(i);
  }

  std::vector<TableRow> rows(cells.size());
  for (const auto& key : order) {
    const auto& members = groups[key];
    ScenarioSpec spec;
    spec.n_sample = std::get<0>(key);
    spec.m_total = std::get<1>(key);
    spec.planted = std::get<2>(key);
    spec.kind = table == TableId::kSingleVariables ? ScenarioKind::kSingleVars : ScenarioKind::kOneBlock;
    spec.tau = cells[members.front()].tau;
    std::vector<double> taus;
    for (auto i : members) taus.push_back(cells[i].tau);
    auto estimates = type_one_error_sweep(spec, taus, mc);
    for (std::size_t t = 0; t < members.size(); ++t) {
      rows[members[t]] = TableRow{cells[members[t]], std::move(estimates[t])};
    }
  }
  return rows;
}

std::string table_csv(const std::vector<TableRow>& rows) {
  auto num = [](double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  };
  std::string out = "M,k_or_kappa,N,tau,rate,ci_low,ci_high,S\n";
  for (const auto& row : rows) {
    out += std::to_string(row.cell.m_total) + ',' + std::to_string(row.cell.planted) + ',' +
           std::to_string(row.cell.n_sample) + ',' + num(row.cell.tau) + ',' + num(row.estimate.rate) + ',' +
           num(row.estimate.ci_low) + ',' + num(row.estimate.ci_high) + ',' + std::to_string(row.estimate.iterations) +
           '\n';
  }
  return out;
}

}  // namespace pla
