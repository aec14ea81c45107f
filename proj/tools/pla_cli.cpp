// pla: command-line front end for principal loading analysis.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error.
// Errors go to stderr as one line of JSON: {"code": ..., "message": ...}.

#include <pla/dispersion.hpp>
#include <pla/errors.hpp>
#include <pla/ingest.hpp>
#include <pla/perturbation.hpp>
#include <pla/pla.hpp>
#include <pla/report_json.hpp>
#include <pla/simulate.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int report_error(const std::string& code, const std::string& message, int exit_code) {
  std::cerr << json{{"code", code}, {"message", message}}.dump() << std::endl;
  return exit_code;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pla::ParseError("cannot write '" + path + "'");
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pla::ParseError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct CsvFlags {
  std::string delimiter = ",";
  bool no_header = false;
  std::string na_policy = "fail";

  void attach(CLI::App* cmd) {
    cmd->add_option("--delimiter", delimiter, "Field delimiter")->capture_default_str();
    cmd->add_flag("--no-header", no_header, "The first row holds data, not names");
    cmd->add_option("--na-policy", na_policy, "Missing-value policy")
        ->check(CLI::IsMember({"fail", "drop-row"}))
        ->capture_default_str();
  }

  pla::CsvOptions options() const {
    if (delimiter.size() != 1) throw UsageError("--delimiter must be a single character");
    pla::CsvOptions o;
    o.delimiter = delimiter.front();
    o.has_header = !no_header;
    o.na_policy = na_policy == "drop-row" ? pla::NaPolicy::kDropRow : pla::NaPolicy::kFail;
    return o;
  }
};

// Square matrix file; a first row with any non-numeric cell is taken as names.
pla::NumericTable read_matrix(const std::string& path, char delimiter) {
  const std::string text = read_file(path);
  bool header = false;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        pla::parse_csv_table(line, {delimiter, false, pla::NaPolicy::kFail});
      } catch (const pla::ParseError&) {
        header = true;
      }
      break;
    }
  }
  auto table = pla::parse_csv_table(text, {delimiter, header, pla::NaPolicy::kFail});
  if (table.values.rows() != table.values.cols() || table.values.rows() == 0) {
    throw pla::DimensionError("matrix file '" + path + "' is not square (" + std::to_string(table.values.rows()) +
                              "x" + std::to_string(table.values.cols()) + ")");
  }
  return table;
}

struct AnalyzeArgs {
  std::string input;
  std::string matrix;
  std::string kind = "covariance";
  std::string mode = "correlation-rescaled";
  double tau = 0.6;
  double ev_cutoff = 0.05;
  std::string ev_formula = "exact";
  std::string format = "json";
  std::string out;
  CsvFlags csv;
};

int run_analyze(const AnalyzeArgs& a) {
  pla::PlaConfig config;
  config.mode = pla::parse_mode(a.mode);
  config.tau = a.tau;
  config.ev_cutoff = a.ev_cutoff;
  config.ev_formula = pla::parse_ev_formula(a.ev_formula);
  config.validate();
  const auto csv = a.csv.options();

  pla::PlaReport report;
  if (!a.input.empty()) {
    report = pla::run_pla(pla::load_csv(a.input, csv), config);
  } else {
    auto table = read_matrix(a.matrix, csv.delimiter);
    pla::DispersionInput input;
    if (a.kind == "correlation") {
      input.correlation.emplace(std::move(table.values), pla::DispersionKind::kCorrelation);
    } else {
      input.covariance.emplace(std::move(table.values), pla::DispersionKind::kCovariance);
      if (pla::uses_correlation(config.mode)) input.correlation = pla::correlation_from_covariance(*input.covariance);
    }
    report = pla::run_pla(input, config, std::move(table.names));
  }

  if (a.format == "text") {
    emit(pla::to_text(report), a.out);
  } else {
    emit(pla::to_json(report).dump(2) + "\n", a.out);
  }
  return 0;
}

struct DiscardArgs {
  std::string input;
  std::string report;
  std::string out;
  CsvFlags csv;
};

int run_discard(const DiscardArgs& a) {
  const auto csv = a.csv.options();
  const pla::DataMatrix data = pla::load_csv(a.input, csv);
  json j;
  try {
    j = json::parse(read_file(a.report));
  } catch (const json::parse_error& e) {
    throw pla::ParseError(std::string("report is not valid JSON: ") + e.what());
  }
  const auto reduced = pla::discard(data, pla::report_from_json(j));
  emit(pla::to_csv(reduced, csv.delimiter), a.out);
  return 0;
}

Eigen::Index resolve_variable(const std::string& spec, const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == spec) return static_cast<Eigen::Index>(i);
  }
  try {
    std::size_t used = 0;
    const long index = std::stol(spec, &used);
    if (used == spec.size() && index >= 1 && index <= static_cast<long>(names.size())) return index - 1;
  } catch (const std::exception&) {
  }
  throw UsageError("--variable '" + spec + "' is neither a column name nor an index in 1.." +
                   std::to_string(names.size()));
}

struct SensitivityArgs {
  std::string matrix;
  std::string variable;
  std::vector<double> increments;
  double grid_max = 0.0;
  int steps = 20;
  std::string delimiter = ",";
  std::string out;
};

int run_sensitivity(const SensitivityArgs& a) {
  if (a.delimiter.size() != 1) throw UsageError("--delimiter must be a single character");
  std::vector<double> grid = a.increments;
  if (grid.empty()) {
    if (!(a.grid_max > 0.0) || a.steps < 1) throw UsageError("give --increments or a positive --grid-max");
    for (int k = 1; k <= a.steps; ++k) grid.push_back(a.grid_max * k / a.steps);
  }
  auto table = read_matrix(a.matrix, a.delimiter.front());
  const auto d = resolve_variable(a.variable, table.names);
  pla::DispersionMatrix m(std::move(table.values), pla::DispersionKind::kCovariance);
  const auto profile = pla::variance_sensitivity(m, d, grid);
  json j = pla::to_json(profile);
  j["variable_name"] = table.names[static_cast<std::size_t>(d)];
  emit(j.dump(2) + "\n", a.out);
  return 0;
}

struct BoundArgs {
  std::string matrix;
  std::string delta;
  std::string kind = "covariance";
  double tau = 0.5;
  std::string delimiter = ",";
  std::string out;
};

int run_bound(const BoundArgs& a) {
  if (a.delimiter.size() != 1) throw UsageError("--delimiter must be a single character");
  if (!(a.tau > 0.0)) throw UsageError("--tau must be positive");
  auto base_table = read_matrix(a.matrix, a.delimiter.front());
  auto delta_table = read_matrix(a.delta, a.delimiter.front());
  const auto kind = a.kind == "correlation" ? pla::DispersionKind::kCorrelation : pla::DispersionKind::kCovariance;
  pla::PerturbationPair pair(pla::DispersionMatrix(std::move(base_table.values), kind), std::move(delta_table.values));
  const auto base_es = pla::eigendecompose(pair.base());
  const auto diagnostic = pla::eigengap_bound(base_es, pair, a.tau);
  const auto perturbed_es = pla::symmetric_eigen(pair.perturbed(), kind);
  json j = pla::to_json(diagnostic);
  j["measured_shift"] = json::array();
  const auto shift = pla::eigenvector_shift(base_es, perturbed_es);
  for (Eigen::Index i = 0; i < shift.size(); ++i) j["measured_shift"].push_back(shift(i));
  emit(j.dump(2) + "\n", a.out);
  return 0;
}

struct SimulateArgs {
  std::string scenario = "single-vars";
  int m_total = 20;
  std::optional<int> k;
  std::optional<int> kappa;
  int n = 5000;
  double tau = 0.4;
  int iterations = 2000;
  std::uint64_t seed = 42;
  std::string mode = "correlation-rescaled";
  double epsilon = 0.0;
  int rank_cap = 5;
  double ridge = 0.1;
  int threads = 0;
  std::string out;
  std::string manifest;
};

json manifest_json(const json& specs, const pla::MonteCarloSpec& mc, double seconds) {
  return {{"specs", specs},
          {"master_seed", mc.master_seed},
          {"S", mc.iterations},
          {"threads", pla::resolve_threads(mc.threads)},
          {"wall_time_seconds", seconds}};
}

int run_simulate(const SimulateArgs& a) {
  pla::ScenarioSpec spec;
  spec.kind = pla::parse_scenario(a.scenario);
  spec.m_total = a.m_total;
  if (spec.kind == pla::ScenarioKind::kSingleVars) {
    if (a.kappa) throw UsageError("--kappa applies to the one-block scenario");
    spec.planted = a.k.value_or(1);
  } else {
    if (a.k && a.kappa && *a.k != *a.kappa) throw UsageError("--k and --kappa disagree");
    spec.planted = a.kappa ? *a.kappa : a.k.value_or(2);
  }
  spec.n_sample = a.n;
  spec.tau = a.tau;
  spec.mode = pla::parse_mode(a.mode);
  spec.epsilon_scale = a.epsilon;
  spec.core.rank_cap = a.rank_cap;
  spec.core.ridge = a.ridge;
  try {
    spec.validate();
  } catch (const pla::DimensionError& e) {
    throw UsageError(e.what());
  }
  pla::MonteCarloSpec mc{a.iterations, a.seed, a.threads};
  if (mc.iterations < 1) throw UsageError("--S must be at least 1");

  const auto start = std::chrono::steady_clock::now();
  const auto estimate = pla::type_one_error(spec, mc);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json j = {{"scenario", pla::to_json(spec)}, {"monte_carlo", pla::to_json(mc)}, {"estimate", pla::to_json(estimate)}};
  emit(j.dump(2) + "\n", a.out);
  if (!a.manifest.empty()) emit(manifest_json(pla::to_json(spec), mc, seconds).dump(2) + "\n", a.manifest);
  return 0;
}

struct TableArgs {
  std::string table = "I";
  std::optional<int> m_total;
  std::optional<int> planted;
  std::optional<int> n;
  std::optional<double> tau;
  int iterations = 200;
  std::uint64_t seed = 42;
  int threads = 0;
  std::string out;
  std::string manifest;
};

int run_table(const TableArgs& a) {
  const auto table = pla::parse_table(a.table);
  pla::TableFilter filter{a.m_total, a.planted, a.n, a.tau};
  pla::MonteCarloSpec mc{a.iterations, a.seed, a.threads};
  if (mc.iterations < 1) throw UsageError("--S must be at least 1");

  const auto start = std::chrono::steady_clock::now();
  const auto rows = pla::reproduce_table(table, filter, mc);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  emit(pla::table_csv(rows), a.out);
  if (!a.manifest.empty()) {
    json cells = json::array();
    for (const auto& row : rows) {
      cells.push_back({{"M", row.cell.m_total},
                       {"k_or_kappa", row.cell.planted},
                       {"N", row.cell.n_sample},
                       {"tau", row.cell.tau}});
    }
    json specs = {{"table", table == pla::TableId::kSingleVariables ? "I" : "II"},
                  {"mode", "correlation-rescaled"},
                  {"cells", cells}};
    emit(manifest_json(specs, mc, seconds).dump(2) + "\n", a.manifest);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Principal loading analysis: block detection, diagnostics and Type I error simulation"};
  app.require_subcommand(1);

  AnalyzeArgs analyze;
  auto* cmd_analyze = app.add_subcommand("analyze", "Detect blocks and recommend variables to discard");
  auto* opt_input = cmd_analyze->add_option("--input", analyze.input, "Data CSV (rows = observations)");
  auto* opt_matrix = cmd_analyze->add_option("--matrix", analyze.matrix, "Dispersion matrix CSV");
  opt_input->excludes(opt_matrix);
  cmd_analyze->add_option("--kind", analyze.kind, "Kind of --matrix")
      ->check(CLI::IsMember({"covariance", "correlation"}))
      ->capture_default_str();
  cmd_analyze->add_option("--mode", analyze.mode, "Detection mode")
      ->check(CLI::IsMember({"covariance", "correlation", "covariance-rescaled", "correlation-rescaled"}))
      ->capture_default_str();
  cmd_analyze->add_option("--tau", analyze.tau, "Loading threshold in (0,1)")->capture_default_str();
  cmd_analyze->add_option("--ev-cutoff", analyze.ev_cutoff, "Discard blocks whose share is at most this")
      ->capture_default_str();
  cmd_analyze->add_option("--ev-formula", analyze.ev_formula, "Explained-variance formula")
      ->check(CLI::IsMember({"exact", "approx"}))
      ->capture_default_str();
  cmd_analyze->add_option("--format", analyze.format, "Output format")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();
  cmd_analyze->add_option("--out", analyze.out, "Output file (default stdout)");
  analyze.csv.attach(cmd_analyze);

  DiscardArgs discard;
  auto* cmd_discard = app.add_subcommand("discard", "Remove the recommended variables from a dataset");
  cmd_discard->add_option("--input", discard.input, "Data CSV")->required();
  cmd_discard->add_option("--report", discard.report, "Report JSON from analyze")->required();
  cmd_discard->add_option("--out", discard.out, "Output CSV (default stdout)");
  discard.csv.attach(cmd_discard);

  SensitivityArgs sensitivity;
  auto* cmd_sens = app.add_subcommand("sensitivity", "Finite-difference sensitivity of loadings to a variance");
  cmd_sens->add_option("--matrix", sensitivity.matrix, "Covariance matrix CSV")->required();
  cmd_sens->add_option("--variable", sensitivity.variable, "Column name or 1-based index")->required();
  cmd_sens->add_option("--increments", sensitivity.increments, "Increasing positive increments")->delimiter(',');
  cmd_sens->add_option("--grid-max", sensitivity.grid_max, "Largest increment of an even grid");
  cmd_sens->add_option("--steps", sensitivity.steps, "Number of grid points")->capture_default_str();
  cmd_sens->add_option("--delimiter", sensitivity.delimiter, "Field delimiter")->capture_default_str();
  cmd_sens->add_option("--out", sensitivity.out, "Output file (default stdout)");

  BoundArgs bound;
  auto* cmd_bound = app.add_subcommand("bound", "Eigengap bound on eigenvector perturbations");
  cmd_bound->add_option("--matrix", bound.matrix, "Base dispersion matrix CSV")->required();
  cmd_bound->add_option("--delta", bound.delta, "Symmetric perturbation CSV")->required();
  cmd_bound->add_option("--kind", bound.kind, "Kind of --matrix")
      ->check(CLI::IsMember({"covariance", "correlation"}))
      ->capture_default_str();
  cmd_bound->add_option("--tau", bound.tau, "Threshold")->capture_default_str();
  cmd_bound->add_option("--delimiter", bound.delimiter, "Field delimiter")->capture_default_str();
  cmd_bound->add_option("--out", bound.out, "Output file (default stdout)");

  SimulateArgs sim;
  auto* cmd_sim = app.add_subcommand("simulate", "Monte Carlo Type I error of a planted scenario");
  cmd_sim->add_option("--scenario", sim.scenario, "Planted structure")
      ->check(CLI::IsMember({"single-vars", "one-block"}))
      ->capture_default_str();
  cmd_sim->add_option("--M", sim.m_total, "Number of variables")->capture_default_str();
  cmd_sim->add_option("--k", sim.k, "Planted singletons (single-vars)");
  cmd_sim->add_option("--kappa", sim.kappa, "Planted block size (one-block)");
  cmd_sim->add_option("--N", sim.n, "Sample size")->capture_default_str();
  cmd_sim->add_option("--tau", sim.tau, "Threshold in (0,1)")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cmd_sim->add_option("--S", sim.iterations, "Iterations")->capture_default_str();
  cmd_sim->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
  cmd_sim->add_option("--mode", sim.mode, "Detection mode")
      ->check(CLI::IsMember({"covariance", "correlation", "covariance-rescaled", "correlation-rescaled"}))
      ->capture_default_str();
  cmd_sim->add_option("--epsilon", sim.epsilon, "Cross-block covariance scale")->capture_default_str();
  cmd_sim->add_option("--rank-cap", sim.rank_cap, "Factor rank cap of correlated blocks")->capture_default_str();
  cmd_sim->add_option("--ridge", sim.ridge, "Ridge of correlated blocks")->capture_default_str();
  cmd_sim->add_option("--threads", sim.threads, "Worker threads (0 = auto, capped by PLA_THREADS)");
  cmd_sim->add_option("--out", sim.out, "Output JSON (default stdout)");
  cmd_sim->add_option("--manifest", sim.manifest, "Run manifest JSON");

  TableArgs tab;
  auto* cmd_tab = app.add_subcommand("reproduce-table", "Type I error table over the published grid");
  cmd_tab->add_option("--table", tab.table, "I (single variables) or II (single block)")
      ->check(CLI::IsMember({"I", "II", "1", "2"}))
      ->capture_default_str();
  cmd_tab->add_option("--M", tab.m_total, "Only this M");
  cmd_tab->add_option("--k,--kappa", tab.planted, "Only this k (table I) or kappa (table II)");
  cmd_tab->add_option("--N", tab.n, "Only this sample size");
  cmd_tab->add_option("--tau", tab.tau, "Only this threshold");
  cmd_tab->add_option("--S", tab.iterations, "Iterations per cell")->capture_default_str();
  cmd_tab->add_option("--seed", tab.seed, "Master seed")->capture_default_str();
  cmd_tab->add_option("--threads", tab.threads, "Worker threads (0 = auto, capped by PLA_THREADS)");
  cmd_tab->add_option("--out", tab.out, "Output CSV (default stdout)");
  cmd_tab->add_option("--manifest", tab.manifest, "Run manifest JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("UsageError", e.what(), kExitUsage);
  }

  try {
    if (cmd_analyze->parsed()) {
      if (analyze.input.empty() && analyze.matrix.empty()) throw UsageError("analyze needs --input or --matrix");
      return run_analyze(analyze);
    }
    if (cmd_discard->parsed()) return run_discard(discard);
    if (cmd_sens->parsed()) return run_sensitivity(sensitivity);
    if (cmd_bound->parsed()) return run_bound(bound);
    if (cmd_sim->parsed()) return run_simulate(sim);
    if (cmd_tab->parsed()) return run_table(tab);
  } catch (const UsageError& e) {
    return report_error("UsageError", e.what(), kExitUsage);
  } catch (const std::invalid_argument& e) {
    return report_error("UsageError", e.what(), kExitUsage);
  } catch (const pla::Error& e) {
    return report_error(e.code(), e.what(), e.category() == pla::ErrorCategory::kData ? kExitData : kExitNumerical);
  } catch (const std::exception& e) {
    return report_error("InternalError", e.what(), kExitNumerical);
  }
  return kExitUsage;
}
