#include <pla/errors.hpp>
#include <pla/report_json.hpp>

#include <cmath>
#include <iomanip>
#include <sstream>

namespace pla {

using nlohmann::json;

namespace {

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v(i))) {
      out.push_back(v(i));
    } else {
      out.push_back(nullptr);
    }
  }
  return out;
}

json names_json(const std::vector<Eigen::Index>& idx, const std::vector<std::string>& names) {
  json out = json::array();
  for (auto i : idx) out.push_back(names.at(static_cast<std::size_t>(i)));
  return out;
}

json one_based(const std::vector<Eigen::Index>& idx) {
  json out = json::array();
  for (auto i : idx) out.push_back(i + 1);
  return out;
}

}  // namespace

json to_json(const PlaReport& report) {
  const auto& names = report.variable_names;
  json blocks = json::array();
  for (const auto& b : report.partition.blocks) {
    blocks.push_back({{"variables", names_json(b.variables, names)},
                      {"eigen_indices", one_based(b.eigen_indices)},
                      {"ev_exact", b.ev_exact},
                      {"ev_approx", b.ev_approx},
                      {"discardable", b.discardable}});
  }
  json eigenvalues = {{"covariance", vector_json(report.covariance_eigenvalues)}};
  if (report.correlation_eigenvalues.size() > 0) {
    eigenvalues["correlation"] = vector_json(report.correlation_eigenvalues);
  }
  return {{"mode", to_string(report.config.mode)},
          {"tau", report.config.tau},
          {"ev_cutoff", report.config.ev_cutoff},
          {"ev_formula", to_string(report.config.ev_formula)},
          {"variable_names", names},
          {"blocks", blocks},
          {"residual", names_json(report.partition.residual, names)},
          {"warnings", report.warnings},
          {"recommendation", report.recommendation},
          {"eigenvalues", eigenvalues}};
}

PlaReport report_from_json(const json& j) {
  try {
    PlaReport report;
    report.config.mode = parse_mode(j.at("mode").get<std::string>());
    report.config.tau = j.at("tau").get<double>();
    report.config.ev_cutoff = j.at("ev_cutoff").get<double>();
    if (j.contains("ev_formula")) report.config.ev_formula = parse_ev_formula(j.at("ev_formula").get<std::string>());
    report.variable_names = j.at("variable_names").get<std::vector<std::string>>();

    auto index_of = [&](const std::string& name) {
      for (std::size_t i = 0; i < report.variable_names.size(); ++i) {
        if (report.variable_names[i] == name) return static_cast<Eigen::Index>(i);
      }
      throw ConsistencyError("report mentions unknown variable '" + name + "'");
    };
    for (const auto& jb : j.at("blocks")) {
      Block b;
      for (const auto& name : jb.at("variables")) b.variables.push_back(index_of(name.get<std::string>()));
      for (const auto& e : jb.at("eigen_indices")) b.eigen_indices.push_back(e.get<Eigen::Index>() - 1);
      b.ev_exact = jb.at("ev_exact").get<double>();
      b.ev_approx = jb.at("ev_approx").get<double>();
      b.discardable = jb.at("discardable").get<bool>();
      report.partition.blocks.push_back(std::move(b));
    }
    for (const auto& name : j.at("residual")) report.partition.residual.push_back(index_of(name.get<std::string>()));
    report.warnings = j.at("warnings").get<std::vector<std::string>>();
    report.recommendation = j.at("recommendation").get<std::vector<std::string>>();
    report.partition.tau_used = report.config.tau;
    report.partition.mode_used = report.config.mode;
    return report;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
}

std::string to_text(const PlaReport& report) {
  const auto& names = report.variable_names;
  std::ostringstream out;
  out << "mode " << to_string(report.config.mode) << ", tau " << report.config.tau << ", ev cutoff "
      << report.config.ev_cutoff << " (" << to_string(report.config.ev_formula) << ")\n\n";
  out << std::left << std::setw(6) << "block" << std::setw(32) << "variables" << std::setw(18) << "eigenvectors"
      << std::right << std::setw(10) << "ev_exact" << std::setw(10) << "ev_approx" << "  discard\n";
  out << std::fixed << std::setprecision(4);
  for (std::size_t b = 0; b < report.partition.blocks.size(); ++b) {
    const auto& block = report.partition.blocks[b];
    std::string vars;
    for (auto v : block.variables) vars += (vars.empty() ? "" : ",") + names[static_cast<std::size_t>(v)];
    std::string eigs;
    for (auto e : block.eigen_indices) eigs += (eigs.empty() ? "" : ",") + std::to_string(e + 1);
    out << std::left << std::setw(6) << b + 1 << std::setw(32) << vars << std::setw(18) << eigs << std::right
        << std::setw(10) << block.ev_exact << std::setw(10) << block.ev_approx << "  "
        << (block.discardable ? "yes" : "no") << '\n';
  }
  if (!report.partition.residual.empty()) {
    out << "\nresidual:";
    for (auto v : report.partition.residual) out << ' ' << names[static_cast<std::size_t>(v)];
    out << '\n';
  }
  out << "\nrecommendation:";
  if (report.recommendation.empty()) out << " (keep all)";
  for (const auto& name : report.recommendation) out << ' ' << name;
  out << '\n';
  for (const auto& w : report.warnings) out << "warning: " << w << '\n';
  return out.str();
}

json to_json(const ScenarioSpec& spec) {
  return {{"M", spec.m_total},
          {"scenario", to_string(spec.kind)},
          {spec.kind == ScenarioKind::kSingleVars ? "k" : "kappa", spec.planted},
          {"N", spec.n_sample},
          {"tau", spec.tau},
          {"mode", to_string(spec.mode)},
          {"epsilon_scale", spec.epsilon_scale},
          {"core", {{"rank_cap", spec.core.rank_cap}, {"ridge", spec.core.ridge}}}};
}

json to_json(const MonteCarloSpec& mc) {
  return {{"S", mc.iterations}, {"master_seed", mc.master_seed}};
}

json to_json(const ErrorEstimate& estimate) {
  json failed = json::array();
  for (std::size_t s = 0; s < estimate.failed.size(); ++s) {
    if (estimate.failed[s]) failed.push_back(s);
  }
  return {{"failures", estimate.failures},
          {"S", estimate.iterations},
          {"rate", estimate.rate},
          {"wilson_ci95", {estimate.ci_low, estimate.ci_high}},
          {"iteration_seeds", estimate.seeds},
          {"failed_iterations", failed},
          {"errors", estimate.errors}};
}

json to_json(const BoundDiagnostic& diagnostic) {
  json implies = json::array();
  for (bool b : diagnostic.implies_below_tau) implies.push_back(b);
  return {{"tau", diagnostic.tau},
          {"delta_frobenius", diagnostic.delta_frobenius},
          {"eigengaps", vector_json(diagnostic.eigengaps)},
          {"bounds", vector_json(diagnostic.bounds)},
          {"implies_below_tau", implies}};
}

json to_json(const SensitivityProfile& profile) {
  json points = json::array();
  for (const auto& p : profile.points) {
    json jp = {{"increment", p.increment}, {"tracked", p.tracked}, {"overlap", p.overlap}};
    if (p.tracked) {
      jp["abs_entries"] = vector_json(p.abs_entries);
      jp["forward_diffs"] = vector_json(p.forward_diffs);
    }
    if (p.error) jp["error"] = *p.error;
    points.push_back(std::move(jp));
  }
  return {{"variable", profile.target_variable + 1},
          {"eigenvector", profile.probed_eigenvector + 1},
          {"base_abs_entries", vector_json(profile.base_abs_entries)},
          {"signs_match", profile.signs_match()},
          {"points", points}};
}

}  // namespace pla
