#pragma once

#include <pla/perturbation.hpp>
#include <pla/pla.hpp>
#include <pla/simulate.hpp>

#include <nlohmann/json.hpp>

#include <string>

namespace pla {

/// Report layout:
///   {mode, tau, ev_cutoff, ev_formula, variable_names,
///    blocks: [{variables, eigen_indices, ev_exact, ev_approx, discardable}],
///    residual, warnings, recommendation, eigenvalues: {covariance, correlation}}
/// Variables are written by name, eigenvector indices one-based.
nlohmann::json to_json(const PlaReport& report);

/// Reads the fields needed to apply a report to data (names, blocks,
/// recommendation, configuration). Throws ParseError on malformed input.
PlaReport report_from_json(const nlohmann::json& j);

std::string to_text(const PlaReport& report);

nlohmann::json to_json(const ScenarioSpec& spec);
nlohmann::json to_json(const MonteCarloSpec& mc);

/// Rate, counts, Wilson interval, per-iteration seeds, failed iteration
/// indices and logged per-iteration errors.
nlohmann::json to_json(const ErrorEstimate& estimate);

/// Infinite bounds are written as null.
nlohmann::json to_json(const BoundDiagnostic& diagnostic);

nlohmann::json to_json(const SensitivityProfile& profile);

}  // namespace pla
