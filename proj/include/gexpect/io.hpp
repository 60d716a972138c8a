#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "gexpect/composition.hpp"
#include "gexpect/gfunction.hpp"
#include "gexpect/limit.hpp"
#include "gexpect/pde.hpp"

namespace gexpect {

using json = nlohmann::json;

// --- JSON schemas -----------------------------------------------------------
// distribution: {"dim": d, "support": [[f64,...],...], "credal": [[f64,...],...]}
// tree:         {"leaf": distribution} | {"product": [tree, tree]}
// scenario set: {"dim": d, "pairs": [{"q": [...], "Q": [[...],...]},...], "beta": f64?}

json to_json(const DiscreteUncertainDistribution& d);
DiscreteUncertainDistribution distribution_from_json(const json& j);

json to_json(const CompositionTree& t);
CompositionTree tree_from_json(const json& j);

json to_json(const SupportSetTheta& theta);
SupportSetTheta theta_from_json(const json& j);

// --- CSV / sidecar writers --------------------------------------------------

/// Writes text atomically: to a temporary file first, renamed into place on
/// success, so failures never leave partial output behind.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Sidecar path: the output path with its extension replaced by ".json".
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

/// Field CSV: header "x,value" (1-D) or "x,y,value" (2-D), one row per node,
/// plus a JSON sidecar {"t", "dx", "dt", "L", "boundary", "trunc_bound"}.
void write_field_csv(const SolutionField& field, const std::filesystem::path& path);

/// Report CSV: header "n,harness,reference,abs_error", plus a JSON sidecar
/// {"alpha_fit", "C", "moment_bound", "joint_mode"}.
void write_report_csv(const ConvergenceReport& report, const std::filesystem::path& path);

/// Single-value CSV: header "value" and one row.
void write_value_csv(double value, const std::filesystem::path& path, const json& sidecar);

/// Deterministic shortest-unambiguous formatting used in all CSV output.
std::string format_double(double v);

}  // namespace gexpect
