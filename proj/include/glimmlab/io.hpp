#pragma once

// Persistence and reporting: JSON trace files (config echo + layers + per-node
// ledgers), CSV time series, and small self-contained SVG plots. Traces are
// deterministic functions of their config, so loading re-runs the scheme and
// cross-checks the stored states instead of trusting the file.

#include <string>
#include <vector>

#include <json.hpp>

#include "glimmlab/potential.hpp"

namespace glimmlab {

nlohmann::json config_to_json(const GlimmConfig& cfg);
nlohmann::json ledger_to_json(const InteractionLedger& led);

// layout: { "config": {...}, "m_lo": int, "layers": [ { "theta", "V",
// "Q_trans", "Q_cubic", "Q_known", "u": [[...]], "nodes": [ { "strengths",
// "ledger" } ] } ] }
nlohmann::json trace_to_json(const GlimmTrace& tr);

// re-runs the scheme from the embedded config and verifies the stored layer
// states match (ModuleError on any mismatch beyond 1e-9)
GlimmTrace trace_from_json(const nlohmann::json& j);

// Riemann fan outputs: strengths and per-family wave decomposition as JSON,
// self-similar profile samples as CSV (xi, state components)
nlohmann::json fan_to_json(const FluxModel& model, const RiemannFan& fan);
std::string fan_csv(const RiemannFan& fan, int samples = 241);

std::string functional_series_csv(const GlimmTrace& tr);
std::string packages_csv(const LagrangianRep& rep);

nlohmann::json decay_report_to_json(const DecayReport& r);
std::string decay_series_csv(const DecayReport& r);

// minimal plots: named series against an index or abscissa, polylines on a
// fixed canvas with an axis box and data-range labels
std::string svg_chart(const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& xs,
                      const std::vector<std::vector<double>>& ys,
                      bool loglog = false);
std::string svg_profiles(const GlimmTrace& tr, int component, int snapshots = 5);

void write_file(const std::string& path, const std::string& text);
std::string read_file(const std::string& path);  // ConfigError if unreadable

}  // namespace glimmlab
