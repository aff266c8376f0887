#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mkinf/barycenter.hpp"
#include "mkinf/measures.hpp"
#include "mkinf/oracle.hpp"
#include "mkinf/process.hpp"

namespace mkinf::io {

using json = nlohmann::json;

json read_json_file(const std::string& path);
/// Pretty-printed with a trailing newline. Output is a pure function of the value.
void write_json_file(const std::string& path, const json& value);
void write_text_file(const std::string& path, const std::string& text);

// {"dim": n, "points": [[...], ...], "weights": [...]}
json to_json(const DiscreteMeasure& mu);
DiscreteMeasure measure_from_json(const json& j);

// {"samples": [{"t", "measure", "is_ac"?, "linf"?}, ...], "interpolation": "nearest" | "quantile"}
json to_json(const MeasureCurve& curve);
MeasureCurve curve_from_json(const json& j);

// {"base": measure, "maps": [{"t", "weight", "kind", "images"}], "barycenter"?, "marginals"?}
json to_json(const ProcessRepresentation& proc);
ProcessRepresentation process_from_json(const json& j);

// {"marginals": [measure, ...], "weights": [...]}
json to_json(const oracle::MultiMarginalInstance& inst);
oracle::MultiMarginalInstance instance_from_json(const json& j);

json to_json(const CostReport& report);

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRecord>& log);
/// One row per (base atom, grid node): atom, weight, t, x0, x1, ...
void write_paths_csv(std::ostream& os, const ProcessRepresentation& proc);
/// row, col, mass for entries above zero; prefixed by a node column when given.
void write_coupling_csv(std::ostream& os, const Coupling& plan, std::optional<std::size_t> node = {},
                        bool header = true);

}  // namespace mkinf::io
