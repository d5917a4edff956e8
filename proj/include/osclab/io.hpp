#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "osclab/czo.hpp"
#include "osclab/geometry.hpp"
#include "osclab/lipschitz.hpp"
#include "osclab/measure.hpp"

namespace osclab {

using Json = nlohmann::ordered_json;

/// Text format: a `dim=<d>` header line, then one atom per line as d
/// coordinates followed by the weight. `#` starts a comment. The .json
/// extension switches to {"dim": d, "points": [[...]], "weights": [...]}.
DiscreteMeasure load_measure_file(const std::string& path);
void save_measure_file(const DiscreteMeasure& mu, const std::string& path);

/// A measure spec is either a generator expression (grid:..., circle:...,
/// dust:..., cantor:..., accum:...) or a file path.
DiscreteMeasure resolve_measure(const std::string& spec);

/// One value per line, aligned with the measure's atom order.
SampledFunction load_function_file(const std::string& path,
                                   const DiscreteMeasure& mu);
void save_function_file(const SampledFunction& f, const std::string& path);

/// "@path" loads a file; anything else is a profile expression.
SampledFunction resolve_function(const std::string& spec,
                                 const DiscreteMeasure& mu);

/// Kernel specs: "cauchy", "conjugate[:r=<radius>]",
/// "riesz[:i=<component>][,n=<growth>]", "inverse_square",
/// "table:file=<json>". Table files carry name, n, epsilon, the two
/// constants, and row-major values sized to the measure.
Kernel parse_kernel(const std::string& spec, const DiscreteMeasure& mu);

Json measure_json(const DiscreteMeasure& mu, const std::string& spec);
Json growth_json(const GrowthReport& report);
Json doubling_json(const DoublingReport& report);
Json lipschitz_json(const LipschitzReport& report);
Json rbmo_json(const RbmoResult& result);
Json kernel_check_json(const Kernel& kernel, const SizeCheck& size,
                       const RegularityCheck& regularity);
Json t1_json(const T1Result& result);
Json tb_sweep_json(const TbSweep& sweep);
Json bound_json(const BoundednessTable& table);
Json tail_json(const TailResult& result);

/// Flat table rendering: reports with a "rows" array of objects become one
/// CSV per row; otherwise the top-level scalar fields form a single row.
/// Doubles are printed with %.17g so the table round-trips.
std::string render_csv(const Json& report);

/// dump(2) plus a trailing newline; CSV when csv = true. Empty path means
/// stdout.
void write_report(const Json& report, bool csv, const std::string& path);

}  // namespace osclab
