#pragma once

// JSON schemas for loss, phantom, optimizer and ablation-grid configs.
// Parsing is strict: unknown keys and ill-typed values raise config_error
// with the JSON pointer of the offending entry, e.g.
//   "config error at /losses/1/weight/gamma: expected a number >= 0".

#include <string>
#include <string_view>

#include "json.hpp"

#include "cdloss/losses.hpp"
#include "cdloss/optimize.hpp"
#include "cdloss/synth.hpp"

namespace cdl {

using Json = nlohmann::json;

Json parse_json_text(std::string_view text, std::string_view what);

CompoundLossSpec loss_spec_from_json(const Json& j, const std::string& path = "");
/// Parameters of a single loss; thresholds default as in the compound
/// defaults of the matching companion. null gives the defaults.
LossParams default_loss_params(LossKind kind);
LossParams loss_params_from_json(const Json& j, LossKind kind, const std::string& path = "");
/// {"contour": {...}, "band": ..., "percentile": P}; null gives the defaults.
EvalOptions eval_options_from_json(const Json& j, const std::string& path = "");
PhantomSpec phantom_spec_from_json(const Json& j, const std::string& path = "");
OptimizerConfig optimizer_config_from_json(const Json& j, const std::string& path = "");
AblationGrid ablation_grid_from_json(const Json& j, const std::string& path = "");

Json to_json(const CompoundLossSpec& spec);
Json to_json(const PhantomSpec& spec);
Json to_json(const OptimizerConfig& cfg);
Json to_json(const AblationGrid& grid);
Json to_json(const MetricReport& report);
/// Wall time is included only when requested, keeping output reproducible.
Json to_json(const RunRecord& run, bool include_timing);

/// Shortest round-trip decimal form; integral values keep a ".0".
std::string format_double(double v);

}  // namespace cdl
