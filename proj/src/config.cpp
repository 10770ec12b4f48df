#include "cdloss/config.hpp"

#include <charconv>
#include <cmath>
#include <set>

namespace cdl {

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  fail(ErrorCode::config_error, "config error at " + (path.empty() ? std::string("/") : path) + ": " + what);
}

// Reads the keys of one JSON object, remembering which were consumed so that
// leftovers can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_error(path_, "expected an object");
  }

  std::string at(std::string_view key) const { return path_ + "/" + std::string(key); }
  bool has(std::string_view key) const { return j_.contains(std::string(key)); }

  const Json& raw(std::string_view key) {
    seen_.insert(std::string(key));
    return j_.at(std::string(key));
  }

  double number(std::string_view key, double def) {
    if (!has(key)) return def;
    const Json& v = raw(key);
    if (!v.is_number()) config_error(at(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) config_error(at(key), "expected a finite number");
    return d;
  }

  double number_where(std::string_view key, double def, bool (*ok)(double), const char* expect) {
    const double d = number(key, def);
    if (has(key) && !ok(d)) config_error(at(key), std::string("expected ") + expect);
    return d;
  }

  std::uint64_t unsigned_int(std::string_view key, std::uint64_t def) {
    if (!has(key)) return def;
    const Json& v = raw(key);
    if (!v.is_number_unsigned()) config_error(at(key), "expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  std::string string(std::string_view key, const std::string& def) {
    if (!has(key)) return def;
    const Json& v = raw(key);
    if (!v.is_string()) config_error(at(key), "expected a string");
    return v.get<std::string>();
  }

  std::string required_string(std::string_view key) {
    if (!has(key)) config_error(at(key), "missing required key");
    return string(key, "");
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) config_error(at(k), "unknown key");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Runs a parse step and re-labels domain errors with the JSON path.
template <class F>
auto guarded(const std::string& path, F f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::config_error) throw;
    config_error(path, e.what());
  }
}

bool positive(double d) { return d > 0.0; }
bool nonnegative(double d) { return d >= 0.0; }
bool unit_open_closed(double d) { return d > 0.0 && d <= 1.0; }
bool unit_open(double d) { return d > 0.0 && d < 1.0; }
bool unit_half_open(double d) { return d >= 0.0 && d < 1.0; }
bool percent(double d) { return d > 0.0 && d <= 100.0; }

unsigned to_unsigned(std::uint64_t v, const std::string& path) {
  if (v > 0xFFFFFFFFull) config_error(path, "value too large");
  return static_cast<unsigned>(v);
}

StructuringElement se_from(ObjectReader& r, const StructuringElement& def) {
  if (!r.has("se")) return def;
  const std::string name = r.string("se", "");
  const auto kind = guarded(r.at("se"), [&] { return parse_se_kind(name); });
  StructuringElement se = StructuringElement::of(kind);
  if (r.has("mode")) {
    const std::string mode = r.string("mode", "");
    if (mode == "per_slice") {
      se.mode = SeMode::per_slice;
    } else if (mode == "volumetric") {
      se.mode = SeMode::volumetric;
    } else {
      config_error(r.at("mode"), "expected \"per_slice\" or \"volumetric\"");
    }
    guarded(r.at("mode"), [&] { se.validate(); return 0; });
  }
  return se;
}

ContourSpec contour_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  ContourSpec c;
  c.se = se_from(r, c.se);
  c.erosion_iterations = to_unsigned(r.unsigned_int("iterations", 1), r.at("iterations"));
  if (c.erosion_iterations < 1) config_error(r.at("iterations"), "expected an integer >= 1");
  r.finish();
  return c;
}

std::optional<BandSpec> band_from_json(const Json& j, const std::string& path) {
  if (j.is_string()) {
    if (j.get<std::string>() == "same_as_contour") return std::nullopt;
    config_error(path, "expected \"same_as_contour\" or a band object");
  }
  ObjectReader r(j, path);
  BandSpec b;
  b.se = se_from(r, b.se);
  b.dilate_iterations = to_unsigned(r.unsigned_int("dilate", 1), r.at("dilate"));
  b.erode_iterations = to_unsigned(r.unsigned_int("erode", 1), r.at("erode"));
  if (b.dilate_iterations + b.erode_iterations < 1) config_error(path, "band needs dilate + erode >= 1");
  r.finish();
  return b;
}

void read_params(ObjectReader& r, LossParams& p) {
  p.contour.t = r.number_where("t", p.contour.t, unit_open_closed, "a threshold in (0, 1]");
  p.contour.epsilon = r.number_where("epsilon", p.contour.epsilon, positive, "a number > 0");
  p.dice_epsilon = r.number_where("dice_epsilon", p.dice_epsilon, positive, "a number > 0");
  if (r.has("contour")) p.contour.contour = contour_from_json(r.raw("contour"), r.at("contour"));
  if (r.has("band")) p.contour.band = band_from_json(r.raw("band"), r.at("band"));
  p.hausdorff_alpha = r.number_where("hausdorff_alpha", p.hausdorff_alpha, positive, "a number > 0");
  p.hausdorff_t = r.number_where("hausdorff_t", p.hausdorff_t, unit_open_closed, "a threshold in (0, 1]");
}

WeightSchedule weight_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  const std::string kind = r.required_string("kind");
  WeightSchedule w = WeightSchedule::constant(0.0);
  if (kind == "constant") {
    if (!r.has("gamma")) config_error(r.at("gamma"), "missing required key");
    w = WeightSchedule::constant(r.number_where("gamma", 0.0, nonnegative, "a number >= 0"));
  } else if (kind == "ramp") {
    const double init = r.number_where("init", 0.01, positive, "a number > 0");
    const double step = r.number_where("step", 0.01, nonnegative, "a number >= 0");
    w = WeightSchedule::ramp(init, step);
  } else {
    config_error(r.at("kind"), "expected \"constant\" or \"ramp\"");
  }
  r.finish();
  return w;
}

std::array<double, 3> triple(ObjectReader& r, std::string_view key, std::array<double, 3> def, bool integral) {
  if (!r.has(key)) return def;
  const Json& v = r.raw(key);
  if (!v.is_array() || v.size() != 3) config_error(r.at(key), "expected an array of three numbers");
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string p = r.at(key) + "/" + std::to_string(i);
    if (integral ? !v[i].is_number_unsigned() : !v[i].is_number()) {
      config_error(p, integral ? "expected a positive integer" : "expected a number");
    }
    out[i] = v[i].get<double>();
    if (!(out[i] > 0.0) || !std::isfinite(out[i])) config_error(p, "expected a positive value");
  }
  return out;
}

PhantomSpec phantom_from_reader(ObjectReader& r, const std::string& path) {
  PhantomSpec s;
  const std::string kind = r.required_string("kind");
  s.kind = guarded(r.at("kind"), [&] { return parse_phantom_kind(kind); });
  const auto dims = triple(r, "dims", {32, 32, 16}, true);
  const auto sp = triple(r, "spacing_mm", {1.0, 1.0, 1.0}, false);
  s.shape = GridShape(static_cast<std::size_t>(dims[0]), static_cast<std::size_t>(dims[1]),
                      static_cast<std::size_t>(dims[2]), Spacing{sp[0], sp[1], sp[2]});
  s.seed = r.unsigned_int("seed", 0);
  s.fold_count = to_unsigned(r.unsigned_int("fold_count", 0), r.at("fold_count"));
  s.fold_depth = r.number_where("fold_depth", 0.0, unit_half_open, "a number in [0, 1)");
  s.boundary_blur_mm = r.number_where("boundary_blur_mm", 1.0, nonnegative, "a number >= 0");
  s.noise_amplitude = r.number_where("noise_amplitude", 0.0, unit_half_open, "a number in [0, 1)");
  s.radius_fraction = r.number_where("radius_fraction", 0.7, unit_open_closed, "a number in (0, 1]");
  // A too-small grid keeps its own code; the spec is well-formed, just unusable.
  try {
    s.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::grid_too_small) throw;
    config_error(path, e.what());
  }
  return s;
}

EvalOptions eval_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  EvalOptions e;
  if (r.has("contour")) e.contour = contour_from_json(r.raw("contour"), r.at("contour"));
  if (r.has("band")) e.band = band_from_json(r.raw("band"), r.at("band"));
  e.percentile = r.number_where("percentile", 100.0, percent, "a number in (0, 100]");
  r.finish();
  return e;
}

Json se_json(const StructuringElement& se) { return std::string(to_string(se.kind)); }

Json contour_json(const ContourSpec& c) {
  return {{"se", se_json(c.se)}, {"iterations", c.erosion_iterations}};
}

Json band_json(const std::optional<BandSpec>& b) {
  if (!b) return "same_as_contour";
  return {{"se", se_json(b->se)}, {"dilate", b->dilate_iterations}, {"erode", b->erode_iterations}};
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json parse_json_text(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::config_error, std::string(what) + " is not valid JSON: " + e.what());
  }
}

CompoundLossSpec loss_spec_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  const std::string companion = r.string("companion", "none");
  auto spec = CompoundLossSpec::defaults(guarded(r.at("companion"), [&] { return parse_companion(companion); }));
  spec.label = r.string("label", spec.label);
  if (r.has("weight")) spec.weight = weight_from_json(r.raw("weight"), r.at("weight"));
  read_params(r, spec.params);
  r.finish();
  guarded(path, [&] { spec.validate(); return 0; });
  return spec;
}

LossParams default_loss_params(LossKind kind) {
  for (Companion c : {Companion::cross_entropy, Companion::boundary, Companion::perimeter, Companion::hausdorff_dt,
                      Companion::contour_dice_v1, Companion::contour_dice}) {
    if (companion_loss(c) == kind) return CompoundLossSpec::defaults(c).params;
  }
  return LossParams{};
}

LossParams loss_params_from_json(const Json& j, LossKind kind, const std::string& path) {
  LossParams p = default_loss_params(kind);
  if (j.is_null()) return p;
  ObjectReader r(j, path);
  read_params(r, p);
  r.finish();
  guarded(path, [&] { p.validate(); return 0; });
  return p;
}

EvalOptions eval_options_from_json(const Json& j, const std::string& path) {
  if (j.is_null()) return EvalOptions{};
  return eval_from_json(j, path);
}

PhantomSpec phantom_spec_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  auto s = phantom_from_reader(r, path);
  r.finish();
  return s;
}

OptimizerConfig optimizer_config_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  OptimizerConfig c;
  c.learning_rate = r.number_where("learning_rate", c.learning_rate, positive, "a number > 0");
  c.lr_reduce_factor = r.number_where("lr_reduce_factor", c.lr_reduce_factor, unit_open, "a number in (0, 1)");
  c.plateau_patience = to_unsigned(r.unsigned_int("plateau_patience", c.plateau_patience), r.at("plateau_patience"));
  c.early_stop_patience =
      to_unsigned(r.unsigned_int("early_stop_patience", c.early_stop_patience), r.at("early_stop_patience"));
  c.max_epochs = to_unsigned(r.unsigned_int("max_epochs", c.max_epochs), r.at("max_epochs"));
  c.improvement_tolerance =
      r.number_where("improvement_tolerance", c.improvement_tolerance, nonnegative, "a number >= 0");
  c.eval_threshold = r.number_where("eval_threshold", c.eval_threshold, unit_open_closed, "a threshold in (0, 1]");
  if (r.has("eval")) c.eval = eval_from_json(r.raw("eval"), r.at("eval"));
  r.finish();
  guarded(path, [&] { c.validate(); return 0; });
  return c;
}

AblationGrid ablation_grid_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  AblationGrid g = default_ablation_grid();
  if (r.has("phantoms")) {
    const Json& arr = r.raw("phantoms");
    if (!arr.is_array() || arr.empty()) config_error(r.at("phantoms"), "expected a nonempty array");
    g.phantoms.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = r.at("phantoms") + "/" + std::to_string(i);
      ObjectReader pr(arr[i], p);
      std::string name = pr.string("name", "phantom_" + std::to_string(i));
      auto spec = phantom_from_reader(pr, p);
      pr.finish();
      g.phantoms.emplace_back(std::move(name), spec);
    }
  }
  if (r.has("losses")) {
    const Json& arr = r.raw("losses");
    if (!arr.is_array() || arr.empty()) config_error(r.at("losses"), "expected a nonempty array");
    g.losses.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      g.losses.push_back(loss_spec_from_json(arr[i], r.at("losses") + "/" + std::to_string(i)));
    }
  }
  if (r.has("thresholds")) {
    const Json& arr = r.raw("thresholds");
    if (!arr.is_array() || arr.empty()) config_error(r.at("thresholds"), "expected a nonempty array");
    g.thresholds.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = r.at("thresholds") + "/" + std::to_string(i);
      if (!arr[i].is_number() || !unit_open_closed(arr[i].get<double>())) {
        config_error(p, "expected a threshold in (0, 1]");
      }
      g.thresholds.push_back(arr[i].get<double>());
    }
  }
  if (r.has("optimizer")) g.optimizer = optimizer_config_from_json(r.raw("optimizer"), r.at("optimizer"));
  g.threads = to_unsigned(r.unsigned_int("threads", g.threads), r.at("threads"));
  r.finish();
  return g;
}

Json to_json(const CompoundLossSpec& spec) {
  Json w;
  if (spec.weight.kind() == WeightSchedule::Kind::constant) {
    w = {{"kind", "constant"}, {"gamma", spec.weight.init()}};
  } else {
    w = {{"kind", "ramp"}, {"init", spec.weight.init()}, {"step", spec.weight.step()}};
  }
  const auto& p = spec.params;
  return {{"companion", std::string(to_string(spec.companion))},
          {"label", spec.label},
          {"weight", w},
          {"t", p.contour.t},
          {"epsilon", p.contour.epsilon},
          {"dice_epsilon", p.dice_epsilon},
          {"contour", contour_json(p.contour.contour)},
          {"band", band_json(p.contour.band)},
          {"hausdorff_alpha", p.hausdorff_alpha},
          {"hausdorff_t", p.hausdorff_t}};
}

Json to_json(const PhantomSpec& s) {
  const auto& sh = s.shape;
  return {{"kind", std::string(to_string(s.kind))},
          {"dims", {sh.nx(), sh.ny(), sh.nz()}},
          {"spacing_mm", {sh.spacing().x, sh.spacing().y, sh.spacing().z}},
          {"seed", s.seed},
          {"fold_count", s.fold_count},
          {"fold_depth", s.fold_depth},
          {"boundary_blur_mm", s.boundary_blur_mm},
          {"noise_amplitude", s.noise_amplitude},
          {"radius_fraction", s.radius_fraction}};
}

Json to_json(const OptimizerConfig& c) {
  Json eval = {{"contour", contour_json(c.eval.contour)},
               {"band", band_json(c.eval.band)},
               {"percentile", c.eval.percentile}};
  return {{"learning_rate", c.learning_rate},
          {"lr_reduce_factor", c.lr_reduce_factor},
          {"plateau_patience", c.plateau_patience},
          {"early_stop_patience", c.early_stop_patience},
          {"max_epochs", c.max_epochs},
          {"improvement_tolerance", c.improvement_tolerance},
          {"eval_threshold", c.eval_threshold},
          {"eval", eval}};
}

Json to_json(const AblationGrid& g) {
  Json phantoms = Json::array();
  for (const auto& [name, spec] : g.phantoms) {
    Json p = to_json(spec);
    p["name"] = name;
    phantoms.push_back(p);
  }
  Json losses = Json::array();
  for (const auto& l : g.losses) losses.push_back(to_json(l));
  return {{"phantoms", phantoms},
          {"losses", losses},
          {"thresholds", g.thresholds},
          {"optimizer", to_json(g.optimizer)},
          {"threads", g.threads}};
}

Json to_json(const MetricReport& r) {
  Json slices = Json::array();
  for (const auto& s : r.per_slice_assd) slices.push_back({{"z", s.z}, {"value", s.value}});
  return {{"dice", r.dice},
          {"hausdorff_mm", optional_number(r.hausdorff_mm)},
          {"assd2d_mm", optional_number(r.assd2d_mm)},
          {"contour_dice", r.contour_dice},
          {"per_slice_assd", slices}};
}

Json to_json(const RunRecord& run, bool include_timing) {
  Json epochs = Json::array();
  for (const auto& e : run.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"weight", e.weight}, {"learning_rate", e.learning_rate}});
  }
  Json j = {{"status", std::string(to_string(run.status))},
            {"diagnostic", run.diagnostic},
            {"best_epoch", run.best_epoch},
            {"best_loss", std::isfinite(run.best_loss) ? Json(run.best_loss) : Json(nullptr)},
            {"epochs", epochs},
            {"final_report", to_json(run.final_report)},
            {"config", {{"loss", to_json(run.loss)}, {"optimizer", to_json(run.config)}}}};
  if (include_timing) j["wall_time_s"] = run.wall_time_s;
  return j;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string out(buf, res.ptr);
  if (std::isfinite(v) && out.find_first_of(".e") == std::string::npos) out += ".0";
  return out;
}

}  // namespace cdl
