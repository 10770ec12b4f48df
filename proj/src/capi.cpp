#include "cdloss/cdloss.h"

#include <cstdlib>
#include <ctime>
#include <cstring>
#include <new>
#include <string>

#include "cdloss/config.hpp"
#include "cdloss/io.hpp"
#include "cdloss/report.hpp"

struct cdl_volume {
  cdl::Volume v;
};

namespace {

thread_local std::string g_last_error;

template <class F>
cdl_status guard(F&& f) {
  g_last_error.clear();
  try {
    f();
    return CDL_OK;
  } catch (const cdl::Error& e) {
    g_last_error = e.what();
    return static_cast<cdl_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return CDL_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CDL_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) cdl::fail(cdl::ErrorCode::invalid_argument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

cdl::Json json_or_null(const char* text, const char* what) {
  if (!text || !*text) return nullptr;
  return cdl::parse_json_text(text, what);
}

const cdl::GridShape& shape_of(const cdl_volume* v) {
  return std::visit([](const auto& x) -> const cdl::GridShape& { return x.shape(); }, v->v);
}

const cdl::BinaryMask& as_mask(const cdl_volume* v, const char* what) {
  if (const auto* m = std::get_if<cdl::BinaryMask>(&v->v)) return *m;
  cdl::fail(cdl::ErrorCode::invalid_argument, std::string(what) + " must be a mask");
}

cdl::BinaryMask to_mask(const cdl_volume* v, double t) {
  if (const auto* m = std::get_if<cdl::BinaryMask>(&v->v)) return *m;
  return cdl::binarize(cdl::ProbabilityVolume(std::get<cdl::VoxelGrid>(v->v)), t);
}

cdl::ProbabilityVolume to_probability(const cdl_volume* v) {
  if (const auto* m = std::get_if<cdl::BinaryMask>(&v->v)) return cdl::ProbabilityVolume::from_mask(*m);
  return cdl::ProbabilityVolume(std::get<cdl::VoxelGrid>(v->v));
}

cdl::Spacing spacing_from(const double* s) {
  return s ? cdl::Spacing{s[0], s[1], s[2]} : cdl::Spacing{1.0, 1.0, 1.0};
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void emit(cdl::Volume v, cdl_volume** out) { *out = new cdl_volume{std::move(v)}; }

}  // namespace

extern "C" {

const char* cdl_version(void) { return "0.1.0"; }

const char* cdl_last_error(void) { return g_last_error.c_str(); }

const char* cdl_status_name(cdl_status status) {
  static thread_local std::string name;
  name = std::string(cdl::to_string(static_cast<cdl::ErrorCode>(status)));
  return name.c_str();
}

void cdl_string_free(char* s) { std::free(s); }

cdl_status cdl_volume_load(const char* path, cdl_volume** out) {
  return guard([&] {
    require(path && out, "null argument");
    emit(cdl::load_volume(path), out);
  });
}

cdl_status cdl_volume_save(const cdl_volume* v, const char* path) {
  return guard([&] {
    require(v && path, "null argument");
    cdl::save_volume(v->v, path);
  });
}

cdl_status cdl_volume_create_grid(size_t nx, size_t ny, size_t nz, const double* spacing, const double* values,
                                  cdl_volume** out) {
  return guard([&] {
    require(values && out, "null argument");
    cdl::GridShape shape(nx, ny, nz, spacing_from(spacing));
    emit(cdl::VoxelGrid(shape, std::vector<double>(values, values + shape.size())), out);
  });
}

cdl_status cdl_volume_create_mask(size_t nx, size_t ny, size_t nz, const double* spacing, const uint8_t* bits,
                                  cdl_volume** out) {
  return guard([&] {
    require(bits && out, "null argument");
    cdl::GridShape shape(nx, ny, nz, spacing_from(spacing));
    emit(cdl::BinaryMask(shape, std::vector<std::uint8_t>(bits, bits + shape.size())), out);
  });
}

void cdl_volume_free(cdl_volume* v) { delete v; }

cdl_status cdl_volume_kind_of(const cdl_volume* v, cdl_volume_kind* kind) {
  return guard([&] {
    require(v && kind, "null argument");
    *kind = std::holds_alternative<cdl::BinaryMask>(v->v) ? CDL_MASK : CDL_GRID;
  });
}

cdl_status cdl_volume_dims(const cdl_volume* v, size_t* dims, double* spacing) {
  return guard([&] {
    require(v, "null argument");
    const auto& s = shape_of(v);
    if (dims) {
      dims[0] = s.nx();
      dims[1] = s.ny();
      dims[2] = s.nz();
    }
    if (spacing) {
      spacing[0] = s.spacing().x;
      spacing[1] = s.spacing().y;
      spacing[2] = s.spacing().z;
    }
  });
}

cdl_status cdl_volume_copy_values(const cdl_volume* v, double* out, size_t n) {
  return guard([&] {
    require(v && out, "null argument");
    std::visit(
        [&](const auto& x) {
          const std::size_t k = std::min(n, x.size());
          for (std::size_t i = 0; i < k; ++i) out[i] = static_cast<double>(x[i]);
        },
        v->v);
  });
}

cdl_status cdl_volume_binarize(const cdl_volume* v, double t, cdl_volume** out) {
  return guard([&] {
    require(v && out, "null argument");
    cdl::effective_threshold(t);
    emit(to_mask(v, t), out);
  });
}

cdl_status cdl_volume_count_true(const cdl_volume* v, size_t* count) {
  return guard([&] {
    require(v && count, "null argument");
    *count = cdl::count_true(as_mask(v, "volume"));
  });
}

cdl_status cdl_extract_contour(const cdl_volume* m, unsigned iterations, cdl_volume** out) {
  return guard([&] {
    require(m && out, "null argument");
    cdl::ContourSpec spec;
    spec.erosion_iterations = iterations;
    emit(cdl::extract_contour(to_mask(m, 0.5), spec), out);
  });
}

cdl_status cdl_extract_band(const cdl_volume* m, unsigned dilate, unsigned erode, cdl_volume** out) {
  return guard([&] {
    require(m && out, "null argument");
    cdl::BandSpec spec;
    spec.dilate_iterations = dilate;
    spec.erode_iterations = erode;
    emit(cdl::extract_band(to_mask(m, 0.5), spec), out);
  });
}

cdl_status cdl_synth(const char* spec_json, cdl_volume** truth, cdl_volume** corrupted) {
  return guard([&] {
    require(spec_json && truth && corrupted, "null argument");
    auto ph = cdl::generate(cdl::phantom_spec_from_json(cdl::parse_json_text(spec_json, "phantom spec")));
    auto t = std::make_unique<cdl_volume>(cdl_volume{std::move(ph.truth)});
    auto c = std::make_unique<cdl_volume>(cdl_volume{cdl::VoxelGrid(ph.corrupted.grid())});
    *truth = t.release();
    *corrupted = c.release();
  });
}

cdl_status cdl_evaluate(const cdl_volume* pred, const cdl_volume* truth, double threshold, const char* opts_json,
                        cdl_format format, char** out) {
  return guard([&] {
    require(pred && truth && out, "null argument");
    require(format == CDL_FORMAT_JSON || format == CDL_FORMAT_CSV, "evaluate writes JSON or CSV");
    const auto opts = cdl::eval_options_from_json(json_or_null(opts_json, "eval options"));
    const auto report = cdl::evaluate(to_mask(pred, threshold), as_mask(truth, "truth"), opts);
    if (format == CDL_FORMAT_JSON) {
      *out = dup_string(cdl::to_json(report).dump(2) + "\n");
    } else {
      *out = dup_string(cdl::metric_csv_header() + "\n" + cdl::metric_csv_row(report) + "\n");
    }
  });
}

cdl_status cdl_loss(const char* name, const cdl_volume* p, const cdl_volume* g, const char* config_json,
                    double* value, cdl_volume** grad) {
  return guard([&] {
    require(name && p && g && value, "null argument");
    const auto kind = cdl::parse_loss_kind(name);
    const auto params = cdl::loss_params_from_json(json_or_null(config_json, "loss config"), kind);
    auto res = cdl::compute_loss(kind, to_probability(p), as_mask(g, "truth"), params);
    *value = res.value;
    if (grad) emit(std::move(res.grad), grad);
  });
}

cdl_status cdl_grad_check(const char* name, const cdl_volume* p, const cdl_volume* g, const char* config_json,
                          size_t samples, double h, uint64_t seed, double* max_rel_error, size_t* checked,
                          size_t* nonzero) {
  return guard([&] {
    require(name && p && g && max_rel_error, "null argument");
    const auto kind = cdl::parse_loss_kind(name);
    const auto params = cdl::loss_params_from_json(json_or_null(config_json, "loss config"), kind);
    cdl::GradCheckOptions opts;
    opts.samples = samples;
    opts.h = h;
    opts.seed = seed;
    const auto res = cdl::grad_check(kind, to_probability(p), as_mask(g, "truth"), params, opts);
    *max_rel_error = res.max_rel_error;
    if (checked) *checked = res.checked;
    if (nonzero) *nonzero = res.nonzero;
  });
}

cdl_status cdl_fit(const char* phantom_json, const char* loss_json, const char* optimizer_json, int include_timing,
                   char** out) {
  return guard([&] {
    require(phantom_json && out, "null argument");
    const auto phantom = cdl::generate(cdl::phantom_spec_from_json(cdl::parse_json_text(phantom_json, "phantom spec")));
    const auto loss_j = json_or_null(loss_json, "loss config");
    const auto loss = cdl::loss_spec_from_json(loss_j.is_null() ? cdl::Json::object() : loss_j);
    const auto opt_j = json_or_null(optimizer_json, "optimizer config");
    const auto cfg = cdl::optimizer_config_from_json(opt_j.is_null() ? cdl::Json::object() : opt_j);
    const auto run = cdl::fit(cdl::LogitVolume::from_probability(phantom.corrupted), phantom.truth, loss, cfg);
    auto j = cdl::to_json(run, include_timing != 0);
    if (include_timing) j["timestamp"] = utc_timestamp();
    *out = dup_string(j.dump(2) + "\n");
  });
}

cdl_status cdl_ablate(const char* grid_json, char** out) {
  return guard([&] {
    require(out, "null argument");
    const auto j = json_or_null(grid_json, "ablation grid");
    const auto grid = j.is_null() ? cdl::default_ablation_grid() : cdl::ablation_grid_from_json(j);
    *out = dup_string(cdl::ablation_csv(cdl::ablate(grid)));
  });
}

cdl_status cdl_default_ablation_grid(char** out) {
  return guard([&] {
    require(out, "null argument");
    *out = dup_string(cdl::to_json(cdl::default_ablation_grid()).dump(2) + "\n");
  });
}

cdl_status cdl_report(const char* csv, cdl_format format, char** out) {
  return guard([&] {
    require(csv && out, "null argument");
    const auto groups = cdl::summarize(cdl::parse_ablation_csv(csv));
    if (format == CDL_FORMAT_MARKDOWN) {
      *out = dup_string(cdl::render_markdown(groups));
    } else if (format == CDL_FORMAT_SVG) {
      *out = dup_string(cdl::render_svg(groups));
    } else if (format == CDL_FORMAT_JSON) {
      cdl::Json arr = cdl::Json::array();
      const auto stat = [](const cdl::Stat& s) {
        return cdl::Json{{"n", s.n}, {"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"max", s.max}};
      };
      for (const auto& g : groups) {
        arr.push_back({{"loss", g.loss},
                       {"t", g.t},
                       {"rows", g.rows},
                       {"failed", g.failed},
                       {"dice", stat(g.dice)},
                       {"hausdorff", stat(g.hausdorff)},
                       {"assd2d", stat(g.assd2d)},
                       {"contour_dice", stat(g.contour_dice)}});
      }
      *out = dup_string(arr.dump(2) + "\n");
    } else {
      cdl::fail(cdl::ErrorCode::invalid_argument, "report writes markdown, SVG or JSON");
    }
  });
}

}  // extern "C"
