// Command-line driver over the C API. Exit codes: 0 success, 1 domain
// error, 2 usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "cdloss/cdloss.h"

namespace {

constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

// A failed library call, carrying the library's message.
struct Failure {
  std::string message;
};

struct VolumeDeleter {
  void operator()(cdl_volume* v) const { cdl_volume_free(v); }
};
using VolumePtr = std::unique_ptr<cdl_volume, VolumeDeleter>;

struct StringDeleter {
  void operator()(char* s) const { cdl_string_free(s); }
};
using StringPtr = std::unique_ptr<char, StringDeleter>;

void check(cdl_status st, const std::string& what) {
  if (st != CDL_OK) throw Failure{what + ": " + cdl_last_error() + " [" + cdl_status_name(st) + "]"};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{"cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& data) {
  if (path.empty() || path == "-") {
    std::cout << data;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{"cannot write " + path};
  out << data;
  if (!out) throw Failure{"write failed for " + path};
}

VolumePtr load(const std::string& path) {
  cdl_volume* v = nullptr;
  check(cdl_volume_load(path.c_str(), &v), "loading " + path);
  return VolumePtr(v);
}

void save(const cdl_volume* v, const std::string& path) { check(cdl_volume_save(v, path.c_str()), "saving " + path); }

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string optional_file(const std::string& path) { return path.empty() ? std::string() : read_file(path); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Options {
  std::string spec, out, out_truth, out_prob;
  std::string pred, truth, config, grad_out, name, in, band, format;
  std::string phantom, loss, opt, grid;
  unsigned contour_iters = 1, iters = 1;
  double percentile = 100.0, threshold = 0.5, h = 1e-6, tolerance = 1e-4;
  std::size_t samples = 100;
  std::uint64_t seed = 0;
  bool timestamp = false;
};

int run_synth(const Options& o) {
  cdl_volume *truth = nullptr, *prob = nullptr;
  check(cdl_synth(read_file(o.spec).c_str(), &truth, &prob), "synth");
  VolumePtr t(truth), p(prob);
  save(t.get(), o.out_truth);
  save(p.get(), o.out_prob);
  return 0;
}

int run_eval(const Options& o, const CLI::App& cmd) {
  auto pred = load(o.pred);
  auto truth = load(o.truth);
  std::string opts = "{\"contour\": {\"iterations\": " + std::to_string(o.contour_iters) + "}";
  if (cmd.count("--percentile")) opts += ", \"percentile\": " + fmt(o.percentile);
  opts += "}";
  const cdl_format format = ends_with(o.out, ".json") ? CDL_FORMAT_JSON : CDL_FORMAT_CSV;
  char* text = nullptr;
  check(cdl_evaluate(pred.get(), truth.get(), o.threshold, opts.c_str(), format, &text), "eval");
  StringPtr s(text);
  write_output(o.out, s.get());
  return 0;
}

int run_loss(const Options& o) {
  auto pred = load(o.pred);
  auto truth = load(o.truth);
  const std::string cfg = optional_file(o.config);
  double value = 0.0;
  cdl_volume* grad = nullptr;
  check(cdl_loss(o.name.c_str(), pred.get(), truth.get(), cfg.c_str(), &value, o.grad_out.empty() ? nullptr : &grad),
        "loss " + o.name);
  VolumePtr g(grad);
  if (g) save(g.get(), o.grad_out);
  write_output(o.out, "{\n  \"name\": \"" + o.name + "\",\n  \"value\": " + fmt(value) + "\n}\n");
  return 0;
}

int run_grad_check(const Options& o) {
  auto pred = load(o.pred);
  auto truth = load(o.truth);
  const std::string cfg = optional_file(o.config);
  double err = 0.0;
  std::size_t checked = 0, nonzero = 0;
  check(cdl_grad_check(o.name.c_str(), pred.get(), truth.get(), cfg.c_str(), o.samples, o.h, o.seed, &err, &checked,
                       &nonzero),
        "grad-check " + o.name);
  write_output(o.out, "loss=" + o.name + " max_rel_error=" + fmt(err) + " checked=" + std::to_string(checked) +
                          " nonzero=" + std::to_string(nonzero) + "\n");
  if (err > o.tolerance) {
    std::cerr << "grad-check: max relative error " << fmt(err) << " exceeds " << fmt(o.tolerance) << "\n";
    return kDomainError;
  }
  return 0;
}

int run_contour(const Options& o) {
  unsigned d = 0, e = 0;
  char tail = 0;
  if (!o.band.empty() && std::sscanf(o.band.c_str(), "%u:%u%c", &d, &e, &tail) != 2) {
    throw CLI::ValidationError("--band", "expected D:E");
  }
  auto in = load(o.in);
  cdl_volume* out = nullptr;
  if (o.band.empty()) {
    check(cdl_extract_contour(in.get(), o.iters, &out), "contour");
  } else {
    check(cdl_extract_band(in.get(), d, e, &out), "band");
  }
  VolumePtr r(out);
  save(r.get(), o.out);
  return 0;
}

int run_fit(const Options& o) {
  const std::string loss = optional_file(o.loss), opt = optional_file(o.opt);
  char* text = nullptr;
  check(cdl_fit(read_file(o.phantom).c_str(), loss.c_str(), opt.c_str(), o.timestamp ? 1 : 0, &text), "fit");
  StringPtr s(text);
  write_output(o.out, s.get());
  return 0;
}

int run_ablate(const Options& o) {
  const std::string grid = optional_file(o.grid);
  char* text = nullptr;
  check(cdl_ablate(grid.c_str(), &text), "ablate");
  StringPtr s(text);
  write_output(o.out, s.get());
  return 0;
}

int run_report(const Options& o) {
  const cdl_format format = o.format == "svg" ? CDL_FORMAT_SVG : o.format == "json" ? CDL_FORMAT_JSON : CDL_FORMAT_MARKDOWN;
  char* text = nullptr;
  check(cdl_report(read_file(o.in).c_str(), format, &text), "report");
  StringPtr s(text);
  write_output(o.out, s.get());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contour-based segmentation losses, metrics and ablations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cdl_version()));
  Options o;

  const auto loss_names = CLI::IsMember(
      {"soft_dice", "cross_entropy", "boundary", "perimeter", "hausdorff_dt", "contour_dice_v1", "contour_dice"});

  auto* synth = app.add_subcommand("synth", "Generate a phantom truth and corrupted probability volume");
  synth->add_option("--spec", o.spec, "Phantom spec JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--out-truth", o.out_truth, "Truth mask output")->required();
  synth->add_option("--out-prob", o.out_prob, "Corrupted probability output")->required();

  auto* eval = app.add_subcommand("eval", "Metrics of a prediction against a truth mask");
  eval->add_option("--pred", o.pred, "Prediction (mask, or grid binarized at --threshold)")->required();
  eval->add_option("--truth", o.truth, "Truth mask")->required();
  eval->add_option("--contour-iters", o.contour_iters, "Erosion iterations for contours")->check(CLI::PositiveNumber);
  eval->add_option("--percentile", o.percentile, "Hausdorff percentile")->check(CLI::Range(0.0, 100.0));
  eval->add_option("--threshold", o.threshold, "Binarization threshold for grid predictions")
      ->check(CLI::Range(0.0, 1.0));
  eval->add_option("--out", o.out, "Output report (.csv or .json); stdout when omitted");

  auto* loss = app.add_subcommand("loss", "Evaluate one loss and optionally its gradient");
  loss->add_option("--name", o.name, "Loss name")->required()->check(loss_names);
  loss->add_option("--pred", o.pred, "Prediction probabilities")->required();
  loss->add_option("--truth", o.truth, "Truth mask")->required();
  loss->add_option("--config", o.config, "Loss parameters JSON")->check(CLI::ExistingFile);
  loss->add_option("--out", o.out, "Result JSON; stdout when omitted");
  loss->add_option("--grad-out", o.grad_out, "Gradient volume output");

  auto* gc = app.add_subcommand("grad-check", "Compare a loss gradient with central differences");
  // --h is the step size here, so help is long-form only.
  gc->set_help_flag("--help", "Print this help message and exit");
  gc->add_option("--name", o.name, "Loss name")->required()->check(loss_names);
  gc->add_option("--pred", o.pred, "Prediction probabilities")->required();
  gc->add_option("--truth", o.truth, "Truth mask")->required();
  gc->add_option("--config", o.config, "Loss parameters JSON")->check(CLI::ExistingFile);
  gc->add_option("--samples", o.samples, "Sampled voxels")->check(CLI::PositiveNumber);
  gc->add_option("--h", o.h, "Finite-difference step")->check(CLI::PositiveNumber);
  gc->add_option("--seed", o.seed, "Sampling seed");
  gc->add_option("--tolerance", o.tolerance, "Failure threshold on the max relative error");
  gc->add_option("--out", o.out, "Summary output; stdout when omitted");

  auto* contour = app.add_subcommand("contour", "Extract a contour, or a band with --band");
  contour->add_option("--in", o.in, "Input mask")->required();
  contour->add_option("--iters", o.iters, "Erosion iterations")->check(CLI::PositiveNumber);
  contour->add_option("--band", o.band, "Band as DILATE:ERODE iterations");
  contour->add_option("--out", o.out, "Output mask")->required();

  auto* fit = app.add_subcommand("fit", "Optimize logits of a phantom against its truth");
  fit->add_option("--phantom", o.phantom, "Phantom spec JSON")->required()->check(CLI::ExistingFile);
  fit->add_option("--loss", o.loss, "Compound loss JSON")->check(CLI::ExistingFile);
  fit->add_option("--opt", o.opt, "Optimizer JSON")->check(CLI::ExistingFile);
  fit->add_option("--out", o.out, "Run record JSON; stdout when omitted");
  fit->add_flag("--timestamp", o.timestamp, "Embed wall time and a UTC timestamp");

  auto* ablate = app.add_subcommand("ablate", "Run a loss x threshold grid over phantoms");
  ablate->add_option("--grid", o.grid, "Grid JSON; the default grid when omitted")->check(CLI::ExistingFile);
  ablate->add_option("--out", o.out, "Table CSV; stdout when omitted");

  auto* report = app.add_subcommand("report", "Summarize an ablation table");
  report->add_option("--in", o.in, "Ablation CSV")->required()->check(CLI::ExistingFile);
  report->add_option("--format", o.format, "md, svg or json")->required()->check(CLI::IsMember({"md", "svg", "json"}));
  report->add_option("--out", o.out, "Output path; stdout when omitted");

  if (argc > 1 && argv[1][0] != '-' && app.get_subcommand_no_throw(argv[1]) == nullptr) {
    std::cerr << "error: unknown subcommand '" << argv[1] << "'\n\n" << app.help();
    return kUsageError;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    if (*synth) return run_synth(o);
    if (*eval) return run_eval(o, *eval);
    if (*loss) return run_loss(o);
    if (*gc) return run_grad_check(o);
    if (*contour) return run_contour(o);
    if (*fit) return run_fit(o);
    if (*ablate) return run_ablate(o);
    if (*report) return run_report(o);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return kDomainError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainError;
  }
  std::cerr << app.help();
  return kUsageError;
}
