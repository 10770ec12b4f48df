#include "cdloss/optimize.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace cdl {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

ProbabilityVolume to_probabilities(const GridShape& shape, const std::vector<double>& theta) {
  std::vector<double> p(theta.size());
  std::transform(theta.begin(), theta.end(), p.begin(), sigmoid);
  return ProbabilityVolume(shape, std::move(p));
}

}  // namespace

LogitVolume LogitVolume::from_probability(const ProbabilityVolume& p, double clamp) {
  if (!(clamp > 0.0 && clamp < 0.5)) fail(ErrorCode::invalid_argument, "logit clamp must lie in (0, 0.5)");
  std::vector<double> v(p.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double q = std::clamp(p[i], clamp, 1.0 - clamp);
    v[i] = std::log(q / (1.0 - q));
  }
  return LogitVolume(VoxelGrid(p.shape(), std::move(v)));
}

LogitVolume LogitVolume::from_mask(const BinaryMask& m, double magnitude) {
  std::vector<double> v(m.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = m[i] ? magnitude : -magnitude;
  return LogitVolume(VoxelGrid(m.shape(), std::move(v)));
}

ProbabilityVolume LogitVolume::probabilities() const {
  return to_probabilities(grid_.shape(), std::vector<double>(grid_.values().begin(), grid_.values().end()));
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    fail(ErrorCode::invalid_argument, "learning_rate must be positive");
  }
  if (!(lr_reduce_factor > 0.0 && lr_reduce_factor < 1.0)) {
    fail(ErrorCode::invalid_argument, "lr_reduce_factor must lie in (0, 1)");
  }
  if (early_stop_patience < plateau_patience) {
    fail(ErrorCode::invalid_argument, "early_stop_patience must be >= plateau_patience");
  }
  if (max_epochs < 1) fail(ErrorCode::invalid_argument, "max_epochs must be >= 1");
  if (!(improvement_tolerance >= 0.0)) fail(ErrorCode::invalid_argument, "improvement_tolerance must be >= 0");
  effective_threshold(eval_threshold);
}

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::max_epochs: return "max_epochs";
    case RunStatus::diverged: return "diverged";
  }
  return "?";
}

RunRecord fit(const LogitVolume& initial, const BinaryMask& truth, const CompoundLossSpec& loss,
              const OptimizerConfig& cfg) {
  cfg.validate();
  loss.validate();
  require_same_dims(initial.shape(), truth.shape(), "fit");
  const auto start = std::chrono::steady_clock::now();
  const GridShape& shape = truth.shape();

  RunRecord rec;
  rec.config = cfg;
  rec.loss = loss;
  std::vector<double> theta(initial.grid().values().begin(), initial.grid().values().end());
  std::vector<double> best_theta = theta;
  double best = std::numeric_limits<double>::infinity();
  double lr = cfg.learning_rate;
  unsigned stagnant = 0, plateau = 0;

  for (unsigned epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    if (!std::all_of(theta.begin(), theta.end(), [](double v) { return std::isfinite(v); })) {
      rec.status = RunStatus::diverged;
      std::ostringstream os;
      os << "non-finite logits at epoch " << epoch << " (lr " << lr << ")";
      rec.diagnostic = os.str();
      break;
    }
    const auto p = to_probabilities(shape, theta);
    const auto res = compound_loss(p, truth, loss, epoch);
    if (!std::isfinite(res.value)) {
      rec.status = RunStatus::diverged;
      std::ostringstream os;
      os << "non-finite loss at epoch " << epoch << " (lr " << lr << ")";
      rec.diagnostic = os.str();
      break;
    }
    rec.epochs.push_back({epoch, res.value, res.weight, lr});

    if (res.value < best - cfg.improvement_tolerance) {
      best = res.value;
      best_theta = theta;
      rec.best_epoch = epoch;
      stagnant = 0;
      plateau = 0;
    } else {
      ++stagnant;
      ++plateau;
      if (stagnant >= cfg.early_stop_patience) {
        rec.status = RunStatus::converged;
        break;
      }
      if (plateau >= cfg.plateau_patience) {
        lr *= cfg.lr_reduce_factor;
        plateau = 0;
      }
    }

    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double pi = p[i];
      theta[i] -= lr * res.grad[i] * pi * (1.0 - pi);
    }
  }
  rec.best_loss = rec.epochs.empty() ? std::numeric_limits<double>::quiet_NaN() : best;
  if (rec.epochs.empty()) best_theta.assign(initial.grid().values().begin(), initial.grid().values().end());

  const auto pred = binarize(to_probabilities(shape, best_theta), cfg.eval_threshold);
  rec.final_report = evaluate(pred, truth, cfg.eval);
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

AblationGrid default_ablation_grid() {
  AblationGrid grid;
  const Spacing spacing{1.56, 1.56, 3.0};

  PhantomSpec blob;
  blob.kind = PhantomKind::fuzzy_blob;
  blob.shape = GridShape(48, 48, 16, spacing);
  blob.seed = 11;
  blob.boundary_blur_mm = 3.0;
  blob.noise_amplitude = 0.3;
  grid.phantoms.emplace_back("fuzzy_blob", blob);

  PhantomSpec folded;
  folded.kind = PhantomKind::folded_shape;
  folded.shape = GridShape(48, 48, 16, spacing);
  folded.seed = 23;
  folded.fold_count = 6;
  folded.fold_depth = 0.3;
  folded.boundary_blur_mm = 2.0;
  folded.noise_amplitude = 0.25;
  grid.phantoms.emplace_back("folded_6", folded);

  folded.seed = 37;
  folded.fold_count = 10;
  folded.fold_depth = 0.4;
  grid.phantoms.emplace_back("folded_10", folded);

  auto dcd = CompoundLossSpec::defaults(Companion::contour_dice);
  dcd.label = "DCD";
  auto dp = CompoundLossSpec::defaults(Companion::perimeter);
  dp.label = "DP";
  grid.losses = {dcd, dp};
  grid.thresholds = {0.5, 1.0};

  grid.optimizer.learning_rate = 2000.0;
  grid.optimizer.max_epochs = 300;
  return grid;
}

std::vector<AblationRow> ablate(const AblationGrid& grid) {
  if (grid.phantoms.empty() || grid.losses.empty() || grid.thresholds.empty()) {
    fail(ErrorCode::invalid_argument, "ablation needs at least one phantom, loss and threshold");
  }
  grid.optimizer.validate();

  struct Cell {
    std::size_t phantom;
    std::size_t loss;
    double t;
  };
  std::vector<Cell> cells;
  for (std::size_t ph = 0; ph < grid.phantoms.size(); ++ph)
    for (std::size_t l = 0; l < grid.losses.size(); ++l)
      for (double t : grid.thresholds) cells.push_back({ph, l, t});

  std::vector<std::optional<Phantom>> phantoms(grid.phantoms.size());
  std::vector<std::string> phantom_errors(grid.phantoms.size());
  for (std::size_t i = 0; i < phantoms.size(); ++i) {
    try {
      phantoms[i] = generate(grid.phantoms[i].second);
    } catch (const Error& e) {
      phantom_errors[i] = e.what();
    }
  }

  std::vector<AblationRow> rows(cells.size());
  auto run_cell = [&](std::size_t idx) {
    const Cell& c = cells[idx];
    AblationRow& row = rows[idx];
    CompoundLossSpec spec = grid.losses[c.loss];
    row.phantom = grid.phantoms[c.phantom].first;
    row.loss = spec.label.empty() ? std::string(to_string(spec.companion)) : spec.label;
    row.t = c.t;
    if (!phantoms[c.phantom]) {
      row.ok = false;
      row.error = phantom_errors[c.phantom];
      return;
    }
    try {
      spec.params.contour.t = c.t;
      const auto& ph = *phantoms[c.phantom];
      const auto run = fit(LogitVolume::from_probability(ph.corrupted), ph.truth, spec, grid.optimizer);
      row.ok = run.status != RunStatus::diverged;
      row.error = run.diagnostic;
      row.report = run.final_report;
      row.epochs_run = static_cast<unsigned>(run.epochs.size());
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  };

  unsigned threads = grid.threads != 0 ? grid.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(cells.size()));
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(i);
    });
  }
  pool.clear();
  return rows;
}

}  // namespace cdl
