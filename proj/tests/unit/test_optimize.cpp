#include <cmath>

#include "cdloss/optimize.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cdl;

namespace {

BinaryMask small_blob() {
  const GridShape s(16, 16, 4);
  std::vector<std::uint8_t> bits(s.size(), 0);
  for (std::size_t z = 1; z < 3; ++z)
    for (std::size_t y = 0; y < 16; ++y)
      for (std::size_t x = 0; x < 16; ++x) {
        const double dx = double(x) - 7.5, dy = double(y) - 7.0;
        bits[s.index(x, y, z)] = dx * dx + dy * dy <= 20.0;
      }
  return BinaryMask(s, bits);
}

PhantomSpec blob_spec() {
  PhantomSpec s;
  s.kind = PhantomKind::fuzzy_blob;
  s.shape = GridShape(24, 24, 16, Spacing{1.5, 1.5, 3.0});
  s.seed = 4;
  s.boundary_blur_mm = 2.0;
  s.noise_amplitude = 0.2;
  return s;
}

void check_record_invariants(const RunRecord& r, const OptimizerConfig& cfg) {
  REQUIRE(!r.epochs.empty());
  double best = r.epochs[0].loss;
  for (std::size_t i = 1; i < r.epochs.size(); ++i) {
    CHECK(r.epochs[i].epoch == r.epochs[i - 1].epoch + 1);
    const double lr_prev = r.epochs[i - 1].learning_rate, lr = r.epochs[i].learning_rate;
    CHECK(lr <= lr_prev);
    const bool improved = i == 1 ? true : r.epochs[i - 1].loss < best - cfg.improvement_tolerance;
    // The rate only drops after an epoch without improvement.
    if (lr < lr_prev) {
      CHECK(lr == lr_prev * cfg.lr_reduce_factor);
      CHECK(!improved);
    }
    if (i > 1 && improved) best = r.epochs[i - 1].loss;
  }
  CHECK(r.best_loss == r.epochs[r.best_epoch].loss);
  for (const auto& e : r.epochs) CHECK(e.loss >= r.best_loss);
}

}  // namespace

TEST_CASE("truth-initialized soft dice starts optimal and never worsens") {
  const auto g = small_blob();
  const auto spec = CompoundLossSpec::defaults(Companion::none);
  OptimizerConfig cfg;
  cfg.max_epochs = 40;
  const auto r = fit(LogitVolume::from_mask(g, 10.0), g, spec, cfg);
  CHECK(r.epochs[0].loss == doctest::Approx(-1.0).epsilon(1e-3));
  for (std::size_t i = 1; i < r.epochs.size(); ++i) CHECK(r.epochs[i].loss <= r.epochs[i - 1].loss + 1e-12);
  CHECK(r.final_report.dice == 1.0);
}

TEST_CASE("zero logits recover the truth with soft dice") {
  const auto g = small_blob();
  OptimizerConfig cfg;
  cfg.max_epochs = 500;
  const auto r = fit(LogitVolume::zeros(g.shape()), g, CompoundLossSpec::defaults(Companion::none), cfg);
  CHECK(r.final_report.dice == 1.0);
  CHECK(r.status != RunStatus::diverged);
  check_record_invariants(r, cfg);
}

TEST_CASE("fit is deterministic") {
  const auto ph = generate(blob_spec());
  auto spec = CompoundLossSpec::defaults(Companion::contour_dice);
  spec.params.contour.t = 0.5;
  OptimizerConfig cfg;
  cfg.learning_rate = 50.0;
  cfg.max_epochs = 30;
  const auto init = LogitVolume::from_probability(ph.corrupted);
  const auto a = fit(init, ph.truth, spec, cfg), b = fit(init, ph.truth, spec, cfg);
  CHECK(a.epochs == b.epochs);
  CHECK(a.best_epoch == b.best_epoch);
  CHECK(a.final_report.dice == b.final_report.dice);
  CHECK(a.final_report.contour_dice == b.final_report.contour_dice);
  check_record_invariants(a, cfg);
}

TEST_CASE("plateau reduces the learning rate and early stopping ends the run") {
  const auto g = small_blob();
  OptimizerConfig cfg;
  cfg.plateau_patience = 2;
  cfg.early_stop_patience = 5;
  cfg.max_epochs = 500;
  cfg.improvement_tolerance = 1.0;  // nothing counts as an improvement after epoch 0
  const auto r = fit(LogitVolume::zeros(g.shape()), g, CompoundLossSpec::defaults(Companion::none), cfg);
  CHECK(r.status == RunStatus::converged);
  REQUIRE(r.epochs.size() == 6);
  CHECK(r.best_epoch == 0);
  CHECK(r.epochs[2].learning_rate == 1.0);
  CHECK(r.epochs[3].learning_rate == 0.5);
  CHECK(r.epochs[5].learning_rate == 0.25);
}

TEST_CASE("max_epochs ends a run that keeps improving") {
  const auto g = small_blob();
  OptimizerConfig cfg;
  cfg.max_epochs = 3;
  const auto r = fit(LogitVolume::zeros(g.shape()), g, CompoundLossSpec::defaults(Companion::none), cfg);
  CHECK(r.status == RunStatus::max_epochs);
  CHECK(r.epochs.size() == 3);
}

TEST_CASE("runaway logits are reported as divergence") {
  const auto g = small_blob();
  OptimizerConfig cfg;
  cfg.learning_rate = 1e308;
  cfg.max_epochs = 20;
  const auto r = fit(LogitVolume::from_mask(complement(g), 16.0), g, CompoundLossSpec::defaults(Companion::cross_entropy), cfg);
  CHECK(r.status == RunStatus::diverged);
  CHECK(!r.diagnostic.empty());
}

TEST_CASE("optimizer config validation") {
  OptimizerConfig cfg;
  cfg.early_stop_patience = 5;
  cfg.plateau_patience = 10;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.learning_rate = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.lr_reduce_factor = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  const auto g = small_blob();
  CHECK_THROWS_AS(fit(LogitVolume::zeros(GridShape(3, 3, 3)), g, CompoundLossSpec::defaults(Companion::none), {}),
                  Error);
}

TEST_CASE("logit helpers") {
  const auto g = small_blob();
  const auto p = LogitVolume::from_mask(g, 10.0).probabilities();
  for (std::size_t i = 0; i < g.size(); ++i) CHECK((p[i] > 0.5) == g[i]);
  const auto q = LogitVolume::from_probability(ProbabilityVolume::from_mask(g), 1e-4).probabilities();
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(q[i] - (g[i] ? 1 - 1e-4 : 1e-4)) < 1e-12);
  CHECK(LogitVolume::zeros(g.shape()).probabilities()[0] == 0.5);
}

TEST_CASE("ablation layout and single-cell equivalence") {
  AblationGrid grid;
  grid.phantoms = {{"blob", blob_spec()}};
  auto dcd = CompoundLossSpec::defaults(Companion::contour_dice);
  dcd.label = "DCD";
  auto dp = CompoundLossSpec::defaults(Companion::perimeter);
  dp.label = "DP";
  grid.losses = {dcd, dp};
  grid.thresholds = {0.5, 1.0};
  grid.optimizer.learning_rate = 50.0;
  grid.optimizer.max_epochs = 15;
  grid.threads = 2;
  const auto rows = ablate(grid);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].loss == "DCD");
  CHECK(rows[0].t == 0.5);
  CHECK(rows[1].loss == "DCD");
  CHECK(rows[1].t == 1.0);
  CHECK(rows[2].loss == "DP");
  CHECK(rows[3].t == 1.0);
  for (const auto& r : rows) {
    CHECK(r.ok);
    CHECK(std::isfinite(r.report.dice));
  }

  const auto ph = generate(blob_spec());
  auto spec = dp;
  spec.params.contour.t = 1.0;
  const auto direct = fit(LogitVolume::from_probability(ph.corrupted), ph.truth, spec, grid.optimizer);
  CHECK(rows[3].report.dice == direct.final_report.dice);
  CHECK(rows[3].report.contour_dice == direct.final_report.contour_dice);
  CHECK(rows[3].epochs_run == direct.epochs.size());

  // Thread count does not change results.
  grid.threads = 1;
  const auto serial = ablate(grid);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(serial[i].report.dice == rows[i].report.dice);
}

TEST_CASE("a failing cell is reported without aborting the grid") {
  AblationGrid grid;
  auto bad = blob_spec();
  bad.shape = GridShape(16, 16, 16);
  bad.radius_fraction = 0.01;  // no voxel inside the shape
  grid.phantoms = {{"bad", bad}, {"good", blob_spec()}};
  grid.losses = {CompoundLossSpec::defaults(Companion::none)};
  grid.thresholds = {0.5};
  grid.optimizer.max_epochs = 3;
  const auto rows = ablate(grid);
  REQUIRE(rows.size() == 2);
  CHECK(!rows[0].ok);
  CHECK(!rows[0].error.empty());
  CHECK(rows[1].ok);
  CHECK(rows[1].loss == "dice");
}
