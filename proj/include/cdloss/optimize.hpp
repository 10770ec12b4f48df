#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cdloss/losses.hpp"
#include "cdloss/metrics.hpp"
#include "cdloss/synth.hpp"
#include "cdloss/volume.hpp"

namespace cdl {

/// Unbounded per-voxel logits; the prediction is sigmoid(logit).
class LogitVolume {
 public:
  explicit LogitVolume(VoxelGrid grid) : grid_(std::move(grid)) {}
  static LogitVolume zeros(const GridShape& shape) { return LogitVolume(VoxelGrid::filled(shape, 0.0)); }
  /// logit(clamp(p, clamp, 1 - clamp)).
  static LogitVolume from_probability(const ProbabilityVolume& p, double clamp = 1e-4);
  /// +magnitude inside the mask, -magnitude outside.
  static LogitVolume from_mask(const BinaryMask& m, double magnitude);

  const VoxelGrid& grid() const noexcept { return grid_; }
  const GridShape& shape() const noexcept { return grid_.shape(); }
  ProbabilityVolume probabilities() const;

 private:
  VoxelGrid grid_;
};

struct OptimizerConfig {
  double learning_rate = 1.0;
  double lr_reduce_factor = 0.5;
  unsigned plateau_patience = 10;
  unsigned early_stop_patience = 50;
  unsigned max_epochs = 500;
  /// A loss counts as improved when it beats the best by more than this.
  double improvement_tolerance = 1e-7;
  /// Threshold used to binarize the final prediction for the report.
  double eval_threshold = 0.5;
  EvalOptions eval{};

  void validate() const;
};

struct EpochRecord {
  unsigned epoch;
  double loss;
  double weight;
  double learning_rate;
  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

enum class RunStatus { converged, max_epochs, diverged };
std::string_view to_string(RunStatus s);

struct RunRecord {
  std::vector<EpochRecord> epochs;
  unsigned best_epoch = 0;
  double best_loss = 0.0;
  RunStatus status = RunStatus::max_epochs;
  std::string diagnostic;
  /// Metrics of the best-loss state against the truth.
  MetricReport final_report;
  OptimizerConfig config;
  CompoundLossSpec loss;
  double wall_time_s = 0.0;
};

/// Plain gradient descent on the logits:
///   theta <- theta - lr * dL/dp * p (1 - p).
/// The learning rate is multiplied by lr_reduce_factor after
/// plateau_patience epochs without improvement; the run stops after
/// early_stop_patience such epochs, at max_epochs, or on a non-finite loss
/// (status diverged, with a diagnostic).
RunRecord fit(const LogitVolume& initial, const BinaryMask& truth, const CompoundLossSpec& loss,
              const OptimizerConfig& cfg);

struct AblationRow {
  std::string phantom;
  std::string loss;
  double t;
  bool ok;
  std::string error;
  MetricReport report;
  unsigned epochs_run = 0;
};

struct AblationGrid {
  std::vector<std::pair<std::string, PhantomSpec>> phantoms;
  std::vector<CompoundLossSpec> losses;
  std::vector<double> thresholds;
  OptimizerConfig optimizer;
  /// 0 uses the hardware concurrency.
  unsigned threads = 0;
};

/// Three seeded phantoms (one fuzzy_blob, two folded_shape), Dice + contour
/// Dice and Dice + perimeter, thresholds {0.5, 1}.
AblationGrid default_ablation_grid();

/// Rows are ordered phantom, then loss, then threshold. Each threshold
/// overrides the loss's contour threshold; initial logits come from the
/// phantom's corrupted volume. A failing cell is reported, not thrown.
std::vector<AblationRow> ablate(const AblationGrid& grid);

}  // namespace cdl
