#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "cdloss/morphology.hpp"
#include "cdloss/volume.hpp"

namespace cdl {

/// Scalar loss plus dL/dp for every voxel.
struct LossResult {
  double value;
  VoxelGrid grad;
};

enum class LossKind {
  soft_dice,
  cross_entropy,
  boundary,
  perimeter,
  hausdorff_dt,
  contour_dice_v1,
  contour_dice,
};

LossKind parse_loss_kind(std::string_view name);
std::string_view to_string(LossKind kind);

struct ContourLossConfig {
  /// Binarization threshold for the prediction's regions.
  double t = 1.0;
  ContourSpec contour{};
  /// Empty means the band is the extracted contour itself.
  std::optional<BandSpec> band;
  double epsilon = 1e-5;

  void validate() const;
};

/// Union of the knobs every individual loss reads.
struct LossParams {
  double dice_epsilon = 1e-5;
  ContourLossConfig contour{};
  double hausdorff_alpha = 2.0;
  double hausdorff_t = 0.5;

  void validate() const;
};

// Every loss accumulates its sums over the whole volume at once, in a fixed
// pairwise order, so values are bit-reproducible.

LossResult soft_dice_loss(const ProbabilityVolume& p, const BinaryMask& g, double epsilon = 1e-5);
LossResult cross_entropy_loss(const ProbabilityVolume& p, const BinaryMask& g);
LossResult boundary_loss(const ProbabilityVolume& p, const BinaryMask& g);
LossResult hausdorff_dt_loss(const ProbabilityVolume& p, const BinaryMask& g, double alpha = 2.0,
                             double t = 0.5);
LossResult perimeter_loss(const ProbabilityVolume& p, const BinaryMask& g, const ContourLossConfig& cfg);
/// Band-overlap Dice over the two offset bands.
LossResult contour_dice_loss_v1(const ProbabilityVolume& p, const BinaryMask& g,
                                const ContourLossConfig& cfg);
/// Contour-vs-band overlap, the differentiable analog of contour_dice_metric.
LossResult contour_dice_loss(const ProbabilityVolume& p, const BinaryMask& g, const ContourLossConfig& cfg);

/// A loss whose region masks and distance maps were computed once from a
/// reference prediction. evaluate() only re-runs the soft accumulations, so
/// its gradient is exact for fixed regions.
class FrozenLoss {
 public:
  virtual ~FrozenLoss() = default;
  virtual LossResult evaluate(const ProbabilityVolume& p) const = 0;
};

std::unique_ptr<FrozenLoss> freeze_loss(LossKind kind, const ProbabilityVolume& reference,
                                        const BinaryMask& g, const LossParams& params);

LossResult compute_loss(LossKind kind, const ProbabilityVolume& p, const BinaryMask& g,
                        const LossParams& params);

// ---------------------------------------------------------------------------
// Compound losses

class WeightSchedule {
 public:
  enum class Kind { constant, ramp };

  static WeightSchedule constant(double gamma);
  static WeightSchedule ramp(double init, double step);

  Kind kind() const noexcept { return kind_; }
  double init() const noexcept { return init_; }
  double step() const noexcept { return step_; }
  /// constant: gamma; ramp: init + step * epoch, uncapped.
  double at(std::uint64_t epoch) const noexcept;

 private:
  WeightSchedule(Kind kind, double init, double step) : kind_(kind), init_(init), step_(step) {}
  Kind kind_;
  double init_;
  double step_;
};

enum class Companion { none, cross_entropy, boundary, perimeter, hausdorff_dt, contour_dice_v1, contour_dice };

Companion parse_companion(std::string_view name);
std::string_view to_string(Companion c);
std::optional<LossKind> companion_loss(Companion c);

/// soft Dice + w(epoch) * companion.
struct CompoundLossSpec {
  Companion companion = Companion::none;
  WeightSchedule weight = WeightSchedule::constant(0.0);
  LossParams params{};
  std::string label;

  /// Weights: 0.5 constant for the contour Dice losses, 1 constant for cross
  /// entropy, ramp(0.01, 0.01) for boundary, perimeter and Hausdorff.
  /// Threshold: 1 for the contour Dice losses, 0.5 for perimeter.
  static CompoundLossSpec defaults(Companion companion);
  void validate() const;
};

struct CompoundResult {
  double value;
  VoxelGrid grad;
  double base_value;
  double companion_value;
  double weight;
};

CompoundResult compound_loss(const ProbabilityVolume& p, const BinaryMask& g, const CompoundLossSpec& spec,
                             std::uint64_t epoch);

// ---------------------------------------------------------------------------
// Gradient verification

struct GradCheckOptions {
  std::size_t samples = 100;
  double h = 1e-6;
  std::uint64_t seed = 0;
  /// Sampled voxels keep this distance from 0, 1 and every threshold the loss uses.
  double margin = 1e-3;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  /// Checked voxels whose analytic gradient was nonzero.
  std::size_t nonzero = 0;
  std::size_t worst_index = 0;
};

/// Central finite differences against the analytic gradient, with every
/// region mask and distance map frozen at p. Half of the samples are drawn
/// from eligible voxels with a nonzero analytic gradient when any exist.
/// Relative error is |a - n| / max(|a|, |n|, 1e-12).
GradCheckResult grad_check(LossKind kind, const ProbabilityVolume& p, const BinaryMask& g,
                           const LossParams& params, const GradCheckOptions& opts = {});

}  // namespace cdl
