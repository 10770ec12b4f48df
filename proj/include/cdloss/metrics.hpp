#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "cdloss/morphology.hpp"
#include "cdloss/volume.hpp"

namespace cdl {

/// 2|a∩b| / (|a|+|b|), 1 when both masks are empty.
double dice(const BinaryMask& a, const BinaryMask& b);

/// Symmetric Hausdorff distance in mm: the larger of the two directed
/// percentiles (nearest-rank) of point-to-set distances. percentile = 100
/// is the classic maximum. Throws empty_mask when either mask is empty.
double hausdorff(const BinaryMask& a, const BinaryMask& b, const Spacing& spacing,
                 double percentile = 100.0);

struct SliceDistance {
  std::size_t z;
  double value;
  friend bool operator==(const SliceDistance&, const SliceDistance&) = default;
};

struct Assd2d {
  double mean;
  std::vector<SliceDistance> per_slice;
};

/// Slice-wise average symmetric surface distance. On each slice where both
/// in-plane contours are nonempty the value is the mean of the two directed
/// mean nearest-contour distances; the result averages those slices.
/// Throws no_common_slices when no slice qualifies.
Assd2d assd_2d(const BinaryMask& a, const BinaryMask& b, const Spacing& spacing,
               const ContourSpec& contour = {});

/// (|dT∩bS| + |dS∩bT|) / (|dT|+|dS|), 1 when both contours are empty.
double contour_dice_metric(const BinaryMask& dT, const BinaryMask& dS, const BinaryMask& bT,
                           const BinaryMask& bS);

struct EvalOptions {
  ContourSpec contour{};
  /// Bands for the contour Dice metric; empty means band == contour.
  std::optional<BandSpec> band;
  double percentile = 100.0;
};

/// Undefined entries stay empty rather than NaN.
struct MetricReport {
  double dice = 0.0;
  std::optional<double> hausdorff_mm;
  std::optional<double> assd2d_mm;
  double contour_dice = 0.0;
  std::vector<SliceDistance> per_slice_assd;
};

MetricReport evaluate(const BinaryMask& pred, const BinaryMask& truth, const EvalOptions& opts = {});

}  // namespace cdl
