#include "cdloss/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "cdloss/distance.hpp"

namespace cdl {

namespace {

std::size_t count_and(const BinaryMask& a, const BinaryMask& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a.bits()[i] & b.bits()[i];
  return n;
}

double nearest_rank(std::vector<double> values, double percentile) {
  const auto n = values.size();
  // Multiply first so integral percentiles give exact ranks.
  auto rank = static_cast<std::size_t>(std::ceil(percentile * static_cast<double>(n) / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

std::vector<double> sample(const VoxelGrid& dist, const BinaryMask& where) {
  std::vector<double> out;
  for (std::size_t i = 0; i < where.size(); ++i) {
    if (where[i]) out.push_back(dist[i]);
  }
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double dice(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a.shape(), b.shape(), "dice");
  const auto na = count_true(a), nb = count_true(b);
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(count_and(a, b)) / static_cast<double>(na + nb);
}

double hausdorff(const BinaryMask& a, const BinaryMask& b, const Spacing& spacing, double percentile) {
  require_same_dims(a.shape(), b.shape(), "hausdorff");
  if (!(percentile > 0.0 && percentile <= 100.0)) {
    fail(ErrorCode::invalid_argument, "hausdorff percentile must lie in (0, 100]");
  }
  if (count_true(a) == 0 || count_true(b) == 0) {
    fail(ErrorCode::empty_mask, "hausdorff distance needs two nonempty masks");
  }
  const double ab = nearest_rank(sample(edt(b, spacing), a), percentile);
  const double ba = nearest_rank(sample(edt(a, spacing), b), percentile);
  return std::max(ab, ba);
}

Assd2d assd_2d(const BinaryMask& a, const BinaryMask& b, const Spacing& spacing,
               const ContourSpec& contour) {
  require_same_dims(a.shape(), b.shape(), "assd_2d");
  contour.validate();
  if (contour.se.mode != SeMode::per_slice) {
    fail(ErrorCode::invalid_argument, "assd_2d needs a per-slice structuring element");
  }
  const Spacing plane{spacing.x, spacing.y, 1.0};
  Assd2d out{0.0, {}};
  for (std::size_t z = 0; z < a.shape().nz(); ++z) {
    const auto ca = extract_contour(extract_slice(a, z), contour);
    const auto cb = extract_contour(extract_slice(b, z), contour);
    if (count_true(ca) == 0 || count_true(cb) == 0) continue;
    const double ab = mean(sample(edt(cb, plane), ca));
    const double ba = mean(sample(edt(ca, plane), cb));
    out.per_slice.push_back({z, 0.5 * (ab + ba)});
  }
  if (out.per_slice.empty()) {
    fail(ErrorCode::no_common_slices, "assd_2d: no slice has a contour in both masks");
  }
  double s = 0.0;
  for (const auto& sd : out.per_slice) s += sd.value;
  out.mean = s / static_cast<double>(out.per_slice.size());
  return out;
}

double contour_dice_metric(const BinaryMask& dT, const BinaryMask& dS, const BinaryMask& bT,
                           const BinaryMask& bS) {
  require_same_dims(dT.shape(), dS.shape(), "contour_dice_metric");
  require_same_dims(dT.shape(), bT.shape(), "contour_dice_metric");
  require_same_dims(dT.shape(), bS.shape(), "contour_dice_metric");
  const auto denom = count_true(dT) + count_true(dS);
  if (denom == 0) return 1.0;
  return static_cast<double>(count_and(dT, bS) + count_and(dS, bT)) / static_cast<double>(denom);
}

MetricReport evaluate(const BinaryMask& pred, const BinaryMask& truth, const EvalOptions& opts) {
  require_same_dims(pred.shape(), truth.shape(), "evaluate");
  const Spacing& sp = truth.shape().spacing();
  MetricReport r;
  r.dice = dice(pred, truth);
  if (count_true(pred) > 0 && count_true(truth) > 0) {
    r.hausdorff_mm = hausdorff(pred, truth, sp, opts.percentile);
  }
  if (opts.contour.se.mode == SeMode::per_slice) {
    try {
      auto a = assd_2d(pred, truth, sp, opts.contour);
      r.assd2d_mm = a.mean;
      r.per_slice_assd = std::move(a.per_slice);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_common_slices) throw;
    }
  }
  const auto dT = extract_contour(truth, opts.contour);
  const auto dS = extract_contour(pred, opts.contour);
  if (opts.band) {
    r.contour_dice = contour_dice_metric(dT, dS, extract_band(truth, *opts.band),
                                         extract_band(pred, *opts.band));
  } else {
    r.contour_dice = contour_dice_metric(dT, dS, dT, dS);
  }
  return r;
}

}  // namespace cdl
