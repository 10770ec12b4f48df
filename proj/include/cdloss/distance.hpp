#pragma once

#include "cdloss/volume.hpp"

namespace cdl {

/// Exact Euclidean distance, in millimeters, from every voxel center to the
/// nearest true voxel center. Separable lower-envelope transform (one pass
/// of 1D parabola envelopes per axis) weighted by the anisotropic spacing.
/// Throws empty_mask when m has no true voxel.
VoxelGrid edt(const BinaryMask& m, const Spacing& spacing);
inline VoxelGrid edt(const BinaryMask& m) { return edt(m, m.shape().spacing()); }

/// Squared variant of edt; skips the final square root.
VoxelGrid edt_squared(const BinaryMask& m, const Spacing& spacing);

/// Distance to the foreground outside m, minus distance to the background
/// inside m. Throws degenerate_mask when m is empty or full.
VoxelGrid signed_distance(const BinaryMask& m, const Spacing& spacing);
inline VoxelGrid signed_distance(const BinaryMask& m) {
  return signed_distance(m, m.shape().spacing());
}

}  // namespace cdl
