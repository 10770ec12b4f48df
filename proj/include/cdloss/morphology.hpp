#pragma once

#include <string_view>

#include "cdloss/volume.hpp"

namespace cdl {

enum class SeKind { square3x3_2d, cross3x3_2d, cube3x3x3_3d };
enum class SeMode { per_slice, volumetric };

struct StructuringElement {
  SeKind kind = SeKind::square3x3_2d;
  SeMode mode = SeMode::per_slice;

  /// Mode follows from the kind: 2D kinds run per slice, the cube volumetrically.
  static StructuringElement of(SeKind kind);
  /// Throws invalid_argument when mode and kind disagree.
  void validate() const;
};

SeKind parse_se_kind(std::string_view name);
std::string_view to_string(SeKind kind);

struct ContourSpec {
  StructuringElement se{};
  unsigned erosion_iterations = 1;

  void validate() const;
};

struct BandSpec {
  StructuringElement se{};
  unsigned dilate_iterations = 1;
  /// 0 means no inner core: the band is the full dilation.
  unsigned erode_iterations = 1;

  void validate() const;
};

// Out-of-bounds neighbours count as background for every operator below.
// Zero iterations is the identity.
BinaryMask erode(const BinaryMask& m, const StructuringElement& se, unsigned iterations = 1);
BinaryMask dilate(const BinaryMask& m, const StructuringElement& se, unsigned iterations = 1);

BinaryMask mask_xor(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b);
BinaryMask complement(const BinaryMask& m);
/// a ⊆ b
bool is_subset(const BinaryMask& a, const BinaryMask& b);

/// m XOR erode(m): the boundary layer of m, a subset of m.
BinaryMask extract_contour(const BinaryMask& m, const ContourSpec& spec = {});
/// dilate(m) XOR erode(m).
BinaryMask extract_band(const BinaryMask& m, const BandSpec& spec);

// Grayscale min/max filters; out-of-bounds samples read as 0.
ProbabilityVolume erode_soft(const ProbabilityVolume& p, const StructuringElement& se = {});
ProbabilityVolume dilate_soft(const ProbabilityVolume& p, const StructuringElement& se = {});

/// p - erode_soft(p); reduces to the binary contour on 0/1 input.
VoxelGrid soft_contour(const ProbabilityVolume& p, const StructuringElement& se = {});

}  // namespace cdl
