#pragma once

#include <cstdint>
#include <string_view>

#include "cdloss/volume.hpp"

namespace cdl {

enum class PhantomKind { fuzzy_blob, folded_shape };

PhantomKind parse_phantom_kind(std::string_view name);
std::string_view to_string(PhantomKind kind);

struct PhantomSpec {
  PhantomKind kind = PhantomKind::fuzzy_blob;
  GridShape shape{32, 32, 16};
  std::uint64_t seed = 0;
  /// Number of in-plane lobes (folded_shape only).
  unsigned fold_count = 0;
  /// Lobe depth as a fraction of the radius, in [0, 1).
  double fold_depth = 0.0;
  double boundary_blur_mm = 1.0;
  double noise_amplitude = 0.0;
  /// Ellipsoid semi-axes as a fraction of the half extent on each axis.
  double radius_fraction = 0.7;

  void validate() const;
};

struct Phantom {
  BinaryMask truth;
  ProbabilityVolume corrupted;
  PhantomSpec spec;
};

/// Counter-based generator: SplitMix64 over (seed, i, j, k). Each
/// coordinate is folded in as key = mix(key + coord), where mix is the
/// SplitMix64 step (add 0x9E3779B97F4A7C15, then the two xor-shift-multiply
/// rounds). Uniform doubles take the top 53 bits.
std::uint64_t counter_hash(std::uint64_t seed, std::int64_t i, std::int64_t j, std::int64_t k) noexcept;
double counter_uniform(std::uint64_t seed, std::int64_t i, std::int64_t j, std::int64_t k) noexcept;

/// Truth is {r(x) <= R(theta)} for the normalized ellipsoidal radius r and
/// in-plane azimuth theta:
///   folded_shape: R = 1 - fold_depth * (1 - cos(fold_count * theta)) / 2
///   fuzzy_blob:   R = 1 + 0.1 * sum_{k=2,3} a_k cos(k * theta + phase_k),
///                 amplitudes and phases drawn from the seed.
/// corrupted = clamp(logistic(-phi / blur) + noise_amplitude * n(x), 0, 1),
/// phi the signed distance of truth and n trilinear value noise on a lattice
/// of 4-voxel cells with lattice values uniform in [-1, 1].
/// Throws grid_too_small below 16 voxels on any axis.
Phantom generate(const PhantomSpec& spec);

}  // namespace cdl
