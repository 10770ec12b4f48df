#include "cdloss/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "cdloss/distance.hpp"

namespace cdl {

PhantomKind parse_phantom_kind(std::string_view name) {
  if (name == "fuzzy_blob") return PhantomKind::fuzzy_blob;
  if (name == "folded_shape") return PhantomKind::folded_shape;
  fail(ErrorCode::invalid_argument, "unknown phantom kind '" + std::string(name) + "'");
}

std::string_view to_string(PhantomKind kind) {
  return kind == PhantomKind::fuzzy_blob ? "fuzzy_blob" : "folded_shape";
}

void PhantomSpec::validate() const {
  if (shape.nx() < 16 || shape.ny() < 16 || shape.nz() < 16) {
    std::ostringstream os;
    os << "phantom grid " << shape.nx() << "x" << shape.ny() << "x" << shape.nz()
       << " is too small: every axis needs at least 16 voxels";
    fail(ErrorCode::grid_too_small, os.str());
  }
  if (!(fold_depth >= 0.0 && fold_depth < 1.0)) fail(ErrorCode::invalid_argument, "fold_depth must lie in [0, 1)");
  if (!(boundary_blur_mm >= 0.0) || !std::isfinite(boundary_blur_mm)) {
    fail(ErrorCode::invalid_argument, "boundary_blur_mm must be >= 0");
  }
  if (!(noise_amplitude >= 0.0 && noise_amplitude < 1.0)) {
    fail(ErrorCode::invalid_argument, "noise_amplitude must lie in [0, 1)");
  }
  if (!(radius_fraction > 0.0 && radius_fraction <= 1.0)) {
    fail(ErrorCode::invalid_argument, "radius_fraction must lie in (0, 1]");
  }
}

namespace {

std::uint64_t mix(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::int64_t kCell = 4;

double value_noise(std::uint64_t seed, std::size_t x, std::size_t y, std::size_t z) {
  const auto cx = static_cast<std::int64_t>(x) / kCell, cy = static_cast<std::int64_t>(y) / kCell,
             cz = static_cast<std::int64_t>(z) / kCell;
  const double fx = static_cast<double>(static_cast<std::int64_t>(x) % kCell) / kCell;
  const double fy = static_cast<double>(static_cast<std::int64_t>(y) % kCell) / kCell;
  const double fz = static_cast<double>(static_cast<std::int64_t>(z) % kCell) / kCell;
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        const double w = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy) * (dz ? fz : 1.0 - fz);
        const double v = 2.0 * counter_uniform(seed, cx + dx, cy + dy, cz + dz) - 1.0;
        acc += w * v;
      }
    }
  }
  return acc;
}

}  // namespace

std::uint64_t counter_hash(std::uint64_t seed, std::int64_t i, std::int64_t j, std::int64_t k) noexcept {
  std::uint64_t key = mix(seed);
  key = mix(key + static_cast<std::uint64_t>(i));
  key = mix(key + static_cast<std::uint64_t>(j));
  key = mix(key + static_cast<std::uint64_t>(k));
  return key;
}

double counter_uniform(std::uint64_t seed, std::int64_t i, std::int64_t j, std::int64_t k) noexcept {
  return static_cast<double>(counter_hash(seed, i, j, k) >> 11) * 0x1.0p-53;
}

Phantom generate(const PhantomSpec& spec) {
  spec.validate();
  const auto& s = spec.shape;
  const auto& sp = s.spacing();
  const double c[3] = {0.5 * static_cast<double>(s.nx() - 1) * sp.x, 0.5 * static_cast<double>(s.ny() - 1) * sp.y,
                       0.5 * static_cast<double>(s.nz() - 1) * sp.z};
  const double a[3] = {spec.radius_fraction * 0.5 * static_cast<double>(s.nx()) * sp.x,
                       spec.radius_fraction * 0.5 * static_cast<double>(s.ny()) * sp.y,
                       spec.radius_fraction * 0.5 * static_cast<double>(s.nz()) * sp.z};

  double amp[2] = {0.0, 0.0}, phase[2] = {0.0, 0.0};
  if (spec.kind == PhantomKind::fuzzy_blob) {
    for (int k = 0; k < 2; ++k) {
      amp[k] = 0.5 + 0.5 * counter_uniform(spec.seed, -1, k, 0);
      phase[k] = 2.0 * std::numbers::pi * counter_uniform(spec.seed, -1, k, 1);
    }
  }

  std::vector<std::uint8_t> bits(s.size());
  for (std::size_t z = 0; z < s.nz(); ++z) {
    for (std::size_t y = 0; y < s.ny(); ++y) {
      for (std::size_t x = 0; x < s.nx(); ++x) {
        const double u = (static_cast<double>(x) * sp.x - c[0]) / a[0];
        const double v = (static_cast<double>(y) * sp.y - c[1]) / a[1];
        const double w = (static_cast<double>(z) * sp.z - c[2]) / a[2];
        const double r = std::sqrt(u * u + v * v + w * w);
        const double theta = std::atan2(v, u);
        double radius = 1.0;
        if (spec.kind == PhantomKind::folded_shape) {
          radius = 1.0 - spec.fold_depth * 0.5 * (1.0 - std::cos(static_cast<double>(spec.fold_count) * theta));
        } else {
          radius = 1.0 + 0.1 * (amp[0] * std::cos(2.0 * theta + phase[0]) + amp[1] * std::cos(3.0 * theta + phase[1]));
        }
        bits[s.index(x, y, z)] = r <= radius ? 1 : 0;
      }
    }
  }
  BinaryMask truth(s, std::move(bits));
  if (count_true(truth) == 0) fail(ErrorCode::invalid_argument, "phantom truth is empty");

  const auto phi = signed_distance(truth);
  std::vector<double> prob(s.size());
  for (std::size_t z = 0; z < s.nz(); ++z) {
    for (std::size_t y = 0; y < s.ny(); ++y) {
      for (std::size_t x = 0; x < s.nx(); ++x) {
        const std::size_t i = s.index(x, y, z);
        double v;
        if (spec.boundary_blur_mm == 0.0) {
          v = truth[i] ? 1.0 : 0.0;
        } else {
          v = 1.0 / (1.0 + std::exp(phi[i] / spec.boundary_blur_mm));
        }
        if (spec.noise_amplitude > 0.0) v += spec.noise_amplitude * value_noise(spec.seed, x, y, z);
        prob[i] = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return {std::move(truth), ProbabilityVolume(s, std::move(prob)), spec};
}

}  // namespace cdl
