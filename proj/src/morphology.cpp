#include "cdloss/morphology.hpp"

#include <algorithm>
#include <string>

namespace cdl {

StructuringElement StructuringElement::of(SeKind kind) {
  return {kind, kind == SeKind::cube3x3x3_3d ? SeMode::volumetric : SeMode::per_slice};
}

void StructuringElement::validate() const {
  const bool is3d = kind == SeKind::cube3x3x3_3d;
  if (is3d != (mode == SeMode::volumetric)) {
    fail(ErrorCode::invalid_argument,
         "structuring element: per_slice mode needs a 2D kind, volumetric needs cube3x3x3_3d");
  }
}

SeKind parse_se_kind(std::string_view name) {
  if (name == "square3x3_2d") return SeKind::square3x3_2d;
  if (name == "cross3x3_2d") return SeKind::cross3x3_2d;
  if (name == "cube3x3x3_3d") return SeKind::cube3x3x3_3d;
  fail(ErrorCode::invalid_argument, "unknown structuring element '" + std::string(name) + "'");
}

std::string_view to_string(SeKind kind) {
  switch (kind) {
    case SeKind::square3x3_2d: return "square3x3_2d";
    case SeKind::cross3x3_2d: return "cross3x3_2d";
    case SeKind::cube3x3x3_3d: return "cube3x3x3_3d";
  }
  return "?";
}

void ContourSpec::validate() const {
  se.validate();
  if (erosion_iterations < 1) fail(ErrorCode::invalid_argument, "erosion_iterations must be >= 1");
}

void BandSpec::validate() const {
  se.validate();
  if (dilate_iterations + erode_iterations < 1) {
    fail(ErrorCode::invalid_argument, "band needs at least one dilate or erode iteration");
  }
}

namespace {

struct MinOp {
  template <class T>
  T operator()(T a, T b) const { return std::min(a, b); }
};
struct MaxOp {
  template <class T>
  T operator()(T a, T b) const { return std::max(a, b); }
};

// One pass of a 3-wide window along an axis with zero padding.
template <class T, class Op>
void line_pass(const std::vector<T>& in, std::vector<T>& out, std::size_t stride, std::size_t extent, Op op) {
  const std::size_t n = in.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t coord = (i / stride) % extent;
    T v = in[i];
    v = op(v, coord > 0 ? in[i - stride] : T{0});
    v = op(v, coord + 1 < extent ? in[i + stride] : T{0});
    out[i] = v;
  }
}

template <class T, class Op>
std::vector<T> filter_once(const std::vector<T>& in, const GridShape& s, SeKind kind, Op op) {
  std::vector<T> out(in.size());
  if (kind == SeKind::cross3x3_2d) {
    const std::size_t nx = s.nx(), ny = s.ny();
    for (std::size_t z = 0; z < s.nz(); ++z) {
      for (std::size_t y = 0; y < ny; ++y) {
        for (std::size_t x = 0; x < nx; ++x) {
          const std::size_t i = s.index(x, y, z);
          T v = in[i];
          v = op(v, x > 0 ? in[i - 1] : T{0});
          v = op(v, x + 1 < nx ? in[i + 1] : T{0});
          v = op(v, y > 0 ? in[i - nx] : T{0});
          v = op(v, y + 1 < ny ? in[i + nx] : T{0});
          out[i] = v;
        }
      }
    }
    return out;
  }
  // Square and cube windows are separable into 1D passes.
  line_pass(in, out, 1, s.nx(), op);
  std::vector<T> tmp(in.size());
  line_pass(out, tmp, s.nx(), s.ny(), op);
  if (kind == SeKind::cube3x3x3_3d) {
    line_pass(tmp, out, s.plane_size(), s.nz(), op);
    return out;
  }
  return tmp;
}

template <class Op>
BinaryMask morph(const BinaryMask& m, const StructuringElement& se, unsigned iterations, Op op) {
  se.validate();
  std::vector<std::uint8_t> bits(m.bits().begin(), m.bits().end());
  for (unsigned it = 0; it < iterations; ++it) bits = filter_once(bits, m.shape(), se.kind, op);
  return BinaryMask(m.shape(), std::move(bits));
}

template <class Op>
ProbabilityVolume morph_soft(const ProbabilityVolume& p, const StructuringElement& se, Op op) {
  se.validate();
  std::vector<double> v(p.values().begin(), p.values().end());
  return ProbabilityVolume(p.shape(), filter_once(v, p.shape(), se.kind, op));
}

template <class F>
BinaryMask combine(const BinaryMask& a, const BinaryMask& b, const char* what, F f) {
  require_same_dims(a.shape(), b.shape(), what);
  std::vector<std::uint8_t> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a.bits()[i], b.bits()[i]);
  return BinaryMask(a.shape(), std::move(out));
}

}  // namespace

BinaryMask erode(const BinaryMask& m, const StructuringElement& se, unsigned iterations) {
  return morph(m, se, iterations, MinOp{});
}

BinaryMask dilate(const BinaryMask& m, const StructuringElement& se, unsigned iterations) {
  return morph(m, se, iterations, MaxOp{});
}

BinaryMask mask_xor(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, "xor", [](std::uint8_t x, std::uint8_t y) -> std::uint8_t { return x ^ y; });
}

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, "and", [](std::uint8_t x, std::uint8_t y) -> std::uint8_t { return x & y; });
}

BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, "or", [](std::uint8_t x, std::uint8_t y) -> std::uint8_t { return x | y; });
}

BinaryMask complement(const BinaryMask& m) {
  std::vector<std::uint8_t> out(m.size());
  std::transform(m.bits().begin(), m.bits().end(), out.begin(),
                 [](std::uint8_t b) -> std::uint8_t { return b ^ 1; });
  return BinaryMask(m.shape(), std::move(out));
}

bool is_subset(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a.shape(), b.shape(), "subset");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.bits()[i] && !b.bits()[i]) return false;
  }
  return true;
}

BinaryMask extract_contour(const BinaryMask& m, const ContourSpec& spec) {
  spec.validate();
  return mask_xor(m, erode(m, spec.se, spec.erosion_iterations));
}

BinaryMask extract_band(const BinaryMask& m, const BandSpec& spec) {
  spec.validate();
  // Zero erosions leave no inner core, so the band is the whole dilation.
  const auto outer = dilate(m, spec.se, spec.dilate_iterations);
  if (spec.erode_iterations == 0) return outer;
  return mask_xor(outer, erode(m, spec.se, spec.erode_iterations));
}

ProbabilityVolume erode_soft(const ProbabilityVolume& p, const StructuringElement& se) {
  return morph_soft(p, se, MinOp{});
}

ProbabilityVolume dilate_soft(const ProbabilityVolume& p, const StructuringElement& se) {
  return morph_soft(p, se, MaxOp{});
}

VoxelGrid soft_contour(const ProbabilityVolume& p, const StructuringElement& se) {
  const auto eroded = erode_soft(p, se);
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = p[i] - eroded[i];
  return VoxelGrid(p.shape(), std::move(out));
}

}  // namespace cdl
