#include "cdloss/volume.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cdl {

double Spacing::max() const noexcept { return std::max({x, y, z}); }

GridShape::GridShape(std::size_t nx, std::size_t ny, std::size_t nz, Spacing spacing)
    : nx_(nx), ny_(ny), nz_(nz), spacing_(spacing) {
  if (nx == 0 || ny == 0 || nz == 0) {
    std::ostringstream os;
    os << "grid dimensions must be positive, got " << nx << "x" << ny << "x" << nz;
    fail(ErrorCode::invalid_argument, os.str());
  }
  for (double s : {spacing.x, spacing.y, spacing.z}) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      fail(ErrorCode::invalid_argument, "voxel spacing must be positive and finite");
    }
  }
}

bool GridShape::same_dims(const GridShape& other) const noexcept {
  return nx_ == other.nx_ && ny_ == other.ny_ && nz_ == other.nz_;
}

void require_same_dims(const GridShape& a, const GridShape& b, const char* what) {
  if (!a.same_dims(b)) {
    std::ostringstream os;
    os << what << ": shape mismatch " << a.nx() << "x" << a.ny() << "x" << a.nz() << " vs "
       << b.nx() << "x" << b.ny() << "x" << b.nz();
    fail(ErrorCode::shape_mismatch, os.str());
  }
}

VoxelGrid::VoxelGrid(GridShape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape_.size()) {
    fail(ErrorCode::size_mismatch, "voxel grid value count does not match shape");
  }
  if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); })) {
    fail(ErrorCode::invalid_argument, "voxel grid values must be finite");
  }
}

VoxelGrid VoxelGrid::filled(GridShape shape, double value) {
  return VoxelGrid(shape, std::vector<double>(shape.size(), value));
}

BinaryMask::BinaryMask(GridShape shape, std::vector<std::uint8_t> bits)
    : shape_(shape), bits_(std::move(bits)) {
  if (bits_.size() != shape_.size()) {
    fail(ErrorCode::size_mismatch, "mask bit count does not match shape");
  }
  for (auto& b : bits_) b = b != 0 ? 1 : 0;
}

BinaryMask BinaryMask::empty(GridShape shape) {
  return BinaryMask(shape, std::vector<std::uint8_t>(shape.size(), 0));
}

BinaryMask BinaryMask::full(GridShape shape) {
  return BinaryMask(shape, std::vector<std::uint8_t>(shape.size(), 1));
}

ProbabilityVolume::ProbabilityVolume(VoxelGrid grid) : grid_(std::move(grid)) {
  for (double v : grid_.values()) {
    if (v < 0.0 || v > 1.0) {
      fail(ErrorCode::invalid_argument, "probability values must lie in [0, 1]");
    }
  }
}

ProbabilityVolume::ProbabilityVolume(GridShape shape, std::vector<double> values)
    : ProbabilityVolume(VoxelGrid(shape, std::move(values))) {}

ProbabilityVolume ProbabilityVolume::from_mask(const BinaryMask& mask) {
  std::vector<double> v(mask.size());
  std::transform(mask.bits().begin(), mask.bits().end(), v.begin(),
                 [](std::uint8_t b) { return b ? 1.0 : 0.0; });
  return ProbabilityVolume(mask.shape(), std::move(v));
}

double effective_threshold(double t) {
  if (!(t > 0.0 && t <= 1.0)) {
    fail(ErrorCode::invalid_argument, "threshold must lie in (0, 1]");
  }
  return t == 1.0 ? 1.0 - 1e-6 : t;
}

BinaryMask binarize(const ProbabilityVolume& p, double t) {
  const double te = effective_threshold(t);
  std::vector<std::uint8_t> bits(p.size());
  std::transform(p.values().begin(), p.values().end(), bits.begin(),
                 [te](double v) -> std::uint8_t { return v >= te ? 1 : 0; });
  return BinaryMask(p.shape(), std::move(bits));
}

std::size_t count_true(const BinaryMask& m) noexcept {
  return static_cast<std::size_t>(std::count(m.bits().begin(), m.bits().end(), std::uint8_t{1}));
}

namespace {
void check_slice(const GridShape& s, std::size_t z) {
  if (z >= s.nz()) {
    std::ostringstream os;
    os << "slice index " << z << " out of range [0, " << s.nz() << ")";
    fail(ErrorCode::out_of_range, os.str());
  }
}
}  // namespace

PlaneView<double> slice_view(const VoxelGrid& g, std::size_t z) {
  check_slice(g.shape(), z);
  const auto n = g.shape().plane_size();
  return {g.values().subspan(z * n, n), g.shape().nx(), g.shape().ny()};
}

PlaneView<std::uint8_t> slice_view(const BinaryMask& m, std::size_t z) {
  check_slice(m.shape(), z);
  const auto n = m.shape().plane_size();
  return {m.bits().subspan(z * n, n), m.shape().nx(), m.shape().ny()};
}

BinaryMask extract_slice(const BinaryMask& m, std::size_t z) {
  auto plane = slice_view(m, z).data();
  const auto& s = m.shape();
  return BinaryMask(GridShape(s.nx(), s.ny(), 1, s.spacing()),
                    std::vector<std::uint8_t>(plane.begin(), plane.end()));
}

}  // namespace cdl
