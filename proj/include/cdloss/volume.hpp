#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cdloss/error.hpp"

namespace cdl {

/// Physical voxel size in millimeters.
struct Spacing {
  double x = 1.0;
  double y = 1.0;
  double z = 1.0;

  double max() const noexcept;
  friend bool operator==(const Spacing&, const Spacing&) = default;
};

/// Voxel counts plus spacing. Storage everywhere is x-fastest:
/// index = x + nx * (y + ny * z).
class GridShape {
 public:
  GridShape(std::size_t nx, std::size_t ny, std::size_t nz, Spacing spacing = {});

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::size_t nz() const noexcept { return nz_; }
  const Spacing& spacing() const noexcept { return spacing_; }

  std::size_t size() const noexcept { return nx_ * ny_ * nz_; }
  std::size_t plane_size() const noexcept { return nx_ * ny_; }
  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept {
    return x + nx_ * (y + ny_ * z);
  }

  /// Same voxel counts; spacing is ignored.
  bool same_dims(const GridShape& other) const noexcept;

  friend bool operator==(const GridShape&, const GridShape&) = default;

 private:
  std::size_t nx_;
  std::size_t ny_;
  std::size_t nz_;
  Spacing spacing_;
};

/// Read-only nx*ny plane of a volume.
template <class T>
class PlaneView {
 public:
  PlaneView(std::span<const T> data, std::size_t nx, std::size_t ny)
      : data_(data), nx_(nx), ny_(ny) {}

  const T& operator()(std::size_t x, std::size_t y) const { return data_[x + nx_ * y]; }
  std::span<const T> data() const noexcept { return data_; }
  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }

 private:
  std::span<const T> data_;
  std::size_t nx_;
  std::size_t ny_;
};

/// Dense finite 64-bit scalar field. Immutable once constructed.
class VoxelGrid {
 public:
  VoxelGrid(GridShape shape, std::vector<double> values);
  static VoxelGrid filled(GridShape shape, double value);

  const GridShape& shape() const noexcept { return shape_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double at(std::size_t x, std::size_t y, std::size_t z) const {
    return values_[shape_.index(x, y, z)];
  }
  std::size_t size() const noexcept { return values_.size(); }

  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

 private:
  GridShape shape_;
  std::vector<double> values_;
};

/// Dense boolean field, one byte per voxel holding 0 or 1.
class BinaryMask {
 public:
  /// Nonzero bytes are normalized to 1.
  BinaryMask(GridShape shape, std::vector<std::uint8_t> bits);
  static BinaryMask empty(GridShape shape);
  static BinaryMask full(GridShape shape);

  const GridShape& shape() const noexcept { return shape_; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  bool at(std::size_t x, std::size_t y, std::size_t z) const {
    return bits_[shape_.index(x, y, z)] != 0;
  }
  std::size_t size() const noexcept { return bits_.size(); }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  GridShape shape_;
  std::vector<std::uint8_t> bits_;
};

/// Grid whose every value lies in [0, 1].
class ProbabilityVolume {
 public:
  explicit ProbabilityVolume(VoxelGrid grid);
  ProbabilityVolume(GridShape shape, std::vector<double> values);
  /// 0/1 cast of a mask.
  static ProbabilityVolume from_mask(const BinaryMask& mask);

  const VoxelGrid& grid() const noexcept { return grid_; }
  const GridShape& shape() const noexcept { return grid_.shape(); }
  std::span<const double> values() const noexcept { return grid_.values(); }
  double operator[](std::size_t i) const { return grid_[i]; }
  std::size_t size() const noexcept { return grid_.size(); }

 private:
  VoxelGrid grid_;
};

/// Threshold actually applied for a requested threshold t in (0, 1].
/// t == 1 maps to 1 - 1e-6 so nearly saturated outputs survive.
double effective_threshold(double t);

/// bit(x) = p(x) >= effective_threshold(t).
BinaryMask binarize(const ProbabilityVolume& p, double t);

std::size_t count_true(const BinaryMask& m) noexcept;

PlaneView<double> slice_view(const VoxelGrid& g, std::size_t z);
PlaneView<std::uint8_t> slice_view(const BinaryMask& m, std::size_t z);

/// Single-slice copy of plane z, keeping in-plane spacing.
BinaryMask extract_slice(const BinaryMask& m, std::size_t z);

void require_same_dims(const GridShape& a, const GridShape& b, const char* what);

}  // namespace cdl
