#include "cdloss/distance.hpp"

#include <cmath>
#include <limits>

namespace cdl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas f(v) + w*(q - v)^2 over the finite samples
// of one scan line, evaluated at every q. Lines with no finite sample
// stay infinite.
class LineTransform {
 public:
  explicit LineTransform(std::size_t max_len)
      : f_(max_len), d_(max_len), v_(max_len), z_(max_len + 1) {}

  void run(double* data, std::size_t n, std::size_t stride, double w) {
    std::size_t k = 0;
    bool any = false;
    for (std::size_t q = 0; q < n; ++q) {
      f_[q] = data[q * stride];
      if (!std::isfinite(f_[q])) continue;
      if (!any) {
        v_[0] = q;
        z_[0] = -kInf;
        z_[1] = kInf;
        any = true;
        continue;
      }
      // z_[0] is -inf, so the scan always stops at k == 0.
      double s = intersect(q, v_[k], w);
      while (s <= z_[k]) {
        --k;
        s = intersect(q, v_[k], w);
      }
      ++k;
      v_[k] = q;
      z_[k] = s;
      z_[k + 1] = kInf;
    }
    if (!any) return;
    std::size_t j = 0;
    for (std::size_t q = 0; q < n; ++q) {
      const double qd = static_cast<double>(q);
      while (z_[j + 1] < qd) ++j;
      const double diff = qd - static_cast<double>(v_[j]);
      d_[q] = f_[v_[j]] + w * diff * diff;
    }
    for (std::size_t q = 0; q < n; ++q) data[q * stride] = d_[q];
  }

 private:
  double intersect(std::size_t q, std::size_t v, double w) const {
    const double qd = static_cast<double>(q), vd = static_cast<double>(v);
    return ((f_[q] + w * qd * qd) - (f_[v] + w * vd * vd)) / (2.0 * w * (qd - vd));
  }

  std::vector<double> f_;
  std::vector<double> d_;
  std::vector<std::size_t> v_;
  std::vector<double> z_;
};

std::vector<double> squared_transform(const BinaryMask& m, const Spacing& sp) {
  const auto& s = m.shape();
  std::vector<double> d(s.size());
  bool any = false;
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = m[i] ? 0.0 : kInf;
    any = any || m[i];
  }
  if (!any) fail(ErrorCode::empty_mask, "distance transform of an empty mask");

  const std::size_t nx = s.nx(), ny = s.ny(), nz = s.nz();
  LineTransform lt(std::max({nx, ny, nz}));
  for (std::size_t z = 0; z < nz; ++z)
    for (std::size_t y = 0; y < ny; ++y) lt.run(&d[s.index(0, y, z)], nx, 1, sp.x * sp.x);
  for (std::size_t z = 0; z < nz; ++z)
    for (std::size_t x = 0; x < nx; ++x) lt.run(&d[s.index(x, 0, z)], ny, nx, sp.y * sp.y);
  if (nz > 1) {
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t x = 0; x < nx; ++x)
        lt.run(&d[s.index(x, y, 0)], nz, s.plane_size(), sp.z * sp.z);
  }
  return d;
}

}  // namespace

VoxelGrid edt_squared(const BinaryMask& m, const Spacing& spacing) {
  return VoxelGrid(m.shape(), squared_transform(m, spacing));
}

VoxelGrid edt(const BinaryMask& m, const Spacing& spacing) {
  auto d = squared_transform(m, spacing);
  for (double& v : d) v = std::sqrt(v);
  return VoxelGrid(m.shape(), std::move(d));
}

VoxelGrid signed_distance(const BinaryMask& m, const Spacing& spacing) {
  const std::size_t n = count_true(m);
  if (n == 0 || n == m.size()) {
    fail(ErrorCode::degenerate_mask, "signed distance needs a mask that is neither empty nor full");
  }
  std::vector<std::uint8_t> inv(m.size());
  for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = m[i] ? 0 : 1;
  const auto outside = edt(m, spacing);
  const auto inside = edt(BinaryMask(m.shape(), std::move(inv)), spacing);
  std::vector<double> phi(m.size());
  for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = m[i] ? -inside[i] : outside[i];
  return VoxelGrid(m.shape(), std::move(phi));
}

}  // namespace cdl
