#include <cmath>
#include <random>

#include "cdloss/distance.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cdl;

namespace {

double max_abs_diff(const VoxelGrid& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

BinaryMask nonempty_random(std::mt19937_64& rng, const GridShape& s) {
  while (true) {
    auto m = oracle::random_mask(rng, s);
    if (count_true(m) > 0) return m;
  }
}

}  // namespace

TEST_CASE("edt examples") {
  const GridShape s(4, 3, 3, Spacing{1, 1, 3});
  std::vector<std::uint8_t> bits(s.size(), 0);
  bits[0] = 1;
  const BinaryMask m(s, bits);
  const auto d = edt(m);
  CHECK(d.at(0, 0, 0) == 0.0);
  CHECK(d.at(1, 0, 0) == 1.0);
  CHECK(d.at(0, 0, 1) == 3.0);
  CHECK(d.at(3, 2, 2) == doctest::Approx(std::sqrt(9.0 + 4.0 + 36.0)).epsilon(1e-15));
  CHECK_THROWS_AS(edt(BinaryMask::empty(s)), Error);
  try {
    edt(BinaryMask::empty(s));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::empty_mask);
  }
}

TEST_CASE("distance is zero on the foreground") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = oracle::random_shape(rng, 12, 12, 6);
    const auto m = nonempty_random(rng, s);
    const auto d = edt(m);
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i]) CHECK(d[i] == 0.0);
  }
}

TEST_CASE("edt matches all-pairs brute force") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    const auto s = oracle::random_shape(rng, 14, 14, 8);
    const auto m = nonempty_random(rng, s);
    CHECK(max_abs_diff(edt(m), oracle::edt(m, s.spacing())) < 1e-9);
  }
}

TEST_CASE("signed distance examples") {
  const GridShape s(8, 8, 1, Spacing{1.3, 0.7, 2.0});
  std::vector<std::uint8_t> bits(s.size(), 0);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) {
      const double dx = double(x) - 3.5, dy = double(y) - 3.5;
      bits[s.index(x, y, 0)] = dx * dx + dy * dy <= 9.0;
    }
  const BinaryMask disk(s, bits);
  const auto phi = signed_distance(disk);
  CHECK(max_abs_diff(phi, oracle::signed_distance(disk, s.spacing())) < 1e-9);
  for (std::size_t i = 0; i < disk.size(); ++i) CHECK((phi[i] < 0) == disk[i]);
  const auto ring = extract_contour(disk);
  for (std::size_t i = 0; i < ring.size(); ++i) {
    if (!ring[i]) continue;
    CHECK(phi[i] < 0.0);
    CHECK(phi[i] >= -s.spacing().max());
  }
  CHECK_THROWS_AS(signed_distance(BinaryMask::empty(s)), Error);
  try {
    signed_distance(BinaryMask::full(s));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_mask);
  }
}

TEST_CASE("signed distance matches brute force on random masks") {
  std::mt19937_64 rng(8);
  int done = 0;
  while (done < 25) {
    const auto s = oracle::random_shape(rng, 10, 10, 6);
    const auto m = oracle::random_mask(rng, s);
    if (count_true(m) == 0 || count_true(m) == m.size()) continue;
    CHECK(max_abs_diff(signed_distance(m), oracle::signed_distance(m, s.spacing())) < 1e-9);
    ++done;
  }
}

TEST_CASE("edt is Lipschitz along axes and min over unions") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = oracle::random_shape(rng, 12, 12, 6);
    const auto a = nonempty_random(rng, s), b = nonempty_random(rng, s);
    const auto da = edt(a), db = edt(b), du = edt(mask_or(a, b));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(du[i] - std::min(da[i], db[i])) < 1e-9);
    for (std::size_t z = 0; z < s.nz(); ++z)
      for (std::size_t y = 0; y < s.ny(); ++y)
        for (std::size_t x = 0; x < s.nx(); ++x) {
          const double v = da.at(x, y, z);
          if (x + 1 < s.nx()) CHECK(std::abs(v - da.at(x + 1, y, z)) <= s.spacing().x + 1e-12);
          if (y + 1 < s.ny()) CHECK(std::abs(v - da.at(x, y + 1, z)) <= s.spacing().y + 1e-12);
          if (z + 1 < s.nz()) CHECK(std::abs(v - da.at(x, y, z + 1)) <= s.spacing().z + 1e-12);
        }
  }
}

TEST_CASE("edt_squared is the square of edt") {
  std::mt19937_64 rng(4);
  const GridShape s(9, 7, 3, Spacing{0.8, 1.1, 2.5});
  const auto m = nonempty_random(rng, s);
  const auto d = edt(m), d2 = edt_squared(m, s.spacing());
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(std::sqrt(d2[i]) == d[i]);
}
