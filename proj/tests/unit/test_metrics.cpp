#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

using namespace cdl;

namespace {

BinaryMask from_indices(const GridShape& s, std::initializer_list<std::size_t> idx) {
  std::vector<std::uint8_t> bits(s.size(), 0);
  for (auto i : idx) bits[i] = 1;
  return BinaryMask(s, bits);
}

BinaryMask nonempty_random(std::mt19937_64& rng, const GridShape& s) {
  while (true) {
    auto m = oracle::random_mask(rng, s);
    if (count_true(m) > 0) return m;
  }
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ok;
}

}  // namespace

TEST_CASE("dice examples") {
  const GridShape s(4, 4, 1);
  const auto a = oracle::square(s, 0, 0, 2);
  CHECK(dice(a, a) == 1.0);
  CHECK(dice(a, oracle::square(s, 2, 2, 2)) == 0.0);
  CHECK(dice(a, oracle::square(s, 1, 0, 2)) == 0.5);
  CHECK(dice(BinaryMask::empty(s), BinaryMask::empty(s)) == 1.0);
  CHECK(code_of([&] { dice(a, BinaryMask::empty(GridShape(4, 4, 2))); }) == ErrorCode::shape_mismatch);
}

TEST_CASE("hausdorff examples") {
  const Spacing sp{1.56, 1.56, 3.0};
  const GridShape s(8, 3, 2, sp);
  const auto a = from_indices(s, {s.index(1, 1, 0)});
  const auto b = from_indices(s, {s.index(6, 1, 0)});
  CHECK(hausdorff(a, a, sp) == 0.0);
  CHECK(hausdorff(a, b, sp) == doctest::Approx(7.8).epsilon(1e-12));
  CHECK(code_of([&] { hausdorff(a, BinaryMask::empty(s), sp); }) == ErrorCode::empty_mask);
  CHECK(code_of([&] { hausdorff(a, b, sp, 0.0); }) == ErrorCode::invalid_argument);
}

TEST_CASE("hausdorff percentile uses the nearest rank") {
  // Four voxels of b at distances 0, 1, 2, 3 from a's single voxel column.
  const GridShape s(5, 1, 1);
  const auto a = from_indices(s, {0});
  const auto b = from_indices(s, {0, 1, 2, 3});
  CHECK(hausdorff(a, b, s.spacing(), 100) == 3.0);
  CHECK(hausdorff(a, b, s.spacing(), 75) == 2.0);
  CHECK(hausdorff(a, b, s.spacing(), 50) == 1.0);
  CHECK(hausdorff(a, b, s.spacing(), 25) == 0.0);
  CHECK(hausdorff(a, b, s.spacing(), 26) == 1.0);
}

TEST_CASE("assd_2d examples") {
  const GridShape s(11, 11, 1);
  const auto inner = oracle::square(s, 3, 3, 5);
  const auto outer = oracle::square(s, 1, 1, 9);
  CHECK(assd_2d(inner, inner, s.spacing()).mean == 0.0);
  // Inner ring to outer ring: every inner pixel is 2 away. Outer ring: per
  // side two pixels at sqrt(8) (shared corners), two at sqrt(5), five at 2.
  const double outer_mean = (4 * std::sqrt(8.0) + 8 * std::sqrt(5.0) + 20 * 2.0) / 32.0;
  const auto r = assd_2d(inner, outer, s.spacing());
  CHECK(r.mean == doctest::Approx(0.5 * (2.0 + outer_mean)).epsilon(1e-14));
  CHECK(r.mean == doctest::Approx(oracle::assd_2d(inner, outer, s.spacing(), SeKind::square3x3_2d, 1).mean));
  REQUIRE(r.per_slice.size() == 1);
  CHECK(r.per_slice[0].z == 0);
}

TEST_CASE("assd_2d skips slices missing either mask") {
  const GridShape s(8, 8, 3);
  std::vector<std::uint8_t> a(s.size(), 0), b(s.size(), 0);
  for (std::size_t y = 2; y < 6; ++y)
    for (std::size_t x = 2; x < 6; ++x) {
      a[s.index(x, y, 0)] = 1;
      b[s.index(x, y, 0)] = 1;
      a[s.index(x, y, 1)] = 1;
      b[s.index(x - 1, y, 2)] = 1;
    }
  const BinaryMask ma(s, a), mb(s, b);
  const auto r = assd_2d(ma, mb, s.spacing());
  REQUIRE(r.per_slice.size() == 1);
  CHECK(r.per_slice[0].z == 0);
  CHECK(r.mean == 0.0);
  CHECK(code_of([&] { assd_2d(ma, BinaryMask::empty(s), s.spacing()); }) == ErrorCode::no_common_slices);
}

TEST_CASE("contour dice metric examples") {
  const GridShape s(40, 1, 1);
  std::vector<std::uint8_t> t(40, 0), p(40, 0), bt(40, 0), bs(40, 0);
  for (int i = 0; i < 16; ++i) t[i] = 1;
  for (int i = 20; i < 36; ++i) p[i] = 1;
  for (int i = 0; i < 8; ++i) bs[i] = 1;    // |dT ∩ bS| = 8
  for (int i = 20; i < 32; ++i) bt[i] = 1;  // |dS ∩ bT| = 12
  const BinaryMask dT(s, t), dS(s, p), bT(s, bt), bS(s, bs);
  CHECK(contour_dice_metric(dT, dS, bT, bS) == 0.625);
  CHECK(contour_dice_metric(dT, dT, dT, dT) == 1.0);
  CHECK(contour_dice_metric(dT, dS, dT, dS) == 0.0);
  const auto e = BinaryMask::empty(s);
  CHECK(contour_dice_metric(e, e, e, e) == 1.0);
  // Bands equal to contours reduce to a plain overlap ratio.
  CHECK(contour_dice_metric(dT, dS, dT, dS) == 2.0 * double(count_true(mask_and(dT, dS))) / 32.0);
}

TEST_CASE("metrics match brute-force oracles on random instances") {
  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 60; ++trial) {
    const auto s = oracle::random_shape(rng, 16, 16, 5);
    const auto a = nonempty_random(rng, s), b = nonempty_random(rng, s);
    const Spacing& sp = s.spacing();
    CHECK(dice(a, b) == oracle::dice(a, b));
    CHECK(dice(a, b) == dice(b, a));
    const double pct = trial % 3 == 0 ? 95.0 : 100.0;
    const double h = hausdorff(a, b, sp, pct);
    CHECK(std::abs(h - oracle::hausdorff(a, b, sp, pct)) < 1e-9);
    CHECK(hausdorff(a, b, sp) == hausdorff(b, a, sp));

    const auto ref = oracle::assd_2d(a, b, sp, SeKind::square3x3_2d, 1);
    if (ref.defined) {
      const auto got = assd_2d(a, b, sp);
      CHECK(std::abs(got.mean - ref.mean) < 1e-9);
      CHECK(got.mean <= hausdorff(a, b, sp) + 1e-9);
    } else {
      CHECK(code_of([&] { assd_2d(a, b, sp); }) == ErrorCode::no_common_slices);
    }

    const auto se = StructuringElement::of(SeKind::square3x3_2d);
    const auto dT = extract_contour(a), dS = extract_contour(b);
    const auto bT = extract_band(a, {se, 1, 1}), bS = extract_band(b, {se, 1, 1});
    const double cd = contour_dice_metric(dT, dS, bT, bS);
    CHECK(cd == oracle::contour_dice(dT, dS, bT, bS));
    CHECK(cd == contour_dice_metric(dS, dT, bS, bT));
    CHECK(cd >= 0.0);
    CHECK(cd <= 1.0);
  }
}

TEST_CASE("evaluate assembles a report") {
  const GridShape s(12, 12, 2, Spacing{1.5, 1.5, 3});
  const auto a = oracle::square(s, 2, 2, 6);
  const auto r = evaluate(a, a);
  CHECK(r.dice == 1.0);
  REQUIRE(r.hausdorff_mm);
  CHECK(*r.hausdorff_mm == 0.0);
  REQUIRE(r.assd2d_mm);
  CHECK(*r.assd2d_mm == 0.0);
  CHECK(r.contour_dice == 1.0);

  const auto empty = evaluate(BinaryMask::empty(s), a);
  CHECK(empty.dice == 0.0);
  CHECK(!empty.hausdorff_mm);
  CHECK(!empty.assd2d_mm);
  CHECK(empty.contour_dice == 0.0);

  EvalOptions opts;
  opts.band = BandSpec{StructuringElement::of(SeKind::square3x3_2d), 1, 1};
  const auto shifted = oracle::square(s, 3, 2, 6);
  const auto banded = evaluate(shifted, a, opts);
  CHECK(banded.contour_dice > evaluate(shifted, a).contour_dice);
}
