#include <random>

#include "doctest.h"
#include "oracles.hpp"

using namespace cdl;

namespace {

const StructuringElement kSquare = StructuringElement::of(SeKind::square3x3_2d);
const StructuringElement kCross = StructuringElement::of(SeKind::cross3x3_2d);
const StructuringElement kCube = StructuringElement::of(SeKind::cube3x3x3_3d);

BinaryMask single(const GridShape& s, std::size_t x, std::size_t y, std::size_t z = 0) {
  std::vector<std::uint8_t> bits(s.size(), 0);
  bits[s.index(x, y, z)] = 1;
  return BinaryMask(s, bits);
}

}  // namespace

TEST_CASE("structuring element validation") {
  CHECK_THROWS_AS((StructuringElement{SeKind::cube3x3x3_3d, SeMode::per_slice}.validate()), Error);
  CHECK_THROWS_AS((StructuringElement{SeKind::square3x3_2d, SeMode::volumetric}.validate()), Error);
  CHECK_NOTHROW(kCross.validate());
  CHECK(parse_se_kind("cross3x3_2d") == SeKind::cross3x3_2d);
  CHECK_THROWS_AS(parse_se_kind("disk"), Error);
  CHECK_THROWS_AS((ContourSpec{kSquare, 0}.validate()), Error);
  CHECK_THROWS_AS((BandSpec{kSquare, 0, 0}.validate()), Error);
}

TEST_CASE("erode examples") {
  const GridShape s(7, 7, 1);
  CHECK(count_true(erode(single(s, 3, 3), kSquare)) == 0);
  const auto sq = oracle::square(s, 1, 1, 5);
  const auto inner = erode(sq, kSquare);
  CHECK(inner == oracle::square(s, 2, 2, 3));
  const auto full = BinaryMask::full(GridShape(6, 5, 1));
  CHECK(count_true(erode(full, kSquare)) == 4 * 3);
  CHECK(erode(sq, kSquare, 0) == sq);
}

TEST_CASE("dilate examples") {
  const GridShape s(7, 7, 1);
  CHECK(count_true(dilate(BinaryMask::empty(s), kSquare)) == 0);
  CHECK(dilate(single(s, 3, 3), kSquare) == oracle::square(s, 2, 2, 3));
  CHECK(count_true(dilate(single(s, 0, 0), kSquare)) == 4);
  CHECK(count_true(dilate(single(s, 3, 3), kCross)) == 5);
}

TEST_CASE("xor examples") {
  const GridShape s(7, 7, 1);
  const auto sq = oracle::square(s, 1, 1, 5);
  CHECK(count_true(mask_xor(sq, sq)) == 0);
  CHECK(mask_xor(sq, BinaryMask::empty(s)) == sq);
  CHECK(count_true(mask_xor(sq, erode(sq, kSquare))) == 16);
  CHECK_THROWS_AS(mask_xor(sq, BinaryMask::empty(GridShape(7, 6, 1))), Error);
}

TEST_CASE("contour examples") {
  const GridShape s(7, 7, 1);
  const auto sq = oracle::square(s, 1, 1, 5);
  CHECK(count_true(extract_contour(BinaryMask::empty(s))) == 0);
  CHECK(count_true(extract_contour(sq, {kSquare, 1})) == 16);
  CHECK(count_true(extract_contour(sq, {kSquare, 2})) == 24);
  CHECK(is_subset(extract_contour(sq), sq));
}

TEST_CASE("band examples") {
  const GridShape s(9, 9, 1);
  CHECK(count_true(extract_band(BinaryMask::empty(s), {kSquare, 1, 1})) == 0);
  CHECK(count_true(extract_band(single(s, 4, 4), {kSquare, 1, 0})) == 9);
  CHECK(count_true(extract_band(oracle::square(s, 2, 2, 5), {kSquare, 1, 1})) == 40);
  const auto sq = oracle::square(s, 2, 2, 5);
  CHECK(is_subset(extract_contour(sq), extract_band(sq, {kSquare, 1, 1})));
}

TEST_CASE("soft morphology examples") {
  const GridShape s(3, 3, 1);
  std::vector<double> v(9, 0.4);
  v[4] = 0.9;
  const ProbabilityVolume p(s, v);
  CHECK(dilate_soft(p, kSquare).grid().at(1, 1, 0) == 0.9);
  CHECK(erode_soft(p, kSquare).grid().at(1, 1, 0) == 0.4);

  const ProbabilityVolume c(VoxelGrid::filled(GridShape(5, 5, 1), 0.3));
  CHECK(erode_soft(c).grid().at(2, 2, 0) == 0.3);
  CHECK(dilate_soft(c).grid().at(2, 2, 0) == 0.3);
  CHECK(soft_contour(c).at(2, 2, 0) == 0.0);
  // Out-of-bounds samples read as 0.
  CHECK(erode_soft(c).grid().at(0, 0, 0) == 0.0);
}

TEST_CASE("soft morphology reduces to binary on 0/1 input") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const auto shape = oracle::random_shape(rng, 10, 10, 4);
    const auto m = oracle::random_mask(rng, shape);
    const auto p = ProbabilityVolume::from_mask(m);
    for (const auto& se : {kSquare, kCross, kCube}) {
      CHECK(binarize(erode_soft(p, se), 0.5) == erode(m, se));
      CHECK(binarize(dilate_soft(p, se), 0.5) == dilate(m, se));
      const auto sc = soft_contour(p, se);
      const auto hard = extract_contour(m, {se, 1});
      for (std::size_t i = 0; i < m.size(); ++i) CHECK(sc[i] == (hard[i] ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("soft contour lies between 0 and p") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto shape = oracle::random_shape(rng, 10, 10, 4);
    std::vector<double> v(shape.size());
    for (auto& x : v) x = u(rng);
    const ProbabilityVolume p(shape, v);
    const auto sc = soft_contour(p);
    for (std::size_t i = 0; i < v.size(); ++i) {
      CHECK(sc[i] >= 0.0);
      CHECK(sc[i] <= v[i]);
    }
  }
}

TEST_CASE("morphology matches the naive reference") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const auto shape = oracle::random_shape(rng, 16, 16, 5);
    const auto m = oracle::random_mask(rng, shape);
    const unsigned it = 1 + unsigned(rng() % 3);
    for (const auto kind : {SeKind::square3x3_2d, SeKind::cross3x3_2d, SeKind::cube3x3x3_3d}) {
      const auto se = StructuringElement::of(kind);
      CHECK(erode(m, se, it) == oracle::erode(m, kind, it));
      CHECK(dilate(m, se, it) == oracle::dilate(m, kind, it));
      CHECK(extract_contour(m, {se, it}) == oracle::contour(m, kind, it));
      const unsigned d = unsigned(rng() % 3), e = 1 + unsigned(rng() % 2);
      CHECK(extract_band(m, {se, d, e}) == oracle::band(m, kind, d, e));
    }
  }
}

TEST_CASE("morphology properties") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const auto shape = oracle::random_shape(rng, 12, 12, 4);
    const auto m = oracle::random_mask(rng, shape);
    for (const auto& se : {kSquare, kCross, kCube}) {
      CHECK(is_subset(dilate(erode(m, se), se), m));
      // Closing is extensive away from the image frame; the background
      // padding erodes frame voxels.
      const auto closed = erode(dilate(m, se), se);
      const auto& sh = m.shape();
      const std::size_t zpad = se.kind == SeKind::cube3x3x3_3d ? 1 : 0;
      for (std::size_t z = zpad; z + zpad < sh.nz(); ++z)
        for (std::size_t y = 1; y + 1 < sh.ny(); ++y)
          for (std::size_t x = 1; x + 1 < sh.nx(); ++x) CHECK((!m.at(x, y, z) || closed.at(x, y, z)));
      const auto c = extract_contour(m, {se, 1});
      const auto e = erode(m, se);
      CHECK(mask_or(c, e) == m);
      CHECK(count_true(mask_and(c, e)) == 0);
    }
    // Duality with the interior: outside the one-voxel border frame, erosion
    // is the complement of dilating the complement.
    const auto dual = complement(dilate(complement(m), kSquare));
    const auto& s = m.shape();
    const auto er = erode(m, kSquare);
    for (std::size_t z = 0; z < s.nz(); ++z)
      for (std::size_t y = 1; y + 1 < s.ny(); ++y)
        for (std::size_t x = 1; x + 1 < s.nx(); ++x) CHECK(er.at(x, y, z) == dual.at(x, y, z));
  }
}

TEST_CASE("per-slice mode never mixes slices") {
  std::mt19937_64 rng(7);
  const GridShape shape(9, 7, 4);
  const auto m = oracle::random_mask(rng, shape);
  const auto whole = erode(m, kSquare, 2);
  const auto band = extract_band(m, {kSquare, 2, 1});
  for (std::size_t z = 0; z < shape.nz(); ++z) {
    CHECK(extract_slice(whole, z) == erode(extract_slice(m, z), kSquare, 2));
    CHECK(extract_slice(band, z) == extract_band(extract_slice(m, z), {kSquare, 2, 1}));
  }
}
