#include <cmath>

#include "doctest.h"
#include "dlane/assignment.hpp"
#include "dlane/errors.hpp"
#include "dlane/random.hpp"
#include "oracles.hpp"

using namespace dlane;

namespace {

Lane2D seg(double u0, double v0, double u1, double v1) { return Lane2D{{{u0, v0}, {u1, v1}}}; }

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, int max_value) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = static_cast<double>(rng() % static_cast<unsigned>(max_value + 1));
  return m;
}

double assigned_total(const Matrix& m, const Assignment& a) {
  double t = 0.0;
  for (std::size_t r = 0; r < a.row_to_col.size(); ++r)
    if (a.row_to_col[r] >= 0) t += m(r, static_cast<std::size_t>(a.row_to_col[r]));
  return t;
}

}  // namespace

TEST_CASE("resampling onto the row grid") {
  const ImageSpec im{800, 320};
  const auto vert = resample_lane(seg(100, 300, 100, 100), im, 100);
  REQUIRE(vert.rows() == 4);
  CHECK_FALSE(vert.present[0]);
  for (std::size_t r = 1; r <= 3; ++r) {
    CHECK(vert.present[r]);
    CHECK(vert.u[r] == 100.0);
  }
  CHECK(vert.v_start == 300.0);
  CHECK(vert.v_end == 100.0);

  const auto diag = resample_lane(seg(0, 0, 100, 100), im, 50);
  CHECK(diag.u[0] == 0.0);
  CHECK(diag.u[1] == 50.0);
  CHECK(diag.u[2] == 100.0);
  CHECK_FALSE(diag.present[3]);

  CHECK_THROWS_AS(resample_lane(seg(5, 10, 5, 14), im, 50), DegenerateLane);
  CHECK_THROWS_AS(resample_lane(seg(5, -50, 5, -10), im, 1), DegenerateLane);
}

TEST_CASE("endpoints are clamped to the image") {
  const auto r = resample_lane(seg(10, 900, 10, 200), ImageSpec{800, 320}, 1);
  CHECK(r.v_start == 319.0);
  CHECK(r.v_end == 200.0);
  CHECK(r.present_count() == 120);
}

TEST_CASE("first crossing wins on a zigzag") {
  const Lane2D z{{{0, 300}, {10, 200}, {20, 250}, {30, 100}}};
  const auto hit = intersect_row(z, 225);
  REQUIRE(hit);
  CHECK(hit->segment == 0);
  CHECK(hit->u == doctest::Approx(7.5));
  CHECK_FALSE(intersect_row(z, 50));
}

TEST_CASE("matching cost") {
  const ImageSpec im{800, 320};
  const auto g = resample_lane(seg(100, 300, 150, 100), im);
  CHECK(matching_cost(g, g) == 0.0);
  const auto p = resample_lane(seg(105, 300, 155, 100), im);
  CHECK(matching_cost(p, g) == doctest::Approx(5.0));
  CHECK(matching_cost(g, p) == doctest::Approx(5.0));
  const auto far = resample_lane(seg(100, 90, 100, 10), im);
  CHECK(matching_cost(far, g) == kUnmatchable);
  const auto coarse = resample_lane(seg(100, 300, 150, 100), im, 10);
  CHECK_THROWS_AS(matching_cost(coarse, g), GridMismatch);
  // endpoint terms
  const auto shorter = resample_lane(seg(100, 300, 125, 200), im);
  CHECK(matching_cost(shorter, g) == doctest::Approx(100.0));
}

TEST_CASE("hungarian examples") {
  Matrix a(2, 2);
  a(0, 0) = 1, a(0, 1) = 10, a(1, 0) = 10, a(1, 1) = 1;
  auto r = hungarian_assign(a, 50);
  REQUIRE(r.pairs.size() == 2);
  CHECK(r.pairs[0] == MatchPair{0, 0, 1});
  CHECK(r.pairs[1] == MatchPair{1, 1, 1});

  Matrix b(2, 2);
  b(0, 0) = 1, b(0, 1) = 2, b(1, 0) = 2, b(1, 1) = 100;
  r = hungarian_assign(b, 50);
  REQUIRE(r.pairs.size() == 2);
  CHECK(r.pairs[0] == MatchPair{0, 1, 2});
  CHECK(r.pairs[1] == MatchPair{1, 0, 2});
  CHECK(solve_assignment(b).total == 4.0);
}

TEST_CASE("threshold drops expensive pairs after optimal assignment") {
  Matrix m(2, 2);
  m(0, 0) = 5, m(0, 1) = 40, m(1, 0) = 40, m(1, 1) = 35;
  const auto r = hungarian_assign(m, 30);
  REQUIRE(r.pairs.size() == 1);
  CHECK(r.pairs[0] == MatchPair{0, 0, 5});
  CHECK(r.unmatched_predictions == std::vector<int>{1});
  CHECK(r.unmatched_ground_truths == std::vector<int>{1});
}

TEST_CASE("infinite entries are avoided when possible") {
  Matrix m(2, 3, kUnmatchable);
  m(0, 2) = 4;
  m(1, 2) = 3;
  m(1, 0) = 7;
  const auto a = solve_assignment(m);
  CHECK(a.row_to_col == std::vector<int>{2, 0});
  CHECK(a.total == 11.0);
  const auto r = hungarian_assign(Matrix(2, 2, kUnmatchable));
  CHECK(r.pairs.empty());
  CHECK(r.unmatched_predictions.size() == 2);
}

TEST_CASE("empty sides") {
  const auto r = hungarian_assign(Matrix(0, 3));
  CHECK(r.pairs.empty());
  CHECK(r.unmatched_ground_truths == std::vector<int>{0, 1, 2});
  const auto s = hungarian_assign(Matrix(2, 0));
  CHECK(s.unmatched_predictions == std::vector<int>{0, 1});
}

TEST_CASE("hungarian equals exhaustive search on random rectangles") {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t r = 1 + rng() % 6, c = 1 + rng() % 6;
    const auto m = random_matrix(rng, r, c, 100);
    const auto a = solve_assignment(m);
    const double brute = oracle::brute_force_min_cost(m);
    CHECK(a.total == brute);
    CHECK(assigned_total(m, a) == brute);
    std::vector<int> seen(c, 0);
    for (int col : a.row_to_col)
      if (col >= 0) CHECK(seen[static_cast<std::size_t>(col)]++ == 0);
  }
  // the 3 x 5 example: 60 injections
  const auto m = random_matrix(rng, 3, 5, 20);
  int injections = 0;
  oracle::for_each_injection(3, 5, [&](const auto&) { ++injections; });
  CHECK(injections == 60);
  CHECK(solve_assignment(m).total == oracle::brute_force_min_cost(m));
}

TEST_CASE("adding a constant keeps the assignment") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 5;
    auto m = random_matrix(rng, n, n, 1000);
    const auto base = solve_assignment(m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) += 17.0;
    const auto shifted = solve_assignment(m);
    CHECK(shifted.total == base.total + 17.0 * static_cast<double>(n));
  }
}

TEST_CASE("negative or NaN costs are rejected") {
  Matrix m(1, 1, -1.0);
  CHECK_THROWS_AS(solve_assignment(m), InvalidArgument);
  m(0, 0) = NAN;
  CHECK_THROWS_AS(solve_assignment(m), InvalidArgument);
}
