#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "svidr/linalg.hpp"
#include "svidr/rng.hpp"

using namespace svidr;

namespace {

Mat<double> random_spd(std::size_t q, Rng& rng, double ridge = 1e-3) {
  Mat<double> m(q, q);
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = 0; j < q; ++j) m(i, j) = rng.normal();
  Mat<double> a(q, q);
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = 0; j < q; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < q; ++k) s += m(i, k) * m(j, k);
      a(i, j) = s + (i == j ? ridge : 0.0);
    }
  return a;
}

Eigen::MatrixXd to_eigen(const Mat<double>& a) {
  Eigen::MatrixXd e(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) e(i, j) = a(i, j);
  return e;
}

}  // namespace

TEST_CASE("cholesky identity and hand examples") {
  auto i2 = Mat<double>::identity(2);
  auto l = cholesky(i2);
  CHECK(l.at(0, 0) == 1.0);
  CHECK(l.at(1, 0) == 0.0);
  CHECK(l.at(1, 1) == 1.0);

  Mat<double> a(2, 2);
  a(0, 0) = 4; a(0, 1) = 2; a(1, 0) = 2; a(1, 1) = 3;
  l = cholesky(a);
  CHECK(l.at(0, 0) == Catch::Approx(2.0));
  CHECK(l.at(1, 0) == Catch::Approx(1.0));
  CHECK(l.at(1, 1) == Catch::Approx(std::sqrt(2.0)));
  // reconstruction
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0;
      for (std::size_t k = 0; k <= std::min(i, j); ++k) s += l.at(i, k) * l.at(j, k);
      CHECK(s == Catch::Approx(a(i, j)).margin(1e-14));
    }

  Mat<double> s1(1, 1);
  s1(0, 0) = 7.0;
  CHECK(cholesky(s1).at(0, 0) == Catch::Approx(std::sqrt(7.0)));
}

TEST_CASE("cholesky rejects non-positive-definite input") {
  Mat<double> a(2, 2);
  a(0, 0) = 1; a(0, 1) = 2; a(1, 0) = 2; a(1, 1) = 1;
  CHECK_THROWS_AS(cholesky(a), NotPositiveDefinite);
}

TEST_CASE("cholesky matches Eigen LLT and reconstructs random SPD matrices") {
  Rng rng(42);
  for (std::size_t q : {2, 3, 5, 8, 15, 30}) {
    Mat<double> a = random_spd(q, rng);
    auto l = cholesky(a);
    Eigen::MatrixXd le = to_eigen(a).llt().matrixL();
    double max_diff = 0, max_rec = 0, fro = 0;
    for (std::size_t i = 0; i < q; ++i)
      for (std::size_t j = 0; j <= i; ++j)
        max_diff = std::max(max_diff, std::fabs(l.at(i, j) - le(i, j)));
    for (std::size_t i = 0; i < q; ++i)
      for (std::size_t j = 0; j < q; ++j) {
        double s = 0;
        for (std::size_t k = 0; k <= std::min(i, j); ++k) s += l.at(i, k) * l.at(j, k);
        max_rec = std::max(max_rec, std::fabs(s - a(i, j)));
        fro += a(i, j) * a(i, j);
      }
    CHECK(max_diff < 1e-9);
    CHECK(max_rec < 1e-10 * std::sqrt(fro));
  }
}

TEST_CASE("solve_triangular hand examples") {
  auto l = LowerTriangular<double>::identity(2);
  auto x = solve_triangular(l, Vec<double>{3, 4}, TriSolveMode::lower);
  CHECK(x[0] == 3.0);
  CHECK(x[1] == 4.0);

  LowerTriangular<double> t(2);
  t.at(0, 0) = 2; t.at(1, 0) = 1; t.at(1, 1) = 1;
  x = solve_triangular(t, Vec<double>{2, 2}, TriSolveMode::lower);
  CHECK(x[0] == Catch::Approx(1.0));
  CHECK(x[1] == Catch::Approx(1.0));

  x = solve_triangular(t, Vec<double>{1, 1}, TriSolveMode::lower_transposed);
  CHECK(x[0] == Catch::Approx(0.0).margin(1e-15));
  CHECK(x[1] == Catch::Approx(1.0));

  CHECK_THROWS_AS(solve_triangular(t, Vec<double>{1, 2, 3}, TriSolveMode::lower),
                  DimensionMismatch);
}

TEST_CASE("solve_triangular residuals on random systems") {
  Rng rng(7);
  for (std::size_t q : {1, 4, 12, 40}) {
    auto l = cholesky(random_spd(q, rng));
    Vec<double> b(q);
    double bnorm = 0;
    for (auto& v : b) { v = rng.normal(); bnorm += v * v; }
    bnorm = std::sqrt(bnorm);
    for (auto mode : {TriSolveMode::lower, TriSolveMode::lower_transposed}) {
      auto x = solve_triangular(l, b, mode);
      double res = 0;
      for (std::size_t i = 0; i < q; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < q; ++j) {
          const double lij = mode == TriSolveMode::lower
                                 ? (j <= i ? l.at(i, j) : 0.0)
                                 : (i <= j ? l.at(j, i) : 0.0);
          s += lij * x[j];
        }
        res = std::max(res, std::fabs(s - b[i]));
      }
      CHECK(res <= 1e-10 * bnorm);
    }
  }
}

TEST_CASE("log_chol_expand hand examples") {
  LogCholVector l1(1);
  l1.values = {0.0};
  CHECK(log_chol_expand(l1).at(0, 0) == 1.0);

  LogCholVector l2(2);
  l2.values = {0.0, 2.0, 0.0};  // row-major: diag, sub, diag
  auto m = log_chol_expand(l2);
  CHECK(m.at(0, 0) == 1.0);
  CHECK(m.at(1, 0) == 2.0);
  CHECK(m.at(1, 1) == 1.0);

  l2.values = {std::log(3.0), -1.0, std::log(0.5)};
  m = log_chol_expand(l2);
  CHECK(m.at(0, 0) == Catch::Approx(3.0));
  CHECK(m.at(1, 0) == -1.0);
  CHECK(m.at(1, 1) == Catch::Approx(0.5));
}

TEST_CASE("log_chol_compress inverts expand") {
  auto i2 = LowerTriangular<double>::identity(2);
  auto v = log_chol_compress(i2);
  CHECK(v.values == Vec<double>{0.0, 0.0, 0.0});

  LowerTriangular<double> t(2);
  t.at(0, 0) = 3; t.at(1, 0) = -1; t.at(1, 1) = 0.5;
  v = log_chol_compress(t);
  CHECK(v.values[0] == Catch::Approx(std::log(3.0)));
  CHECK(v.values[1] == -1.0);
  CHECK(v.values[2] == Catch::Approx(std::log(0.5)));

  t.at(1, 1) = -0.5;
  CHECK_THROWS_AS(log_chol_compress(t), NonPositiveDiagonal);

  // round trip: off-diagonals bit-exact, diagonals within 1 ulp
  Rng rng(3);
  for (std::size_t p : {1, 2, 4, 7}) {
    LogCholVector l(p);
    for (auto& x : l.values) x = rng.normal();
    auto back = log_chol_compress(log_chol_expand(l));
    std::size_t k = 0;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j <= i; ++j, ++k) {
        if (i == j)
          CHECK(std::fabs(back.values[k] - l.values[k]) <=
                std::fabs(l.values[k]) * 1e-15 + 1e-15);
        else
          CHECK(back.values[k] == l.values[k]);
      }
  }
}

TEST_CASE("nullspace_basis hand examples") {
  // c = e1 in R^3
  auto z = nullspace_basis(Vec<double>{1, 0, 0});
  REQUIRE(z.rows() == 3);
  REQUIRE(z.cols() == 2);
  for (std::size_t j = 0; j < 2; ++j)
    CHECK(std::fabs(z(0, j)) < 1e-12);  // c^T Z = 0

  const double s = 1.0 / std::sqrt(2.0);
  z = nullspace_basis(Vec<double>{s, s});
  REQUIRE(z.cols() == 1);
  CHECK(std::fabs(z(0, 0) * s + z(1, 0) * s) < 1e-12);
  CHECK(std::fabs(std::fabs(z(0, 0)) - s) < 1e-12);
  CHECK(z(0, 0) * z(1, 0) < 0);  // proportional to (1,-1)

  CHECK_THROWS_AS(nullspace_basis(Vec<double>{0, 0, 0}), ZeroVector);
}

TEST_CASE("nullspace_basis orthonormal and orthogonal to c, dims 2..200") {
  Rng rng(11);
  for (std::size_t q = 2; q <= 200; q += (q < 20 ? 1 : 13)) {
    Vec<double> c(q);
    double norm = 0;
    for (auto& v : c) { v = rng.normal(); norm += v * v; }
    norm = std::sqrt(norm);
    auto z = nullspace_basis(c);
    REQUIRE(z.cols() == q - 1);
    for (std::size_t a = 0; a < q - 1; ++a) {
      double dot_c = 0;
      for (std::size_t i = 0; i < q; ++i) dot_c += c[i] * z(i, a);
      CHECK(std::fabs(dot_c) <= 1e-12 * norm);
      for (std::size_t b = a; b < q - 1; ++b) {
        double dot = 0;
        for (std::size_t i = 0; i < q; ++i) dot += z(i, a) * z(i, b);
        CHECK(std::fabs(dot - (a == b ? 1.0 : 0.0)) < 1e-12);
      }
    }
  }
}

TEST_CASE("numeric_rank on known matrices") {
  CHECK(numeric_rank(Mat<double>::identity(4)) == 4);
  Mat<double> a(3, 3);  // rank 1
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) a(i, j) = (i + 1.0) * (j + 1.0);
  CHECK(numeric_rank(a) == 1);
}
