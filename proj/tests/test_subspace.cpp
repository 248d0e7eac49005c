#include "oracles.hpp"

#include "plmm/subspace.hpp"

#include <doctest.h>

#include <Eigen/SVD>

using namespace plmm;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Frame with hand-chosen directions; only U, V, ybar matter for the bounds.
PcaFrame manual_frame(const Matrix& U, const Vector& ybar) {
  PcaFrame f;
  f.U = U;
  f.V = U.transpose();
  f.ybar = ybar;
  f.Z = (f.V * ybar).replicate(1, U.cols() + 1);
  return f;
}

// Data inside a simplex with positive vertices, plus a little noise.
Matrix simplex_data(std::mt19937_64& g, Index L, Index K, Index N, Matrix* vertices = nullptr) {
  const Matrix M = oracle::uniform(g, L, K, 0.2, 1.0);
  Matrix Y(L, N);
  for (Index n = 0; n < N; ++n) Y.col(n) = M * oracle::simplex_point(g, K);
  Y += oracle::uniform(g, L, N, -1e-3, 1e-3);
  if (vertices) *vertices = M;
  return Y;
}

}  // namespace

TEST_CASE("collinear data, K = 2: lift(project(Y)) reproduces Y") {
  std::mt19937_64 g(1);
  const Vector p = oracle::uniform(g, 3, 1), d = oracle::uniform(g, 3, 1, -1, 1);
  Matrix Y(3, 12);
  for (Index n = 0; n < 12; ++n) Y.col(n) = p + (0.1 * static_cast<double>(n) - 0.4) * d;
  const PcaFrame f = fit_projection(Y, 2);
  CHECK((f.lift(f.project(Y)) - Y).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("frame directions are orthonormal and sign-normalised") {
  std::mt19937_64 g(2);
  for (int t = 0; t < 20; ++t) {
    const Index K = oracle::uniform_int(g, 2, 5);
    const Matrix Y = oracle::uniform(g, 8, 30);
    const PcaFrame f = fit_projection(Y, K);
    CHECK((f.V * f.U - Matrix::Identity(K - 1, K - 1)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((f.ybar - Y.rowwise().mean()).norm() <= 1e-14);
    for (Index d = 0; d < K - 1; ++d) {
      Index first = 0;
      while (std::abs(f.U(first, d)) <= kDirectionZero) ++first;
      CHECK(f.U(first, d) > 0.0);
    }
    CHECK((f.Z - (f.V * f.ybar).replicate(1, K)).norm() == 0.0);
  }
}

TEST_CASE("projection residual equals the trailing singular energy") {
  std::mt19937_64 g(3);
  for (int t = 0; t < 10; ++t) {
    const Matrix Y = oracle::uniform(g, 5, 20);
    const PcaFrame f = fit_projection(Y, 3);
    const Matrix C = Y.colwise() - Y.rowwise().mean();
    const Matrix residual = C - f.U * (f.V * C);
    const Vector sv = Eigen::JacobiSVD<Matrix>(C).singularValues();
    double trailing = 0.0;
    for (Index i = 2; i < sv.size(); ++i) trailing += sv[i] * sv[i];
    CHECK(residual.squaredNorm() == doctest::Approx(trailing).epsilon(1e-9));
  }
}

TEST_CASE("fit_projection rejects rank-deficient data") {
  Matrix Y(4, 10);
  for (Index n = 0; n < 10; ++n) Y.col(n) = Vector::Constant(4, 0.3) + 0.1 * n * Vector::Unit(4, 1);
  CHECK_NOTHROW(fit_projection(Y, 2));
  CHECK_THROWS_AS(fit_projection(Y, 3), DegenerateError);
  CHECK_THROWS_AS(fit_projection(Matrix::Constant(4, 10, 1.0), 2), DegenerateError);
  CHECK_THROWS_AS(fit_projection(Y, 1), ConfigError);
}

TEST_CASE("lift and project are inverse on the subspace") {
  std::mt19937_64 g(4);
  const PcaFrame f = fit_projection(oracle::uniform(g, 7, 25), 4);
  for (int t = 0; t < 10; ++t) {
    const Matrix T = oracle::uniform(g, 3, 4, -1, 1);
    CHECK((f.project(f.lift(T)) - T).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("per-pixel projected endmembers are T + V dM_n") {
  std::mt19937_64 g(5);
  const PcaFrame f = fit_projection(oracle::uniform(g, 7, 25), 3);
  const Matrix M = oracle::uniform(g, 7, 3), dM = oracle::uniform(g, 7, 3, -0.1, 0.1);
  const Matrix lhs = f.V * ((M + dM).colwise() - f.ybar);
  CHECK((lhs - (f.project(M) + f.V * dM)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("volume of the unit right triangle") {
  const Matrix T = (Matrix(2, 3) << 0, 1, 0, 0, 0, 1).finished();
  CHECK(simplex_det(T) == doctest::Approx(1.0));
  CHECK(simplex_volume(T) == doctest::Approx(0.5));
  CHECK(volume_psi(T) == doctest::Approx(0.125));
}

TEST_CASE("coincident vertices have zero volume") {
  const Matrix T = (Matrix(2, 3) << 0.3, 0.3, 1, -0.2, -0.2, 4).finished();
  CHECK(std::abs(volume_psi(T)) <= 1e-30);
}

TEST_CASE("volume matches a Laplace-expansion determinant") {
  std::mt19937_64 g(6);
  for (int t = 0; t < 20; ++t) {
    const Index K = oracle::uniform_int(g, 2, 5);
    const Matrix T = oracle::uniform(g, K - 1, K, -1, 1);
    const double ref = oracle::volume_psi(T);
    CHECK(std::abs(volume_psi(T) - ref) <= 1e-12 * (1.0 + ref));
  }
}

TEST_CASE("cofactor expansion and row gradient") {
  std::mt19937_64 g(7);
  for (int t = 0; t < 20; ++t) {
    const Index K = oracle::uniform_int(g, 2, 5);
    const Matrix T = oracle::uniform(g, K - 1, K, -1, 1);
    for (Index k = 0; k < K - 1; ++k) {
      const Vector f = volume_cofactor(T, k);
      CHECK(std::abs(T.row(k).dot(f) - simplex_det(T)) <= 1e-12);
      auto psi_row = [&](const Matrix& x) {
        Matrix T2 = T;
        T2.row(k) = x;
        return oracle::volume_psi(T2);
      };
      const Matrix num = oracle::numeric_gradient(psi_row, T.row(k), 1e-6);
      CHECK(oracle::relative_error(volume_psi_row_gradient(T, k), num) <= 1e-5);
    }
  }
}

TEST_CASE("positivity bounds: two bands, opposite directions") {
  const PcaFrame f = manual_frame((Matrix(2, 1) << 1, -1).finished(), Vector::Constant(2, 0.5));
  const RowBounds b = row_bounds(f, Matrix::Zero(1, 2), 0);
  CHECK(b.lower[0] == doctest::Approx(-0.5));
  CHECK(b.upper[0] == doctest::Approx(0.5));
  CHECK(b.lower[1] == doctest::Approx(-0.5));
  CHECK(b.upper[1] == doctest::Approx(0.5));
}

TEST_CASE("positivity bounds: a positive direction leaves the upper side open") {
  const PcaFrame f = manual_frame((Matrix(3, 1) << 0.6, 0.8, 0.0).finished(), Vector::Constant(3, 0.2));
  const RowBounds b = row_bounds(f, Matrix::Zero(1, 2), 0);
  CHECK(b.upper[0] == kInf);
  CHECK(b.upper[1] == kInf);
  CHECK(b.lower[0] == doctest::Approx(-0.2 / 0.8));  // tightest of the two bands
}

TEST_CASE("positivity bounds: infeasible interval raises") {
  // Both bands need the same coordinate, with contradictory requirements.
  const PcaFrame f = manual_frame((Matrix(2, 1) << 1, -1).finished(), (Vector(2) << -1.0, -1.0).finished());
  CHECK_THROWS_AS(row_bounds(f, Matrix::Zero(1, 2), 0), InfeasibleBoundsError);
}

TEST_CASE("positivity bounds: a touching interval is widened, not rejected") {
  const PcaFrame f = manual_frame((Matrix(2, 1) << 1, -1).finished(), (Vector(2) << 0.0, -1e-12).finished());
  CHECK_NOTHROW(row_bounds(f, Matrix::Zero(1, 2), 0));
}

TEST_CASE("zero variability: per-pixel bounds equal the global bounds") {
  std::mt19937_64 g(8);
  const Matrix Y = simplex_data(g, 6, 3, 40);
  const PcaFrame f = fit_projection(Y, 3);
  const Matrix T = 0.5 * f.project(Y.leftCols(3));
  const std::vector<Matrix> dM(5, Matrix::Zero(6, 3));
  for (Index k = 0; k < 2; ++k) {
    const RowBounds b = row_bounds(f, T, k, &dM);
    for (Index n = 0; n < 5; ++n) {
      CHECK(b.pixel_lower.row(n) == b.lower);
      CHECK(b.pixel_upper.row(n) == b.upper);
    }
  }
}

TEST_CASE("g_constraint: interior, active bound, and the lift-and-check equivalence") {
  std::mt19937_64 g(9);
  int feasible_cases = 0, infeasible_cases = 0;
  for (int t = 0; t < 200; ++t) {
    const Index L = 6, K = oracle::uniform_int(g, 2, 4), N = 4;
    const Matrix Y = simplex_data(g, L, K, 30);
    const PcaFrame f = fit_projection(Y, K);
    const Matrix T = 0.3 * f.project(Y.leftCols(K));  // well inside the data cloud
    std::vector<Matrix> dM;
    for (Index n = 0; n < N; ++n) dM.push_back(oracle::uniform(g, L, K, -0.05, 0.05));
    const VolumeContext ctx = positivity_bounds(f, T, &dM);
    REQUIRE(ctx.rows.size() == static_cast<std::size_t>(K - 1));

    const Index k = oracle::uniform_int(g, 0, static_cast<int>(K - 2));
    // A candidate row around the current one, sometimes far outside.
    const double spread = (t % 2 == 0) ? 0.05 : 2.0;
    const Vector x = T.row(k).transpose() + oracle::uniform(g, K, 1, -spread, spread);
    const Matrix gk = g_constraint(ctx, k, x.transpose());
    CHECK(gk.rows() == 2 * (N + 1));

    Matrix T2 = T;
    T2.row(k) = x.transpose();
    const Matrix M2 = f.lift(T2);
    double lifted_min = M2.minCoeff();
    for (const auto& d : dM) lifted_min = std::min(lifted_min, (M2 + d).minCoeff());
    const bool g_ok = (gk.array() >= 0.0).all();
    if (g_ok) ++feasible_cases; else ++infeasible_cases;
    CHECK(g_ok == (lifted_min >= -1e-9));
  }
  CHECK(feasible_cases > 10);
  CHECK(infeasible_cases > 10);

  const PcaFrame f = manual_frame((Matrix(2, 1) << 1, -1).finished(), Vector::Constant(2, 0.5));
  const VolumeContext ctx = positivity_bounds(f, Matrix::Zero(1, 2));
  CHECK(g_constraint(ctx, 0, (Matrix(1, 2) << 0.1, -0.2).finished()).minCoeff() > 0.0);
  const Matrix at_lower = g_constraint(ctx, 0, ctx.rows[0].lower);
  CHECK(at_lower.row(0).norm() == 0.0);
  CHECK(at_lower.rows() == 2);
}

TEST_CASE("index sets skip negligible direction entries") {
  const PcaFrame f = manual_frame((Matrix(3, 1) << 1e-13, 0.6, -0.8).finished(), Vector::Constant(3, 0.1));
  const VolumeContext ctx = positivity_bounds(f, Matrix::Zero(1, 2));
  CHECK(ctx.positive_set[0] == std::vector<Index>{1});
  CHECK(ctx.negative_set[0] == std::vector<Index>{2});
}
