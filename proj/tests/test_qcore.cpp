#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "poissonq/qcore.hpp"
#include "test_util.hpp"

#include <cmath>
#include <numbers>

using namespace poissonq;
using qcore::Complex;
using qcore::Matrix;
using qcore::Vector;

namespace {

// Characteristic-polynomial roots of a Hermitian 3x3 matrix, solved by the
// trigonometric method. Independent of the eigensolver path.
std::array<double, 3> cubic_roots_3x3(const Matrix& m) {
  const double c2 = m.trace().real();
  const double c1 = ((m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)) +
                     (m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0)) +
                     (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)))
                        .real();
  const double c0 = m.determinant().real();
  const double p = c1 - c2 * c2 / 3.0;
  const double q = -2.0 * c2 * c2 * c2 / 27.0 + c1 * c2 / 3.0 - c0;
  const double r = std::sqrt(-p / 3.0);
  double arg = 3.0 * q / (2.0 * p) * std::sqrt(-3.0 / p);
  arg = std::clamp(arg, -1.0, 1.0);
  const double theta = std::acos(arg);
  std::array<double, 3> roots;
  for (int k = 0; k < 3; ++k) {
    roots[k] = 2.0 * r * std::cos(theta / 3.0 - 2.0 * std::numbers::pi * k / 3.0) +
               c2 / 3.0;
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

qcore::TimeDependentOperator two_level_template(
    std::function<double(double)> omega_r, std::function<double(double)> omega_i,
    std::function<double(double)> delta) {
  qcore::TimeDependentOperator op;
  op.dim = 2;
  op.evaluate = [=](double t) {
    Matrix h(2, 2);
    const Complex off(omega_r(t) / 2.0, -omega_i(t) / 2.0);
    h << -delta(t) / 2.0, off, std::conj(off), delta(t) / 2.0;
    return h;
  };
  return op;
}

}  // namespace

TEST_CASE("vectorize layout and round trip") {
  Matrix mixed = Matrix::Identity(2, 2) / 2.0;
  auto v = qcore::vectorize(qcore::DensityMatrix(mixed));
  CHECK(v.coords[0] == Complex(0.5, 0.0));
  CHECK(v.coords[1] == Complex(0.0, 0.0));
  CHECK(v.coords[2] == Complex(0.0, 0.0));
  CHECK(v.coords[3] == Complex(0.5, 0.0));

  Vector e0 = Vector::Zero(2);
  e0[0] = 1.0;
  auto p = qcore::vectorize(qcore::DensityMatrix::pure(e0));
  CHECK(p.coords[0] == Complex(1.0, 0.0));
  CHECK(p.coords[1] == Complex(0.0, 0.0));
  CHECK(p.coords[2] == Complex(0.0, 0.0));
  CHECK(p.coords[3] == Complex(0.0, 0.0));

  std::mt19937_64 rng(11);
  Matrix m = testutil::random_hermitian(rng, 3);
  CHECK((qcore::devectorize(qcore::vectorize_operator(m)) - m).norm() == 0.0);
}

TEST_CASE("hs_inner equals the trace form") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix m1 = testutil::random_hermitian(rng, 3);
    Matrix m2 = testutil::random_hermitian(rng, 3);
    Complex lhs = qcore::hs_inner(qcore::vectorize_operator(m1),
                                  qcore::vectorize_operator(m2));
    Complex rhs = (m1.adjoint() * m2).trace();
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }

  Vector psi = testutil::random_state(rng, 4);
  auto v = qcore::vectorize(qcore::DensityMatrix::pure(psi));
  CHECK(qcore::hs_inner(v, v).real() == doctest::Approx(1.0).epsilon(1e-12));

  // conjugate symmetry and linearity in the second argument
  auto a = qcore::vectorize_operator(testutil::random_hermitian(rng, 3));
  auto b = qcore::vectorize_operator(testutil::random_hermitian(rng, 3));
  auto c = qcore::vectorize_operator(testutil::random_hermitian(rng, 3));
  CHECK(std::abs(qcore::hs_inner(a, b) - std::conj(qcore::hs_inner(b, a))) <
        1e-14);
  qcore::LiouvilleVector bc{b.dim, b.coords * Complex(0.3, 1.2) + c.coords};
  CHECK(std::abs(qcore::hs_inner(a, bc) -
                 (Complex(0.3, 1.2) * qcore::hs_inner(a, b) +
                  qcore::hs_inner(a, c))) < 1e-13);

  qcore::LiouvilleVector wrong{3, Vector::Zero(9)};
  CHECK_THROWS_AS((void)qcore::hs_inner(a, qcore::vectorize_operator(
                                               Matrix::Identity(2, 2))),
                  std::invalid_argument);
  (void)wrong;
}

TEST_CASE("eigendecompose: diagonal, two-level formula, cubic oracle") {
  const double delta = 0.7;
  Matrix diag = Matrix::Zero(2, 2);
  diag(0, 0) = -delta / 2.0;
  diag(1, 1) = delta / 2.0;
  auto es = qcore::eigendecompose(qcore::HermitianOperator(diag));
  CHECK(es.values[0] == doctest::Approx(-delta / 2.0));
  CHECK(es.values[1] == doctest::Approx(delta / 2.0));

  // E_pm = +/- (1/2) sqrt(Omega_R^2 + Omega_I^2 + Delta^2)
  const double wr = 1.3, wi = -0.4, dd = 0.9;
  Matrix h(2, 2);
  h << -dd / 2.0, Complex(wr, -wi) / 2.0, Complex(wr, wi) / 2.0, dd / 2.0;
  auto es2 = qcore::eigendecompose(qcore::HermitianOperator(h));
  const double e = 0.5 * std::sqrt(wr * wr + wi * wi + dd * dd);
  CHECK(es2.values[0] == doctest::Approx(-e).epsilon(1e-12));
  CHECK(es2.values[1] == doctest::Approx(e).epsilon(1e-12));

  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 25; ++rep) {
    Matrix m = testutil::random_hermitian(rng, 3);
    auto sys = qcore::eigendecompose(qcore::HermitianOperator(m));
    auto roots = cubic_roots_3x3(m);
    for (int k = 0; k < 3; ++k)
      CHECK(std::abs(sys.values[k] - roots[k]) < 1e-9 * (1.0 + m.norm()));

    // reconstruction
    Matrix recon = Matrix::Zero(3, 3);
    for (int n = 0; n < 3; ++n)
      recon += sys.values[n] * sys.vectors.col(n) * sys.vectors.col(n).adjoint();
    CHECK((recon - m).cwiseAbs().maxCoeff() < 1e-10);

    // deterministic
    auto again = qcore::eigendecompose(qcore::HermitianOperator(m));
    CHECK((again.vectors - sys.vectors).norm() == 0.0);
  }

  Matrix bad(2, 2);
  bad << 0.0, 1.0, 0.5, 0.0;
  CHECK_THROWS_AS(qcore::HermitianOperator{bad}, std::invalid_argument);
}

TEST_CASE("track_eigenframe: constant operator gives a constant frame") {
  std::mt19937_64 rng(5);
  Matrix m = testutil::random_hermitian(rng, 3);
  auto op = qcore::constant_operator(qcore::HermitianOperator(m));
  auto frame = qcore::track_eigenframe(op, qcore::uniform_grid(0.0, 1.0, 11));
  for (std::size_t k = 1; k < frame.size(); ++k) {
    CHECK((frame.vectors[k] - frame.vectors[0]).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((frame.values[k] - frame.values[0]).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("track_eigenframe matches closed-form two-level eigenvectors") {
  const double w0 = 1.0, w = 0.4;
  auto op = two_level_template(
      [&](double t) { return 2.0 * w0 * std::cos(w * t); },
      [&](double t) { return 2.0 * w0 * std::sin(w * t); },
      [&](double) { return -w0; });
  auto grid = qcore::uniform_grid(0.0, 10.0, 401);
  auto frame = qcore::track_eigenframe(op, grid);
  for (std::size_t k = 0; k < grid.size(); k += 40) {
    Matrix h = op.evaluate(grid[k]);
    // closed-form eigenvector for the upper eigenvalue of [[a, b], [b*, d]]
    const double a = h(0, 0).real(), d = h(1, 1).real();
    const Complex b = h(0, 1);
    const double ep = (a + d) / 2.0 +
                      std::sqrt((a - d) * (a - d) / 4.0 + std::norm(b));
    Vector v(2);
    v << b, ep - a;
    v /= v.norm();
    CHECK(std::abs(frame.vectors[k].col(1).dot(v)) ==
          doctest::Approx(1.0).epsilon(1e-10));
    CHECK(frame.values[k][1] == doctest::Approx(ep).epsilon(1e-10));
  }
}

TEST_CASE("track_eigenframe parallel-transport residual is O(dt^2)") {
  auto op = two_level_template(
      [](double t) { return std::sin(t); }, [](double t) { return 0.3 * t; },
      [](double t) { return std::cos(0.7 * t) + 1.5; });
  auto residual = [&](std::size_t n) {
    auto frame = qcore::track_eigenframe(op, qcore::uniform_grid(0.0, 2.0, n));
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < frame.size(); ++k)
      for (int lbl = 0; lbl < 2; ++lbl)
        worst = std::max(worst,
                         std::abs(frame.vectors[k].col(lbl).dot(
                                      frame.vectors[k + 1].col(lbl)) -
                                  Complex(1.0, 0.0)));
    return worst;
  };
  const double r1 = residual(101);
  const double r2 = residual(201);
  const double r4 = residual(401);
  CHECK(r2 < r1 / 3.0);
  CHECK(r4 < r2 / 3.0);
}

TEST_CASE("track_eigenframe: degenerate start borrows the interior basis") {
  // H(t) vanishes at t = 0; for t > 0 the eigenbasis tends to the sigma_x one.
  auto op = two_level_template([](double t) { return std::sin(t); },
                               [](double) { return 0.0; },
                               [](double t) { return t * t; });
  auto frame = qcore::track_eigenframe(op, qcore::uniform_grid(0.0, 1.0, 201));
  Vector minus(2), plus(2);
  minus << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  CHECK(std::abs(frame.vectors[0].col(0).dot(minus)) ==
        doctest::Approx(1.0).epsilon(1e-3));
  CHECK(std::abs(frame.vectors[0].col(1).dot(plus)) ==
        doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("track_eigenframe reports crossings") {
  // Eigenvalues of sigma_z * (1 - 2t) cross at t = 1/2.
  qcore::TimeDependentOperator op;
  op.dim = 2;
  op.evaluate = [](double t) {
    Matrix h(2, 2);
    h << (1.0 - 2.0 * t), 0.02, 0.02, -(1.0 - 2.0 * t);
    return h;
  };
  CHECK_THROWS_AS(
      (void)qcore::track_eigenframe(op, qcore::uniform_grid(0.0, 1.0, 11)),
      qcore::CrossingError);
}

TEST_CASE("unitary_kick basics") {
  std::mt19937_64 rng(31);
  Matrix h1m = testutil::random_hermitian(rng, 3);
  qcore::HermitianOperator h1(h1m);

  CHECK((qcore::unitary_kick(h1, 0.0) - Matrix::Identity(3, 3))
            .cwiseAbs()
            .maxCoeff() < 1e-14);

  // H1 = diag(-1/2, 1/2): A_pi = diag(i, -i)
  Matrix sz(2, 2);
  sz << -0.5, 0.0, 0.0, 0.5;
  Matrix a = qcore::unitary_kick(qcore::HermitianOperator(sz),
                                 std::numbers::pi);
  CHECK(std::abs(a(0, 0) - Complex(0.0, 1.0)) < 1e-12);
  CHECK(std::abs(a(1, 1) - Complex(0.0, -1.0)) < 1e-12);
  CHECK(std::abs(a(0, 1)) < 1e-12);

  for (double xi : {0.3, -1.7, 4.0}) {
    Matrix u = qcore::unitary_kick(h1, xi);
    CHECK((u * u.adjoint() - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <
          1e-10);
    Matrix rho = testutil::random_density(rng, 3);
    Matrix kicked = u * rho * u.adjoint();
    CHECK(std::abs(kicked.trace() - rho.trace()) < 1e-12);
    auto before = qcore::eigendecompose(qcore::HermitianOperator(
        ((rho + rho.adjoint()) / 2.0).eval(), 1e-9));
    auto after = qcore::eigendecompose(qcore::HermitianOperator(
        ((kicked + kicked.adjoint()) / 2.0).eval(), 1e-9));
    CHECK((before.values - after.values).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("nested commutators and the two-level closed forms") {
  std::mt19937_64 rng(41);
  Matrix rho = testutil::random_density(rng, 2);
  Matrix h1 = testutil::random_traceless_2x2(rng);
  CHECK((qcore::nested_commutator(h1, rho, 0) - rho).norm() == 0.0);

  // chi = (E_pm)^2 for the traceless two-level template
  auto es = qcore::eigendecompose(qcore::HermitianOperator(h1));
  const double chi = es.values[1] * es.values[1];

  Matrix c1 = qcore::commutator(h1, rho);
  Matrix c2 = qcore::commutator(h1, c1);

  Matrix n3 = qcore::nested_commutator(h1, rho, 3);
  CHECK((n3 - 4.0 * chi * c1).cwiseAbs().maxCoeff() <
        1e-9 * c1.cwiseAbs().maxCoeff() * 4.0 * chi);

  Matrix n6 = qcore::nested_commutator(h1, rho, 6);
  CHECK((n6 - 16.0 * chi * chi * c2).cwiseAbs().maxCoeff() <
        1e-9 * (n6.cwiseAbs().maxCoeff() + 1e-30));

  // odd n <= 9: [H1, rho]_n = 2^{n-1} chi^{(n-1)/2} [H1, rho]
  for (int n = 1; n <= 9; n += 2) {
    Matrix lhs = qcore::nested_commutator(h1, rho, n);
    Matrix rhs = std::pow(2.0, n - 1) * std::pow(chi, (n - 1) / 2.0) * c1;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <=
          1e-9 * rhs.cwiseAbs().maxCoeff());
  }
  // even n <= 10: [H1, rho]_n = 2^{n-2} chi^{(n-2)/2} [H1, [H1, rho]]
  for (int n = 2; n <= 10; n += 2) {
    Matrix lhs = qcore::nested_commutator(h1, rho, n);
    Matrix rhs = std::pow(2.0, n - 2) * std::pow(chi, (n - 2) / 2.0) * c2;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <=
          1e-9 * rhs.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("density matrix validation") {
  Matrix not_trace_one = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(qcore::DensityMatrix{not_trace_one}, std::invalid_argument);

  Matrix negative(2, 2);
  negative << 1.5, 0.0, 0.0, -0.5;
  CHECK_THROWS_AS(qcore::DensityMatrix{negative}, std::invalid_argument);

  Vector unnormalized = Vector::Ones(2);
  CHECK_THROWS_AS((void)qcore::DensityMatrix::pure(unnormalized),
                  std::invalid_argument);
}
