// qcore.hpp — Dense complex linear algebra substrate: Hermitian operators,
// density matrices, Hilbert-Schmidt vectorization, eigendecomposition with
// smooth phase tracking along time grids.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace poissonq::qcore {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kDegeneracyTol = 1e-10;
// Two candidate continuations whose overlap magnitudes differ by less than
// this are treated as an (unresolvable) eigenvalue crossing.
inline constexpr double kOverlapAmbiguityTol = 0.1;

// Thrown by track_eigenframe when labels cannot be continued across a step.
class CrossingError : public std::runtime_error {
 public:
  CrossingError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// --------------------------- operator/state types ---------------------------

// Hermitian matrix in units of inverse time (hbar = 1).
class HermitianOperator {
 public:
  explicit HermitianOperator(Matrix entries, double tol = kHermitianTol);

  Eigen::Index dim() const { return entries_.rows(); }
  const Matrix& matrix() const { return entries_; }

 private:
  Matrix entries_;
};

// Deterministic map t -> Hermitian matrix. `evaluate` returns the raw matrix;
// `at` validates it. Factories set `time_independent` when the map is constant
// so downstream code can cache eigensystems.
struct TimeDependentOperator {
  Eigen::Index dim = 0;
  std::function<Matrix(double)> evaluate;
  bool time_independent = false;

  Matrix operator()(double t) const { return evaluate(t); }
  HermitianOperator at(double t) const;
};

TimeDependentOperator constant_operator(const HermitianOperator& op);

class DensityMatrix {
 public:
  struct Tolerances {
    double hermiticity = 1e-10;
    double trace = 1e-10;
    double positivity = 1e-10;
  };

  explicit DensityMatrix(Matrix entries) : DensityMatrix(std::move(entries), Tolerances{}) {}
  DensityMatrix(Matrix entries, Tolerances tol);
  static DensityMatrix pure(const Vector& psi, double norm_tol = 1e-10);

  Eigen::Index dim() const { return entries_.rows(); }
  const Matrix& matrix() const { return entries_; }

 private:
  Matrix entries_;
};

// Row-major stacking of a dim x dim matrix; the metric is Hilbert-Schmidt.
struct LiouvilleVector {
  Eigen::Index dim = 0;
  Vector coords;
};

// --------------------------- vectorization -----------------------------------

LiouvilleVector vectorize(const DensityMatrix& rho);
LiouvilleVector vectorize_operator(const Matrix& m);
Matrix devectorize(const LiouvilleVector& v);

// <<a|b>> = tr(a^dag b)
Complex hs_inner(const LiouvilleVector& a, const LiouvilleVector& b);
Complex hs_inner(const Matrix& a, const Matrix& b);

// --------------------------- eigendecomposition ------------------------------

// Eigenvalues ascending, eigenvectors unit norm with the largest-magnitude
// component rotated real-positive (deterministic gauge).
struct EigenSystem {
  RealVector values;
  Matrix vectors;  // columns
};

EigenSystem eigendecompose(const HermitianOperator& op);

// Rotate v so its largest-magnitude component is real-positive.
void fix_phase(Eigen::Ref<Vector> v);

// --------------------------- eigenframe tracking -----------------------------

// Labeled instantaneous eigensystem along a time grid. Labels are ascending at
// the first grid point and continued by maximal overlap; phases are fixed so
// successive same-label overlaps are real-positive (discrete parallel
// transport). Degenerate subspaces (gap < kDegeneracyTol) are re-based by
// Gram-Schmidt against the previous frame; a degenerate first point borrows
// the basis of the second.
struct EigenFrame {
  std::vector<double> times;
  std::vector<RealVector> values;  // per time, per label
  std::vector<Matrix> vectors;     // per time, column n = label n

  Eigen::Index dim() const { return vectors.empty() ? 0 : vectors[0].rows(); }
  std::size_t size() const { return times.size(); }

  // dV/dt at grid index k by central differences (one-sided at the ends).
  Matrix vector_derivative(std::size_t k) const;
};

EigenFrame track_eigenframe(const TimeDependentOperator& op,
                            const std::vector<double>& grid);

// --------------------------- kicks and commutators ---------------------------

// A_xi = exp(-i xi H1)
Matrix unitary_kick(const HermitianOperator& h1, double xi);

Matrix commutator(const Matrix& a, const Matrix& b);

// [H1, rho]_s with [H1, rho]_0 = rho
Matrix nested_commutator(const Matrix& h1, const Matrix& rho, int s);

// --------------------------- small helpers -----------------------------------

std::vector<double> uniform_grid(double t0, double t1, std::size_t n_points);

double hermiticity_error(const Matrix& m);

}  // namespace poissonq::qcore
