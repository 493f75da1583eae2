#include "poissonq/qcore.hpp"

#include <algorithm>
#include <cmath>

namespace poissonq::qcore {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Contiguous index ranges of near-equal ascending eigenvalues.
std::vector<std::pair<Eigen::Index, Eigen::Index>> degenerate_clusters(
    const RealVector& values) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> clusters;
  Eigen::Index start = 0;
  for (Eigen::Index i = 1; i <= values.size(); ++i) {
    if (i == values.size() || values[i] - values[i - 1] >= kDegeneracyTol) {
      clusters.emplace_back(start, i);  // [start, i)
      start = i;
    }
  }
  return clusters;
}

// Replace columns [begin, end) of `frame` by the previous frame's columns
// projected onto their span, orthonormalized in label order.
void rebase_degenerate_block(const Matrix& prev, Matrix& frame,
                             Eigen::Index begin, Eigen::Index end,
                             double time) {
  const Eigen::Index r = end - begin;
  Matrix block = frame.middleCols(begin, r);
  Matrix projected(frame.rows(), r);
  for (Eigen::Index n = 0; n < r; ++n) {
    projected.col(n) = block * (block.adjoint() * prev.col(begin + n));
  }
  // modified Gram-Schmidt
  for (Eigen::Index n = 0; n < r; ++n) {
    for (Eigen::Index m = 0; m < n; ++m) {
      projected.col(n) -=
          projected.col(m) * projected.col(m).dot(projected.col(n));
    }
    const double nrm = projected.col(n).norm();
    if (nrm < 0.2) {
      throw CrossingError(
          "track_eigenframe: degenerate-subspace continuation lost at t = " +
              std::to_string(time),
          time);
    }
    projected.col(n) /= nrm;
  }
  frame.middleCols(begin, r) = projected;
}

}  // namespace

// --------------------------- operator/state types ---------------------------

HermitianOperator::HermitianOperator(Matrix entries, double tol)
    : entries_(std::move(entries)) {
  require(entries_.rows() == entries_.cols(),
          "HermitianOperator: matrix must be square");
  require(entries_.rows() >= 2, "HermitianOperator: dim must be >= 2");
  const double err = hermiticity_error(entries_);
  if (err > tol) {
    throw std::invalid_argument(
        "HermitianOperator: not Hermitian (deviation " + std::to_string(err) +
        ")");
  }
}

HermitianOperator TimeDependentOperator::at(double t) const {
  Matrix m = evaluate(t);
  require(m.rows() == dim && m.cols() == dim,
          "TimeDependentOperator: dimension mismatch at evaluation");
  return HermitianOperator(std::move(m));
}

TimeDependentOperator constant_operator(const HermitianOperator& op) {
  TimeDependentOperator out;
  out.dim = op.dim();
  out.evaluate = [m = op.matrix()](double) { return m; };
  out.time_independent = true;
  return out;
}

DensityMatrix::DensityMatrix(Matrix entries, Tolerances tol)
    : entries_(std::move(entries)) {
  require(entries_.rows() == entries_.cols(),
          "DensityMatrix: matrix must be square");
  const double herm = hermiticity_error(entries_);
  if (herm > tol.hermiticity) {
    throw std::invalid_argument("DensityMatrix: not Hermitian (deviation " +
                                std::to_string(herm) + ")");
  }
  const double trace_err = std::abs(entries_.trace() - Complex(1.0, 0.0));
  if (trace_err > tol.trace) {
    throw std::invalid_argument("DensityMatrix: trace deviates from 1 by " +
                                std::to_string(trace_err));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(
      ((entries_ + entries_.adjoint()) / 2.0).eval(),
      Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() < -tol.positivity) {
    throw std::invalid_argument(
        "DensityMatrix: negative eigenvalue " +
        std::to_string(solver.eigenvalues().minCoeff()));
  }
}

DensityMatrix DensityMatrix::pure(const Vector& psi, double norm_tol) {
  require(std::abs(psi.norm() - 1.0) <= norm_tol,
          "DensityMatrix::pure: state not normalized");
  return DensityMatrix(psi * psi.adjoint());
}

// --------------------------- vectorization -----------------------------------

LiouvilleVector vectorize_operator(const Matrix& m) {
  require(m.rows() == m.cols(), "vectorize: matrix must be square");
  const Eigen::Index d = m.rows();
  LiouvilleVector v;
  v.dim = d;
  v.coords.resize(d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) v.coords[i * d + j] = m(i, j);
  return v;
}

LiouvilleVector vectorize(const DensityMatrix& rho) {
  return vectorize_operator(rho.matrix());
}

Matrix devectorize(const LiouvilleVector& v) {
  require(v.coords.size() == v.dim * v.dim,
          "devectorize: coordinate length is not dim^2");
  Matrix m(v.dim, v.dim);
  for (Eigen::Index i = 0; i < v.dim; ++i)
    for (Eigen::Index j = 0; j < v.dim; ++j) m(i, j) = v.coords[i * v.dim + j];
  return m;
}

Complex hs_inner(const LiouvilleVector& a, const LiouvilleVector& b) {
  require(a.dim == b.dim, "hs_inner: dimension mismatch");
  return a.coords.dot(b.coords);  // Eigen dot conjugates the first argument
}

Complex hs_inner(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "hs_inner: dimension mismatch");
  return (a.adjoint() * b).trace();
}

// --------------------------- eigendecomposition ------------------------------

void fix_phase(Eigen::Ref<Vector> v) {
  Eigen::Index imax = 0;
  double best = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    if (a > best + 1e-15) {
      best = a;
      imax = i;
    }
  }
  if (best > 0.0) v *= std::conj(v[imax]) / best;
}

EigenSystem eigendecompose(const HermitianOperator& op) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(op.matrix());
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigendecompose: solver failed");
  }
  EigenSystem es{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index n = 0; n < es.vectors.cols(); ++n)
    fix_phase(es.vectors.col(n));
  return es;
}

// --------------------------- eigenframe tracking -----------------------------

Matrix EigenFrame::vector_derivative(std::size_t k) const {
  const std::size_t last = times.size() - 1;
  if (times.size() < 2) throw std::invalid_argument("EigenFrame: need >= 2 points");
  if (k == 0) return (vectors[1] - vectors[0]) / (times[1] - times[0]);
  if (k == last)
    return (vectors[last] - vectors[last - 1]) / (times[last] - times[last - 1]);
  return (vectors[k + 1] - vectors[k - 1]) / (times[k + 1] - times[k - 1]);
}

EigenFrame track_eigenframe(const TimeDependentOperator& op,
                            const std::vector<double>& grid) {
  require(grid.size() >= 2, "track_eigenframe: grid needs >= 2 points");
  for (std::size_t k = 1; k < grid.size(); ++k)
    require(grid[k] > grid[k - 1], "track_eigenframe: grid must increase");

  EigenFrame frame;
  frame.times = grid;
  frame.values.reserve(grid.size());
  frame.vectors.reserve(grid.size());

  EigenSystem first = eigendecompose(op.at(grid[0]));
  // A degenerate first point has no previous frame to align to; borrow the
  // basis from the second grid point instead.
  const auto first_clusters = degenerate_clusters(first.values);
  if (first_clusters.size() < static_cast<std::size_t>(first.values.size())) {
    EigenSystem second = eigendecompose(op.at(grid[1]));
    for (const auto& [lo, hi] : first_clusters) {
      if (hi - lo < 2) continue;
      rebase_degenerate_block(second.vectors, first.vectors, lo, hi, grid[0]);
    }
    for (Eigen::Index n = 0; n < first.vectors.cols(); ++n)
      fix_phase(first.vectors.col(n));
  }
  frame.values.push_back(first.values);
  frame.vectors.push_back(first.vectors);

  const Eigen::Index d = op.dim;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double t = grid[k];
    EigenSystem cur = eigendecompose(op.at(t));
    const Matrix& prev = frame.vectors.back();
    const auto clusters = degenerate_clusters(cur.values);

    // Map previous label -> cluster by total overlap weight.
    Matrix overlap = prev.adjoint() * cur.vectors;
    std::vector<int> label_cluster(d, -1);
    std::vector<int> cluster_load(clusters.size(), 0);
    for (Eigen::Index n = 0; n < d; ++n) {
      double best = -1.0, second = -1.0;
      int best_c = -1;
      for (std::size_t c = 0; c < clusters.size(); ++c) {
        double w = 0.0;
        for (Eigen::Index j = clusters[c].first; j < clusters[c].second; ++j)
          w += std::norm(overlap(n, j));
        w = std::sqrt(w);
        if (w > best) {
          second = best;
          best = w;
          best_c = static_cast<int>(c);
        } else if (w > second) {
          second = w;
        }
      }
      if (best - second < kOverlapAmbiguityTol) {
        throw CrossingError(
            "track_eigenframe: ambiguous continuation at t = " +
                std::to_string(t),
            t);
      }
      label_cluster[n] = best_c;
      ++cluster_load[best_c];
    }
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      if (cluster_load[c] != clusters[c].second - clusters[c].first) {
        throw CrossingError(
            "track_eigenframe: eigenvalue crossing detected at t = " +
                std::to_string(t),
            t);
      }
    }

    // Build the relabeled frame: labels keep their previous order inside each
    // cluster; degenerate blocks are re-based against the previous frame.
    Matrix vecs(d, d);
    RealVector vals(d);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      const auto [lo, hi] = clusters[c];
      std::vector<Eigen::Index> labels;
      for (Eigen::Index n = 0; n < d; ++n)
        if (label_cluster[n] == static_cast<int>(c)) labels.push_back(n);
      if (hi - lo == 1) {
        vecs.col(labels[0]) = cur.vectors.col(lo);
        vals[labels[0]] = cur.values[lo];
      } else {
        Matrix block = cur.vectors.middleCols(lo, hi - lo);
        for (std::size_t i = 0; i < labels.size(); ++i) {
          Vector proj = block * (block.adjoint() * prev.col(labels[i]));
          for (std::size_t m = 0; m < i; ++m)
            proj -= vecs.col(labels[m]) * vecs.col(labels[m]).dot(proj);
          const double nrm = proj.norm();
          if (nrm < 0.2) {
            throw CrossingError(
                "track_eigenframe: degenerate-subspace continuation lost "
                "at t = " + std::to_string(t),
                t);
          }
          vecs.col(labels[i]) = proj / nrm;
          vals[labels[i]] = cur.values[lo + static_cast<Eigen::Index>(i)];
        }
      }
    }

    // Phase gauge: successive same-label overlaps real-positive.
    for (Eigen::Index n = 0; n < d; ++n) {
      const Complex ov = prev.col(n).dot(vecs.col(n));
      const double a = std::abs(ov);
      if (a > 1e-14) vecs.col(n) *= std::conj(ov) / a;
    }

    frame.values.push_back(std::move(vals));
    frame.vectors.push_back(std::move(vecs));
  }
  return frame;
}

// --------------------------- kicks and commutators ---------------------------

Matrix unitary_kick(const HermitianOperator& h1, double xi) {
  EigenSystem es = eigendecompose(h1);
  Vector phases(es.values.size());
  for (Eigen::Index n = 0; n < es.values.size(); ++n)
    phases[n] = std::exp(Complex(0.0, -xi * es.values[n]));
  return es.vectors * phases.asDiagonal() * es.vectors.adjoint();
}

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

Matrix nested_commutator(const Matrix& h1, const Matrix& rho, int s) {
  require(s >= 0, "nested_commutator: order must be >= 0");
  Matrix out = rho;
  for (int i = 0; i < s; ++i) out = commutator(h1, out);
  return out;
}

// --------------------------- small helpers -----------------------------------

std::vector<double> uniform_grid(double t0, double t1, std::size_t n_points) {
  require(n_points >= 2, "uniform_grid: need >= 2 points");
  require(t1 > t0, "uniform_grid: t1 must exceed t0");
  std::vector<double> grid(n_points);
  const double h = (t1 - t0) / static_cast<double>(n_points - 1);
  for (std::size_t k = 0; k < n_points; ++k)
    grid[k] = t0 + h * static_cast<double>(k);
  grid.back() = t1;
  return grid;
}

double hermiticity_error(const Matrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace poissonq::qcore
