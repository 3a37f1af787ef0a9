#include <cmath>
#include <string>

#include "sentinel/lti.hpp"

namespace sentinel::lti {
namespace {

double care_residual(const Matrix& a, const Matrix& g, const Matrix& q,
                     const Matrix& x) {
  const Matrix atx = a.transpose() * x;
  const Matrix xa = x * a;
  const Matrix xgx = x * g * x;
  const double res = (atx + xa - xgx + q).norm();
  const double size = atx.norm() + xa.norm() + xgx.norm() + q.norm();
  return size > 0.0 ? res / size : res;
}

// Solves F' X + X F = -S by vectorization (small n only).
Matrix solve_lyapunov(const Matrix& f, const Matrix& s) {
  const Index n = f.rows();
  const Matrix eye = Matrix::Identity(n, n);
  Matrix kron = Matrix::Zero(n * n, n * n);
  // vec(F' X) = (I kron F') vec(X); vec(X F) = (F' kron I) vec(X)
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      kron.block(i * n, j * n, n, n) += eye(i, j) * f.transpose();
      kron.block(i * n, j * n, n, n) += f(j, i) * eye;
    }
  }
  const Vector rhs = -Eigen::Map<const Vector>(s.data(), n * n);
  const Vector vx = kron.partialPivLu().solve(rhs);
  Matrix x = Eigen::Map<const Matrix>(vx.data(), n, n);
  return 0.5 * (x + x.transpose());
}

}  // namespace

RiccatiSolution solve_care(const Matrix& a, const Matrix& b, const Matrix& q,
                           const Matrix& r) {
  const Index n = a.rows();
  const Index m = b.cols();
  if (a.cols() != n || b.rows() != n || q.rows() != n || q.cols() != n ||
      r.rows() != m || r.cols() != m) {
    throw DimensionError("solve_care: inconsistent matrix sizes");
  }
  if (!a.allFinite() || !b.allFinite() || !q.allFinite() || !r.allFinite()) {
    throw InputError("solve_care: non-finite data");
  }
  if (max_abs(q - q.transpose()) > 1e-10 * (1.0 + max_abs(q))) {
    throw InputError("solve_care: Q must be symmetric");
  }
  Eigen::LLT<Matrix> r_chol(r);
  if (m > 0 && r_chol.info() != Eigen::Success) {
    throw InputError("solve_care: R must be positive definite");
  }
  RiccatiSolution out;
  if (n == 0) {
    out.x = Matrix(0, 0);
    return out;
  }
  const Matrix g = m > 0 ? Matrix(b * r_chol.solve(b.transpose()))
                         : Matrix(Matrix::Zero(n, n));

  Matrix ham(2 * n, 2 * n);
  ham << a, -g, -q, -a.transpose();

  // Matrix sign function with determinant scaling; the stable invariant
  // subspace of the Hamiltonian is the null space of sign(H) + I.
  Matrix z = ham;
  const double dim = static_cast<double>(2 * n);
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    Eigen::PartialPivLU<Matrix> lu(z);
    if (!(lu.rcond() > 1e-14)) {
      throw NumericalError(
          "solve_care: Hamiltonian has eigenvalues on the imaginary axis "
          "(no stabilizing solution)");
    }
    const Matrix& packed = lu.matrixLU();
    double log_det = 0.0;
    for (Index i = 0; i < packed.rows(); ++i) {
      log_det += std::log(std::abs(packed(i, i)));
    }
    const double scale = std::exp(-log_det / dim);
    const Matrix next = 0.5 * (scale * z + lu.inverse() / scale);
    const double change = (next - z).lpNorm<1>();
    z = next;
    if (change <= 1e-13 * z.lpNorm<1>()) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NumericalError("solve_care: sign iteration did not converge");
  }

  const Matrix eye = Matrix::Identity(n, n);
  Matrix lhs(2 * n, n);
  Matrix rhs(2 * n, n);
  lhs << z.topRightCorner(n, n), z.bottomRightCorner(n, n) + eye;
  rhs << z.topLeftCorner(n, n) + eye, z.bottomLeftCorner(n, n);
  Matrix x = lhs.colPivHouseholderQr().solve(-rhs);
  x = 0.5 * (x + x.transpose());
  double residual = care_residual(a, g, q, x);

  // Kleinman-Newton polish; keeps the iterate only while it improves.
  constexpr Index kMaxPolishDim = 40;
  for (int step = 0; step < 4 && residual > 1e-14 && n <= kMaxPolishDim; ++step) {
    const Matrix closed = a - g * x;
    if (!is_hurwitz(closed, 0.0)) break;
    const Matrix candidate = solve_lyapunov(closed, q + x * g * x);
    const double cand_res = care_residual(a, g, q, candidate);
    if (!(cand_res < residual)) break;
    x = candidate;
    residual = cand_res;
  }

  if (!(residual <= kRiccatiResidualTolerance)) {
    throw NumericalError("solve_care: relative residual " +
                         std::to_string(residual) + " above tolerance");
  }
  if (!is_hurwitz(a - g * x, 0.0)) {
    throw NumericalError("solve_care: solution is not stabilizing");
  }
  out.x = std::move(x);
  out.relative_residual = residual;
  return out;
}

}  // namespace sentinel::lti
