#include "sentinel/lti.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sentinel::lti {
namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw InputError(std::string(what) + " has non-finite entries");
  }
}

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw DimensionError(std::string(what) + " must be square, got " +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
  }
}

// Parlett-Reinsch diagonal balancing with radix 2 (exact in floating point).
// Returns a matrix similar to `a` with comparable row and column norms.
Matrix balance(const Matrix& a) {
  constexpr double kRadix = 2.0;
  constexpr double kRadixSq = kRadix * kRadix;
  Matrix m = a;
  const Index n = m.rows();
  bool done = false;
  for (int sweep = 0; sweep < 100 && !done; ++sweep) {
    done = true;
    for (Index i = 0; i < n; ++i) {
      double c = m.col(i).cwiseAbs().sum() - std::abs(m(i, i));
      double r = m.row(i).cwiseAbs().sum() - std::abs(m(i, i));
      if (c == 0.0 || r == 0.0) continue;
      const double s = c + r;
      double f = 1.0;
      double g = r / kRadix;
      while (c < g) {
        f *= kRadix;
        c *= kRadixSq;
      }
      g = r * kRadix;
      while (c > g) {
        f /= kRadix;
        c /= kRadixSq;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        m.row(i) /= f;
        m.col(i) *= f;
      }
    }
  }
  return m;
}

}  // namespace

StateSpace::StateSpace(Matrix a_, Matrix b_, Matrix c_, Matrix d_)
    : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)), d(std::move(d_)) {
  validate();
}

StateSpace StateSpace::gain(const Matrix& d) {
  return StateSpace(Matrix(0, 0), Matrix(0, d.cols()), Matrix(d.rows(), 0), d);
}

StateSpace StateSpace::zero(Index outputs, Index inputs) {
  return gain(Matrix::Zero(outputs, inputs));
}

void StateSpace::validate() const {
  require_square(a, "state matrix");
  const Index n = a.rows();
  if (b.rows() != n || c.cols() != n || d.rows() != c.rows() ||
      d.cols() != b.cols()) {
    throw DimensionError(
        "incompatible realization: A " + std::to_string(a.rows()) + "x" +
        std::to_string(a.cols()) + ", B " + std::to_string(b.rows()) + "x" +
        std::to_string(b.cols()) + ", C " + std::to_string(c.rows()) + "x" +
        std::to_string(c.cols()) + ", D " + std::to_string(d.rows()) + "x" +
        std::to_string(d.cols()));
  }
  require_finite(a, "A");
  require_finite(b, "B");
  require_finite(c, "C");
  require_finite(d, "D");
}

double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

Spectrum eigenvalues(const Matrix& a) {
  require_square(a, "eigenvalue input");
  require_finite(a, "eigenvalue input");
  Spectrum out;
  const Index n = a.rows();
  if (n == 0) return out;
  Eigen::EigenSolver<Matrix> solver(balance(a), /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("QR iteration did not converge for a " +
                         std::to_string(n) + "x" + std::to_string(n) +
                         " matrix");
  }
  const auto& values = solver.eigenvalues();
  out.eigenvalues.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    out.eigenvalues.push_back(values(i));
    out.spectral_abscissa = std::max(out.spectral_abscissa, values(i).real());
  }
  return out;
}

double spectral_abscissa(const Matrix& a) {
  return eigenvalues(a).spectral_abscissa;
}

bool is_hurwitz(const Matrix& a, double margin) {
  return spectral_abscissa(a) < -margin;
}

bool has_stable_transfer(const StateSpace& g, double margin) {
  g.validate();
  const Index n = g.states();
  if (n == 0) return true;
  const double scale =
      std::max(1.0, max_abs(g.a) + max_abs(g.b) + max_abs(g.c));
  auto rank_deficient = [&](const ComplexMatrix& m) {
    if (m.rows() == 0 || m.cols() == 0) return true;
    Eigen::JacobiSVD<ComplexMatrix> svd(m);
    const auto& sv = svd.singularValues();
    const Index need = std::min(m.rows(), m.cols());
    return sv.size() < need || sv(need - 1) <= 1e-9 * scale;
  };
  for (const Complex& lambda : eigenvalues(g.a).eigenvalues) {
    if (lambda.real() < -margin) continue;
    ComplexMatrix shifted = -g.a.cast<Complex>();
    shifted.diagonal().array() += lambda;
    ComplexMatrix ctrb(n, n + g.inputs());
    ctrb << shifted, g.b.cast<Complex>();
    ComplexMatrix obsv(n + g.outputs(), n);
    obsv << shifted, g.c.cast<Complex>();
    // A g.inputs() == 0 system has no controllable modes.
    const bool controllable = g.inputs() > 0 && !rank_deficient(ctrb);
    const bool observable = g.outputs() > 0 && !rank_deficient(obsv);
    if (controllable && observable) return false;
  }
  return true;
}

Matrix dc_gain(const StateSpace& g) {
  g.validate();
  if (g.states() == 0) return g.d;
  Eigen::PartialPivLU<Matrix> lu(g.a);
  if (!(lu.rcond() > 1e-14)) {
    throw NumericalError("state matrix is singular: pole at s = 0, DC gain undefined");
  }
  return g.d - g.c * lu.solve(g.b);
}

ComplexMatrix freq_response(const StateSpace& g, Complex s) {
  g.validate();
  const Index n = g.states();
  ComplexMatrix dc = g.d.cast<Complex>();
  if (n == 0) return dc;
  ComplexMatrix pencil = -g.a.cast<Complex>();
  pencil.diagonal().array() += s;
  Eigen::PartialPivLU<ComplexMatrix> lu(pencil);
  if (!(lu.rcond() > 1e-14)) {
    throw NumericalError("evaluation point lies in the spectrum of A");
  }
  return g.c.cast<Complex>() * lu.solve(g.b.cast<Complex>()) + dc;
}

std::vector<Matrix> markov_parameters(const StateSpace& g, int count) {
  g.validate();
  if (count < 1) throw InputError("markov_parameters: count must be >= 1");
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(count));
  out.push_back(g.d);
  Matrix ab = g.b;  // A^k B
  for (int k = 1; k < count; ++k) {
    out.push_back(g.c * ab);
    if (k + 1 < count) ab = g.a * ab;
  }
  return out;
}

MarkovCheck markov_parameters_vanish(const StateSpace& g, int count,
                                     double tolerance) {
  const auto params = markov_parameters(g, count);
  const double na = 1.0 + max_abs(g.a);
  const double nb = 1.0 + max_abs(g.b);
  const double nc = 1.0 + max_abs(g.c);
  MarkovCheck check;
  double scale = 1.0 + max_abs(g.d);
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (k == 1) {
      scale = nc * nb;
    } else if (k > 1) {
      scale *= na;
    }
    const double m = max_abs(params[k]);
    check.max_abs = std::max(check.max_abs, m);
    check.worst_ratio = std::max(check.worst_ratio, m / scale);
  }
  check.vanishes = check.worst_ratio <= tolerance;
  return check;
}

StateSpace series(const StateSpace& g2, const StateSpace& g1) {
  g1.validate();
  g2.validate();
  if (g1.outputs() != g2.inputs()) {
    throw DimensionError("series: g1 has " + std::to_string(g1.outputs()) +
                         " outputs but g2 takes " +
                         std::to_string(g2.inputs()) + " inputs");
  }
  const Index n1 = g1.states();
  const Index n2 = g2.states();
  Matrix a = Matrix::Zero(n1 + n2, n1 + n2);
  a.topLeftCorner(n1, n1) = g1.a;
  a.bottomLeftCorner(n2, n1) = g2.b * g1.c;
  a.bottomRightCorner(n2, n2) = g2.a;
  Matrix b(n1 + n2, g1.inputs());
  b.topRows(n1) = g1.b;
  b.bottomRows(n2) = g2.b * g1.d;
  Matrix c(g2.outputs(), n1 + n2);
  c.leftCols(n1) = g2.d * g1.c;
  c.rightCols(n2) = g2.c;
  return StateSpace(std::move(a), std::move(b), std::move(c), g2.d * g1.d);
}

StateSpace append(const StateSpace& g1, const StateSpace& g2) {
  g1.validate();
  g2.validate();
  const Index n1 = g1.states(), n2 = g2.states();
  const Index m1 = g1.inputs(), m2 = g2.inputs();
  const Index p1 = g1.outputs(), p2 = g2.outputs();
  Matrix a = Matrix::Zero(n1 + n2, n1 + n2);
  Matrix b = Matrix::Zero(n1 + n2, m1 + m2);
  Matrix c = Matrix::Zero(p1 + p2, n1 + n2);
  Matrix d = Matrix::Zero(p1 + p2, m1 + m2);
  a.topLeftCorner(n1, n1) = g1.a;
  a.bottomRightCorner(n2, n2) = g2.a;
  b.topLeftCorner(n1, m1) = g1.b;
  b.bottomRightCorner(n2, m2) = g2.b;
  c.topLeftCorner(p1, n1) = g1.c;
  c.bottomRightCorner(p2, n2) = g2.c;
  d.topLeftCorner(p1, m1) = g1.d;
  d.bottomRightCorner(p2, m2) = g2.d;
  return StateSpace(std::move(a), std::move(b), std::move(c), std::move(d));
}

StateSpace close_output_feedback(const StateSpace& g, const StateSpace& k) {
  g.validate();
  k.validate();
  if (k.inputs() != g.outputs() || k.outputs() != g.inputs()) {
    throw DimensionError("close_output_feedback: controller ports (" +
                         std::to_string(k.outputs()) + "x" +
                         std::to_string(k.inputs()) +
                         ") do not match plant ports (" +
                         std::to_string(g.outputs()) + "x" +
                         std::to_string(g.inputs()) + ")");
  }
  // Loop: controller input = e + y_g, plant input = controller output.
  const Index m = k.outputs();
  Matrix loop = Matrix::Identity(m, m) - k.d * g.d;
  Eigen::FullPivLU<Matrix> lu(loop);
  if (m > 0 && !lu.isInvertible()) {
    throw IllPosedError("close_output_feedback: I - D_k D_g is singular");
  }
  const Matrix f = m > 0 ? Matrix(lu.inverse()) : Matrix(0, 0);
  const Index ng = g.states(), nk = k.states();
  const Matrix fdk = f * k.d;         // m x p_g
  const Matrix fck = f * k.c;         // m x nk
  const Matrix fdkcg = fdk * g.c;     // m x ng

  Matrix a(ng + nk, ng + nk);
  a.topLeftCorner(ng, ng) = g.a + g.b * fdkcg;
  a.topRightCorner(ng, nk) = g.b * fck;
  a.bottomLeftCorner(nk, ng) = k.b * (g.c + g.d * fdkcg);
  a.bottomRightCorner(nk, nk) = k.a + k.b * g.d * fck;
  Matrix b(ng + nk, k.inputs());
  b.topRows(ng) = g.b * fdk;
  b.bottomRows(nk) = k.b + k.b * g.d * fdk;
  Matrix c(m, ng + nk);
  c.leftCols(ng) = fdkcg;
  c.rightCols(nk) = fck;
  return StateSpace(std::move(a), std::move(b), std::move(c), fdk);
}

bool is_detectable(const Matrix& a, const Matrix& c, double margin) {
  require_square(a, "detectability: A");
  if (c.cols() != a.rows()) {
    throw DimensionError("detectability: C has " + std::to_string(c.cols()) +
                         " columns, expected " + std::to_string(a.rows()));
  }
  const Index n = a.rows();
  if (n == 0) return true;
  const Spectrum spec = eigenvalues(a);
  const double scale = std::max(1.0, max_abs(a) + max_abs(c));
  for (const Complex& lambda : spec.eigenvalues) {
    if (lambda.real() < -margin) continue;
    ComplexMatrix pbh(n + c.rows(), n);
    pbh.topRows(n) = -a.cast<Complex>();
    pbh.topRows(n).diagonal().array() += lambda;
    pbh.bottomRows(c.rows()) = c.cast<Complex>();
    Eigen::JacobiSVD<ComplexMatrix> svd(pbh);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 1e-9 * scale) return false;
  }
  return true;
}

Matrix design_observer_gain(const Matrix& a, const Matrix& c,
                            const Matrix& state_weight,
                            const Matrix& output_weight) {
  require_square(a, "observer design: A");
  const Index n = a.rows();
  const Index p = c.rows();
  if (c.cols() != n || state_weight.rows() != n || state_weight.cols() != n ||
      output_weight.rows() != p || output_weight.cols() != p) {
    throw DimensionError("observer design: weight or output matrix sizes do not match A");
  }
  if (n == 0) return Matrix(0, p);
  if (!is_detectable(a, c)) {
    throw UndetectableError("pair (A, C) is not detectable");
  }
  const RiccatiSolution sol =
      solve_care(a.transpose(), c.transpose(), state_weight, output_weight);
  Eigen::LLT<Matrix> r_chol(output_weight);
  // H = -P C' R^{-1}  <=>  H' = -R^{-1} C P
  Matrix h = -(r_chol.solve(c * sol.x)).transpose();
  if (!is_hurwitz(a + h * c, 0.0)) {
    throw NumericalError("observer design: A + H C is not Hurwitz after synthesis");
  }
  return h;
}

}  // namespace sentinel::lti
