#pragma once

#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "sentinel/error.hpp"

namespace sentinel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;
using Index = Eigen::Index;

namespace lti {

/// Default margin for Hurwitz tests: modes with real part in (-1e-7, 0)
/// are treated as marginal, not stable.
inline constexpr double kHurwitzMargin = 1e-7;

/// Relative tolerance used when asserting that Markov parameters vanish.
inline constexpr double kMarkovZeroTolerance = 1e-10;

/// Acceptance bound on the relative residual of an algebraic Riccati solve.
inline constexpr double kRiccatiResidualTolerance = 1e-8;

/**
 * Continuous-time LTI realization G(s) = C (sI - A)^{-1} B + D.
 *
 * Zero-sized blocks are legal: a pure gain has a 0x0 state matrix and a
 * signal-free port has zero rows or columns in the relevant blocks.
 */
struct StateSpace {
  Matrix a;
  Matrix b;
  Matrix c;
  Matrix d;

  StateSpace() = default;
  StateSpace(Matrix a_, Matrix b_, Matrix c_, Matrix d_);

  /// Static gain y = d u with empty state.
  static StateSpace gain(const Matrix& d);
  /// The zero map with the given port sizes and no state.
  static StateSpace zero(Index outputs, Index inputs);

  Index states() const { return a.rows(); }
  Index inputs() const { return d.cols(); }
  Index outputs() const { return d.rows(); }

  /// Throws DimensionError when the four blocks do not fit together,
  /// InputError when an entry is not finite.
  void validate() const;
};

/// Eigenvalues with multiplicity plus the largest real part among them.
struct Spectrum {
  std::vector<Complex> eigenvalues;
  double spectral_abscissa = -std::numeric_limits<double>::infinity();
};

/// Eigenvalues of a square matrix (balanced, then real Schur via QR).
Spectrum eigenvalues(const Matrix& a);

/// max Re(lambda); -inf for the empty matrix.
double spectral_abscissa(const Matrix& a);

/// True iff every eigenvalue has real part < -margin.
bool is_hurwitz(const Matrix& a, double margin = kHurwitzMargin);

/**
 * Stability of the transfer map rather than of the realization: every mode
 * with Re >= -margin must be uncontrollable or unobservable (PBH rank test).
 */
bool has_stable_transfer(const StateSpace& g, double margin = kHurwitzMargin);

/// G(0) = D - C A^{-1} B. Throws NumericalError when A is singular.
Matrix dc_gain(const StateSpace& g);

/// G(s) evaluated at a complex point outside the spectrum of A.
ComplexMatrix freq_response(const StateSpace& g, Complex s);

/// [D, CB, CAB, ..., C A^{count-2} B].
std::vector<Matrix> markov_parameters(const StateSpace& g, int count);

struct MarkovCheck {
  bool vanishes = true;
  double max_abs = 0.0;
  /// Largest |entry| / scale over the inspected parameters.
  double worst_ratio = 0.0;
};

/**
 * Checks that the first `count` Markov parameters are zero. Parameter k is
 * compared against tolerance * (1 + |C|)(1 + |A|)^(k-1)(1 + |B|), with |.|
 * the max-abs entry, i.e. a bound on how large the term could be if the
 * cancellation were not structural.
 */
MarkovCheck markov_parameters_vanish(const StateSpace& g, int count,
                                     double tolerance = kMarkovZeroTolerance);

/// Realization of g2 * g1 (g1 acts first); state is [x1; x2].
StateSpace series(const StateSpace& g2, const StateSpace& g1);

/// Block-diagonal stacking: inputs [u1; u2] -> outputs [y1; y2].
StateSpace append(const StateSpace& g1, const StateSpace& g2);

/**
 * Realization of K (I - G K)^{-1}, the Youla parameter of controller k for
 * plant g. The external input enters at the controller's input and the
 * output is the controller's output. State is [x_g; x_k].
 */
StateSpace close_output_feedback(const StateSpace& g, const StateSpace& k);

struct RiccatiSolution {
  Matrix x;
  /// ||A'X + XA - XGX + Q||_F relative to the size of its terms.
  double relative_residual = 0.0;
};

/**
 * Stabilizing solution of A'X + XA - X B R^{-1} B' X + Q = 0 using the stable
 * invariant subspace of the Hamiltonian matrix. Throws NumericalError when no
 * stabilizing solution exists or the residual exceeds the tolerance.
 */
RiccatiSolution solve_care(const Matrix& a, const Matrix& b, const Matrix& q,
                           const Matrix& r);

/// PBH test: every eigenvalue with Re >= -margin is observable through c.
bool is_detectable(const Matrix& a, const Matrix& c, double margin = 0.0);

/// Thrown by design_observer_gain for an undetectable pair.
class UndetectableError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/**
 * Observer gain H with A + H C Hurwitz from the filter Riccati equation
 * A P + P A' - P C' R^{-1} C P + Q = 0, H = -P C' R^{-1}.
 */
Matrix design_observer_gain(const Matrix& a, const Matrix& c,
                            const Matrix& state_weight,
                            const Matrix& output_weight);

/// Largest absolute entry, 0 for an empty matrix.
double max_abs(const Matrix& m);

}  // namespace lti
}  // namespace sentinel
