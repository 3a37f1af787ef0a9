#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sentinel/lti.hpp"
#include "sentinel/netsys.hpp"

namespace sentinel::detect {

/**
 * Distributed observer families.
 *
 * All variants inject mu_i = H_i (yhat_i - y_i) into the subobserver state;
 * the local error matrix is therefore A_i + H_i C_i.
 *  - naive:       mu_i as above, nu_i = 0.
 *  - no_feedback: H_i = 0.
 *  - retrofit:    mu_i as above plus the rectifier state chi_i with
 *                 chi_i' = A_i chi_i + mu_i and nu_i = -W_i chi_i.
 */
enum class Variant { naive, no_feedback, retrofit };

std::string to_string(Variant v);
/// Accepts "naive", "nofb", "no-feedback", "retrofit".
Variant parse_variant(std::string_view text);

/// Scalar multiples of identity used as LQR-style design weights.
struct DesignWeights {
  double state = 1.0;
  double output = 1.0;
};

/// Thrown when a retrofit gain leaves A_i + H_i C_i non-Hurwitz.
class GainRejected : public Error {
 public:
  GainRejected(std::size_t subsystem, const std::string& what)
      : Error(what), subsystem_(subsystem) {}
  std::size_t subsystem() const { return subsystem_; }

 private:
  std::size_t subsystem_;
};

/// Per-subsystem observer gains tagged with the structure they drive.
class Detector {
 public:
  Detector() = default;

  Variant variant() const { return variant_; }
  const std::vector<Matrix>& gains() const { return gains_; }
  const Matrix& gain(std::size_t i) const { return gains_.at(i); }
  std::size_t size() const { return gains_.size(); }

 private:
  Detector(Variant v, std::vector<Matrix> gains)
      : variant_(v), gains_(std::move(gains)) {}

  friend Detector make_detector(Variant, const net::InterconnectedNetwork&,
                                std::vector<Matrix>);

  Variant variant_ = Variant::no_feedback;
  std::vector<Matrix> gains_;
};

/// Validates gain shapes (n_x,i x n_y,i); retrofit additionally requires
/// every A_i + H_i C_i Hurwitz. no_feedback ignores `gains` and stores zeros.
Detector make_detector(Variant variant, const net::InterconnectedNetwork& plant,
                       std::vector<Matrix> gains);

Detector build_naive_observer(const net::InterconnectedNetwork& plant,
                              std::vector<Matrix> gains);
Detector build_no_feedback_observer(const net::InterconnectedNetwork& plant);
Detector build_retrofit_detector(const net::InterconnectedNetwork& plant,
                                 std::vector<Matrix> gains);
/// Designs the gains with design_gains() first.
Detector build_retrofit_detector(const net::InterconnectedNetwork& plant,
                                 const DesignWeights& weights = {});

/// Local Riccati-based gain per subsystem. Throws GainRejected naming the
/// subsystem when a pair (A_i, C_i) is undetectable.
std::vector<Matrix> design_gains(const net::InterconnectedNetwork& plant,
                                 const DesignWeights& weights = {});

/**
 * Subobserver O_i written as a Subsystem so the observer network can be closed
 * with the plant's own machinery. State [xhat] or [xhat; chi], v = vhat,
 * w = what, y = yhat, reference input [r_i; y_i].
 */
net::Subsystem observer_subsystem(const net::Subsystem& plant, const Matrix& gain,
                                  Variant variant);

/// Observer network with the plant topology and active set.
net::InterconnectedNetwork observer_network(const net::InterconnectedNetwork& plant,
                                            const Detector& detector);

/**
 * Estimation error system: state e (or [e; chi]), interconnection input phi,
 * interconnection output omega, measurement psi = yhat - y; no reference.
 */
net::Subsystem error_dynamics(const net::Subsystem& plant, const Matrix& gain,
                              Variant variant);

net::InterconnectedNetwork error_network(const net::InterconnectedNetwork& plant,
                                         const Detector& detector);

/// Rectifier K_i: psi -> (mu, nu), realization (A, H, [0; -W], [H; 0]).
lti::StateSpace rectifier(const net::Subsystem& plant, const Matrix& gain);

/// Map (mu, nu) -> psi of the isolated error system: (A, [I 0], C, [0 0]).
lti::StateSpace injection_to_measurement(const net::Subsystem& plant);

/// Map (mu, nu) -> omega of the isolated error system: (A, [I 0], W, [0 I]).
lti::StateSpace injection_to_interconnection(const net::Subsystem& plant);

/// phi -> omega without any injection: W (sI - A)^{-1} L + Z.
lti::StateSpace interconnection_transfer(const net::Subsystem& plant);

/// Q_i = K_i (I - G_psi K_i)^{-1}.
lti::StateSpace youla_parameter(const net::Subsystem& plant, const Matrix& gain);

struct RetrofitCheck {
  /// All 2n+1 Markov parameters of G_omega * K vanish.
  bool identity_ok = false;
  /// Transfer of the Youla parameter is stable.
  bool q_stable = false;
  /// A_i itself Hurwitz (the isolated subsystem is stable).
  bool plant_block_stable = false;
  double markov_ratio = 0.0;
  /// Spectral abscissa of A_i + H_i C_i.
  double injected_abscissa = 0.0;
};

RetrofitCheck verify_retrofit_condition(const net::Subsystem& plant,
                                        const Matrix& gain);

/// Same test for an arbitrary controller psi -> (mu, nu).
RetrofitCheck verify_controller(const net::Subsystem& plant,
                                const lti::StateSpace& controller);

/**
 * Two scalar subsystems with skew coupling whose naive observer (gains placed
 * on the full error interconnection) is stable on the full topology but
 * unstable once subsystem 2 is removed.
 */
struct FailureWitness {
  net::InterconnectedNetwork plant;
  Detector naive;
  net::SubsystemSet removed;
};

FailureWitness make_failure_witness();

}  // namespace sentinel::detect
