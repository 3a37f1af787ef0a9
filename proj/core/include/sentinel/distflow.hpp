#pragma once

#include <string>
#include <vector>

#include "sentinel/netsys.hpp"

namespace sentinel::feeder {

/**
 * Radial low-voltage feeder with one inverter-interfaced generator per
 * customer. Customer k hangs off main-line node k through a service drop.
 *
 * Quantities are per customer, indexed 0..N-1 in the API:
 *   r_line/x_line       main-line segment between node k-1 and node k [ohm]
 *   r_service/x_service service drop from node k to the customer [ohm]
 *   active_power        net active injection P_k (negative for a load) [W]
 *   reactive_load       reactive consumption q_c,k [var]
 *   time_constant       inverter lag tau_k [s]
 *   droop_gain          kappa_k [var/V^2]
 *   reference_voltage   droop setpoint vbar_k [V]
 */
struct FeederSpec {
  std::vector<double> r_line, x_line;
  std::vector<double> r_service, x_service;
  std::vector<double> active_power;
  std::vector<double> reactive_load;
  std::vector<double> time_constant;
  std::vector<double> droop_gain;
  std::vector<double> reference_voltage;
  double substation_voltage = 230.0;

  std::size_t size() const { return r_line.size(); }
  /// Throws InputError on length mismatch or out-of-range values.
  void validate() const;

  /// Copy restricted to the first `count` customers.
  FeederSpec truncated(std::size_t count) const;
};

/// Repo default: five identical customers around a 230 V setpoint.
FeederSpec default_feeder();

/// Uniform feeder with every per-customer value equal to the default's.
FeederSpec uniform_feeder(std::size_t customers);

/**
 * Layout of the subsystem ports produced by build_feeder.
 *   state      q_g,k
 *   v_k        (v'^2_{k-1}, P'_{k+1}, Q'_{k+1})
 *   w_k        (v'^2_k, P'_k, Q'_k)
 *   r_k        (vbar^2_k, P_k, q_c,k, external upstream v'^2)
 *   y_k        q_g,k
 * The external upstream channel carries v'^2_0 for the first customer and 0
 * for everybody else.
 */
namespace port {
inline constexpr Index kUpstreamVoltage = 0;
inline constexpr Index kLineActive = 1;
inline constexpr Index kLineReactive = 2;

inline constexpr Index kReferenceVoltage = 0;
inline constexpr Index kActivePower = 1;
inline constexpr Index kReactiveLoad = 2;
inline constexpr Index kExternalVoltage = 3;
}  // namespace port

struct Feeder {
  net::InterconnectedNetwork network;
  /// Constant reference vector per customer.
  std::vector<Vector> references;
  /// Customer voltage magnitude |v_k| per customer.
  std::vector<net::Probe> voltage_probes;
};

Feeder build_feeder(const FeederSpec& spec);

/// The nominal reference vector of customer k.
Vector reference_input(const FeederSpec& spec, std::size_t k);

/// LinDistFlow operating point. Squared voltages in V^2, powers in W / var.
struct PowerFlowState {
  std::vector<double> line_voltage_sq;      ///< v'^2_k (node k)
  std::vector<double> customer_voltage_sq;  ///< v^2_k
  std::vector<double> line_active;          ///< P'_k
  std::vector<double> line_reactive;        ///< Q'_k
  std::vector<double> injection_active;     ///< P_k
  std::vector<double> injection_reactive;   ///< q_g,k - q_c,k
  std::vector<double> generation;           ///< q_g,k
};

/// Power flow for given inverter outputs q_g (backward then forward sweep).
PowerFlowState power_flow(const FeederSpec& spec, const std::vector<double>& generation);

/// Equilibrium of the droop-controlled feeder. Throws NumericalError when the
/// equilibrium equations are singular.
PowerFlowState solve_steady_state(const FeederSpec& spec);

/// Largest violation of S'_k = S'_{k+1} - S_k over both components.
double telescoping_residual(const PowerFlowState& s);

}  // namespace sentinel::feeder
