#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sentinel/detector.hpp"
#include "sentinel/netsys.hpp"

namespace sentinel::sim {

inline constexpr double kDefaultThreshold = 0.95;
inline constexpr double kDivergenceLimit = 1e12;

enum class AttackPort { state, interconnection, measurement, reference };

std::string to_string(AttackPort p);
AttackPort parse_attack_port(std::string_view text);

/**
 * Step signal `value` added to one port of one subsystem on [onset, end).
 * A reference attack changes the reference seen by the plant only; the
 * detector keeps receiving the true reference.
 */
struct AttackChannel {
  std::size_t target = 0;
  AttackPort port = AttackPort::reference;
  Vector value;
  double onset = 0.0;
  double end = std::numeric_limits<double>::infinity();
};

/// Single-component reference fabrication of amplitude `amplitude`.
AttackChannel step_reference_attack(std::size_t target, Index component,
                                    Index reference_size, double amplitude,
                                    double onset);

struct ScheduledDisconnection {
  double time = 0.0;
  net::SubsystemSet removed;
};

/**
 * subsystem: the removed subsystems and their subobservers leave the active
 *            set, so their interconnection outputs become zero.
 * dg_only:   the removed subsystems lose their dynamics but keep their
 *            algebraic pass-through (used for feeders, where the line stays).
 */
enum class DisconnectMode { subsystem, dg_only };

std::string to_string(DisconnectMode m);
DisconnectMode parse_disconnect_mode(std::string_view text);

enum class NormalizationMode { divide, multiply };

struct Normalization {
  /// |a_ref| in rho = |eps| / (gamma |a_ref|), or the factor in multiply mode.
  double reference_amplitude = 1.0;
  NormalizationMode mode = NormalizationMode::divide;
  /// Reference component whose fabrication defines gamma.
  Index reference_component = 0;
  /// Per-subsystem gamma; computed from the DC gain when empty.
  std::vector<double> gamma;
};

/// Per-subsystem plant and observer states (observer: [xhat] or [xhat; chi]).
struct StateSnapshot {
  std::vector<Vector> plant;
  std::vector<Vector> observer;
};

struct Scenario {
  std::string name;
  net::InterconnectedNetwork plant;
  detect::Detector detector;
  /// Constant true reference per subsystem (zeros when empty).
  std::vector<Vector> references;
  std::vector<AttackChannel> attacks;
  std::vector<ScheduledDisconnection> disconnections;
  DisconnectMode disconnect_mode = DisconnectMode::subsystem;
  bool auto_disconnect = false;
  /// Steps between a detection and the resulting disconnection.
  int disconnect_latency = 1;
  double threshold = kDefaultThreshold;
  double horizon = 10.0;
  double step = 1e-3;
  Normalization normalization;
  /// Scale of the random initial estimation error (0 = matched observer).
  double initial_error_scale = 0.0;
  std::uint64_t seed = 0;
  /// Extra linear readouts of the plant recorded as columns.
  std::vector<net::Probe> probes;
  /// Record every k-th grid point (the last point is always recorded).
  int record_every = 1;
  /// Overrides the steady-state / matched-observer start when set. Entries
  /// of subsystems outside the starting topology are ignored.
  std::optional<StateSnapshot> initial_state;

  /// Throws InputError on inconsistent settings.
  void validate() const;
  std::size_t steps() const;
};

struct Event {
  double time = 0.0;
  enum class Kind { attack, detection, disconnection, divergence } kind;
  net::SubsystemSet subsystems;

  std::string label() const;
};

/**
 * Sampled trajectories. Columns are named, e.g. "x[2][1]", "eps[4][1]",
 * "rho[4]", with 1-based indices; values of disconnected subsystems are NaN.
 */
struct TraceLog {
  std::vector<std::string> columns;
  std::vector<double> time;
  /// Row-major samples, time.size() rows of columns.size() values.
  std::vector<double> values;
  std::vector<Event> events;
  std::map<std::string, std::string> metadata;
  std::vector<std::optional<double>> detection_time;
  std::vector<double> gamma;
  bool diverged = false;
  std::optional<double> divergence_time;
  /// States at the last integrated grid point (empty for removed subsystems).
  StateSnapshot final_state;

  std::size_t rows() const { return time.size(); }
  std::optional<std::size_t> column(std::string_view name) const;
  /// Values of one column; throws InputError for an unknown name.
  std::vector<double> series(std::string_view name) const;
  double at(std::size_t row, std::size_t col) const {
    return values[row * columns.size() + col];
  }
};

/**
 * gamma_i: size of the DC gain from a unit fabrication of reference
 * component `component` of subsystem i to its residual, full topology.
 * NaN when the channel has no DC gain (unstable or zero).
 */
std::vector<double> residual_gains(const net::InterconnectedNetwork& plant,
                                   const detect::Detector& detector,
                                   Index component);

/// rho = |eps| / (gamma |a_ref|) (divide) or |a_ref| |eps| / gamma (multiply).
std::vector<double> normalize_residual(const std::vector<double>& residual_norm,
                                       double gamma, const Normalization& n);

/// First time with value > threshold, if any.
std::optional<double> detect(const std::vector<double>& time,
                             const std::vector<double>& normalized,
                             double threshold);

/// Integrates plant and detector with fixed-step RK4 and timed events.
TraceLog simulate(const Scenario& scenario);

/// simulate() with auto_disconnect forced on.
TraceLog run_closed_loop(Scenario scenario);

}  // namespace sentinel::sim
