#include "sentinel/distflow.hpp"

#include <cmath>
#include <string>

namespace sentinel::feeder {
namespace {

void check_length(const std::vector<double>& v, std::size_t n, const char* name) {
  if (v.size() != n) {
    throw InputError(std::string("feeder: '") + name + "' has " +
                     std::to_string(v.size()) + " entries, expected " +
                     std::to_string(n));
  }
}

template <class Pred>
void check_values(const std::vector<double>& v, const char* name, Pred ok,
                  const char* requirement) {
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!std::isfinite(v[k]) || !ok(v[k])) {
      throw InputError(std::string("feeder: '") + name + "' of customer " +
                       std::to_string(k + 1) + " must be " + requirement);
    }
  }
}

}  // namespace

void FeederSpec::validate() const {
  const std::size_t n = size();
  if (n == 0) throw InputError("feeder: no customers");
  check_length(x_line, n, "x_line");
  check_length(r_service, n, "r_service");
  check_length(x_service, n, "x_service");
  check_length(active_power, n, "active_power");
  check_length(reactive_load, n, "reactive_load");
  check_length(time_constant, n, "time_constant");
  check_length(droop_gain, n, "droop_gain");
  check_length(reference_voltage, n, "reference_voltage");
  auto nonneg = [](double x) { return x >= 0.0; };
  auto positive = [](double x) { return x > 0.0; };
  auto any = [](double) { return true; };
  check_values(r_line, "r_line", nonneg, ">= 0");
  check_values(x_line, "x_line", nonneg, ">= 0");
  check_values(r_service, "r_service", nonneg, ">= 0");
  check_values(x_service, "x_service", nonneg, ">= 0");
  check_values(active_power, "active_power", any, "finite");
  check_values(reactive_load, "reactive_load", any, "finite");
  check_values(time_constant, "time_constant", positive, "> 0");
  check_values(droop_gain, "droop_gain", positive, "> 0");
  check_values(reference_voltage, "reference_voltage", positive, "> 0");
  if (!(substation_voltage > 0.0) || !std::isfinite(substation_voltage)) {
    throw InputError("feeder: substation_voltage must be > 0");
  }
}

FeederSpec FeederSpec::truncated(std::size_t count) const {
  if (count == 0 || count > size()) {
    throw InputError("feeder: cannot truncate to " + std::to_string(count) +
                     " customers");
  }
  auto cut = [count](const std::vector<double>& v) {
    return std::vector<double>(v.begin(), v.begin() + static_cast<long>(count));
  };
  FeederSpec out;
  out.r_line = cut(r_line);
  out.x_line = cut(x_line);
  out.r_service = cut(r_service);
  out.x_service = cut(x_service);
  out.active_power = cut(active_power);
  out.reactive_load = cut(reactive_load);
  out.time_constant = cut(time_constant);
  out.droop_gain = cut(droop_gain);
  out.reference_voltage = cut(reference_voltage);
  out.substation_voltage = substation_voltage;
  return out;
}

FeederSpec uniform_feeder(std::size_t n) {
  FeederSpec s;
  s.r_line.assign(n, 0.01);
  s.x_line.assign(n, 0.005);
  s.r_service.assign(n, 0.02);
  s.x_service.assign(n, 0.01);
  s.active_power.assign(n, -2000.0);
  s.reactive_load.assign(n, 500.0);
  s.time_constant.assign(n, 0.5);
  s.droop_gain.assign(n, 0.5);
  s.reference_voltage.assign(n, 230.0);
  s.substation_voltage = 230.0;
  return s;
}

FeederSpec default_feeder() { return uniform_feeder(5); }

Vector reference_input(const FeederSpec& spec, std::size_t k) {
  Vector r(4);
  r << spec.reference_voltage.at(k) * spec.reference_voltage.at(k),
      spec.active_power.at(k), spec.reactive_load.at(k),
      k == 0 ? spec.substation_voltage * spec.substation_voltage : 0.0;
  return r;
}

Feeder build_feeder(const FeederSpec& spec) {
  spec.validate();
  const std::size_t n = spec.size();

  std::vector<net::Subsystem> subs;
  std::vector<net::Probe> probes;
  std::vector<Vector> refs;
  for (std::size_t k = 0; k < n; ++k) {
    const double rl = spec.r_line[k], xl = spec.x_line[k];
    const double rs = spec.r_service[k], xs = spec.x_service[k];
    const double gain = spec.droop_gain[k] / spec.time_constant[k];

    // v'^2_k = v'^2_{k-1} - 2 R'_k P'_k - 2 X'_k Q'_k with
    // P'_k = P'_{k+1} - P_k and Q'_k = Q'_{k+1} - q_g + q_c.
    net::Subsystem s = net::Subsystem::zeros("customer " + std::to_string(k + 1),
                                             {1, 3, 3, 4, 1});
    s.w << 2.0 * xl, 0.0, -1.0;
    s.z << 1.0, -2.0 * rl, -2.0 * xl,
           0.0, 1.0, 0.0,
           0.0, 0.0, 1.0;
    s.u << 0.0, 2.0 * rl, -2.0 * xl, 1.0,
           0.0, -1.0, 0.0, 0.0,
           0.0, 0.0, 1.0, 0.0;

    // v^2_k = v'^2_k + 2 (R_k P_k + X_k (q_g - q_c)), expressed in x, v, r.
    net::Probe p;
    p.name = "voltage[" + std::to_string(k + 1) + "]";
    p.subsystem = k;
    p.cx = Matrix::Constant(1, 1, 2.0 * (xl + xs));
    p.ev = s.z.topRows(1);
    p.dr = s.u.topRows(1);
    p.dr(0, port::kActivePower) += 2.0 * rs;
    p.dr(0, port::kReactiveLoad) -= 2.0 * xs;
    p.square_root = true;

    // tau q' = -q + kappa (vbar^2 - v^2)
    s.a(0, 0) = -1.0 / spec.time_constant[k] - gain * p.cx(0, 0);
    s.l = -gain * p.ev;
    s.b = -gain * p.dr;
    s.b(0, port::kReferenceVoltage) += gain;
    s.c(0, 0) = 1.0;

    subs.push_back(std::move(s));
    probes.push_back(std::move(p));
    refs.push_back(reference_input(spec, k));
  }

  net::Topology topo(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) {
      Matrix up = Matrix::Zero(3, 3);
      up(port::kUpstreamVoltage, 0) = 1.0;
      topo.connect(k, k - 1, up);
    }
    if (k + 1 < n) {
      Matrix down = Matrix::Zero(3, 3);
      down(port::kLineActive, 1) = 1.0;
      down(port::kLineReactive, 2) = 1.0;
      topo.connect(k, k + 1, down);
    }
  }
  return {net::InterconnectedNetwork(std::move(subs), std::move(topo)),
          std::move(refs), std::move(probes)};
}

PowerFlowState power_flow(const FeederSpec& spec, const std::vector<double>& q) {
  spec.validate();
  const std::size_t n = spec.size();
  if (q.size() != n) throw DimensionError("power_flow: generation vector size");
  PowerFlowState s;
  s.generation = q;
  s.injection_active = spec.active_power;
  s.injection_reactive.resize(n);
  for (std::size_t k = 0; k < n; ++k) s.injection_reactive[k] = q[k] - spec.reactive_load[k];

  s.line_active.assign(n, 0.0);
  s.line_reactive.assign(n, 0.0);
  double p_down = 0.0, q_down = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    s.line_active[k] = p_down - s.injection_active[k];
    s.line_reactive[k] = q_down - s.injection_reactive[k];
    p_down = s.line_active[k];
    q_down = s.line_reactive[k];
  }

  s.line_voltage_sq.resize(n);
  s.customer_voltage_sq.resize(n);
  double up = spec.substation_voltage * spec.substation_voltage;
  for (std::size_t k = 0; k < n; ++k) {
    const double node =
        up - 2.0 * (spec.r_line[k] * s.line_active[k] + spec.x_line[k] * s.line_reactive[k]);
    s.line_voltage_sq[k] = node;
    s.customer_voltage_sq[k] =
        node + 2.0 * (spec.r_service[k] * s.injection_active[k] +
                      spec.x_service[k] * s.injection_reactive[k]);
    up = node;
  }
  return s;
}

PowerFlowState solve_steady_state(const FeederSpec& spec) {
  // v^2 is affine in q: v^2 = v0 + S q. Solve (I/kappa + S) q = vbar^2 - v0
  // row by row after dividing the droop law by kappa.
  const std::size_t n = spec.size();
  const PowerFlowState base = power_flow(spec, std::vector<double>(n, 0.0));
  Matrix sens(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> unit(n, 0.0);
    unit[j] = 1.0;
    const PowerFlowState probe = power_flow(spec, unit);
    for (std::size_t i = 0; i < n; ++i) {
      sens(static_cast<Index>(i), static_cast<Index>(j)) =
          probe.customer_voltage_sq[i] - base.customer_voltage_sq[i];
    }
  }
  Matrix lhs = sens;
  Vector rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Index>(i);
    lhs(ii, ii) += 1.0 / spec.droop_gain[i];
    rhs(ii) = spec.reference_voltage[i] * spec.reference_voltage[i] -
              base.customer_voltage_sq[i];
  }
  Eigen::PartialPivLU<Matrix> lu(lhs);
  if (!(std::abs(lu.determinant()) > 0.0) ||
      lu.rcond() < 1e-14) {
    throw NumericalError("feeder equilibrium equations are singular");
  }
  const Vector q = lu.solve(rhs);
  return power_flow(spec, std::vector<double>(q.data(), q.data() + n));
}

double telescoping_residual(const PowerFlowState& s) {
  const std::size_t n = s.line_active.size();
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double pd = k + 1 < n ? s.line_active[k + 1] : 0.0;
    const double qd = k + 1 < n ? s.line_reactive[k + 1] : 0.0;
    worst = std::max(worst, std::abs(s.line_active[k] - (pd - s.injection_active[k])));
    worst = std::max(worst, std::abs(s.line_reactive[k] - (qd - s.injection_reactive[k])));
  }
  return worst;
}

}  // namespace sentinel::feeder
