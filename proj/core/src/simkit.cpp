#include "sentinel/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace sentinel::sim {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string idx(std::size_t i) { return "[" + std::to_string(i + 1) + "]"; }

// Which subsystems are still connected and which kept only their algebra.
struct Layout {
  net::SubsystemSet connected;
  net::SubsystemSet stripped;
};

/**
 * Plant and observer closed for one topology epoch and stacked into
 *   z = [x_plant; x_observer],  u = [plant inputs | true references]
 * where the plant inputs are [r + fabrication | a_x | a_w | a_y].
 */
struct Epoch {
  net::ClosedNetwork plant;
  net::ClosedNetwork observer;
  Matrix a, b;
  Matrix phi, gamma;  // one RK4 step with the input held
  Matrix cy, dy, cw, dw, ce, de;
  Index nxp = 0, nup = 0, nrt = 0;

  Index states() const { return a.rows(); }
};

net::InterconnectedNetwork apply_layout(const net::InterconnectedNetwork& base,
                                        const Layout& layout, DisconnectMode mode) {
  if (mode == DisconnectMode::subsystem) {
    return net::InterconnectedNetwork(base.subsystems(), base.topology(),
                                      layout.connected);
  }
  return net::strip_dynamics(base, layout.stripped);
}

Epoch build_epoch(const net::InterconnectedNetwork& plant_net,
                  const net::InterconnectedNetwork& obs_net, double h) {
  Epoch ep;
  ep.plant = net::close_interconnection(plant_net);
  net::CloseOptions no_attacks;
  no_attacks.attack_ports = false;
  ep.observer = net::close_interconnection(obs_net, no_attacks);

  const auto& p = ep.plant.system;
  const auto& o = ep.observer.system;
  const Index nxp = p.states(), nxo = o.states();
  const Index nup = p.inputs();
  Index nyp = 0;
  for (std::size_t i : ep.plant.members) nyp += ep.plant.measurement[i].size;
  const Index nwp = p.outputs() - nyp;
  Index nrt = 0;
  for (std::size_t i : ep.plant.members) nrt += ep.plant.reference[i].size;
  ep.nxp = nxp;
  ep.nup = nup;
  ep.nrt = nrt;

  // Observer input [r_i; y_i] per member, assembled from true r and plant y.
  Matrix sr = Matrix::Zero(o.inputs(), nrt);
  Matrix sy = Matrix::Zero(o.inputs(), nyp);
  for (std::size_t i : ep.observer.members) {
    const net::Block ob = ep.observer.reference[i];
    const net::Block rb = ep.plant.reference[i];
    const net::Block yb = ep.plant.measurement[i];
    sr.block(ob.offset, rb.offset, rb.size, rb.size).setIdentity();
    sy.block(ob.offset + rb.size, yb.offset, yb.size, yb.size).setIdentity();
  }

  const Matrix cpy = p.c.topRows(nyp), dpy = p.d.topRows(nyp);
  const Matrix cpw = p.c.bottomRows(nwp), dpw = p.d.bottomRows(nwp);
  const Matrix coy = o.c.topRows(nyp), doy = o.d.topRows(nyp);
  const Matrix bsy = o.b * sy;

  const Index nz = nxp + nxo, nu = nup + nrt;
  ep.a = Matrix::Zero(nz, nz);
  ep.b = Matrix::Zero(nz, nu);
  ep.a.topLeftCorner(nxp, nxp) = p.a;
  ep.a.bottomLeftCorner(nxo, nxp) = bsy * cpy;
  ep.a.bottomRightCorner(nxo, nxo) = o.a;
  ep.b.topLeftCorner(nxp, nup) = p.b;
  ep.b.bottomLeftCorner(nxo, nup) = bsy * dpy;
  ep.b.bottomRightCorner(nxo, nrt) = o.b * sr;

  ep.cy = Matrix::Zero(nyp, nz);
  ep.cy.leftCols(nxp) = cpy;
  ep.dy = Matrix::Zero(nyp, nu);
  ep.dy.leftCols(nup) = dpy;
  ep.cw = Matrix::Zero(nwp, nz);
  ep.cw.leftCols(nxp) = cpw;
  ep.dw = Matrix::Zero(nwp, nu);
  ep.dw.leftCols(nup) = dpw;

  // yhat = coy xo + doy (sr r + sy (cpy xp + dpy up))
  Matrix cyh = Matrix::Zero(nyp, nz);
  cyh.leftCols(nxp) = doy * sy * cpy;
  cyh.rightCols(nxo) = coy;
  Matrix dyh = Matrix::Zero(nyp, nu);
  dyh.leftCols(nup) = doy * sy * dpy;
  dyh.rightCols(nrt) = doy * sr;
  ep.ce = ep.cy - cyh;
  ep.de = ep.dy - dyh;

  // Classical RK4 applied to z' = A z + B u with u constant over the step is
  // exactly z+ = T4(hA) z + h S4(hA) B u with the truncated series below.
  const Matrix ha = h * ep.a;
  const Matrix id = Matrix::Identity(nz, nz);
  const Matrix s4 = id + ha * (id / 2.0 + ha * (id / 6.0 + ha / 24.0));
  ep.phi = id + ha * s4;
  ep.gamma = h * s4 * ep.b;
  return ep;
}

// Offset of subsystem i's observer block inside z.
Index observer_offset(const Epoch& ep, std::size_t i) {
  return ep.nxp + ep.observer.state[i].offset;
}

Vector zeros_or(const std::vector<Vector>& v, std::size_t i, Index size) {
  if (i < v.size() && v[i].size() == size) return v[i];
  return Vector::Zero(size);
}

struct Schedule {
  std::size_t start = 0, stop = 0;
};

std::size_t grid_index(double t, double h) {
  if (!(t > 0.0)) return 0;
  if (std::isinf(t)) return std::numeric_limits<std::size_t>::max();
  return static_cast<std::size_t>(std::llround(t / h));
}

}  // namespace

// --------------------------------------------------------------- strings

std::string to_string(AttackPort p) {
  switch (p) {
    case AttackPort::state:
      return "state";
    case AttackPort::interconnection:
      return "interconnection";
    case AttackPort::measurement:
      return "measurement";
    case AttackPort::reference:
      return "reference";
  }
  return "unknown";
}

AttackPort parse_attack_port(std::string_view text) {
  if (text == "state") return AttackPort::state;
  if (text == "interconnection") return AttackPort::interconnection;
  if (text == "measurement") return AttackPort::measurement;
  if (text == "reference") return AttackPort::reference;
  throw InputError("unknown attack port '" + std::string(text) + "'");
}

std::string to_string(DisconnectMode m) {
  return m == DisconnectMode::subsystem ? "subsystem" : "dg-only";
}

DisconnectMode parse_disconnect_mode(std::string_view text) {
  if (text == "subsystem") return DisconnectMode::subsystem;
  if (text == "dg-only" || text == "dg_only") return DisconnectMode::dg_only;
  throw InputError("unknown disconnect mode '" + std::string(text) + "'");
}

AttackChannel step_reference_attack(std::size_t target, Index component,
                                    Index reference_size, double amplitude,
                                    double onset) {
  if (component < 0 || component >= reference_size) {
    throw InputError("reference attack: component out of range");
  }
  AttackChannel a;
  a.target = target;
  a.port = AttackPort::reference;
  a.value = Vector::Zero(reference_size);
  a.value(component) = amplitude;
  a.onset = onset;
  return a;
}

std::string Event::label() const {
  // Members separated by spaces so the label can sit in a CSV cell.
  std::string set = subsystems.to_string();
  std::replace(set.begin(), set.end(), ',', ' ');
  switch (kind) {
    case Kind::attack:
      return "attack" + set;
    case Kind::detection:
      return "detect" + set;
    case Kind::disconnection:
      return "disconnect" + set;
    case Kind::divergence:
      return "diverge";
  }
  return "";
}

// --------------------------------------------------------------- scenario

void Scenario::validate() const {
  const std::size_t n = plant.size();
  if (!(step > 0.0) || !std::isfinite(step)) throw InputError("scenario: step must be > 0");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw InputError("scenario: horizon must be > 0");
  }
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw InputError("scenario: threshold must lie in (0, 1]");
  }
  if (record_every < 1) throw InputError("scenario: record_every must be >= 1");
  if (disconnect_latency < 0) throw InputError("scenario: latency must be >= 0");
  if (!(initial_error_scale >= 0.0)) {
    throw InputError("scenario: initial_error_scale must be >= 0");
  }
  if (detector.size() != n) {
    throw InputError("scenario: detector covers " + std::to_string(detector.size()) +
                     " subsystems, network has " + std::to_string(n));
  }
  if (!references.empty() && references.size() != n) {
    throw InputError("scenario: one reference vector per subsystem expected");
  }
  for (std::size_t i = 0; i < references.size(); ++i) {
    if (references[i].size() != plant.subsystem(i).dims().nr) {
      throw DimensionError("scenario: reference of subsystem " + std::to_string(i + 1) +
                           " has wrong length");
    }
  }
  auto on_grid = [&](double t, const char* what) {
    const double k = t / step;
    if (std::abs(k - std::round(k)) > 1e-6) {
      throw InputError(std::string("scenario: ") + what + " time " + std::to_string(t) +
                       " is not on the time grid");
    }
  };
  for (const auto& a : attacks) {
    if (a.target >= n) throw InputError("scenario: attack target out of range");
    const auto d = plant.subsystem(a.target).dims();
    Index want = 0;
    switch (a.port) {
      case AttackPort::state:
        want = d.nx;
        break;
      case AttackPort::interconnection:
        want = d.nw;
        break;
      case AttackPort::measurement:
        want = d.ny;
        break;
      case AttackPort::reference:
        want = d.nr;
        break;
    }
    if (a.value.size() != want) {
      throw DimensionError("scenario: attack on subsystem " + std::to_string(a.target + 1) +
                           " port " + to_string(a.port) + " needs " +
                           std::to_string(want) + " entries");
    }
    if (!(a.onset >= 0.0)) throw InputError("scenario: attack onset must be >= 0");
    on_grid(a.onset, "attack onset");
    if (std::isfinite(a.end)) on_grid(a.end, "attack end");
  }
  for (const auto& d : disconnections) {
    if (!d.removed.is_subset_of(net::SubsystemSet::all(n))) {
      throw InputError("scenario: disconnection names subsystems outside the network");
    }
    if (!(d.time >= 0.0)) throw InputError("scenario: disconnection time must be >= 0");
    on_grid(d.time, "disconnection");
  }
  for (const auto& p : probes) {
    if (p.subsystem >= n) throw InputError("scenario: probe subsystem out of range");
    const auto d = plant.subsystem(p.subsystem).dims();
    if (p.cx.rows() != 1 || p.ev.rows() != 1 || p.dr.rows() != 1 ||
        p.cx.cols() != d.nx || p.ev.cols() != d.nv || p.dr.cols() != d.nr) {
      throw DimensionError("scenario: probe '" + p.name + "' does not fit subsystem " +
                           std::to_string(p.subsystem + 1));
    }
  }
  if (!normalization.gamma.empty() && normalization.gamma.size() != n) {
    throw InputError("scenario: one gamma per subsystem expected");
  }
  if (!(normalization.reference_amplitude > 0.0)) {
    throw InputError("scenario: normalization reference amplitude must be > 0");
  }
}

std::size_t Scenario::steps() const {
  return static_cast<std::size_t>(std::llround(horizon / step));
}

// --------------------------------------------------------------- trace

std::optional<std::size_t> TraceLog::column(std::string_view name) const {
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] == name) return c;
  }
  return std::nullopt;
}

std::vector<double> TraceLog::series(std::string_view name) const {
  const auto c = column(name);
  if (!c) throw InputError("trace has no column '" + std::string(name) + "'");
  std::vector<double> out(rows());
  for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, *c);
  return out;
}

// --------------------------------------------------------------- residuals

std::vector<double> residual_gains(const net::InterconnectedNetwork& plant,
                                   const detect::Detector& detector,
                                   Index component) {
  const auto obs = detect::observer_network(plant, detector);
  const Epoch ep = build_epoch(plant, obs, 1.0);
  std::vector<double> out(plant.size(), kNaN);
  for (std::size_t i : ep.plant.members) {
    const net::Block rb = ep.plant.reference[i];
    const net::Block yb = ep.plant.measurement[i];
    if (component >= rb.size || yb.size == 0) continue;
    const lti::StateSpace channel(ep.a, ep.b.col(rb.offset + component),
                                  ep.ce.middleRows(yb.offset, yb.size),
                                  ep.de.block(yb.offset, rb.offset + component, yb.size, 1));
    try {
      if (!lti::is_hurwitz(channel.a, 0.0)) continue;
      const double g = lti::dc_gain(channel).norm();
      if (g > 0.0 && std::isfinite(g)) out[i] = g;
    } catch (const NumericalError&) {
    }
  }
  return out;
}

std::vector<double> normalize_residual(const std::vector<double>& residual_norm,
                                       double gamma, const Normalization& n) {
  std::vector<double> out(residual_norm.size(), kNaN);
  if (!(gamma > 0.0) || !std::isfinite(gamma)) return out;
  const double amp = std::abs(n.reference_amplitude);
  for (std::size_t k = 0; k < residual_norm.size(); ++k) {
    const double e = std::abs(residual_norm[k]);
    out[k] = n.mode == NormalizationMode::divide ? e / (gamma * amp) : amp * e / gamma;
  }
  return out;
}

std::optional<double> detect(const std::vector<double>& time,
                             const std::vector<double>& normalized,
                             double threshold) {
  if (!(threshold > 0.0)) throw InputError("detect: threshold must be > 0");
  if (time.size() != normalized.size()) {
    throw DimensionError("detect: time and series lengths differ");
  }
  for (std::size_t k = 0; k < time.size(); ++k) {
    if (normalized[k] > threshold) return time[k];
  }
  return std::nullopt;
}

// --------------------------------------------------------------- simulate

TraceLog simulate(const Scenario& sc) {
  sc.validate();
  const std::size_t n = sc.plant.size();
  const double h = sc.step;
  const std::size_t steps = sc.steps();

  const auto obs_base = detect::observer_network(sc.plant, sc.detector);
  std::vector<Vector> refs(n);
  for (std::size_t i = 0; i < n; ++i) {
    refs[i] = zeros_or(sc.references, i, sc.plant.subsystem(i).dims().nr);
  }

  TraceLog log;
  log.metadata["scenario"] = sc.name.empty() ? "unnamed" : sc.name;
  log.metadata["variant"] = detect::to_string(sc.detector.variant());
  log.metadata["threshold"] = std::to_string(sc.threshold);
  log.metadata["step"] = std::to_string(h);
  log.metadata["horizon"] = std::to_string(sc.horizon);
  log.metadata["disconnect_mode"] = to_string(sc.disconnect_mode);
  log.metadata["seed"] = std::to_string(sc.seed);
  log.detection_time.assign(n, std::nullopt);

  // gamma from the full starting topology.
  log.gamma = sc.normalization.gamma;
  if (log.gamma.empty()) {
    log.gamma = residual_gains(sc.plant, sc.detector,
                               sc.normalization.reference_component);
  }

  // Column layout on the original dimensions.
  struct Cols {
    std::size_t x, w, y, yhat, eps, rho, probe;
  };
  std::vector<Cols> cols(n);
  {
    auto add = [&](const std::string& base, std::size_t i, Index count) {
      const std::size_t first = log.columns.size();
      for (Index j = 0; j < count; ++j) {
        log.columns.push_back(base + idx(i) + "[" + std::to_string(j + 1) + "]");
      }
      return first;
    };
    for (std::size_t i = 0; i < n; ++i) cols[i].x = add("x", i, sc.plant.subsystem(i).dims().nx);
    for (std::size_t i = 0; i < n; ++i) cols[i].w = add("w", i, sc.plant.subsystem(i).dims().nw);
    for (std::size_t i = 0; i < n; ++i) cols[i].y = add("y", i, sc.plant.subsystem(i).dims().ny);
    for (std::size_t i = 0; i < n; ++i) {
      cols[i].yhat = add("yhat", i, sc.plant.subsystem(i).dims().ny);
    }
    for (std::size_t i = 0; i < n; ++i) {
      cols[i].eps = add("eps", i, sc.plant.subsystem(i).dims().ny);
    }
    for (std::size_t i = 0; i < n; ++i) {
      cols[i].rho = log.columns.size();
      log.columns.push_back("rho" + idx(i));
    }
  }
  const std::size_t probe_col = log.columns.size();
  for (const auto& p : sc.probes) log.columns.push_back(p.name);
  const std::size_t width = log.columns.size();

  // Attack and disconnection schedules on the grid.
  std::vector<Schedule> attack_window(sc.attacks.size());
  for (std::size_t a = 0; a < sc.attacks.size(); ++a) {
    attack_window[a] = {grid_index(sc.attacks[a].onset, h), grid_index(sc.attacks[a].end, h)};
  }
  std::map<std::size_t, net::SubsystemSet> pending;
  for (const auto& d : sc.disconnections) {
    pending[grid_index(d.time, h)] = pending[grid_index(d.time, h)] | d.removed;
  }

  Layout layout{sc.plant.active(), net::SubsystemSet()};
  auto make_epoch = [&]() {
    return build_epoch(apply_layout(sc.plant, layout, sc.disconnect_mode),
                       apply_layout(obs_base, layout, sc.disconnect_mode), h);
  };
  Epoch ep = make_epoch();

  auto input_at = [&](const Epoch& e, std::size_t k) {
    Vector u = Vector::Zero(e.nup + e.nrt);
    for (std::size_t i : e.plant.members) {
      const net::Block rb = e.plant.reference[i];
      u.segment(rb.offset, rb.size) = refs[i];
      u.segment(e.nup + rb.offset, rb.size) = refs[i];
    }
    for (std::size_t a = 0; a < sc.attacks.size(); ++a) {
      if (k < attack_window[a].start || k >= attack_window[a].stop) continue;
      const auto& att = sc.attacks[a];
      if (!layout.connected.contains(att.target)) continue;
      net::Block blk;
      switch (att.port) {
        case AttackPort::reference:
          blk = e.plant.reference[att.target];
          break;
        case AttackPort::state:
          blk = e.plant.attack_state[att.target];
          break;
        case AttackPort::interconnection:
          blk = e.plant.attack_interconnection[att.target];
          break;
        case AttackPort::measurement:
          blk = e.plant.attack_measurement[att.target];
          break;
      }
      if (blk.size == att.value.size()) u.segment(blk.offset, blk.size) += att.value;
    }
    return u;
  };

  // Initial state.
  Vector z = Vector::Zero(ep.states());
  if (sc.initial_state) {
    for (std::size_t i : ep.plant.members) {
      const auto pb = ep.plant.state[i];
      const auto ob = ep.observer.state[i];
      z.segment(pb.offset, pb.size) = zeros_or(sc.initial_state->plant, i, pb.size);
      z.segment(observer_offset(ep, i), ob.size) =
          zeros_or(sc.initial_state->observer, i, ob.size);
    }
  } else {
    // Plant at its attack-free equilibrium, observer matched up to e0.
    Vector u0 = Vector::Zero(ep.nup + ep.nrt);
    for (std::size_t i : ep.plant.members) {
      const net::Block rb = ep.plant.reference[i];
      u0.segment(rb.offset, rb.size) = refs[i];
    }
    const Matrix ap = ep.plant.system.a;
    if (ap.rows() > 0) {
      Eigen::PartialPivLU<Matrix> lu(ap);
      if (lu.rcond() > 1e-14) {
        z.head(ep.nxp) = -lu.solve(ep.plant.system.b * u0.head(ep.nup));
      }
    }
    std::mt19937_64 rng(sc.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i : ep.plant.members) {
      const auto pb = ep.plant.state[i];
      const Index o = observer_offset(ep, i);
      for (Index j = 0; j < pb.size; ++j) {
        const double e0 = sc.initial_error_scale > 0.0
                              ? sc.initial_error_scale * normal(rng)
                              : 0.0;
        z(o + j) = z(pb.offset + j) + e0;
      }
    }
  }

  auto apply_disconnection = [&](net::SubsystemSet removed, double t) {
    removed = removed & layout.connected;
    if (removed.empty()) return;
    const Epoch old = ep;
    const Vector zold = z;
    layout.connected = layout.connected - removed;
    layout.stripped = layout.stripped | removed;
    ep = make_epoch();
    z = Vector::Zero(ep.states());
    for (std::size_t i : ep.plant.members) {
      const auto nb = ep.plant.state[i], ob = old.plant.state[i];
      if (nb.size == ob.size) z.segment(nb.offset, nb.size) = zold.segment(ob.offset, ob.size);
      const auto nbo = ep.observer.state[i], obo = old.observer.state[i];
      if (nbo.size == obo.size) {
        z.segment(observer_offset(ep, i), nbo.size) =
            zold.segment(observer_offset(old, i), obo.size);
      }
    }
    log.events.push_back({t, Event::Kind::disconnection, removed});
  };

  std::vector<double> row(width);
  std::vector<net::SubsystemSet> attacked_at(steps + 1);
  for (std::size_t a = 0; a < sc.attacks.size(); ++a) {
    if (attack_window[a].start <= steps) {
      attacked_at[attack_window[a].start].insert(sc.attacks[a].target);
    }
  }

  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * h;
    while (!pending.empty() && pending.begin()->first <= k) {
      apply_disconnection(pending.begin()->second, t);
      pending.erase(pending.begin());
    }
    if (!attacked_at[k].empty()) {
      log.events.push_back({t, Event::Kind::attack, attacked_at[k]});
    }

    const Vector u = input_at(ep, k);
    const Vector y = ep.cy * z + ep.dy * u;
    const Vector w = ep.cw * z + ep.dw * u;
    const Vector eps = ep.ce * z + ep.de * u;
    const Vector v = ep.plant.coupling * w;

    std::fill(row.begin(), row.end(), kNaN);
    for (std::size_t i : ep.plant.members) {
      const auto xb = ep.plant.state[i];
      for (Index j = 0; j < xb.size; ++j) row[cols[i].x + j] = z(xb.offset + j);
      const net::Block wb{ep.plant.interconnection[i].offset -
                              ep.cy.rows(),
                          ep.plant.interconnection[i].size};
      for (Index j = 0; j < wb.size; ++j) row[cols[i].w + j] = w(wb.offset + j);
      if (!layout.connected.contains(i)) continue;
      const auto yb = ep.plant.measurement[i];
      for (Index j = 0; j < yb.size; ++j) {
        row[cols[i].y + j] = y(yb.offset + j);
        row[cols[i].yhat + j] = y(yb.offset + j) - eps(yb.offset + j);
        row[cols[i].eps + j] = eps(yb.offset + j);
      }
      const double g = i < log.gamma.size() ? log.gamma[i] : kNaN;
      const double rho =
          normalize_residual({eps.segment(yb.offset, yb.size).norm()}, g, sc.normalization)[0];
      row[cols[i].rho] = rho;
      if (!log.detection_time[i] && rho > sc.threshold) {
        log.detection_time[i] = t;
        log.events.push_back({t, Event::Kind::detection, net::SubsystemSet{i}});
        if (sc.auto_disconnect) {
          const std::size_t when = k + static_cast<std::size_t>(sc.disconnect_latency);
          if (when <= steps) pending[when].insert(i);
        }
      }
    }
    for (std::size_t p = 0; p < sc.probes.size(); ++p) {
      const auto& pr = sc.probes[p];
      const std::size_t i = pr.subsystem;
      if (std::find(ep.plant.members.begin(), ep.plant.members.end(), i) ==
          ep.plant.members.end()) {
        continue;
      }
      double val = 0.0;
      const auto xb = ep.plant.state[i];
      if (xb.size == pr.cx.cols()) val += (pr.cx * z.segment(xb.offset, xb.size))(0);
      const auto vb = ep.plant.interconnection_input[i];
      val += (pr.ev * v.segment(vb.offset, vb.size))(0);
      const auto rb = ep.plant.reference[i];
      val += (pr.dr * u.segment(rb.offset, rb.size))(0);
      row[probe_col + p] = pr.square_root ? std::sqrt(std::max(val, 0.0)) : val;
    }

    if (k % static_cast<std::size_t>(sc.record_every) == 0 || k == steps) {
      log.time.push_back(t);
      log.values.insert(log.values.end(), row.begin(), row.end());
    }
    if (k == steps) break;

    const Vector next = ep.phi * z + ep.gamma * u;
    if (!next.allFinite() || (next.size() > 0 && next.cwiseAbs().maxCoeff() > kDivergenceLimit)) {
      const double td = static_cast<double>(k + 1) * h;
      log.diverged = true;
      log.divergence_time = td;
      log.events.push_back({td, Event::Kind::divergence, net::SubsystemSet()});
      if (log.time.empty() || log.time.back() != t) {
        log.time.push_back(t);
        log.values.insert(log.values.end(), row.begin(), row.end());
      }
      break;
    }
    z = next;
  }

  log.final_state.plant.assign(n, Vector());
  log.final_state.observer.assign(n, Vector());
  for (std::size_t i : ep.plant.members) {
    const auto pb = ep.plant.state[i];
    const auto ob = ep.observer.state[i];
    log.final_state.plant[i] = z.segment(pb.offset, pb.size);
    log.final_state.observer[i] = z.segment(observer_offset(ep, i), ob.size);
  }
  std::stable_sort(log.events.begin(), log.events.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });
  return log;
}

TraceLog run_closed_loop(Scenario scenario) {
  scenario.auto_disconnect = true;
  return simulate(scenario);
}

}  // namespace sentinel::sim
