#include "sentinel/detector.hpp"

#include <string>

namespace sentinel::detect {
namespace {

std::string label(const net::Subsystem& s, std::size_t i) {
  std::string out = "subsystem " + std::to_string(i + 1);
  if (!s.name.empty()) out += " ('" + s.name + "')";
  return out;
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::naive:
      return "naive";
    case Variant::no_feedback:
      return "nofb";
    case Variant::retrofit:
      return "retrofit";
  }
  return "unknown";
}

Variant parse_variant(std::string_view text) {
  if (text == "naive") return Variant::naive;
  if (text == "nofb" || text == "no-feedback" || text == "no_feedback") {
    return Variant::no_feedback;
  }
  if (text == "retrofit") return Variant::retrofit;
  throw InputError("unknown detector variant '" + std::string(text) + "'");
}

Detector make_detector(Variant variant, const net::InterconnectedNetwork& plant,
                       std::vector<Matrix> gains) {
  const std::size_t n = plant.size();
  if (variant == Variant::no_feedback) {
    gains.clear();
    for (const auto& s : plant.subsystems()) {
      const auto d = s.dims();
      gains.push_back(Matrix::Zero(d.nx, d.ny));
    }
    return Detector(variant, std::move(gains));
  }
  if (gains.size() != n) {
    throw DimensionError("detector has " + std::to_string(gains.size()) +
                         " gains for " + std::to_string(n) + " subsystems");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = plant.subsystem(i);
    const auto d = s.dims();
    if (gains[i].rows() != d.nx || gains[i].cols() != d.ny) {
      throw DimensionError(label(s, i) + ": gain is " +
                           std::to_string(gains[i].rows()) + "x" +
                           std::to_string(gains[i].cols()) + ", expected " +
                           std::to_string(d.nx) + "x" + std::to_string(d.ny));
    }
    if (!gains[i].allFinite()) {
      throw InputError(label(s, i) + ": gain has non-finite entries");
    }
    if (variant == Variant::retrofit &&
        !lti::is_hurwitz(s.a + gains[i] * s.c, lti::kHurwitzMargin)) {
      throw GainRejected(i, label(s, i) + ": A + H C is not Hurwitz");
    }
  }
  return Detector(variant, std::move(gains));
}

Detector build_naive_observer(const net::InterconnectedNetwork& plant,
                              std::vector<Matrix> gains) {
  return make_detector(Variant::naive, plant, std::move(gains));
}

Detector build_no_feedback_observer(const net::InterconnectedNetwork& plant) {
  return make_detector(Variant::no_feedback, plant, {});
}

Detector build_retrofit_detector(const net::InterconnectedNetwork& plant,
                                 std::vector<Matrix> gains) {
  return make_detector(Variant::retrofit, plant, std::move(gains));
}

Detector build_retrofit_detector(const net::InterconnectedNetwork& plant,
                                 const DesignWeights& weights) {
  return make_detector(Variant::retrofit, plant, design_gains(plant, weights));
}

std::vector<Matrix> design_gains(const net::InterconnectedNetwork& plant,
                                 const DesignWeights& weights) {
  if (!(weights.state >= 0.0) || !(weights.output > 0.0)) {
    throw InputError("design weights: state weight must be >= 0 and output weight > 0");
  }
  std::vector<Matrix> gains;
  gains.reserve(plant.size());
  for (std::size_t i = 0; i < plant.size(); ++i) {
    const auto& s = plant.subsystem(i);
    const auto d = s.dims();
    try {
      gains.push_back(lti::design_observer_gain(
          s.a, s.c, weights.state * Matrix::Identity(d.nx, d.nx),
          weights.output * Matrix::Identity(d.ny, d.ny)));
    } catch (const lti::UndetectableError&) {
      throw GainRejected(i, label(s, i) + ": (A, C) is not detectable");
    } catch (const NumericalError& e) {
      throw GainRejected(i, label(s, i) + ": " + e.what());
    }
  }
  return gains;
}

net::Subsystem observer_subsystem(const net::Subsystem& p, const Matrix& h,
                                  Variant variant) {
  const auto d = p.dims();
  const Matrix gain = variant == Variant::no_feedback
                          ? Matrix(Matrix::Zero(d.nx, d.ny))
                          : h;
  const bool rect = variant == Variant::retrofit;
  const Index nz = rect ? 2 * d.nx : d.nx;
  const Index nr = d.nr + d.ny;

  net::Subsystem o;
  o.name = p.name;
  o.a = Matrix::Zero(nz, nz);
  o.l = Matrix::Zero(nz, d.nv);
  o.b = Matrix::Zero(nz, nr);
  o.w = Matrix::Zero(d.nw, nz);
  o.z = p.z;
  o.u = Matrix::Zero(d.nw, nr);
  o.c = Matrix::Zero(d.ny, nz);
  o.e = p.e;
  o.d = Matrix::Zero(d.ny, nr);

  // xhat' = A xhat + L vhat + B r + H (yhat - y)
  o.a.topLeftCorner(d.nx, d.nx) = p.a + gain * p.c;
  o.l.topRows(d.nx) = p.l + gain * p.e;
  o.b.topLeftCorner(d.nx, d.nr) = p.b + gain * p.d;
  o.b.topRightCorner(d.nx, d.ny) = -gain;
  o.w.leftCols(d.nx) = p.w;
  o.u.leftCols(d.nr) = p.u;
  o.c.leftCols(d.nx) = p.c;
  o.d.leftCols(d.nr) = p.d;
  if (rect) {
    // chi' = A chi + H (yhat - y); what gets -W chi.
    o.a.bottomLeftCorner(d.nx, d.nx) = gain * p.c;
    o.a.bottomRightCorner(d.nx, d.nx) = p.a;
    o.l.bottomRows(d.nx) = gain * p.e;
    o.b.bottomLeftCorner(d.nx, d.nr) = gain * p.d;
    o.b.bottomRightCorner(d.nx, d.ny) = -gain;
    o.w.rightCols(d.nx) = -p.w;
  }
  return o;
}

net::InterconnectedNetwork observer_network(const net::InterconnectedNetwork& plant,
                                            const Detector& detector) {
  if (detector.size() != plant.size()) {
    throw DimensionError("detector and plant sizes differ");
  }
  std::vector<net::Subsystem> subs;
  subs.reserve(plant.size());
  for (std::size_t i = 0; i < plant.size(); ++i) {
    subs.push_back(observer_subsystem(plant.subsystem(i), detector.gain(i),
                                      detector.variant()));
  }
  return net::InterconnectedNetwork(std::move(subs), plant.topology(),
                                    plant.active());
}

net::Subsystem error_dynamics(const net::Subsystem& p, const Matrix& h,
                              Variant variant) {
  const auto d = p.dims();
  const Matrix gain = variant == Variant::no_feedback
                          ? Matrix(Matrix::Zero(d.nx, d.ny))
                          : h;
  const bool rect = variant == Variant::retrofit;
  const Index nz = rect ? 2 * d.nx : d.nx;

  net::Subsystem e;
  e.name = p.name;
  e.a = Matrix::Zero(nz, nz);
  e.l = Matrix::Zero(nz, d.nv);
  e.b = Matrix::Zero(nz, 0);
  e.w = Matrix::Zero(d.nw, nz);
  e.z = p.z;
  e.u = Matrix::Zero(d.nw, 0);
  e.c = Matrix::Zero(d.ny, nz);
  e.e = p.e;
  e.d = Matrix::Zero(d.ny, 0);

  // e' = A e + L phi + H psi,  psi = C e + E phi
  e.a.topLeftCorner(d.nx, d.nx) = p.a + gain * p.c;
  e.l.topRows(d.nx) = p.l + gain * p.e;
  e.w.leftCols(d.nx) = p.w;
  e.c.leftCols(d.nx) = p.c;
  if (rect) {
    e.a.bottomLeftCorner(d.nx, d.nx) = gain * p.c;
    e.a.bottomRightCorner(d.nx, d.nx) = p.a;
    e.l.bottomRows(d.nx) = gain * p.e;
    e.w.rightCols(d.nx) = -p.w;
  }
  return e;
}

net::InterconnectedNetwork error_network(const net::InterconnectedNetwork& plant,
                                         const Detector& detector) {
  if (detector.size() != plant.size()) {
    throw DimensionError("detector and plant sizes differ");
  }
  std::vector<net::Subsystem> subs;
  subs.reserve(plant.size());
  for (std::size_t i = 0; i < plant.size(); ++i) {
    subs.push_back(error_dynamics(plant.subsystem(i), detector.gain(i),
                                  detector.variant()));
  }
  return net::InterconnectedNetwork(std::move(subs), plant.topology(),
                                    plant.active());
}

lti::StateSpace rectifier(const net::Subsystem& p, const Matrix& h) {
  const auto d = p.dims();
  if (h.rows() != d.nx || h.cols() != d.ny) {
    throw DimensionError("rectifier: gain shape does not match subsystem");
  }
  Matrix c = Matrix::Zero(d.nx + d.nw, d.nx);
  c.bottomRows(d.nw) = -p.w;
  Matrix dd = Matrix::Zero(d.nx + d.nw, d.ny);
  dd.topRows(d.nx) = h;
  return lti::StateSpace(p.a, h, std::move(c), std::move(dd));
}

lti::StateSpace injection_to_measurement(const net::Subsystem& p) {
  const auto d = p.dims();
  Matrix b = Matrix::Zero(d.nx, d.nx + d.nw);
  b.leftCols(d.nx) = Matrix::Identity(d.nx, d.nx);
  return lti::StateSpace(p.a, std::move(b), p.c,
                         Matrix::Zero(d.ny, d.nx + d.nw));
}

lti::StateSpace injection_to_interconnection(const net::Subsystem& p) {
  const auto d = p.dims();
  Matrix b = Matrix::Zero(d.nx, d.nx + d.nw);
  b.leftCols(d.nx) = Matrix::Identity(d.nx, d.nx);
  Matrix dd = Matrix::Zero(d.nw, d.nx + d.nw);
  dd.rightCols(d.nw) = Matrix::Identity(d.nw, d.nw);
  return lti::StateSpace(p.a, std::move(b), p.w, std::move(dd));
}

lti::StateSpace interconnection_transfer(const net::Subsystem& p) {
  return lti::StateSpace(p.a, p.l, p.w, p.z);
}

lti::StateSpace youla_parameter(const net::Subsystem& p, const Matrix& h) {
  return lti::close_output_feedback(injection_to_measurement(p), rectifier(p, h));
}

RetrofitCheck verify_controller(const net::Subsystem& p,
                                const lti::StateSpace& k) {
  RetrofitCheck out;
  const lti::StateSpace product = lti::series(injection_to_interconnection(p), k);
  const auto markov = lti::markov_parameters_vanish(
      product, static_cast<int>(2 * p.dims().nx + 1));
  out.identity_ok = markov.vanishes;
  out.markov_ratio = markov.worst_ratio;
  out.q_stable = lti::has_stable_transfer(
      lti::close_output_feedback(injection_to_measurement(p), k));
  out.plant_block_stable = lti::is_hurwitz(p.a);
  return out;
}

RetrofitCheck verify_retrofit_condition(const net::Subsystem& p, const Matrix& h) {
  RetrofitCheck out = verify_controller(p, rectifier(p, h));
  out.injected_abscissa = lti::spectral_abscissa(p.a + h * p.c);
  return out;
}

FailureWitness make_failure_witness() {
  // Each subsystem: x' = -x + v + r, w = x, y = x.
  auto scalar = [](std::string name) {
    net::Subsystem s = net::Subsystem::zeros(std::move(name), {1, 1, 1, 1, 1});
    s.a(0, 0) = -1.0;
    s.l(0, 0) = 1.0;
    s.b(0, 0) = 1.0;
    s.w(0, 0) = 1.0;
    s.c(0, 0) = 1.0;
    return s;
  };
  net::Topology topo(2);
  topo.connect(0, 1, Matrix::Constant(1, 1, 16.0));
  topo.connect(1, 0, Matrix::Constant(1, 1, -16.0));
  net::InterconnectedNetwork plant({scalar("left"), scalar("right")}, topo);

  // Full error matrix [[8, 16], [-16, -31]]: poles near -0.354 and -22.6.
  // Subsystem 1 alone has the local pole -1 + 9 = 8.
  Detector naive = build_naive_observer(
      plant, {Matrix::Constant(1, 1, 9.0), Matrix::Constant(1, 1, -30.0)});
  return {std::move(plant), std::move(naive), net::SubsystemSet{1}};
}

}  // namespace sentinel::detect
