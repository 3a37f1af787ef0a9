#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "oracles.hpp"
#include "sentinel/distflow.hpp"

using namespace sentinel;
using sentinel::testing::Gen;

namespace {

feeder::FeederSpec random_feeder(Gen& g, std::size_t n) {
  feeder::FeederSpec s = feeder::uniform_feeder(n);
  for (std::size_t k = 0; k < n; ++k) {
    s.r_line[k] = g.uniform(0.0, 0.05);
    s.x_line[k] = g.uniform(0.0, 0.05);
    s.r_service[k] = g.uniform(0.0, 0.05);
    s.x_service[k] = g.uniform(0.0, 0.05);
    s.active_power[k] = g.uniform(-3000.0, 3000.0);
    s.reactive_load[k] = g.uniform(0.0, 1000.0);
    s.time_constant[k] = g.uniform(0.2, 2.0);
    s.droop_gain[k] = g.uniform(0.1, 1.0);
    s.reference_voltage[k] = g.uniform(225.0, 235.0);
  }
  return s;
}

Vector vec(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

TEST(FeederSpec, Validation) {
  auto s = feeder::default_feeder();
  EXPECT_NO_THROW(s.validate());
  EXPECT_EQ(s.size(), 5u);
  s.time_constant[2] = 0.0;
  EXPECT_THROW(s.validate(), InputError);
  s = feeder::default_feeder();
  s.r_line.pop_back();
  EXPECT_THROW(s.validate(), InputError);
  EXPECT_THROW(feeder::default_feeder().truncated(6), InputError);
  EXPECT_THROW(feeder::default_feeder().truncated(0), InputError);
  EXPECT_EQ(feeder::default_feeder().truncated(3).size(), 3u);
}

TEST(PowerFlow, MatchesDenseOracle) {
  Gen g(51);
  for (int trial = 0; trial < 50; ++trial) {
    const auto spec = random_feeder(g, static_cast<std::size_t>(g.integer(1, 8)));
    std::vector<double> q(spec.size());
    for (auto& x : q) x = g.uniform(-2000.0, 2000.0);
    const auto pf = feeder::power_flow(spec, q);
    const Vector oracle = sentinel::testing::feeder_voltages_dense(spec, vec(q));
    const Vector ours = vec(pf.customer_voltage_sq);
    EXPECT_LE((ours - oracle).cwiseAbs().maxCoeff(), 1e-8 * oracle.cwiseAbs().maxCoeff());
    EXPECT_LE(feeder::telescoping_residual(pf), 1e-10 * (1.0 + vec(pf.line_active).cwiseAbs().maxCoeff()));
  }
}

TEST(PowerFlow, ZeroImpedanceIsFlat) {
  auto spec = feeder::default_feeder();
  for (std::size_t k = 0; k < spec.size(); ++k) {
    spec.r_line[k] = spec.x_line[k] = spec.r_service[k] = spec.x_service[k] = 0.0;
  }
  const auto eq = feeder::solve_steady_state(spec);
  const double v0 = spec.substation_voltage * spec.substation_voltage;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    EXPECT_NEAR(eq.customer_voltage_sq[k], v0, 1e-9 * v0);
    const double vbar = spec.reference_voltage[k] * spec.reference_voltage[k];
    EXPECT_NEAR(eq.generation[k], spec.droop_gain[k] * (vbar - v0), 1e-8);
  }
}

TEST(SteadyState, SatisfiesDroopLaw) {
  Gen g(52);
  for (int trial = 0; trial < 30; ++trial) {
    const auto spec = random_feeder(g, static_cast<std::size_t>(g.integer(1, 8)));
    const auto eq = feeder::solve_steady_state(spec);
    for (std::size_t k = 0; k < spec.size(); ++k) {
      const double vbar = spec.reference_voltage[k] * spec.reference_voltage[k];
      EXPECT_NEAR(eq.generation[k], spec.droop_gain[k] * (vbar - eq.customer_voltage_sq[k]),
                  1e-7 * (1.0 + std::abs(eq.generation[k])));
    }
  }
}

TEST(SteadyState, DefaultFeederNearNominal) {
  const auto spec = feeder::default_feeder();
  const auto eq = feeder::solve_steady_state(spec);
  for (double v2 : eq.customer_voltage_sq) {
    EXPECT_NEAR(std::sqrt(v2), 230.0, 0.02 * 230.0);
  }
}

TEST(BuildFeeder, EquilibriumOfClosedNetworkMatchesPowerFlow) {
  Gen g(53);
  for (int trial = 0; trial < 20; ++trial) {
    const auto spec = random_feeder(g, static_cast<std::size_t>(g.integer(1, 7)));
    const auto f = feeder::build_feeder(spec);
    const auto c = net::close_interconnection(f.network);
    Vector r = Vector::Zero(c.system.inputs());
    for (std::size_t i = 0; i < spec.size(); ++i) {
      r.segment(c.reference[i].offset, c.reference[i].size) = f.references[i];
    }
    const Vector q = -c.system.a.partialPivLu().solve(c.system.b * r);
    const auto eq = feeder::solve_steady_state(spec);
    EXPECT_LE((q - vec(eq.generation)).cwiseAbs().maxCoeff(), 1e-7 * (1.0 + vec(eq.generation).cwiseAbs().maxCoeff()));
    // Voltage probes read back the power-flow voltages.
    const Vector yw = c.system.c * q + c.system.d * r;
    for (std::size_t i = 0; i < spec.size(); ++i) {
      const auto& p = f.voltage_probes[i];
      const auto nb = c.interconnection_input[i];
      const Vector v = c.coupling * yw.tail(c.coupling.cols());
      double val = (p.cx * q.segment(static_cast<Index>(i), 1))(0) +
                   (p.ev * v.segment(nb.offset, nb.size))(0) + (p.dr * f.references[i])(0);
      EXPECT_NEAR(val, eq.customer_voltage_sq[i], 1e-7 * val);
      EXPECT_TRUE(p.square_root);
      EXPECT_EQ(p.name, "voltage[" + std::to_string(i + 1) + "]");
    }
  }
}

TEST(BuildFeeder, TailTruncationEqualsDisconnection) {
  Gen g(54);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = static_cast<std::size_t>(g.integer(2, 7));
    const auto spec = random_feeder(g, n);
    const std::size_t keep = static_cast<std::size_t>(g.integer(1, static_cast<int>(n) - 1));
    const auto full = feeder::build_feeder(spec);
    std::vector<std::size_t> head;
    for (std::size_t i = 0; i < keep; ++i) head.push_back(i);
    const auto cut = net::close_interconnection(
        net::disconnect(full.network, net::SubsystemSet::from_members(head)));
    const auto small = net::close_interconnection(feeder::build_feeder(spec.truncated(keep)).network);
    EXPECT_LE((cut.system.a - small.system.a).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((cut.system.b - small.system.b).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((cut.system.c - small.system.c).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((cut.system.d - small.system.d).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(BuildFeeder, DefaultIsResilient) {
  const auto f = feeder::build_feeder(feeder::default_feeder());
  const auto r = net::verify_disconnection_resilience(f.network);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.subsets.size(), 32u);
  for (const auto& s : r.subsets) {
    if (!s.subset.empty()) EXPECT_LT(s.spectral_abscissa, -1.0);
  }
}

TEST(ReferenceInput, Layout) {
  const auto spec = feeder::default_feeder();
  const Vector r1 = feeder::reference_input(spec, 0);
  const Vector r2 = feeder::reference_input(spec, 1);
  ASSERT_EQ(r1.size(), 4);
  EXPECT_DOUBLE_EQ(r1(feeder::port::kReferenceVoltage), 230.0 * 230.0);
  EXPECT_DOUBLE_EQ(r1(feeder::port::kActivePower), spec.active_power[0]);
  EXPECT_DOUBLE_EQ(r1(feeder::port::kExternalVoltage), 230.0 * 230.0);
  EXPECT_DOUBLE_EQ(r2(feeder::port::kExternalVoltage), 0.0);
}
