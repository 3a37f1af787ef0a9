#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "oracles.hpp"
#include "sentinel/distflow.hpp"
#include "sentinel/presets.hpp"
#include "sentinel/simkit.hpp"

using namespace sentinel;
using sentinel::testing::Gen;

namespace {

sim::Scenario feeder_run(detect::Variant variant, double horizon = 4.0, double step = 1e-2) {
  const auto f = feeder::build_feeder(feeder::default_feeder());
  sim::Scenario sc;
  sc.name = "unit";
  sc.plant = f.network;
  sc.references = f.references;
  sc.detector = variant == detect::Variant::retrofit
                    ? detect::build_retrofit_detector(f.network)
                    : detect::build_no_feedback_observer(f.network);
  sc.horizon = horizon;
  sc.step = step;
  sc.probes = f.voltage_probes;
  return sc;
}

double max_abs_eps(const sim::TraceLog& log) {
  double worst = 0.0;
  for (std::size_t c = 0; c < log.columns.size(); ++c) {
    if (log.columns[c].rfind("eps", 0) != 0) continue;
    for (std::size_t r = 0; r < log.rows(); ++r) {
      const double v = log.at(r, c);
      if (!std::isnan(v)) worst = std::max(worst, std::abs(v));
    }
  }
  return worst;
}

}  // namespace

TEST(Parsing, PortsAndModes) {
  EXPECT_EQ(sim::parse_attack_port("measurement"), sim::AttackPort::measurement);
  EXPECT_THROW(sim::parse_attack_port("sensor"), InputError);
  EXPECT_EQ(sim::parse_disconnect_mode("dg-only"), sim::DisconnectMode::dg_only);
  EXPECT_EQ(sim::to_string(sim::DisconnectMode::dg_only), "dg-only");
}

TEST(Normalize, DivideAndMultiply) {
  sim::Normalization n;
  n.reference_amplitude = 2.0;
  EXPECT_DOUBLE_EQ(sim::normalize_residual({1.0}, 0.5, n)[0], 1.0);
  n.mode = sim::NormalizationMode::multiply;
  EXPECT_DOUBLE_EQ(sim::normalize_residual({1.0}, 0.5, n)[0], 4.0);
}

TEST(Detect, FirstCrossing) {
  EXPECT_EQ(sim::detect({0, 1, 2, 3}, {0.1, 0.96, 0.2, 1.0}, 0.95), 1.0);
  EXPECT_FALSE(sim::detect({0, 1}, {0.95, 0.5}, 0.95).has_value());
}

TEST(Scenario, Validation) {
  auto sc = feeder_run(detect::Variant::retrofit);
  sc.step = 0.0;
  EXPECT_THROW(sc.validate(), InputError);
  sc = feeder_run(detect::Variant::retrofit);
  sc.attacks.push_back(sim::step_reference_attack(7, 0, 4, 1.0, 1.0));
  EXPECT_THROW(sc.validate(), InputError);
}

TEST(Simulate, ZeroAttackResidualVanishes) {
  for (auto variant : {detect::Variant::retrofit, detect::Variant::no_feedback}) {
    for (auto mode : {sim::DisconnectMode::subsystem, sim::DisconnectMode::dg_only}) {
      auto sc = feeder_run(variant);
      sc.disconnect_mode = mode;
      sc.disconnections.push_back({2.0, net::SubsystemSet{2, 3, 4}});
      const auto log = sim::simulate(sc);
      EXPECT_FALSE(log.diverged);
      EXPECT_LE(max_abs_eps(log), 1e-9);
      for (auto d : log.detection_time) EXPECT_FALSE(d.has_value());
    }
  }
}

TEST(Simulate, RandomNetworksZeroAttack) {
  Gen g(61);
  for (int trial = 0; trial < 15; ++trial) {
    const auto plant = g.network(static_cast<std::size_t>(g.integer(1, 4)), 0.4);
    std::vector<Matrix> gains;
    for (const auto& s : plant.subsystems()) gains.push_back(g.hurwitz_gain(s));
    sim::Scenario sc;
    sc.plant = plant;
    sc.detector = detect::build_retrofit_detector(plant, gains);
    for (const auto& s : plant.subsystems()) sc.references.push_back(g.matrix(s.dims().nr, 1));
    sc.horizon = 1.0;
    sc.step = 1e-2;
    sc.normalization.gamma.assign(plant.size(), 1.0);
    EXPECT_LE(max_abs_eps(sim::simulate(sc)), 1e-9);
  }
}

TEST(Simulate, MatchesFeederOdeOracle) {
  auto sc = feeder_run(detect::Variant::retrofit, 3.0, 1e-2);
  sc.attacks.push_back(sim::step_reference_attack(3, 0, 4, 500.0, 1.0));
  const auto log = sim::simulate(sc);
  const auto spec = feeder::default_feeder();
  const auto eq = feeder::solve_steady_state(spec);
  const Vector q0 = Eigen::Map<const Vector>(eq.generation.data(), 5);
  const Matrix oracle = sentinel::testing::feeder_ode(spec, q0, 1e-2, 300, 3, 500.0, 1.0);
  ASSERT_EQ(log.rows(), 301u);
  double worst = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto x = log.series("x[" + std::to_string(i + 1) + "][1]");
    for (std::size_t r = 0; r < x.size(); ++r) {
      worst = std::max(worst, std::abs(x[r] - oracle(static_cast<Index>(r), static_cast<Index>(i))));
    }
  }
  EXPECT_LE(worst, 1e-8 * (1.0 + oracle.cwiseAbs().maxCoeff()));
}

TEST(Simulate, FourthOrderConvergence) {
  auto run = [](double h) {
    auto sc = feeder_run(detect::Variant::retrofit, 2.0, h);
    sc.initial_error_scale = 50.0;
    sc.seed = 3;
    return sim::simulate(sc).final_state;
  };
  const auto a = run(0.05), b = run(0.025), c = run(0.0125);
  double e1 = 0.0, e2 = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    e1 = std::max(e1, (a.observer[i] - b.observer[i]).cwiseAbs().maxCoeff());
    e2 = std::max(e2, (b.observer[i] - c.observer[i]).cwiseAbs().maxCoeff());
  }
  ASSERT_GT(e2, 0.0);
  EXPECT_GE(std::log2(e1 / e2), 3.5);
}

TEST(Simulate, ResidualLinearInAttackAndCausal) {
  auto base = feeder_run(detect::Variant::retrofit, 3.0, 1e-2);
  auto run = [&](double amp) {
    auto sc = base;
    sc.attacks.push_back(sim::step_reference_attack(3, 0, 4, amp, 1.0));
    return sim::simulate(sc);
  };
  const auto one = run(1.0), three = run(3.0);
  const auto e1 = one.series("eps[4][1]"), e3 = three.series("eps[4][1]");
  double scale = 0.0;
  for (double v : e1) scale = std::max(scale, std::abs(v));
  ASSERT_GT(scale, 0.0);
  for (std::size_t r = 0; r < e1.size(); ++r) {
    EXPECT_NEAR(e3[r], 3.0 * e1[r], 1e-9 * (1.0 + 3.0 * scale));
    if (one.time[r] < 1.0 - 1e-12) EXPECT_LE(std::abs(e1[r]), 1e-12);
  }
}

TEST(Simulate, SplitAtDisconnectionMatchesSingleRun) {
  for (auto mode : {sim::DisconnectMode::subsystem, sim::DisconnectMode::dg_only}) {
    auto sc = feeder_run(detect::Variant::retrofit, 3.0, 1e-2);
    sc.disconnect_mode = mode;
    sc.initial_error_scale = 20.0;
    sc.seed = 9;
    sc.normalization.gamma.assign(5, 1.0);
    auto whole = sc;
    whole.disconnections.push_back({1.5, net::SubsystemSet{3, 4}});
    const auto full = sim::simulate(whole);

    auto first = sc;
    first.horizon = 1.5;
    const auto head = sim::simulate(first);

    auto second = sc;
    second.initial_state = head.final_state;
    second.horizon = 1.5;
    if (mode == sim::DisconnectMode::subsystem) {
      second.plant = net::disconnect(sc.plant, net::SubsystemSet{0, 1, 2});
    } else {
      second.disconnections.push_back({0.0, net::SubsystemSet{3, 4}});
      second.initial_state->plant[3] = Vector();
      second.initial_state->plant[4] = Vector();
    }
    const auto tail = sim::simulate(second);
    ASSERT_EQ(full.rows(), head.rows() + tail.rows() - 1);
    for (const char* col : {"x[1][1]", "x[3][1]", "eps[2][1]", "voltage[1]"}) {
      const auto f = full.series(col), t = tail.series(col);
      for (std::size_t r = 0; r < t.size(); ++r) {
        EXPECT_NEAR(f[head.rows() - 1 + r], t[r], 1e-9 * (1.0 + std::abs(t[r]))) << col;
      }
    }
  }
}

TEST(Simulate, DisconnectedColumnsAreNaN) {
  auto sc = feeder_run(detect::Variant::retrofit, 1.0, 1e-2);
  sc.disconnections.push_back({0.5, net::SubsystemSet{4}});
  const auto log = sim::simulate(sc);
  const auto x5 = log.series("x[5][1]");
  EXPECT_FALSE(std::isnan(x5.front()));
  EXPECT_TRUE(std::isnan(x5.back()));
  ASSERT_EQ(log.events.size(), 1u);
  EXPECT_EQ(log.events[0].kind, sim::Event::Kind::disconnection);
  EXPECT_NEAR(log.events[0].time, 0.5, 1e-12);
  EXPECT_TRUE(log.final_state.plant[4].size() == 0);
}

TEST(Simulate, AutoDisconnectAfterDetection) {
  auto sc = feeder_run(detect::Variant::retrofit, 4.0, 1e-2);
  sc.attacks.push_back(sim::step_reference_attack(3, 0, 4, -5e4, 1.0));
  sc.normalization.reference_amplitude = 5e4;
  sc.disconnect_mode = sim::DisconnectMode::dg_only;
  const auto log = sim::run_closed_loop(sc);
  ASSERT_TRUE(log.detection_time[3].has_value());
  bool saw = false;
  for (const auto& e : log.events) {
    if (e.kind == sim::Event::Kind::disconnection) {
      saw = true;
      EXPECT_TRUE(e.subsystems.contains(3));
      EXPECT_NEAR(e.time, *log.detection_time[3] + sc.step, 1e-12);
    }
  }
  EXPECT_TRUE(saw);
}

TEST(Simulate, NaiveWitnessDiverges) {
  const auto runs = presets::make("fig3");
  ASSERT_EQ(runs.size(), 1u);
  const auto log = sim::simulate(runs[0].scenario);
  EXPECT_TRUE(log.diverged);
  ASSERT_TRUE(log.divergence_time.has_value());
  EXPECT_GT(*log.divergence_time, presets::kDisconnectTime);
}

TEST(Simulate, RecordEveryKeepsLastPoint) {
  auto sc = feeder_run(detect::Variant::retrofit, 1.0, 0.1);
  sc.record_every = 3;
  const auto log = sim::simulate(sc);
  EXPECT_EQ(log.time.front(), 0.0);
  EXPECT_NEAR(log.time.back(), 1.0, 1e-12);
  EXPECT_EQ(log.rows(), 5u);  // 0, 0.3, 0.6, 0.9, 1.0
}

TEST(ResidualGains, PositiveOnFeeder) {
  const auto f = feeder::build_feeder(feeder::default_feeder());
  for (auto v : {detect::Variant::retrofit, detect::Variant::no_feedback}) {
    const auto det = v == detect::Variant::retrofit ? detect::build_retrofit_detector(f.network)
                                                    : detect::build_no_feedback_observer(f.network);
    for (double g : sim::residual_gains(f.network, det, 0)) EXPECT_GT(g, 0.0);
  }
}
