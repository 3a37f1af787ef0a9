#include "sentinel/presets.hpp"

#include <cmath>

namespace sentinel::presets {

std::vector<std::string> names() { return {"fig2", "fig3", "fig6", "fig7", "fig8"}; }

net::SubsystemSet tail_customers() { return net::SubsystemSet{2, 3, 4}; }

sim::Scenario feeder_scenario(const feeder::FeederSpec& spec, detect::Variant variant,
                              const detect::DesignWeights& weights) {
  feeder::Feeder f = feeder::build_feeder(spec);
  sim::Scenario sc;
  sc.plant = f.network;
  sc.references = f.references;
  sc.probes = f.voltage_probes;
  switch (variant) {
    case detect::Variant::no_feedback:
      sc.detector = detect::build_no_feedback_observer(sc.plant);
      break;
    case detect::Variant::naive:
      sc.detector = detect::build_naive_observer(sc.plant, detect::design_gains(sc.plant, weights));
      break;
    case detect::Variant::retrofit:
      sc.detector = detect::build_retrofit_detector(sc.plant, weights);
      break;
  }
  return sc;
}

namespace {

sim::Scenario attack_scenario(detect::Variant variant, double amplitude) {
  sim::Scenario sc = feeder_scenario(feeder::default_feeder(), variant);
  sc.attacks.push_back(sim::step_reference_attack(
      kAttackedCustomer, feeder::port::kReferenceVoltage,
      sc.plant.subsystem(kAttackedCustomer).dims().nr, amplitude, kAttackOnset));
  return sc;
}

std::vector<Run> tail_disconnection(const std::string& name, double error_scale) {
  sim::Scenario sc = feeder_scenario(feeder::default_feeder(), detect::Variant::retrofit);
  sc.name = name;
  sc.disconnections.push_back({kDisconnectTime, tail_customers()});
  sc.initial_error_scale = error_scale;
  sc.seed = 2024;
  return {{"retrofit", std::move(sc)}};
}

}  // namespace

std::vector<Run> make(std::string_view name) {
  if (name == "fig2") return tail_disconnection("fig2", 0.0);
  if (name == "fig8") return tail_disconnection("fig8", 100.0);
  if (name == "fig3") {
    detect::FailureWitness w = detect::make_failure_witness();
    sim::Scenario sc;
    sc.name = "fig3";
    sc.plant = w.plant;
    sc.detector = w.naive;
    sc.disconnections.push_back({kDisconnectTime, w.removed});
    sc.initial_error_scale = 1.0;
    sc.seed = 2024;
    return {{"naive", std::move(sc)}};
  }
  if (name == "fig6" || name == "fig7") {
    const bool fig7 = name == "fig7";
    const double amplitude = fig7 ? -5e4 : 1.0;
    std::vector<Run> runs;
    for (auto v : {detect::Variant::no_feedback, detect::Variant::retrofit}) {
      sim::Scenario sc = attack_scenario(v, amplitude);
      sc.name = std::string(name);
      if (fig7) {
        sc.auto_disconnect = true;
        sc.disconnect_mode = sim::DisconnectMode::dg_only;
        sc.normalization.reference_amplitude = std::abs(amplitude);
      }
      runs.push_back({detect::to_string(v), std::move(sc)});
    }
    return runs;
  }
  throw InputError("unknown preset '" + std::string(name) + "' (fig2, fig3, fig6, fig7, fig8)");
}

}  // namespace sentinel::presets
