#include <cmath>

#include "json_util.hpp"
#include "sentinel/io.hpp"

namespace sentinel::io {

using detail::json;

namespace {

// A field holding either a path (resolved against base) or an inline object.
std::string document(const json& j, const std::filesystem::path& base, const char* what) {
  if (j.is_string()) {
    std::filesystem::path p = j.get<std::string>();
    if (p.is_relative() && !base.empty()) p = base / p;
    return read_file(p);
  }
  if (j.is_object()) return j.dump();
  throw InputError(std::string("scenario: '") + what + "' must be a path or an object");
}

std::size_t subsystem_index(const json& j, std::size_t n, const std::string& ctx) {
  const Index k = detail::count(j, ctx);
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw InputError(ctx + ": subsystem index out of range (1-based)");
  }
  return static_cast<std::size_t>(k - 1);
}

detect::DesignWeights weights(const json& j) {
  detect::DesignWeights w;
  if (j.contains("state_weight")) w.state = detail::number(j.at("state_weight"), "state_weight");
  if (j.contains("output_weight")) w.output = detail::number(j.at("output_weight"), "output_weight");
  return w;
}

}  // namespace

sim::Scenario parse_scenario(const std::string& text, const std::filesystem::path& base) {
  const json j = detail::parse_json(text, "scenario");
  detail::check_format(j, "retrofit-sentinel/scenario", "scenario");
  sim::Scenario sc;
  sc.name = j.value("name", std::string());

  if (j.contains("feeder") == j.contains("network")) {
    throw InputError("scenario: give exactly one of 'network' or 'feeder'");
  }
  if (j.contains("feeder")) {
    const feeder::Feeder f = feeder::build_feeder(parse_feeder(document(j.at("feeder"), base, "feeder")));
    sc.plant = f.network;
    sc.references = f.references;
    if (j.value("monitors", true)) sc.probes = f.voltage_probes;
  } else {
    NetworkDocument doc = parse_network(document(j.at("network"), base, "network"));
    sc.plant = std::move(doc.network);
    sc.references = std::move(doc.references);
  }
  const std::size_t n = sc.plant.size();

  if (j.contains("references")) {
    const json& r = j.at("references");
    if (!r.is_array() || r.size() != n) {
      throw InputError("scenario: 'references' needs one array per subsystem");
    }
    sc.references.clear();
    for (std::size_t i = 0; i < n; ++i) {
      sc.references.push_back(detail::vector(r[i], "scenario: references"));
    }
  }

  // Detector: path, inline file, or {"variant": ..., "design": {...}}.
  if (!j.contains("detector")) {
    sc.detector = detect::build_retrofit_detector(sc.plant, detect::DesignWeights{});
  } else {
    const json& dj = j.at("detector");
    if (dj.is_object() && !dj.contains("gains")) {
      const auto variant = detect::parse_variant(
          detail::require(dj, "variant", "scenario: detector").get<std::string>());
      const auto w = dj.contains("design") ? weights(dj.at("design")) : detect::DesignWeights{};
      switch (variant) {
        case detect::Variant::no_feedback:
          sc.detector = detect::build_no_feedback_observer(sc.plant);
          break;
        case detect::Variant::naive:
          sc.detector = detect::build_naive_observer(sc.plant, detect::design_gains(sc.plant, w));
          break;
        case detect::Variant::retrofit:
          sc.detector = detect::build_retrofit_detector(sc.plant, w);
          break;
      }
    } else {
      sc.detector = parse_detector(document(dj, base, "detector"), sc.plant);
    }
  }

  if (j.contains("horizon")) sc.horizon = detail::number(j.at("horizon"), "scenario: horizon");
  if (j.contains("step")) sc.step = detail::number(j.at("step"), "scenario: step");
  if (j.contains("threshold")) sc.threshold = detail::number(j.at("threshold"), "scenario: threshold");
  if (j.contains("seed")) sc.seed = static_cast<std::uint64_t>(detail::count(j.at("seed"), "scenario: seed"));
  if (j.contains("initial_error_scale")) {
    sc.initial_error_scale = detail::number(j.at("initial_error_scale"), "scenario: initial_error_scale");
  }
  if (j.contains("record_every")) {
    sc.record_every = static_cast<int>(detail::count(j.at("record_every"), "scenario: record_every"));
  }
  sc.auto_disconnect = j.value("auto_disconnect", false);
  if (j.contains("disconnect_latency")) {
    sc.disconnect_latency =
        static_cast<int>(detail::count(j.at("disconnect_latency"), "scenario: disconnect_latency"));
  }
  if (j.contains("disconnect_mode")) {
    sc.disconnect_mode = sim::parse_disconnect_mode(j.at("disconnect_mode").get<std::string>());
  }

  if (j.contains("attacks")) {
    for (const auto& a : j.at("attacks")) {
      const std::string ctx = "scenario: attack";
      sim::AttackChannel ch;
      ch.target = subsystem_index(detail::require(a, "target", ctx), n, ctx + " target");
      ch.port = sim::parse_attack_port(a.value("port", std::string("reference")));
      ch.onset = detail::number(detail::require(a, "onset", ctx), ctx + " onset");
      if (a.contains("end")) ch.end = detail::number(a.at("end"), ctx + " end");
      const auto d = sc.plant.subsystem(ch.target).dims();
      const Index size = ch.port == sim::AttackPort::state             ? d.nx
                         : ch.port == sim::AttackPort::interconnection ? d.nw
                         : ch.port == sim::AttackPort::measurement     ? d.ny
                                                                        : d.nr;
      if (a.contains("value")) {
        ch.value = detail::vector(a.at("value"), ctx + " value");
      } else {
        const Index comp = a.contains("component")
                               ? detail::count(a.at("component"), ctx + " component") - 1
                               : 0;
        if (comp < 0 || comp >= size) throw InputError(ctx + ": component out of range");
        ch.value = Vector::Zero(size);
        ch.value(comp) = detail::number(detail::require(a, "amplitude", ctx), ctx + " amplitude");
      }
      sc.attacks.push_back(std::move(ch));
    }
  }

  if (j.contains("disconnections")) {
    for (const auto& d : j.at("disconnections")) {
      const std::string ctx = "scenario: disconnection";
      sim::ScheduledDisconnection ev;
      ev.time = detail::number(detail::require(d, "time", ctx), ctx + " time");
      for (const auto& k : detail::require(d, "removed", ctx)) {
        ev.removed.insert(subsystem_index(k, n, ctx + " removed"));
      }
      sc.disconnections.push_back(ev);
    }
  }

  if (j.contains("normalization")) {
    const json& nj = j.at("normalization");
    const std::string ctx = "scenario: normalization";
    if (nj.contains("reference_amplitude")) {
      sc.normalization.reference_amplitude =
          std::abs(detail::number(nj.at("reference_amplitude"), ctx));
    }
    if (nj.contains("mode")) {
      const std::string m = nj.at("mode").get<std::string>();
      if (m == "divide") {
        sc.normalization.mode = sim::NormalizationMode::divide;
      } else if (m == "multiply") {
        sc.normalization.mode = sim::NormalizationMode::multiply;
      } else {
        throw InputError(ctx + ": mode must be 'divide' or 'multiply'");
      }
    }
    if (nj.contains("component")) {
      sc.normalization.reference_component = detail::count(nj.at("component"), ctx) - 1;
    }
    if (nj.contains("gamma")) {
      for (const auto& g : nj.at("gamma")) sc.normalization.gamma.push_back(detail::number(g, ctx));
    }
  }

  sc.validate();
  return sc;
}

sim::Scenario load_scenario(const std::filesystem::path& path) {
  try {
    return parse_scenario(read_file(path), path.parent_path());
  } catch (const detect::GainRejected&) {
    throw;
  } catch (const Error& e) {
    throw InputError(path.string() + ": " + e.what());
  } catch (const detail::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace sentinel::io
