#include "cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "sentinel/detector.hpp"
#include "sentinel/distflow.hpp"
#include "sentinel/io.hpp"
#include "sentinel/netsys.hpp"
#include "sentinel/presets.hpp"
#include "sentinel/simkit.hpp"

namespace sentinel::cli {
namespace {

namespace fs = std::filesystem;

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string complex_text(const Complex& z) {
  if (z.imag() == 0.0) return num(z.real());
  return num(z.real()) + (z.imag() < 0 ? "-" : "+") + num(std::abs(z.imag())) + "i";
}

void print_subset(std::ostream& out, const char* prefix, const net::SubsetResult& r) {
  out << prefix << r.subset.to_string() << " well-posed=" << (r.well_posed ? "yes" : "no")
      << " abscissa=" << num(r.spectral_abscissa) << " " << (r.stable ? "stable" : "UNSTABLE")
      << "\n";
}

// Runs a body and maps library exceptions onto exit codes.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const detect::GainRejected& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const lti::UndetectableError& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const IllPosedError& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

// Rebuilds the detector of a scenario for another variant.
void switch_variant(sim::Scenario& sc, detect::Variant v) {
  if (sc.detector.variant() == v) return;
  const detect::DesignWeights w{presets::kPresetStateWeight, 1.0};
  bool have_gains = sc.detector.variant() != detect::Variant::no_feedback;
  switch (v) {
    case detect::Variant::no_feedback:
      sc.detector = detect::build_no_feedback_observer(sc.plant);
      break;
    case detect::Variant::naive:
      sc.detector = detect::build_naive_observer(
          sc.plant, have_gains ? sc.detector.gains() : detect::design_gains(sc.plant, w));
      break;
    case detect::Variant::retrofit:
      try {
        if (!have_gains) throw detect::GainRejected(0, "no gains");
        sc.detector = detect::build_retrofit_detector(sc.plant, sc.detector.gains());
      } catch (const detect::GainRejected&) {
        sc.detector = detect::build_retrofit_detector(sc.plant, w);
      }
      break;
  }
}

void apply_overrides(sim::Scenario& sc, const SimulateOptions& o) {
  if (o.seed) sc.seed = *o.seed;
  if (o.step) sc.step = *o.step;
  if (o.threshold) sc.threshold = *o.threshold;
  if (o.disconnect_mode) sc.disconnect_mode = sim::parse_disconnect_mode(*o.disconnect_mode);
  if (o.variant) switch_variant(sc, detect::parse_variant(*o.variant));
  sc.validate();
}

void summarize(std::ostream& out, const std::string& label, const sim::TraceLog& t,
               const fs::path& file) {
  out << "run " << label << ": " << t.rows() << " samples, variant "
      << t.metadata.at("variant") << ", trace " << file.string() << "\n";
  for (std::size_t i = 0; i < t.detection_time.size(); ++i) {
    if (t.detection_time[i]) {
      out << "  detection[" << i + 1 << "] t=" << num(*t.detection_time[i]) << "\n";
    }
  }
  for (const auto& e : t.events) {
    if (e.kind == sim::Event::Kind::disconnection) {
      out << "  disconnect " << e.subsystems.to_string() << " t=" << num(e.time) << "\n";
    }
  }
  out << "  diverged: " << (t.diverged ? "yes t=" + num(*t.divergence_time) : std::string("no"))
      << "\n";
}

}  // namespace

// ------------------------------------------------------------------ verify

int cmd_verify(const VerifyOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const io::NetworkDocument doc = io::load_network(o.network);
    const auto& plant = doc.network;
    bool ok = true;

    const double cond = net::loop_condition_number(plant);
    const bool posed = cond < o.condition_limit;
    out << "network: " << plant.size() << " subsystems, cond(I - Z M) = " << num(cond)
        << (posed ? " well-posed" : " ILL-POSED") << "\n";
    ok = ok && posed;

    net::ResilienceOptions ro;
    ro.margin = o.margin;
    ro.condition_limit = o.condition_limit;
    ro.stop_on_first_failure = o.early_exit;
    const auto rep = net::verify_disconnection_resilience(plant, ro);
    for (const auto& r : rep.subsets) print_subset(out, "subset ", r);
    out << "disconnection resilience: " << (rep.passed ? "PASS" : "FAIL");
    if (rep.first_failure) out << " (first failing subset " << rep.first_failure->to_string() << ")";
    out << "\n";
    ok = ok && rep.passed;

    if (o.detector) {
      const detect::Detector det = io::load_detector(*o.detector, plant);
      out << "detector: " << detect::to_string(det.variant()) << "\n";
      if (det.variant() == detect::Variant::retrofit) {
        for (std::size_t i = 0; i < plant.size(); ++i) {
          const auto c = detect::verify_retrofit_condition(plant.subsystem(i), det.gain(i));
          out << "retrofit[" << i + 1 << "] identity=" << (c.identity_ok ? "ok" : "FAIL")
              << " markov_ratio=" << num(c.markov_ratio)
              << " q_stable=" << (c.q_stable ? "yes" : "NO")
              << " plant_block_stable=" << (c.plant_block_stable ? "yes" : "no")
              << " injected_abscissa=" << num(c.injected_abscissa) << "\n";
          ok = ok && c.identity_ok && c.q_stable;
        }
      }
      const auto erep =
          net::verify_disconnection_resilience(detect::error_network(plant, det), ro);
      for (const auto& r : erep.subsets) print_subset(out, "error subset ", r);
      out << "error dynamics under disconnection: " << (erep.passed ? "PASS" : "FAIL");
      if (erep.first_failure) {
        out << " (first failing subset " << erep.first_failure->to_string() << ")";
      }
      out << "\n";
      ok = ok && erep.passed;
    }
    return ok ? kExitOk : kExitFailure;
  });
}

// ------------------------------------------------------------------ design

int cmd_design(const DesignOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const io::NetworkDocument doc = io::load_network(o.network);
    const detect::Detector det = detect::build_retrofit_detector(
        doc.network, detect::DesignWeights{o.state_weight, o.output_weight});
    for (std::size_t i = 0; i < det.size(); ++i) {
      const auto& s = doc.network.subsystem(i);
      const auto spec = lti::eigenvalues(s.a + det.gain(i) * s.c);
      out << "subsystem " << i + 1 << " spec(A + H C) =";
      for (const auto& z : spec.eigenvalues) out << " " << complex_text(z);
      out << (lti::is_hurwitz(s.a + det.gain(i) * s.c) ? "  Hurwitz" : "  NOT Hurwitz") << "\n";
    }
    if (o.out) {
      io::save_detector(*o.out, det);
      out << "wrote " << *o.out << "\n";
    } else {
      out << io::format_detector(det);
    }
    return kExitOk;
  });
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (o.scenario.has_value() == o.preset.has_value()) {
      throw InputError("simulate: give exactly one of --scenario or --preset");
    }
    std::vector<std::pair<std::string, sim::Scenario>> runs;
    std::string base;
    if (o.preset) {
      base = *o.preset;
      auto made = presets::make(*o.preset);
      bool filtered = false;
      if (o.variant) {
        for (auto& r : made) {
          if (r.label == detect::to_string(detect::parse_variant(*o.variant))) filtered = true;
        }
      }
      for (auto& r : made) {
        if (filtered && r.label != detect::to_string(detect::parse_variant(*o.variant))) continue;
        runs.emplace_back(r.label, std::move(r.scenario));
      }
    } else {
      sim::Scenario sc = io::load_scenario(*o.scenario);
      base = fs::path(*o.scenario).stem().string();
      runs.emplace_back(detect::to_string(sc.detector.variant()), std::move(sc));
    }

    for (auto& [label, sc] : runs) {
      apply_overrides(sc, o);
      const std::string tag = base + "_" + detect::to_string(sc.detector.variant());
      const sim::TraceLog trace = sim::simulate(sc);
      const fs::path file = fs::path(o.out) / (tag + ".csv");
      io::save_trace_csv(file, trace);
      if (o.long_format) {
        std::ostringstream ss;
        io::write_trace_long(ss, trace);
        io::write_file(fs::path(o.out) / (tag + "_long.csv"), ss.str());
      }
      summarize(out, base + "/" + detect::to_string(sc.detector.variant()), trace, file);
    }
    return kExitOk;
  });
}

// ------------------------------------------------------------------ report

int cmd_report(const ReportOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (o.traces.empty()) throw InputError("report: no traces given");
    std::vector<io::TraceTable> tables;
    std::vector<std::string> sources;
    for (const auto& p : o.traces) {
      tables.push_back(io::load_trace_csv(p));
      sources.push_back(fs::path(p).stem().string());
    }

    auto with_prefix = [](const io::TraceTable& t, const std::string& prefix) {
      std::vector<std::string> cols;
      for (const auto& c : t.columns) {
        if (c.rfind(prefix, 0) == 0) cols.push_back(c);
      }
      return cols;
    };
    const auto rho_cols = with_prefix(tables.front(), "rho[");
    const auto volt_cols = with_prefix(tables.front(), "voltage[");
    for (std::size_t k = 1; k < tables.size(); ++k) {
      if (with_prefix(tables[k], "rho[") != rho_cols ||
          with_prefix(tables[k], "voltage[") != volt_cols) {
        throw InputError("report: " + o.traces[k] + " has different columns than " +
                         o.traces.front());
      }
    }

    const std::string name =
        o.name ? *o.name : tables.front().meta("scenario", "report");
    auto index_of = [](const std::string& col) {
      return col.substr(col.find('[') + 1, col.find(']') - col.find('[') - 1);
    };

    const fs::path res_path = fs::path(o.out) / (name + "_residuals.csv");
    {
      std::ostringstream ss;
      ss << "source,t,subsystem,rho,threshold\n";
      for (std::size_t k = 0; k < tables.size(); ++k) {
        const auto& t = tables[k];
        const std::string thr = t.meta("threshold", "0.95");
        for (const auto& c : rho_cols) {
          const std::size_t ci = *t.column(c);
          for (std::size_t r = 0; r < t.time.size(); ++r) {
            ss << sources[k] << "," << io::format_double(t.time[r]) << "," << index_of(c) << ","
               << io::format_double(t.rows[r][ci]) << "," << thr << "\n";
          }
        }
      }
      io::write_file(res_path, ss.str());
      out << "wrote " << res_path.string() << "\n";
    }
    if (!volt_cols.empty()) {
      const fs::path volt_path = fs::path(o.out) / (name + "_voltages.csv");
      std::ostringstream ss;
      ss << "source,t,customer,voltage\n";
      for (std::size_t k = 0; k < tables.size(); ++k) {
        const auto& t = tables[k];
        for (const auto& c : volt_cols) {
          const std::size_t ci = *t.column(c);
          for (std::size_t r = 0; r < t.time.size(); ++r) {
            ss << sources[k] << "," << io::format_double(t.time[r]) << "," << index_of(c) << ","
               << io::format_double(t.rows[r][ci]) << "\n";
          }
        }
      }
      io::write_file(volt_path, ss.str());
      out << "wrote " << volt_path.string() << "\n";
    }
    return kExitOk;
  });
}

// ------------------------------------------------------------- build-feeder

int cmd_build_feeder(const BuildFeederOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const feeder::FeederSpec spec = o.feeder ? io::load_feeder(*o.feeder) : feeder::default_feeder();
    const feeder::Feeder f = feeder::build_feeder(spec);
    io::save_network(o.out, f.network, f.references);
    out << "wrote " << o.out << " (" << f.network.size() << " subsystems)\n";
    if (o.spec_out) {
      io::save_feeder(*o.spec_out, spec);
      out << "wrote " << *o.spec_out << "\n";
    }
    return kExitOk;
  });
}

// --------------------------------------------------------------------- run

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Disconnection-aware distributed attack detection toolkit", "retrofit-sentinel"};
  app.require_subcommand(1);

  VerifyOptions vo;
  auto* verify = app.add_subcommand("verify", "Check well-posedness, disconnection resilience "
                                              "and (optionally) a detector");
  verify->add_option("--network", vo.network, "Network file")->required();
  verify->add_option("--detector", vo.detector, "Detector file");
  verify->add_option("--margin", vo.margin, "Hurwitz margin")->capture_default_str();
  verify->add_option("--condition-limit", vo.condition_limit, "Well-posedness limit on cond(I - Z M)")
      ->capture_default_str();
  verify->add_flag("--early-exit", vo.early_exit, "Stop at the first failing subset");

  DesignOptions dopt;
  auto* design = app.add_subcommand("design", "Design retrofit observer gains");
  design->add_option("--network", dopt.network, "Network file")->required();
  design->add_option("--state-weight", dopt.state_weight, "Scalar state weight")->capture_default_str();
  design->add_option("--output-weight", dopt.output_weight, "Scalar output weight")
      ->capture_default_str();
  design->add_option("--out", dopt.out, "Detector file to write (stdout when absent)");

  SimulateOptions so;
  auto* simulate = app.add_subcommand("simulate", "Simulate a scenario or a named preset");
  simulate->add_option("--scenario", so.scenario, "Scenario file");
  simulate->add_option("--preset", so.preset, "fig2, fig3, fig6, fig7 or fig8");
  simulate->add_option("--out", so.out, "Output directory")->capture_default_str();
  simulate->add_flag("--long", so.long_format, "Also write long-format traces");
  simulate->add_option("--seed", so.seed, "Seed of the initial estimation error");
  simulate->add_option("--step", so.step, "Integration step");
  simulate->add_option("--threshold", so.threshold, "Detection threshold on the normalized residual");
  simulate->add_option("--variant", so.variant, "Detector variant")
      ->check(CLI::IsMember({"naive", "nofb", "retrofit"}));
  simulate->add_option("--disconnect-mode", so.disconnect_mode, "Disconnection semantics")
      ->check(CLI::IsMember({"subsystem", "dg-only"}));

  ReportOptions ro;
  auto* report = app.add_subcommand("report", "Turn traces into long-format plot data");
  report->add_option("--trace", ro.traces, "Trace CSV (repeatable)")->required();
  report->add_option("--out", ro.out, "Output directory")->capture_default_str();
  report->add_option("--name", ro.name, "Base name of the output files");

  BuildFeederOptions bo;
  auto* build = app.add_subcommand("build-feeder", "Write the network file of a feeder");
  build->add_option("--feeder", bo.feeder, "Feeder spec file (default feeder when absent)");
  build->add_option("--out", bo.out, "Network file to write")->required();
  build->add_option("--spec-out", bo.spec_out, "Also write the feeder spec used");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o_, e_;
    app.exit(e, o_, e_);
    out << o_.str();
    err << e_.str();
    return e.get_exit_code() == 0 ? kExitOk : kExitInput;
  }

  if (*verify) return cmd_verify(vo, out, err);
  if (*design) return cmd_design(dopt, out, err);
  if (*simulate) return cmd_simulate(so, out, err);
  if (*report) return cmd_report(ro, out, err);
  if (*build) return cmd_build_feeder(bo, out, err);
  return kExitInput;
}

}  // namespace sentinel::cli
