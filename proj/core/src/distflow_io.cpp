#include "json_util.hpp"
#include "sentinel/io.hpp"

namespace sentinel::io {

using detail::json;

namespace {

struct Field {
  const char* key;
  std::vector<double> feeder::FeederSpec::*member;
};

constexpr Field kFields[] = {
    {"r_line", &feeder::FeederSpec::r_line},
    {"x_line", &feeder::FeederSpec::x_line},
    {"r_service", &feeder::FeederSpec::r_service},
    {"x_service", &feeder::FeederSpec::x_service},
    {"active_power", &feeder::FeederSpec::active_power},
    {"reactive_load", &feeder::FeederSpec::reactive_load},
    {"time_constant", &feeder::FeederSpec::time_constant},
    {"droop_gain", &feeder::FeederSpec::droop_gain},
    {"reference_voltage", &feeder::FeederSpec::reference_voltage},
};

}  // namespace

// Missing fields take the uniform-feeder defaults; a scalar is broadcast to
// every customer. The size comes from "customers" or the first array given.
feeder::FeederSpec parse_feeder(const std::string& text) {
  const json j = detail::parse_json(text, "feeder");
  detail::check_format(j, "retrofit-sentinel/feeder", "feeder");
  std::size_t n = feeder::default_feeder().size();
  if (j.contains("customers")) {
    n = static_cast<std::size_t>(detail::count(j.at("customers"), "feeder: customers"));
  } else {
    for (const auto& f : kFields) {
      if (j.contains(f.key) && j.at(f.key).is_array()) {
        n = j.at(f.key).size();
        break;
      }
    }
  }
  if (n == 0) throw InputError("feeder: no customers");
  feeder::FeederSpec spec = feeder::uniform_feeder(n);
  for (const auto& f : kFields) {
    if (!j.contains(f.key)) continue;
    const json& a = j.at(f.key);
    const std::string ctx = std::string("feeder: ") + f.key;
    auto& dst = spec.*(f.member);
    if (a.is_number()) {
      dst.assign(n, detail::number(a, ctx));
      continue;
    }
    if (!a.is_array()) throw InputError(ctx + " must be a number or an array");
    dst.clear();
    for (const auto& x : a) dst.push_back(detail::number(x, ctx));
  }
  if (j.contains("substation_voltage")) {
    spec.substation_voltage = detail::number(j.at("substation_voltage"), "feeder: substation_voltage");
  }
  spec.validate();
  return spec;
}

std::string format_feeder(const feeder::FeederSpec& spec) {
  json j;
  j["format"] = "retrofit-sentinel/feeder";
  j["version"] = 1;
  j["substation_voltage"] = spec.substation_voltage;
  for (const auto& f : kFields) j[f.key] = spec.*(f.member);
  return j.dump(2) + "\n";
}

feeder::FeederSpec load_feeder(const std::filesystem::path& path) {
  try {
    return parse_feeder(read_file(path));
  } catch (const Error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void save_feeder(const std::filesystem::path& path, const feeder::FeederSpec& spec) {
  write_file(path, format_feeder(spec));
}

}  // namespace sentinel::io
