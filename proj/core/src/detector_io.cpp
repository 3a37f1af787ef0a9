#include "json_util.hpp"
#include "sentinel/io.hpp"

namespace sentinel::io {

using detail::json;

detect::Detector parse_detector(const std::string& text,
                                const net::InterconnectedNetwork& plant) {
  const json j = detail::parse_json(text, "detector");
  detail::check_format(j, "retrofit-sentinel/detector", "detector");
  const json& vj = detail::require(j, "variant", "detector");
  if (!vj.is_string()) throw InputError("detector: 'variant' must be a string");
  const detect::Variant variant = detect::parse_variant(vj.get<std::string>());
  if (variant == detect::Variant::no_feedback && !j.contains("gains")) {
    return detect::build_no_feedback_observer(plant);
  }
  const json& gj = detail::require(j, "gains", "detector");
  if (!gj.is_array() || gj.size() != plant.size()) {
    throw InputError("detector: 'gains' must list one matrix per subsystem (" +
                     std::to_string(plant.size()) + ")");
  }
  std::vector<Matrix> gains;
  for (std::size_t i = 0; i < gj.size(); ++i) {
    const auto d = plant.subsystem(i).dims();
    gains.push_back(detail::matrix(gj[i], d.nx, d.ny,
                                   "detector: gain " + std::to_string(i + 1)));
  }
  return detect::make_detector(variant, plant, std::move(gains));
}

std::string format_detector(const detect::Detector& detector) {
  json j;
  j["format"] = "retrofit-sentinel/detector";
  j["version"] = 1;
  j["variant"] = detect::to_string(detector.variant());
  json g = json::array();
  for (const auto& h : detector.gains()) g.push_back(detail::to_json(h));
  j["gains"] = std::move(g);
  return j.dump(2) + "\n";
}

detect::Detector load_detector(const std::filesystem::path& path,
                               const net::InterconnectedNetwork& plant) {
  try {
    return parse_detector(read_file(path), plant);
  } catch (const detect::GainRejected&) {
    throw;
  } catch (const Error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void save_detector(const std::filesystem::path& path, const detect::Detector& detector) {
  write_file(path, format_detector(detector));
}

}  // namespace sentinel::io
