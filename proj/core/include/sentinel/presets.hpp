#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sentinel/detector.hpp"
#include "sentinel/distflow.hpp"
#include "sentinel/simkit.hpp"

// Named scenarios over the default feeder and the two-subsystem witness.
namespace sentinel::presets {

/// Observer design weight used by the feeder presets (output weight 1).
inline constexpr double kPresetStateWeight = 25.0;

/// Customer whose squared-voltage reference is fabricated (0-based: 4th).
inline constexpr std::size_t kAttackedCustomer = 3;
inline constexpr double kAttackOnset = 1.0;
inline constexpr double kDisconnectTime = 5.0;

struct Run {
  std::string label;  ///< e.g. "retrofit", "nofb"
  sim::Scenario scenario;
};

std::vector<std::string> names();

/// Throws InputError for an unknown name.
std::vector<Run> make(std::string_view name);

/// Plant, references and voltage probes of a feeder, with the requested
/// detector variant (naive uses the designed gains without rectifier).
sim::Scenario feeder_scenario(const feeder::FeederSpec& spec, detect::Variant variant,
                              const detect::DesignWeights& weights = {kPresetStateWeight, 1.0});

/// The removed customers {3,4,5} of the disconnection presets (0-based).
net::SubsystemSet tail_customers();

}  // namespace sentinel::presets
