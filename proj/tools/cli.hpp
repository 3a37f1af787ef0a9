#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

// Command implementations behind the retrofit-sentinel executable. Each
// returns the process exit code: 0 success, 1 verification or contract
// failure, 2 input error.
namespace sentinel::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInput = 2;

struct VerifyOptions {
  std::string network;
  std::optional<std::string> detector;
  double margin = 1e-7;
  double condition_limit = 1e12;
  bool early_exit = false;
};

struct DesignOptions {
  std::string network;
  double state_weight = 1.0;
  double output_weight = 1.0;
  std::optional<std::string> out;
};

struct SimulateOptions {
  std::optional<std::string> scenario;
  std::optional<std::string> preset;
  std::string out = ".";
  bool long_format = false;
  std::optional<unsigned long long> seed;
  std::optional<double> step;
  std::optional<double> threshold;
  std::optional<std::string> variant;
  std::optional<std::string> disconnect_mode;
};

struct ReportOptions {
  std::vector<std::string> traces;
  std::string out = ".";
  std::optional<std::string> name;
};

struct BuildFeederOptions {
  std::optional<std::string> feeder;
  std::string out;
  std::optional<std::string> spec_out;
};

int cmd_verify(const VerifyOptions& o, std::ostream& out, std::ostream& err);
int cmd_design(const DesignOptions& o, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err);
int cmd_report(const ReportOptions& o, std::ostream& out, std::ostream& err);
int cmd_build_feeder(const BuildFeederOptions& o, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches; usage errors return kExitInput.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sentinel::cli
