#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qkdfs/config.hpp"
#include "qkdfs/keyrate.hpp"
#include "qkdfs/simulate.hpp"

namespace qkdfs {

/// Process exit codes.
enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_domain = 3 };

/// Runs the command line `args` (without the program name). Output goes to
/// `out` unless --out names a file; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// One `--sweep KEY=START:STOP:STEPS[:log]` axis.
struct SweepAxis {
  std::string key;
  double start = 0.0;
  double stop = 0.0;
  int steps = 1;
  bool log_spaced = false;

  static SweepAxis parse(const std::string& text);
  std::vector<double> points() const;
};

ChannelModel channel_from(const RunConfig& cfg);
/// Budget defaults follow the source; any epsilon key present overrides its item.
EpsilonBudget budget_from(const RunConfig& cfg, SourceKind source);
ProtocolParams params_from(const RunConfig& cfg, SourceKind source);

/// 12 significant digits, C locale.
std::string format_number(double v);

}  // namespace qkdfs
