#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "animgen/manner.hpp"

namespace animgen {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDiagnostics = 1;  // parse/validate errors
inline constexpr int kExitIo = 2;           // unreadable/unwritable files

struct RunConfig {
  enum class Command { Animate, Check, Bench, Table, Size };
  enum class Format { Jsonl, Csv };

  Command command = Command::Animate;
  std::string sigml_path;
  std::string avatar_path;
  std::string profile_path;
  double fps = 25.0;
  std::string out_path;  // empty: stdout
  Format format = Format::Jsonl;
  int bench_repeats = 100;
  Manner table_manner = Manner::Targetted;
};

// Fixed 9-significant-digit float formatting; output is bit-exact across runs.
std::string format_float(double v);

// animate: write one frame per line (jsonl) or row (csv).
// check:   parse + validate, print diagnostics only.
// bench:   time generation only (parse and tables excluded), print
//          frames_per_second=<value>.
// size:    compare SiGML bytes against uncompressed motion-data bytes
//          (frames x bones x 3 angles x 4 bytes).
// table:   dump a trajectory table as CSV (k, f).
int run_command(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace animgen
