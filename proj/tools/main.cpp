#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "animgen/runner.hpp"

using animgen::RunConfig;

int main(int argc, char** argv) {
  CLI::App app{"SiGML signing-gesture animation synthesis"};
  app.require_subcommand(1);

  RunConfig config;
  std::string format = "jsonl";
  std::string manner = "targetted";

  auto add_io = [&](CLI::App* cmd, bool needs_sigml, bool needs_avatar) {
    if (needs_sigml) cmd->add_option("--sigml", config.sigml_path, "SiGML input file")->required();
    if (needs_avatar) {
      cmd->add_option("--avatar", config.avatar_path, "avatar description JSON")->required();
    }
    cmd->add_option("--profile", config.profile_path, "body-language profile JSON")->required();
    cmd->add_option("--out", config.out_path, "output file (default: stdout)");
  };

  CLI::App* animate = app.add_subcommand("animate", "generate motion frames");
  add_io(animate, true, true);
  animate->add_option("--fps", config.fps, "frames per second")->check(CLI::PositiveNumber);
  animate->add_option("--format", format, "jsonl or csv")
      ->check(CLI::IsMember({"jsonl", "csv"}));

  CLI::App* check = app.add_subcommand("check", "parse and validate a SiGML file");
  check->add_option("--sigml", config.sigml_path, "SiGML input file")->required();

  CLI::App* bench = app.add_subcommand("bench", "measure generation throughput");
  add_io(bench, true, true);
  bench->add_option("--fps", config.fps, "frames per second")->check(CLI::PositiveNumber);
  bench->add_option("--repeats", config.bench_repeats, "generation runs to time")
      ->check(CLI::PositiveNumber);

  CLI::App* size = app.add_subcommand("size", "compare SiGML size against motion-data size");
  add_io(size, true, true);
  size->add_option("--fps", config.fps, "frames per second")->check(CLI::PositiveNumber);

  CLI::App* table = app.add_subcommand("table", "dump a trajectory table as CSV");
  table->add_option("--profile", config.profile_path, "body-language profile JSON")->required();
  table->add_option("--manner", manner, "trajectory manner");
  table->add_option("--out", config.out_path, "output file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  if (animate->parsed()) {
    config.command = RunConfig::Command::Animate;
    config.format = format == "csv" ? RunConfig::Format::Csv : RunConfig::Format::Jsonl;
  } else if (check->parsed()) {
    config.command = RunConfig::Command::Check;
  } else if (bench->parsed()) {
    config.command = RunConfig::Command::Bench;
  } else if (size->parsed()) {
    config.command = RunConfig::Command::Size;
  } else if (table->parsed()) {
    config.command = RunConfig::Command::Table;
    const auto m = animgen::manner_from_string(manner);
    if (!m) {
      std::cerr << "error: unknown manner \"" << manner << "\"\n";
      return animgen::kExitDiagnostics;
    }
    config.table_manner = *m;
  }

  return animgen::run_command(config, std::cout, std::cerr);
}
