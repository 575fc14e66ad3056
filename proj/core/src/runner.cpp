#include "animgen/runner.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "animgen/animation.hpp"
#include "animgen/avatar.hpp"
#include "animgen/body_language.hpp"
#include "animgen/sigml.hpp"
#include "animgen/trajectory.hpp"

namespace animgen {

std::string format_float(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

namespace {

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_diagnostics(const std::vector<Diagnostic>& diags, std::ostream& err) {
  for (const Diagnostic& d : diags) err << to_string(d) << "\n";
}

struct Inputs {
  SignDocument document;
  AvatarDescription avatar;
  BodyLanguageProfile profile;
  size_t sigml_bytes = 0;
};

// Loads and validates everything; returns an exit code != kExitOk on failure.
int load_inputs(const RunConfig& config, std::ostream& err, Inputs& inputs) {
  const auto sigml_text = read_file(config.sigml_path);
  if (!sigml_text) {
    err << "error: " << config.sigml_path << ": cannot open file\n";
    return kExitIo;
  }
  inputs.sigml_bytes = sigml_text->size();

  ParseResult parsed = parse_sigml(*sigml_text);
  print_diagnostics(parsed.diagnostics, err);
  if (!parsed.ok()) return kExitDiagnostics;

  const std::vector<Diagnostic> semantic = validate(*parsed.document);
  print_diagnostics(semantic, err);
  if (has_errors(semantic)) return kExitDiagnostics;
  inputs.document = std::move(*parsed.document);

  AvatarLoadResult avatar = load_avatar_file(config.avatar_path);
  print_diagnostics(avatar.diagnostics, err);
  if (!avatar.ok()) {
    return read_file(config.avatar_path) ? kExitDiagnostics : kExitIo;
  }
  inputs.avatar = std::move(*avatar.avatar);

  ProfileLoadResult profile = load_profile_file(config.profile_path);
  print_diagnostics(profile.diagnostics, err);
  if (!profile.ok()) {
    return read_file(config.profile_path) ? kExitDiagnostics : kExitIo;
  }
  inputs.profile = std::move(*profile.profile);
  return kExitOk;
}

void write_jsonl(const GenerationResult& result, std::ostream& out) {
  for (const MotionFrame& f : result.frames) {
    out << "{\"index\":" << f.index << ",\"time\":" << format_float(f.time)
        << ",\"rotations\":[";
    for (size_t i = 0; i < f.bone_rotations.size(); ++i) {
      const Quat& q = f.bone_rotations[i];
      if (i) out << ",";
      out << "[" << format_float(q.w()) << "," << format_float(q.x()) << ","
          << format_float(q.y()) << "," << format_float(q.z()) << "]";
    }
    out << "],\"morphs\":{";
    bool first = true;
    for (const auto& [name, w] : f.morph_weights) {
      if (!first) out << ",";
      first = false;
      out << "\"" << name << "\":" << format_float(w);
    }
    out << "}}\n";
  }
}

void write_csv(const GenerationResult& result, const AvatarDescription& avatar,
               std::ostream& out) {
  out << "index,time";
  for (const Bone& b : avatar.skeleton.bones) {
    out << "," << b.name << ".w," << b.name << ".x," << b.name << ".y," << b.name << ".z";
  }
  for (const std::string& m : avatar.morphs) out << "," << m;
  out << "\n";
  for (const MotionFrame& f : result.frames) {
    out << f.index << "," << format_float(f.time);
    for (const Quat& q : f.bone_rotations) {
      out << "," << format_float(q.w()) << "," << format_float(q.x()) << ","
          << format_float(q.y()) << "," << format_float(q.z());
    }
    for (const auto& [name, w] : f.morph_weights) out << "," << format_float(w);
    out << "\n";
  }
}

int with_output(const RunConfig& config, std::ostream& fallback, std::ostream& err,
                const std::function<void(std::ostream&)>& body) {
  if (config.out_path.empty()) {
    body(fallback);
    return kExitOk;
  }
  std::ofstream file(config.out_path, std::ios::binary);
  if (!file) {
    err << "error: " << config.out_path << ": cannot open for writing\n";
    return kExitIo;
  }
  body(file);
  return file.good() ? kExitOk : kExitIo;
}

int run_animate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  Inputs inputs;
  if (const int rc = load_inputs(config, err, inputs); rc != kExitOk) return rc;
  const GenerationResult result =
      generate_frames(inputs.document, inputs.avatar, inputs.profile, config.fps);
  print_diagnostics(result.diagnostics, err);
  return with_output(config, out, err, [&](std::ostream& sink) {
    if (config.format == RunConfig::Format::Jsonl) {
      write_jsonl(result, sink);
    } else {
      write_csv(result, inputs.avatar, sink);
    }
  });
}

int run_check(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto sigml_text = read_file(config.sigml_path);
  if (!sigml_text) {
    err << "error: " << config.sigml_path << ": cannot open file\n";
    return kExitIo;
  }
  ParseResult parsed = parse_sigml(*sigml_text);
  print_diagnostics(parsed.diagnostics, err);
  if (!parsed.ok()) return kExitDiagnostics;
  const std::vector<Diagnostic> semantic = validate(*parsed.document);
  print_diagnostics(semantic, err);
  if (has_errors(semantic)) return kExitDiagnostics;
  out << "ok: " << parsed.document->signs.size() << " sign(s)\n";
  return kExitOk;
}

int run_bench(const RunConfig& config, std::ostream& out, std::ostream& err) {
  Inputs inputs;
  if (const int rc = load_inputs(config, err, inputs); rc != kExitOk) return rc;

  // parse and table building stay outside the timed region
  const TrajectoryTableSet tables = TrajectoryTableSet::build(inputs.profile);
  GenerationResult reference =
      generate_frames(inputs.document, inputs.avatar, inputs.profile, tables, config.fps);

  size_t frames = 0;
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < config.bench_repeats; ++i) {
    const GenerationResult r =
        generate_frames(inputs.document, inputs.avatar, inputs.profile, tables, config.fps);
    frames += r.frames.size();
  }
  const auto stop = std::chrono::steady_clock::now();
  const double seconds = std::chrono::duration<double>(stop - start).count();
  const double fps = (frames == 0 || seconds <= 0.0) ? 0.0
                                                     : static_cast<double>(frames) / seconds;
  (void)reference;
  out << "frames_per_second=" << format_float(fps) << "\n";
  return kExitOk;
}

int run_size(const RunConfig& config, std::ostream& out, std::ostream& err) {
  Inputs inputs;
  if (const int rc = load_inputs(config, err, inputs); rc != kExitOk) return rc;
  const GenerationResult result =
      generate_frames(inputs.document, inputs.avatar, inputs.profile, config.fps);
  // the conventional uncompressed accounting: one Euler triple of 4-byte
  // floats per bone per frame
  const size_t motion_bytes =
      result.frames.size() * inputs.avatar.skeleton.bones.size() * 3 * 4;
  out << "sigml_bytes=" << inputs.sigml_bytes << "\n";
  out << "motion_bytes=" << motion_bytes << "\n";
  if (motion_bytes == 0) {
    out << "ratio=0\n";
    out << "note=empty document\n";
  } else {
    out << "ratio="
        << format_float(static_cast<double>(motion_bytes) /
                        static_cast<double>(inputs.sigml_bytes))
        << "\n";
  }
  return kExitOk;
}

int run_table(const RunConfig& config, std::ostream& out, std::ostream& err) {
  ProfileLoadResult profile = load_profile_file(config.profile_path);
  print_diagnostics(profile.diagnostics, err);
  if (!profile.ok()) {
    return read_file(config.profile_path) ? kExitDiagnostics : kExitIo;
  }
  const TrajectoryTable table = build_trajectory_table(config.table_manner, *profile.profile);
  return with_output(config, out, err, [&](std::ostream& sink) {
    sink << "k,f\n";
    for (size_t i = 0; i < table.samples.size(); ++i) {
      sink << format_float(static_cast<double>(i) / 256.0) << ","
           << format_float(table.samples[i]) << "\n";
    }
  });
}

}  // namespace

int run_command(const RunConfig& config, std::ostream& out, std::ostream& err) {
  switch (config.command) {
    case RunConfig::Command::Animate: return run_animate(config, out, err);
    case RunConfig::Command::Check: return run_check(config, out, err);
    case RunConfig::Command::Bench: return run_bench(config, out, err);
    case RunConfig::Command::Size: return run_size(config, out, err);
    case RunConfig::Command::Table: return run_table(config, out, err);
  }
  return kExitIo;
}

}  // namespace animgen
