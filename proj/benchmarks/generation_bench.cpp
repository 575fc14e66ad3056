#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include "animgen/animation.hpp"
#include "animgen/avatar.hpp"
#include "animgen/body_language.hpp"
#include "animgen/sigml.hpp"
#include "animgen/trajectory.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Bench {
  animgen::SignDocument document;
  animgen::AvatarDescription avatar;
  animgen::BodyLanguageProfile profile;
  animgen::TrajectoryTableSet tables;

  static const Bench& instance() {
    static Bench b = [] {
      Bench bench;
      const std::string base = ANIMGEN_DATA_DIR;
      bench.document =
          *animgen::parse_sigml(slurp(base + "/sigml/here.sigml")).document;
      bench.avatar =
          *animgen::load_avatar_file(base + "/avatars/reference_avatar.json").avatar;
      bench.profile =
          *animgen::load_profile_file(base + "/profiles/default_profile.json").profile;
      bench.tables = animgen::TrajectoryTableSet::build(bench.profile);
      return bench;
    }();
    return b;
  }
};

void BM_GenerateFrames(benchmark::State& state) {
  const Bench& b = Bench::instance();
  size_t frames = 0;
  for (auto _ : state) {
    auto result = animgen::generate_frames(b.document, b.avatar, b.profile, b.tables, 25.0);
    frames += result.frames.size();
    benchmark::DoNotOptimize(result);
  }
  state.counters["frames_per_second"] =
      benchmark::Counter(static_cast<double>(frames), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_GenerateFrames);

void BM_ParseSigml(benchmark::State& state) {
  const std::string text = slurp(std::string(ANIMGEN_DATA_DIR) + "/sigml/here.sigml");
  for (auto _ : state) {
    auto result = animgen::parse_sigml(text);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_ParseSigml);

void BM_SolveArm(benchmark::State& state) {
  const Bench& b = Bench::instance();
  const animgen::GlobalPose rest = animgen::rest_pose(b.avatar);
  const animgen::TorsoProxy torso = animgen::build_torso_proxy(b.avatar, rest);
  const animgen::Vec3 target(-0.15, 1.2, 0.25);
  for (auto _ : state) {
    auto sol = animgen::solve_arm(b.avatar, animgen::Side::Right, target,
                                  animgen::Quat::Identity(), torso, rest);
    benchmark::DoNotOptimize(sol);
  }
}
BENCHMARK(BM_SolveArm);

void BM_BuildTables(benchmark::State& state) {
  const Bench& b = Bench::instance();
  for (auto _ : state) {
    auto tables = animgen::TrajectoryTableSet::build(b.profile);
    benchmark::DoNotOptimize(tables);
  }
}
BENCHMARK(BM_BuildTables);

}  // namespace

BENCHMARK_MAIN();
