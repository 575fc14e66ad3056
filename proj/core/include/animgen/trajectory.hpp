#pragma once

#include <array>
#include <map>
#include <vector>

#include "animgen/body_language.hpp"

namespace animgen {

struct ControllerState {
  double t = 0;      // seconds
  double x = 0;      // fraction of the distance travelled (reference is 1)
  double x_dot = 0;  // 1/s
};

// Precomputed f:[0,1] -> [0,1]: after a fraction k of the movement's duration
// the hand has covered a fraction f(k) of its path. Time is normalized so the
// 99% settle point sits at k = 1.
struct TrajectoryTable {
  Manner manner = Manner::Targetted;
  std::array<double, 257> samples{};
  double settle_time = 0;  // unnormalized seconds for the profile's gains
};

// Fixed-step RK4 integration of the cascade controller
//
//   x_dot_r = k g(e) (x_r - x),   x_ddot = k' g(e) (x_dot_r - x_dot)
//
// with x_r = 1 and the stiffening schedule g(e) = 1 + c (1 - clamp(e, 0, 1)),
// e = x_r - x; both gains scale together so k'/k stays fixed. With c = 0 this
// is the damped harmonic system x_ddot + k' x_dot + k k' x = k k'.
// Throws std::invalid_argument for non-positive dt or when dt is too coarse
// (dt * k' (1 + c) must stay below 0.1).
std::vector<ControllerState> simulate_controller(const ControllerParams& params, double dt,
                                                 double horizon);

// Simulate, locate the 99% settle time (sudden_stop instead truncates at the
// first x >= 1), rescale time to [0,1] and resample 257 points. The linear
// manner skips simulation: f(k) = k with smooth 5%-wide entry and exit ramps.
// Throws std::runtime_error when the gains never settle within the horizon.
TrajectoryTable build_trajectory_table(Manner manner, const BodyLanguageProfile& profile);

// Piecewise-linear evaluation; k is clamped to [0,1].
double eval_trajectory(const TrajectoryTable& table, double k);

// One table per manner, built once per profile before generation starts.
class TrajectoryTableSet {
 public:
  static TrajectoryTableSet build(const BodyLanguageProfile& profile);
  const TrajectoryTable& table(Manner m) const {
    return tables_[static_cast<size_t>(m)];
  }
  const TrajectoryTable& for_manners(const MannerSet& manners) const {
    return table(dominant_manner(manners));
  }

 private:
  std::array<TrajectoryTable, kMannerCount> tables_;
};

}  // namespace animgen
