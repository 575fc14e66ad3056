#pragma once

#include <map>
#include <string>
#include <vector>

#include "animgen/arm_ik.hpp"
#include "animgen/avatar.hpp"
#include "animgen/body_language.hpp"
#include "animgen/posture.hpp"
#include "animgen/trajectory.hpp"

namespace animgen {

// One output frame: local bone rotations in canonical skeleton order plus a
// weight for each avatar morph.
struct MotionFrame {
  int index = 0;
  double time = 0;
  std::vector<Quat> bone_rotations;
  std::map<std::string, double> morph_weights;
};

// Point at arc-length fraction s along the path (linear in distance
// travelled: arcs and circles advance by angle).
Vec3 path_point(const PathSpec& path, double s);

// Shortest-arc spherical interpolation, constant angular velocity in u.
Quat interpolate_orientation(const Quat& q0, const Quat& q1, double u);

// Attack / sustain / release envelope over [0, total]: ramps to 1 during the
// attack, holds, ramps back to 0 during the release. When total is shorter
// than attack + release the two ramps shrink proportionally.
double nonmanual_envelope(const EnvelopeSpec& env, double t, double total);

struct GenerationResult {
  std::vector<MotionFrame> frames;
  std::vector<Diagnostic> diagnostics;
  double total_duration = 0;
};

// The full pipeline: expand symmetry, plan key postures sign by sign, then
// sample frames at exact multiples of 1/fps. Per frame and per hand the
// trajectory fraction s places the hand point on its path, the orientation
// slerps and the handshape interpolates at the same s, the wrist position
// follows from hand point and orientation, and the arm solver fills in the
// clavicle-to-wrist rotations. Frame count is ceil(total duration x fps).
GenerationResult generate_frames(const SignDocument& doc, const AvatarDescription& avatar,
                                 const BodyLanguageProfile& profile,
                                 const TrajectoryTableSet& tables, double fps);

// Convenience overload that builds the trajectory tables first.
GenerationResult generate_frames(const SignDocument& doc, const AvatarDescription& avatar,
                                 const BodyLanguageProfile& profile, double fps);

}  // namespace animgen
