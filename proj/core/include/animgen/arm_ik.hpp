#pragma once

#include <span>
#include <vector>

#include "animgen/avatar.hpp"
#include "animgen/math.hpp"

namespace animgen {

// Stacked elliptical cross-sections through the torso surface sites, used for
// the two collision rules: keeping the upper arm out of the body and lifting
// contact paths off the body surface.
struct TorsoProxy {
  struct Section {
    double height = 0;             // global Y
    double centre_x = 0, centre_z = 0;
    double radius_x = 0, radius_z = 0;
  };
  std::vector<Section> sections;  // ordered by height
  double margin = 0.015;

  // Signed distance to the proxy surface at the point's height; positive
  // outside. Exact (iterative point-to-ellipse, deterministic).
  double clearance(const Vec3& p) const;

  // Strict interior test against the margin-inflated surface: a point exactly
  // at `margin` clearance counts as clear.
  bool blocked(const Vec3& p) const { return clearance(p) < margin; }

  // Smallest outward move along the section radial that reaches the given
  // clearance; identity when already clear.
  Vec3 push_out(const Vec3& p, double min_clearance) const;
};

TorsoProxy build_torso_proxy(const AvatarDescription& avatar, const GlobalPose& pose);

struct ArmSolution {
  Quat clavicle = Quat::Identity();  // local rotations
  Quat shoulder = Quat::Identity();
  Quat elbow = Quat::Identity();
  Quat wrist = Quat::Identity();
  double alpha_used = 0;
  bool clavicle_engaged = false;
  bool adjusted_for_collision = false;
  bool clamped_to_reach = false;
  bool wrist_clamped = false;

  // solve context, kept so collision avoidance can re-derive the chain
  Side side = Side::Right;
  Vec3 wrist_target = Vec3::Zero();   // after any reach clamping
  Quat hand_orientation = Quat::Identity();
  Vec3 shoulder_position = Vec3::Zero();  // after clavicle engagement
};

// Swivel of the arm plane away from the vertical plane through shoulder and
// wrist: zero with the hand on its own side, alpha_max with the hand fully
// across the body, smoothstep in between.
double swivel_angle(double lateral_factor, const ArmSolverConfig& config);

// Analytic two-bone solve with the signing arm rules: swivel by lateral
// reach, wrist limits enforced (the swivel gets a bounded correction first
// when the wrist would clamp), clavicle engagement beyond 90% of arm length,
// and a final collision pass that raises the elbow clear of the torso.
// Unreachable targets are clamped onto the reach sphere and flagged.
ArmSolution solve_arm(const AvatarDescription& avatar, Side side, const Vec3& wrist_target,
                      const Quat& hand_orientation, const TorsoProxy& torso);

// Raise the elbow (increase swivel) until every sampled upper-arm point
// clears the proxy by its margin, up to alpha = pi/2. Never moves the wrist.
ArmSolution avoid_torso(const ArmSolution& solution, const AvatarDescription& avatar,
                        const TorsoProxy& torso);

// Hot-path overloads taking a precomputed rest pose.
ArmSolution solve_arm(const AvatarDescription& avatar, Side side, const Vec3& wrist_target,
                      const Quat& hand_orientation, const TorsoProxy& torso,
                      const GlobalPose& rest);
ArmSolution avoid_torso(const ArmSolution& solution, const AvatarDescription& avatar,
                        const TorsoProxy& torso, const GlobalPose& rest);

// Push the interior points of a path to at least `margin` outside the proxy;
// the endpoints (which may be legitimate surface contacts) stay put.
std::vector<Vec3> offset_path_from_torso(std::span<const Vec3> path, const TorsoProxy& torso);

}  // namespace animgen
