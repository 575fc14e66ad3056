#include "animgen/arm_ik.hpp"

#include <algorithm>
#include <cmath>

namespace animgen {

namespace {

// Distance from a point to an ellipse with semi-axes (a, b), centred at the
// origin. Bisection on the boundary angle in the first quadrant; deterministic.
double point_ellipse_distance(double a, double b, double px, double pz, bool* inside_out) {
  const double x = std::abs(px), z = std::abs(pz);
  const bool inside = (px / a) * (px / a) + (pz / b) * (pz / b) < 1.0;
  if (inside_out) *inside_out = inside;
  if (x < 1e-12 && z < 1e-12) return -std::min(a, b);

  auto deriv = [&](double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return (b * b - a * a) * s * c + a * x * s - b * z * c;
  };
  double lo = 0.0, hi = kPi / 2;
  for (int i = 0; i < 60; ++i) {
    const double mid_theta = 0.5 * (lo + hi);
    if (deriv(mid_theta) <= 0.0) {
      lo = mid_theta;
    } else {
      hi = mid_theta;
    }
  }
  const double theta = 0.5 * (lo + hi);
  const double qx = a * std::cos(theta), qz = b * std::sin(theta);
  const double dist = std::hypot(qx - x, qz - z);
  return inside ? -dist : dist;
}

}  // namespace

double TorsoProxy::clearance(const Vec3& p) const {
  if (sections.empty()) return 1e9;
  Section s;
  if (p.y() <= sections.front().height) {
    s = sections.front();
  } else if (p.y() >= sections.back().height) {
    s = sections.back();
  } else {
    size_t i = 1;
    while (i < sections.size() && sections[i].height < p.y()) ++i;
    const Section& lo = sections[i - 1];
    const Section& hi = sections[i];
    const double t = (p.y() - lo.height) / (hi.height - lo.height);
    s.height = p.y();
    s.centre_x = lerp(lo.centre_x, hi.centre_x, t);
    s.centre_z = lerp(lo.centre_z, hi.centre_z, t);
    s.radius_x = lerp(lo.radius_x, hi.radius_x, t);
    s.radius_z = lerp(lo.radius_z, hi.radius_z, t);
  }
  return point_ellipse_distance(s.radius_x, s.radius_z, p.x() - s.centre_x, p.z() - s.centre_z,
                                nullptr);
}

Vec3 TorsoProxy::push_out(const Vec3& p, double min_clearance) const {
  Vec3 q = p;
  double c = clearance(q);
  if (c >= min_clearance) return q;

  // radial direction of the section at this height
  Section s = sections.front();
  for (size_t i = 1; i < sections.size(); ++i) {
    if (p.y() >= sections[i - 1].height &&
        (p.y() <= sections[i].height || i + 1 == sections.size())) {
      const double span = sections[i].height - sections[i - 1].height;
      const double t = span > 0 ? clamp01((p.y() - sections[i - 1].height) / span) : 0.0;
      s.centre_x = lerp(sections[i - 1].centre_x, sections[i].centre_x, t);
      s.centre_z = lerp(sections[i - 1].centre_z, sections[i].centre_z, t);
      break;
    }
  }
  Vec3 radial(q.x() - s.centre_x, 0.0, q.z() - s.centre_z);
  if (radial.norm() < 1e-9) radial = Vec3(0, 0, 1);
  radial.normalize();
  for (int i = 0; i < 12 && c < min_clearance; ++i) {
    q += radial * (min_clearance - c) * 1.0001;
    c = clearance(q);
  }
  return q;
}

TorsoProxy build_torso_proxy(const AvatarDescription& avatar, const GlobalPose& pose) {
  TorsoProxy proxy;
  proxy.margin = avatar.arm_solver.torso_margin;
  const struct {
    const char *front, *back, *left, *right;
  } levels[] = {
      {"stomach_centre", "stomach_back", "stomach_left", "stomach_right"},
      {"chest_centre", "chest_back", "chest_left", "chest_right"},
      {"shoulders_centre", "shoulders_back", "shoulder_left", "shoulder_right"},
  };
  for (const auto& lv : levels) {
    const Vec3 f = site_position(avatar, pose, lv.front);
    const Vec3 b = site_position(avatar, pose, lv.back);
    const Vec3 l = site_position(avatar, pose, lv.left);
    const Vec3 r = site_position(avatar, pose, lv.right);
    TorsoProxy::Section s;
    s.height = 0.25 * (f.y() + b.y() + l.y() + r.y());
    s.centre_x = 0.5 * (l.x() + r.x());
    s.centre_z = 0.5 * (f.z() + b.z());
    s.radius_x = 0.5 * std::abs(l.x() - r.x());
    s.radius_z = 0.5 * std::abs(f.z() - b.z());
    proxy.sections.push_back(s);
  }
  std::sort(proxy.sections.begin(), proxy.sections.end(),
            [](const auto& a, const auto& b) { return a.height < b.height; });
  return proxy;
}

// ---------------------------------------------------------------------------
// Arm solve
// ---------------------------------------------------------------------------

namespace {

struct ChainFrames {
  Vec3 elbow = Vec3::Zero();
  Quat upper_global = Quat::Identity();
  Quat fore_global = Quat::Identity();
};

// Place the elbow on the swivel circle and orient the two segments.
// alpha = 0 keeps the elbow in the vertical plane through shoulder and wrist,
// below the shoulder-wrist line; growing alpha swings it forward and up.
ChainFrames chain_at_alpha(const Vec3& shoulder, const Vec3& wrist, double upper, double fore,
                           double alpha, Side side, const ArmChain& chain) {
  ChainFrames out;
  const Vec3 sw = wrist - shoulder;
  const double d = sw.norm();
  const Vec3 n = sw / d;

  double cos_up = (upper * upper + d * d - fore * fore) / (2.0 * upper * d);
  cos_up = std::clamp(cos_up, -1.0, 1.0);
  const double proj = upper * cos_up;
  const double radius = upper * std::sqrt(std::max(0.0, 1.0 - cos_up * cos_up));
  const Vec3 centre = shoulder + proj * n;

  Vec3 down = Vec3(0, -1, 0) - Vec3(0, -1, 0).dot(n) * n;
  if (down.norm() < 1e-6) {
    down = Vec3(0, 0, -1) - Vec3(0, 0, -1).dot(n) * n;
  }
  down.normalize();
  Vec3 u = n.cross(down);
  const double outward_x = side == Side::Right ? -1.0 : 1.0;
  if (u.z() + 0.1 * outward_x * u.x() < 0.0) u = -u;

  out.elbow = centre + radius * (std::cos(alpha) * down + std::sin(alpha) * u);

  const Vec3 upper_dir = (out.elbow - shoulder).normalized();
  const Vec3 fore_dir = (wrist - out.elbow).normalized();
  Vec3 hinge = upper_dir.cross(fore_dir);
  if (hinge.norm() < 1e-9) hinge = u;  // straight arm: hinge along the swivel tangent
  hinge.normalize();

  out.upper_global = frame_rotation(chain.elbow_rest_dir, chain.elbow_hinge_axis, upper_dir, hinge);
  out.fore_global = frame_rotation(chain.elbow_rest_dir, chain.elbow_hinge_axis, fore_dir, hinge);
  return out;
}

struct WristFit {
  Quat wrist_local = Quat::Identity();
  double violation = 0;  // radians clamped away
  bool clamped = false;
};

// Wrist = what remains between the forearm frame and the requested hand
// orientation; twist about the forearm axis is free (pronation), the swing is
// clamped to the flexion/extension and radial/ulnar limits.
WristFit fit_wrist(const Quat& fore_global, const Quat& hand_orientation,
                   const HandLayout& layout, const ArmChain& chain, const WristLimits& limits) {
  WristFit fit;
  const Quat raw = fore_global.conjugate() * hand_orientation;
  const Vec3 longitudinal = chain.elbow_rest_dir;  // towards the hand, forearm frame

  // swing-twist decomposition: raw = swing * twist
  const Vec3 v(raw.x(), raw.y(), raw.z());
  const Vec3 proj = v.dot(longitudinal) * longitudinal;
  Quat twist(raw.w(), proj.x(), proj.y(), proj.z());
  if (twist.norm() < 1e-12) {
    twist = Quat::Identity();
  } else {
    twist.normalize();
  }
  const Quat swing = (raw * twist.conjugate()).normalized();

  Eigen::AngleAxisd swing_aa(swing);
  Vec3 swing_vec = swing_aa.angle() * swing_aa.axis();
  double flex = swing_vec.dot(layout.wrist_flexion_axis);
  double dev = swing_vec.dot(layout.wrist_deviation_axis);
  const double flex_c = std::clamp(flex, -limits.extension_max, limits.flexion_max);
  const double dev_c = std::clamp(dev, -limits.ulnar_max, limits.radial_max);
  fit.violation = std::abs(flex - flex_c) + std::abs(dev - dev_c);
  fit.clamped = fit.violation > 1e-9;

  const Vec3 clamped_vec = flex_c * layout.wrist_flexion_axis + dev_c * layout.wrist_deviation_axis;
  const double angle = clamped_vec.norm();
  const Quat swing_c =
      angle < 1e-12 ? Quat::Identity() : axis_angle(clamped_vec / angle, angle);
  fit.wrist_local = (swing_c * twist).normalized();
  return fit;
}

ArmSolution assemble(const AvatarDescription& avatar, const ArmSolution& base, double alpha,
                     const Quat& clav_global, const GlobalPose& rest) {
  ArmSolution sol = base;
  sol.alpha_used = alpha;
  const ArmChain& chain = avatar.arm(sol.side);
  const ChainFrames frames = chain_at_alpha(sol.shoulder_position, sol.wrist_target,
                                            chain.upper_length, chain.forearm_length, alpha,
                                            sol.side, chain);
  const WristFit fit = fit_wrist(frames.fore_global, sol.hand_orientation,
                                 avatar.hand(sol.side), chain, avatar.wrist_limits);
  sol.wrist_clamped = fit.clamped;
  sol.wrist = fit.wrist_local;
  sol.shoulder = clav_global.conjugate() * frames.upper_global;
  sol.elbow = frames.upper_global.conjugate() * frames.fore_global;
  // clavicle local relative to its parent's rest orientation
  const auto clav_index = static_cast<size_t>(chain.clavicle);
  const int parent = avatar.skeleton.bones[clav_index].parent;
  const Quat parent_global =
      parent < 0 ? Quat::Identity() : rest.rotations[static_cast<size_t>(parent)];
  sol.clavicle = parent_global.conjugate() * clav_global;
  return sol;
}

double wrist_violation_at(const AvatarDescription& avatar, const ArmSolution& sol, double alpha) {
  const ArmChain& chain = avatar.arm(sol.side);
  const ChainFrames frames = chain_at_alpha(sol.shoulder_position, sol.wrist_target,
                                            chain.upper_length, chain.forearm_length, alpha,
                                            sol.side, chain);
  return fit_wrist(frames.fore_global, sol.hand_orientation, avatar.hand(sol.side), chain,
                   avatar.wrist_limits)
      .violation;
}

}  // namespace

double swivel_angle(double lateral_factor, const ArmSolverConfig& config) {
  return config.alpha_max * smoothstep01(lateral_factor);
}

ArmSolution solve_arm(const AvatarDescription& avatar, Side side, const Vec3& wrist_target,
                      const Quat& hand_orientation, const TorsoProxy& torso) {
  return solve_arm(avatar, side, wrist_target, hand_orientation, torso, rest_pose(avatar));
}

ArmSolution solve_arm(const AvatarDescription& avatar, Side side, const Vec3& wrist_target,
                      const Quat& hand_orientation, const TorsoProxy& torso,
                      const GlobalPose& rest) {
  const ArmChain& chain = avatar.arm(side);
  const Vec3 clav_pos = rest.positions[static_cast<size_t>(chain.clavicle)];
  const Vec3 shoulder_rest = rest.positions[static_cast<size_t>(chain.upper_arm)];
  const double arm_len = chain.upper_length + chain.forearm_length;
  const ArmSolverConfig& cfg = avatar.arm_solver;

  ArmSolution sol;
  sol.side = side;
  sol.hand_orientation = hand_orientation;
  sol.wrist_target = wrist_target;
  sol.shoulder_position = shoulder_rest;

  // collarbone engagement: beyond the engagement radius the shoulder moves
  // towards the target, proportional to the excess reach
  Quat clav_global = rest.rotations[static_cast<size_t>(chain.clavicle)];
  const double reach = (wrist_target - shoulder_rest).norm();
  const double engage_at = cfg.clavicle_engage_fraction * arm_len;
  if (reach > engage_at && arm_len > engage_at) {
    const double t = clamp01((reach - engage_at) / (arm_len - engage_at));
    const double angle = cfg.clavicle_max * t;
    const Vec3 from = shoulder_rest - clav_pos;
    const Vec3 towards = wrist_target - clav_pos;
    Vec3 axis = from.cross(towards);
    if (axis.norm() > 1e-9) {
      axis.normalize();
      const Quat delta = axis_angle(axis, angle);
      clav_global = delta * clav_global;
      sol.shoulder_position = clav_pos + delta * from;
      sol.clavicle_engaged = true;
    }
  }

  // clamp to the reachable annulus
  const Vec3 sw = wrist_target - sol.shoulder_position;
  const double d = sw.norm();
  const double max_d = 0.9995 * (chain.upper_length + chain.forearm_length);
  const double min_d = std::abs(chain.upper_length - chain.forearm_length) * 1.02 + 1e-6;
  if (d > max_d) {
    sol.wrist_target = sol.shoulder_position + sw * (max_d / d);
    sol.clamped_to_reach = true;
  } else if (d < min_d) {
    sol.wrist_target =
        sol.shoulder_position + (d > 1e-9 ? sw * (min_d / d) : Vec3(0, -min_d, 0));
    sol.clamped_to_reach = true;
  }

  // swivel from lateral reach across the body
  const double across = side == Side::Right ? sol.wrist_target.x() - shoulder_rest.x()
                                            : shoulder_rest.x() - sol.wrist_target.x();
  const double factor = clamp01(across / avatar.shoulder_width);
  double alpha = swivel_angle(factor, cfg);

  // bounded swivel correction when the wrist would clamp
  const double v0 = wrist_violation_at(avatar, sol, alpha);
  if (v0 > 1e-9 && cfg.alpha_wrist_budget > 0) {
    const double delta = 0.02;
    const double v1 = wrist_violation_at(avatar, sol, alpha + delta);
    const double slope = (v1 - v0) / delta;
    if (std::abs(slope) > 1e-9) {
      const double step = std::clamp(-v0 / slope, -cfg.alpha_wrist_budget, cfg.alpha_wrist_budget);
      const double alpha_new = std::clamp(alpha + step, 0.0, kPi / 2);
      if (wrist_violation_at(avatar, sol, alpha_new) < v0) alpha = alpha_new;
    }
  }

  sol = assemble(avatar, sol, alpha, clav_global, rest);
  return avoid_torso(sol, avatar, torso, rest);
}

ArmSolution avoid_torso(const ArmSolution& solution, const AvatarDescription& avatar,
                        const TorsoProxy& torso) {
  return avoid_torso(solution, avatar, torso, rest_pose(avatar));
}

ArmSolution avoid_torso(const ArmSolution& solution, const AvatarDescription& avatar,
                        const TorsoProxy& torso, const GlobalPose& rest) {
  const ArmChain& chain = avatar.arm(solution.side);
  const auto clav_index = static_cast<size_t>(chain.clavicle);
  const int parent = avatar.skeleton.bones[clav_index].parent;
  const Quat parent_global =
      parent < 0 ? Quat::Identity() : rest.rotations[static_cast<size_t>(parent)];
  const Quat clav_global = parent_global * solution.clavicle;

  auto upper_arm_clear = [&](double alpha) {
    const ChainFrames frames =
        chain_at_alpha(solution.shoulder_position, solution.wrist_target, chain.upper_length,
                       chain.forearm_length, alpha, solution.side, chain);
    for (int i = 0; i <= 16; ++i) {
      const double t = static_cast<double>(i) / 16.0;
      const Vec3 p = solution.shoulder_position + t * (frames.elbow - solution.shoulder_position);
      if (torso.blocked(p)) return false;
    }
    return true;
  };

  if (upper_arm_clear(solution.alpha_used)) return solution;

  double alpha = solution.alpha_used;
  const double step = kPi / 90.0;  // 2 degrees
  bool cleared = false;
  while (alpha < kPi / 2) {
    alpha = std::min(alpha + step, kPi / 2);
    if (upper_arm_clear(alpha)) {
      cleared = true;
      break;
    }
  }
  ArmSolution out = assemble(avatar, solution, alpha, clav_global, rest);
  out.adjusted_for_collision = true;
  if (!cleared) {
    // best effort at the swivel ceiling; callers surface a warning
    out.alpha_used = kPi / 2;
  }
  return out;
}

std::vector<Vec3> offset_path_from_torso(std::span<const Vec3> path, const TorsoProxy& torso) {
  std::vector<Vec3> out(path.begin(), path.end());
  for (size_t i = 1; i + 1 < out.size(); ++i) {
    out[i] = torso.push_out(out[i], torso.margin);
  }
  return out;
}

}  // namespace animgen
