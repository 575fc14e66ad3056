#include "animgen/animation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "animgen/handshape.hpp"

namespace animgen {

Vec3 path_point(const PathSpec& path, double s) {
  s = clamp01(s);
  switch (path.kind) {
    case PathSpec::Kind::Straight:
      return path.start + s * (path.end - path.start);
    case PathSpec::Kind::Circle: {
      const Quat r = axis_angle(path.axis.normalized(), path.sweep * s);
      return path.centre + r * (path.start - path.centre);
    }
    case PathSpec::Kind::Arc: {
      const Vec3 chord = path.end - path.start;
      const double c = 0.5 * chord.norm();
      if (c < 1e-12 || path.sagitta < 1e-12) {
        return path.start + s * chord;
      }
      Vec3 lift = path.bulge - path.bulge.dot(chord.normalized()) * chord.normalized();
      if (lift.norm() < 1e-9) return path.start + s * chord;  // bulge along the chord
      lift.normalize();
      const double h = path.sagitta;
      const Vec3 mid = 0.5 * (path.start + path.end);
      const Vec3 apex = mid + h * lift;
      // circle through start, end and apex: centre sits on the lift line
      const double m = (h * h - c * c) / (2.0 * h);
      const Vec3 centre = mid + m * lift;
      const double radius = std::sqrt(c * c + m * m);
      const Vec3 u0 = (path.start - centre) / radius;
      const Vec3 ua = (apex - centre) / radius;
      Vec3 axis = u0.cross(ua);
      if (axis.norm() < 1e-12) return path.start + s * chord;
      axis.normalize();
      const double half = std::acos(std::clamp(u0.dot(ua), -1.0, 1.0));
      const double sweep = 2.0 * half;  // the apex bisects the arc
      return centre + axis_angle(axis, sweep * s) * (path.start - centre);
    }
  }
  return path.start;
}

Quat interpolate_orientation(const Quat& q0, const Quat& q1, double u) {
  return q0.slerp(clamp01(u), q1);
}

double nonmanual_envelope(const EnvelopeSpec& env, double t, double total) {
  if (total <= 0.0 || t <= 0.0 || t >= total) return 0.0;
  double attack = env.attack;
  double release = env.release;
  if (attack + release > total) {
    const double shrink = total / (attack + release);
    attack *= shrink;
    release *= shrink;
  }
  double w;
  if (t < attack) {
    w = attack > 0 ? t / attack : 1.0;
  } else if (t <= total - release) {
    w = 1.0;
  } else {
    w = release > 0 ? (total - t) / release : 1.0;
  }
  if (env.ramp == EnvelopeSpec::Ramp::Smooth) w = smoothstep01(w);
  return clamp01(w);
}

// ---------------------------------------------------------------------------
// Frame generation
// ---------------------------------------------------------------------------

namespace {

struct PlannedSign {
  SignPlan plan;
  double start = 0;  // document time of the sign's t = 0
};

class Generator {
 public:
  Generator(const AvatarDescription& avatar, const BodyLanguageProfile& profile,
            const TrajectoryTableSet& tables)
      : avatar_(avatar),
        profile_(profile),
        tables_(tables),
        rest_(rest_pose(avatar)),
        torso_(build_torso_proxy(avatar, rest_)) {
    local_.reserve(avatar.skeleton.bones.size());
    for (const Bone& b : avatar_.skeleton.bones) local_.push_back(b.rest_rotation);
  }

  GenerationResult run(const SignDocument& doc, double fps) {
    GenerationResult result;

    std::vector<PlannedSign> plans;
    double t0 = 0;
    std::optional<PostureKey> previous_end;
    for (const Sign& sign : doc.signs) {
      PlannedSign ps;
      ps.plan = plan_key_postures(sign, avatar_, profile_, previous_end);
      ps.start = t0;
      for (const Diagnostic& d : ps.plan.diagnostics) result.diagnostics.push_back(d);
      t0 += ps.plan.total_duration;
      if (!ps.plan.keys.empty()) {
        PostureKey end = ps.plan.keys.back();
        if (previous_end) {
          // a hand this sign never drove keeps its previous goal
          if (!end.right) end.right = previous_end->right;
          if (!end.left) end.left = previous_end->left;
        }
        previous_end = std::move(end);
      }
      plans.push_back(std::move(ps));
    }
    result.total_duration = t0;

    const auto frame_count = static_cast<size_t>(std::ceil(result.total_duration * fps - 1e-9));
    size_t cursor = 0;
    for (size_t i = 0; i < frame_count; ++i) {
      const double t = static_cast<double>(i) / fps;
      while (cursor + 1 < plans.size() && t >= plans[cursor + 1].start) ++cursor;
      MotionFrame frame = evaluate(plans[cursor], t, result);
      frame.index = static_cast<int>(i);
      frame.time = t;
      result.frames.push_back(std::move(frame));
    }
    return result;
  }

 private:
  const AvatarDescription& avatar_;
  const BodyLanguageProfile& profile_;
  const TrajectoryTableSet& tables_;
  GlobalPose rest_;
  TorsoProxy torso_;
  std::vector<Quat> local_;  // persists across frames; inactive channels hold
  std::vector<std::string> warned_actions_;

  MotionFrame evaluate(const PlannedSign& ps, double doc_time, GenerationResult& result) {
    const std::vector<PostureKey>& keys = ps.plan.keys;
    const double t = doc_time - ps.start;

    if (!keys.empty()) {
      size_t seg = 0;
      while (seg + 1 < keys.size() && t >= keys[seg + 1].time) ++seg;
      if (seg + 1 < keys.size()) {
        const PostureKey& a = keys[seg];
        const PostureKey& b = keys[seg + 1];
        const double span = b.time - a.time;
        const double k = span > 0 ? (t - a.time) / span : 1.0;
        const double s = eval_trajectory(tables_.for_manners(a.trajectory_manner), k);
        drive_hand(Side::Right, a.right, b.right, s, doc_time, result);
        drive_hand(Side::Left, a.left, b.left, s, doc_time, result);
      } else {
        drive_hand(Side::Right, keys.back().right, keys.back().right, 0.0, doc_time, result);
        drive_hand(Side::Left, keys.back().left, keys.back().left, 0.0, doc_time, result);
      }
    }

    MotionFrame frame;
    frame.bone_rotations = local_;

    // non-manual channels: envelopes scale the avatar's mixtures
    std::map<std::string, double> channels;
    for (const NonManualEvent& ev : ps.plan.events) {
      const double w = event_envelope(ev, t);
      if (w > 0.0) channels[ev.action_id] = clamp01(channels[ev.action_id] + w);
    }
    for (const std::string& morph : avatar_.morphs) frame.morph_weights[morph] = 0.0;
    for (const auto& [action, weight] : channels) {
      auto it = avatar_.nonmanual_map.find(action);
      if (it == avatar_.nonmanual_map.end()) {
        if (std::find(warned_actions_.begin(), warned_actions_.end(), action) ==
            warned_actions_.end()) {
          warned_actions_.push_back(action);
          result.diagnostics.push_back(
              {Severity::Warning, "", "avatar does not map non-manual action \"" + action + "\""});
        }
        continue;
      }
      for (const auto& [morph, full] : it->second.morphs) {
        frame.morph_weights[morph] = clamp01(frame.morph_weights[morph] + weight * full);
      }
      for (const auto& br : it->second.bones) {
        const int idx = avatar_.skeleton.index_of(br.bone);
        if (idx < 0) continue;
        const Quat scaled = Quat::Identity().slerp(weight, br.rotation);
        frame.bone_rotations[static_cast<size_t>(idx)] =
            (frame.bone_rotations[static_cast<size_t>(idx)] * scaled).normalized();
      }
    }

    for (Quat& q : frame.bone_rotations) q.normalize();
    return frame;
  }

  void drive_hand(Side side, const std::optional<HandGoal>& from,
                  const std::optional<HandGoal>& to, double s, double doc_time,
                  GenerationResult& result) {
    if (!from && !to) return;  // hand inactive: previous rotations persist
    const HandGoal& a = from ? *from : *to;
    const HandGoal& b = to ? *to : *from;

    Vec3 position;
    if (from && from->path_to_next) {
      position = path_point(*from->path_to_next, s);
    } else {
      position = a.target.point + s * (b.target.point - a.target.point);
    }
    // keep moving points clear of the torso; surface contacts at the segment
    // ends stay put
    if (s > 1e-9 && s < 1.0 - 1e-9) {
      position = torso_.push_out(position, torso_.margin);
    }

    const Quat orientation = interpolate_orientation(a.orientation, b.orientation, s);
    const HandJointParams params = interpolate_handshapes(a.handshape, b.handshape, s);
    const std::string& point = b.hand_point;

    const Vec3 wrist_target =
        position - orientation * hand_point_offset(avatar_, side, point, params);
    const ArmSolution sol = solve_arm(avatar_, side, wrist_target, orientation, torso_, rest_);
    if (sol.clamped_to_reach) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "t=%.3f", doc_time);
      result.diagnostics.push_back(
          {Severity::Warning, buf,
           std::string("hand goal out of reach; clamped (") +
               (side == Side::Right ? "right" : "left") + ")"});
    }

    const ArmChain& chain = avatar_.arm(side);
    local_[static_cast<size_t>(chain.clavicle)] = sol.clavicle;
    local_[static_cast<size_t>(chain.upper_arm)] = sol.shoulder;
    local_[static_cast<size_t>(chain.forearm)] = sol.elbow;
    local_[static_cast<size_t>(chain.hand)] = sol.wrist;
    apply_hand_rotations(params, avatar_, side, local_);
  }
};

}  // namespace

GenerationResult generate_frames(const SignDocument& doc, const AvatarDescription& avatar,
                                 const BodyLanguageProfile& profile,
                                 const TrajectoryTableSet& tables, double fps) {
  if (fps <= 0) throw std::invalid_argument("generate_frames: fps must be positive");
  Generator gen(avatar, profile, tables);
  return gen.run(doc, fps);
}

GenerationResult generate_frames(const SignDocument& doc, const AvatarDescription& avatar,
                                 const BodyLanguageProfile& profile, double fps) {
  const TrajectoryTableSet tables = TrajectoryTableSet::build(profile);
  return generate_frames(doc, avatar, profile, tables, fps);
}

}  // namespace animgen
