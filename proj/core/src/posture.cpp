#include "animgen/posture.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace animgen {

namespace {

std::string_view finger_tip_point(FingerId f) {
  switch (f) {
    case FingerId::Index: return "index_tip";
    case FingerId::Middle: return "middle_tip";
    case FingerId::Ring: return "ring_tip";
    case FingerId::Little: return "little_tip";
    case FingerId::Thumb: return "thumb_tip";
  }
  return "palm_centre";
}

}  // namespace

ResolvedLocation resolve_location(const LocationSpec& spec, const AvatarDescription& avatar,
                                  const BodyLanguageProfile& profile, const GlobalPose& pose) {
  ResolvedLocation out;
  out.source = spec;
  if (spec.midpoint_of) {
    const ResolvedLocation a = resolve_location(spec.midpoint_of->a, avatar, profile, pose);
    const ResolvedLocation b = resolve_location(spec.midpoint_of->b, avatar, profile, pose);
    out.point = 0.5 * (a.point + b.point);
    out.contact = a.contact && b.contact;
    return out;
  }
  const double proximity = resolve_proximity(profile, spec.proximity, avatar);
  if (spec.kind == LocationSpec::Kind::SigningSpace) {
    const SpaceGrid::LevelRef& ref = profile.signing_space.level_heights.at(spec.level);
    const Vec3 landmark = site_position(avatar, pose, ref.site);
    out.point.x() =
        profile.signing_space.lateral_offsets.at(spec.lateral) * avatar.shoulder_width;
    out.point.y() = landmark.y() + ref.offset_fraction * avatar.body_height;
    out.point.z() = landmark.z() + proximity;
    out.contact = false;
    return out;
  }
  const Vec3 surface = site_position(avatar, pose, spec.body_site);
  Vec3 normal = site_normal(avatar, pose, spec.body_site);
  if (normal.norm() < 0.5) normal = Vec3(0, 0, 1);
  out.point = surface + proximity * normal;
  out.contact = proximity == 0.0;
  return out;
}

std::string select_hand_point(const HandSpec& spec, const ResolvedLocation& target,
                              const AvatarDescription& avatar, const GlobalPose& pose) {
  if (spec.location.hand_point) return *spec.location.hand_point;
  if (target.source.hand_point) return *target.source.hand_point;

  const auto it = avatar.handshape_tables.find(spec.handshape.base);
  if (it != avatar.handshape_tables.end()) {
    const std::vector<FingerId>& extended = spec.handshape.selected_fingers.empty()
                                                ? it->second.extended
                                                : spec.handshape.selected_fingers;
    const bool close_to_body =
        target.contact || (target.source.kind == LocationSpec::Kind::Body &&
                           target.source.proximity.primary == Proximity::Near);
    if (close_to_body && extended.size() == 1 && extended.front() != FingerId::Thumb) {
      const LocationSpec& src = target.source;
      Vec3 inward = Vec3::Zero();
      if (src.kind == LocationSpec::Kind::Body && avatar.locations.count(src.body_site)) {
        inward = -site_normal(avatar, pose, src.body_site);
      }
      if (inward.norm() > 0.5) {
        const Vec3 efd = direction_vector(spec.extfidir);
        if (efd.dot(inward.normalized()) >= std::cos(45.0 * kPi / 180.0)) {
          return std::string(finger_tip_point(extended.front()));
        }
      }
    }
  }
  return "palm_centre";
}

std::pair<ResolvedLocation, ResolvedLocation> resolve_hand_pair(
    const HandConstellation& constellation, const ResolvedLocation& anchor,
    const AvatarDescription& avatar, const BodyLanguageProfile& profile) {
  const double separation = resolve_proximity(profile, constellation.distance, avatar);
  // default separation axis: left-right, the dominant (right) hand on its own side
  const Vec3 dir = constellation.direction ? direction_vector(*constellation.direction)
                                           : Vec3(1, 0, 0);
  ResolvedLocation dominant = anchor;
  ResolvedLocation nondominant = anchor;
  dominant.point = anchor.point - 0.5 * separation * dir;
  nondominant.point = anchor.point + 0.5 * separation * dir;
  return {dominant, nondominant};
}

Quat hand_orientation_from(const AvatarDescription& avatar, Side side, const Vec3& extfidir,
                           const Vec3& palmor) {
  const HandLayout& layout = avatar.hand(side);
  const Vec3 lambda = extfidir.normalized();
  Vec3 normal = palmor - palmor.dot(lambda) * lambda;
  if (normal.norm() < 1e-9) {
    // degenerate frame (validator warns); pick any perpendicular
    normal = lambda.cross(Vec3(0, 1, 0));
    if (normal.norm() < 1e-9) normal = lambda.cross(Vec3(0, 0, 1));
  }
  return frame_rotation(layout.finger_axis, layout.palm_normal, lambda, normal.normalized());
}

double event_envelope(const NonManualEvent& event, double t) {
  const double local = t - event.start;
  const double total = event.attack + event.sustain + event.release;
  if (local <= 0.0 || local >= total) return 0.0;
  double w;
  if (local < event.attack) {
    w = local / event.attack;
  } else if (local <= event.attack + event.sustain) {
    w = 1.0;
  } else {
    w = (total - local) / event.release;
  }
  if (event.ramp == EnvelopeSpec::Ramp::Smooth) w = smoothstep01(w);
  return clamp01(w);
}

// ---------------------------------------------------------------------------
// Key posture planning
// ---------------------------------------------------------------------------

namespace {

struct HandState {
  std::string point = "palm_centre";
  Vec3 position = Vec3::Zero();  // of `point`
  Vec3 efd = Vec3(0, -1, 0);
  Vec3 palm = Vec3(0, 0, -1);
  Quat orientation = Quat::Identity();
  HandJointParams params;
  bool contact = false;
  LocationSpec source;
};

struct Segment {
  double duration = 0;
  MannerSet manners;
  MovementKind kind = MovementKind::Straight;
  PathSpec path;
  HandState end;
  bool contact_end = false;
};

class Planner {
 public:
  Planner(const AvatarDescription& avatar, const BodyLanguageProfile& profile)
      : avatar_(avatar), profile_(profile), pose_(rest_pose(avatar)) {}

  SignPlan run(const Sign& input, const std::optional<PostureKey>& previous_end) {
    const Sign sign = expand_sign(input);
    SignPlan plan;

    std::optional<HandState> right, left;
    if (sign.manual) {
      const ManualPart& m = *sign.manual;
      right = initial_state(m.dominant, Side::Right);
      if (m.both_hands) {
        if (m.nondominant) {
          left = initial_state(*m.nondominant, Side::Left);
        } else {
          // both hands, no symmetry, no explicit spec: mirror the dominant
          warn(plan, "both_hands without nondominant spec; mirroring the dominant hand");
          ManualPart lr = m;
          lr.symmetry = Symmetry::LeftRight;
          left = initial_state(*expand_symmetry(lr).nondominant, Side::Left);
        }
      }
      if (m.constellation && left) {
        const ResolvedLocation anchor =
            resolve_location(m.dominant.location, avatar_, profile_, pose_);
        auto [dom, nd] = resolve_hand_pair(*m.constellation, anchor, avatar_, profile_);
        right->point = m.constellation->dominant_point;
        right->position = dom.point;
        right->contact = dom.contact;
        left->point = m.constellation->nondominant_point;
        left->position = nd.point;
        left->contact = nd.contact;
      }
    }

    const bool has_motion =
        sign.manual && (sign.manual->motion || sign.manual->nondominant_motion);

    // transition from the previous sign: lax before movement, targetted
    // before a static posture (hard contact when that posture touches)
    if (previous_end && (right || left)) {
      MannerSet manner{has_motion ? Manner::Lax : Manner::Targetted};
      const bool initial_contact = (right && right->contact) || (left && left->contact);
      if (!has_motion && initial_contact) manner = MannerSet{Manner::HardContact};
      PostureKey k0;
      k0.time = 0;
      k0.trajectory_manner = manner;
      k0.segment_kind = MovementKind::Transition;
      k0.right = previous_end->right;
      k0.left = previous_end->left;
      if (right && !k0.right) k0.right = rest_goal(Side::Right);
      if (left && !k0.left) k0.left = rest_goal(Side::Left);
      const double dt = resolve_duration(profile_, MovementKind::Transition, manner);
      if (right) attach_straight_path(*k0.right, *right, Side::Right);
      if (left) attach_straight_path(*k0.left, *left, Side::Left);
      plan.keys.push_back(std::move(k0));
      plan.keys.push_back(make_key(dt, right, left));
    } else {
      plan.keys.push_back(make_key(0.0, right, left));
    }

    if (has_motion) {
      std::vector<Segment> segs_right, segs_left;
      if (right) {
        segs_right = compile(*sign.manual->motion, *right, Side::Right, plan);
      }
      if (left) {
        const MotionTree& tree = sign.manual->nondominant_motion
                                     ? *sign.manual->nondominant_motion
                                     : *sign.manual->motion;
        segs_left = compile(tree, *left, Side::Left, plan);
      }
      if (right && left) {
        bool aligned = segs_right.size() == segs_left.size();
        for (size_t i = 0; aligned && i < segs_right.size(); ++i) {
          aligned = std::abs(segs_right[i].duration - segs_left[i].duration) < 1e-9;
        }
        if (!aligned) {
          plan.diagnostics.push_back(
              {Severity::Error, "",
               "two-handed motions must share timing structure; dropping the nondominant motion"});
          segs_left.clear();
          for (const Segment& s : segs_right) {
            Segment hold;
            hold.duration = s.duration;
            hold.manners = s.manners;
            hold.kind = s.kind;
            hold.end = *left;
            hold.path = straight_path(left->position, left->position);
            segs_left.push_back(std::move(hold));
          }
        }
      }
      const size_t n = std::max(segs_right.size(), segs_left.size());
      double total_motion = 0;
      for (size_t i = 0; i < n; ++i) {
        const Segment* sr = i < segs_right.size() ? &segs_right[i] : nullptr;
        const Segment* sl = i < segs_left.size() ? &segs_left[i] : nullptr;
        const Segment& lead = sr ? *sr : *sl;
        PostureKey& prev = plan.keys.back();
        prev.trajectory_manner = lead.manners;
        prev.segment_kind = lead.kind;
        if (sr && prev.right) prev.right->path_to_next = sr->path;
        if (sl && prev.left) prev.left->path_to_next = sl->path;
        const double t = prev.time + lead.duration;
        total_motion += lead.duration;
        std::optional<HandState> r2 = sr ? std::optional(sr->end) : right;
        std::optional<HandState> l2 = sl ? std::optional(sl->end) : left;
        plan.keys.push_back(make_key(t, r2, l2));
        if (sr) right = sr->end;
        if (sl) left = sl->end;
      }
      if (total_motion <= 0.0) {
        plan.diagnostics.push_back(
            {Severity::Error, "", "motion tree has zero total duration"});
      }
    } else if (right || left) {
      // static posture: hold it for a perceptible beat
      PostureKey& prev = plan.keys.back();
      prev.trajectory_manner = MannerSet{Manner::Targetted};
      prev.segment_kind = MovementKind::Transition;
      const double hold =
          std::max(profile_.durations.at(MovementKind::Transition), profile_.contact_hold);
      if (right && prev.right) prev.right->path_to_next = straight_path(right->position, right->position);
      if (left && prev.left) prev.left->path_to_next = straight_path(left->position, left->position);
      plan.keys.push_back(make_key(prev.time + hold, right, left));
    }

    schedule_nonmanuals(sign, plan);

    // absolute duration / temporal scaling extension
    double factor = 1.0;
    if (sign.duration_override && plan.keys.back().time > 0) {
      factor = *sign.duration_override / plan.keys.back().time;
    } else if (sign.time_scale) {
      factor = *sign.time_scale;
    }
    if (factor != 1.0) {
      for (PostureKey& k : plan.keys) k.time *= factor;
      for (NonManualEvent& e : plan.events) {
        e.start *= factor;
        e.attack *= factor;
        e.sustain *= factor;
        e.release *= factor;
      }
    }

    plan.total_duration = plan.keys.empty() ? 0.0 : plan.keys.back().time;
    sample_key_channels(plan);
    return plan;
  }

 private:
  const AvatarDescription& avatar_;
  const BodyLanguageProfile& profile_;
  GlobalPose pose_;

  static void warn(SignPlan& plan, std::string msg) {
    plan.diagnostics.push_back({Severity::Warning, "", std::move(msg)});
  }

  HandState initial_state(const HandSpec& spec, Side side) {
    HandState st;
    st.params = resolve_handshape(spec.handshape, avatar_);
    st.efd = direction_vector(spec.extfidir);
    st.palm = direction_vector(spec.palmor);
    st.orientation = hand_orientation_from(avatar_, side, st.efd, st.palm);
    const ResolvedLocation target = resolve_location(spec.location, avatar_, profile_, pose_);
    st.point = select_hand_point(spec, target, avatar_, pose_);
    st.position = target.point;
    st.contact = target.contact;
    st.source = target.source;
    return st;
  }

  Vec3 wrist_of(const HandState& st, Side side) const {
    return st.position - st.orientation * hand_point_offset(avatar_, side, st.point, st.params);
  }

  Vec3 point_position(const HandState& st, Side side, const std::string& point) const {
    if (point == st.point) return st.position;
    return wrist_of(st, side) + st.orientation * hand_point_offset(avatar_, side, point, st.params);
  }

  HandGoal goal_of(const HandState& st, Side side) const {
    HandGoal g;
    g.hand_point = st.point;
    g.target.point = st.position;
    g.target.contact = st.contact;
    g.target.source = st.source;
    g.extfidir = st.efd;
    g.palmor = st.palm;
    g.orientation = st.orientation;
    g.handshape = st.params;
    g.wrist_position = wrist_of(st, side);
    return g;
  }

  HandGoal rest_goal(Side side) const {
    HandState st;
    st.params = base_handshape_params(HandshapeBase::Flat, avatar_);
    const int hand_bone = avatar_.skeleton.index_of(avatar_.hand(side).hand_bone);
    st.orientation = pose_.rotations[static_cast<size_t>(hand_bone)];
    st.efd = st.orientation * avatar_.hand(side).finger_axis;
    st.palm = st.orientation * avatar_.hand(side).palm_normal;
    const Vec3 wrist = pose_.positions[static_cast<size_t>(hand_bone)];
    st.position = wrist + st.orientation * hand_point_offset(avatar_, side, st.point, st.params);
    return goal_of(st, side);
  }

  PostureKey make_key(double time, const std::optional<HandState>& right,
                      const std::optional<HandState>& left) const {
    PostureKey k;
    k.time = time;
    if (right) k.right = goal_of(*right, Side::Right);
    if (left) k.left = goal_of(*left, Side::Left);
    return k;
  }

  static PathSpec straight_path(const Vec3& a, const Vec3& b) {
    PathSpec p;
    p.kind = PathSpec::Kind::Straight;
    p.start = a;
    p.end = b;
    return p;
  }

  void attach_straight_path(HandGoal& from, const HandState& to, Side side) const {
    const Vec3 start = from.wrist_position +
                       from.orientation * hand_point_offset(avatar_, side, to.point, from.handshape);
    from.path_to_next = straight_path(start, to.position);
  }

  // ---- motion tree compilation -------------------------------------------

  std::vector<Segment> compile(const MotionTree& tree, const HandState& start, Side side,
                               SignPlan& plan) {
    HandState state = start;
    return compile_node(tree, state, side, plan);
  }

  std::vector<Segment> compile_node(const MotionTree& tree, HandState& state, Side side,
                                    SignPlan& plan) {
    return std::visit(
        [&](const auto& node) { return compile_one(node, state, side, plan); }, tree.node);
  }

  std::vector<Segment> compile_one(const DirectedMotion& m, HandState& state, Side side,
                                   SignPlan& plan) {
    (void)plan;
    Segment seg;
    const double distance = resolve_size(profile_, m.size, avatar_);
    const Vec3 dir = direction_vector(m.direction);
    seg.manners = m.modifiers;
    seg.manners.insert(Manner::Targetted);
    seg.kind = m.curve ? MovementKind::Curved : MovementKind::Straight;
    seg.duration = resolve_duration(profile_, seg.kind, seg.manners);
    seg.end = state;
    seg.end.position = state.position + dir * distance;
    seg.end.contact = false;
    seg.path = straight_path(state.position, seg.end.position);
    if (m.curve) {
      seg.path.kind = PathSpec::Kind::Arc;
      seg.path.bulge = direction_vector(m.curve->bulge);
      seg.path.sagitta = profile_.arc_depth.at(m.curve->depth) * distance;
    }
    state = seg.end;
    return {seg};
  }

  std::vector<Segment> compile_one(const CircularMotion& m, HandState& state, Side side,
                                   SignPlan& plan) {
    (void)side;
    (void)plan;
    Segment seg;
    const double radius = 0.5 * resolve_size(profile_, m.extent, avatar_);
    const Vec3 normal = direction_vector(DirectionSpec{{m.plane_normal}, std::nullopt});
    Vec3 up_in_plane = Vec3(0, 1, 0) - Vec3(0, 1, 0).dot(normal) * normal;
    if (up_in_plane.norm() < 1e-6) {
      up_in_plane = Vec3(0, 0, 1) - Vec3(0, 0, 1).dot(normal) * normal;
    }
    up_in_plane.normalize();
    seg.manners = m.modifiers;
    seg.manners.insert(Manner::Linear);
    seg.kind = MovementKind::Circular;
    seg.duration = resolve_duration(profile_, seg.kind, seg.manners);
    seg.path.kind = PathSpec::Kind::Circle;
    seg.path.start = state.position;
    seg.path.end = state.position;
    seg.path.centre = state.position + radius * up_in_plane;  // start at the low point
    seg.path.axis = normal;
    seg.path.sweep = (m.clockwise ? -1.0 : 1.0) * 2.0 * kPi;
    seg.end = state;
    state = seg.end;
    return {seg};
  }

  std::vector<Segment> compile_one(const TargetedMotion& m, HandState& state, Side side,
                                   SignPlan& plan) {
    Segment seg;
    seg.manners = m.modifiers;
    seg.manners.insert(Manner::Targetted);
    seg.end = state;

    bool moves = false;
    Vec3 path_start = state.position;
    if (m.target_location) {
      const ResolvedLocation target =
          resolve_location(*m.target_location, avatar_, profile_, pose_);
      if (m.target_location->hand_point) {
        seg.end.point = *m.target_location->hand_point;
        path_start = point_position(state, side, seg.end.point);
      }
      seg.end.position = target.point;
      seg.end.contact = target.contact;
      seg.end.source = target.source;
      seg.contact_end = target.contact;
      moves = true;
    }
    if (m.target_extfidir || m.target_palmor) {
      if (m.target_extfidir) seg.end.efd = direction_vector(*m.target_extfidir);
      if (m.target_palmor) seg.end.palm = direction_vector(*m.target_palmor);
      seg.end.orientation = hand_orientation_from(avatar_, side, seg.end.efd, seg.end.palm);
    }
    if (m.target_handshape) {
      seg.end.params = resolve_handshape(*m.target_handshape, avatar_);
    }

    seg.path = straight_path(path_start, seg.end.position);
    if (moves) {
      seg.kind = MovementKind::Straight;
      if (m.child) {
        if (const auto* child = std::get_if<DirectedMotion>(&m.child->node)) {
          if (child->curve) {
            const double chord = (seg.end.position - path_start).norm();
            seg.path.kind = PathSpec::Kind::Arc;
            seg.path.bulge = direction_vector(child->curve->bulge);
            seg.path.sagitta = profile_.arc_depth.at(child->curve->depth) * chord;
            seg.kind = MovementKind::Curved;
          }
        } else {
          warn(plan, "tgt_motion child path is not a directed motion; using a straight path");
        }
      }
    } else if (m.target_handshape) {
      seg.kind = MovementKind::HandshapeChange;
    } else {
      seg.kind = MovementKind::OrientationChange;
    }
    if (seg.contact_end) {
      seg.manners.erase(Manner::Targetted);
      seg.manners.insert(Manner::HardContact);
    }
    seg.duration = resolve_duration(profile_, seg.kind, seg.manners);
    state = seg.end;

    std::vector<Segment> out{seg};
    if (seg.contact_end) {
      // the hand rests on the contacted surface for a perceptible time
      Segment hold;
      hold.duration = profile_.contact_hold;
      hold.manners = MannerSet{Manner::HardContact};
      hold.kind = MovementKind::Transition;
      hold.end = state;
      hold.path = straight_path(state.position, state.position);
      out.push_back(std::move(hold));
    }
    return out;
  }

  std::vector<Segment> compile_one(const SequenceMotion& m, HandState& state, Side side,
                                   SignPlan& plan) {
    std::vector<Segment> out;
    for (const MotionTree& child : m.children) {
      auto segs = compile_node(child, state, side, plan);
      out.insert(out.end(), segs.begin(), segs.end());
    }
    return out;
  }

  std::vector<Segment> compile_one(const ParallelMotion& m, HandState& state, Side side,
                                   SignPlan& plan) {
    // parallel channels synchronize to the longest child; children must be
    // single strokes (the validator already rejects same-channel conflicts)
    Segment merged;
    merged.end = state;
    merged.kind = MovementKind::OrientationChange;
    MannerSet modifiers;
    bool have_position = false;
    bool have_kind = false;
    for (const MotionTree& child : m.children) {
      HandState branch = state;
      auto segs = compile_node(child, branch, side, plan);
      if (segs.size() != 1) {
        plan.diagnostics.push_back(
            {Severity::Error, "",
             "parallel children must be single strokes (sequences cannot be merged)"});
        continue;
      }
      const Segment& seg = segs.front();
      modifiers.merge(keep_modifiers(seg.manners));
      merged.duration = std::max(merged.duration, seg.duration);
      const bool positional = seg.path.kind == PathSpec::Kind::Circle ||
                              (seg.path.end - seg.path.start).norm() > 1e-12;
      if (positional) {
        have_position = true;
        have_kind = true;
        merged.path = seg.path;
        merged.kind = seg.kind;
        merged.manners = seg.manners;
        merged.end.position = seg.end.position;
        merged.end.contact = seg.end.contact;
        merged.end.source = seg.end.source;
        merged.contact_end = seg.contact_end;
      } else {
        if (!have_kind) {
          merged.kind = seg.kind;
          have_kind = true;
        }
        if ((seg.end.orientation.coeffs() - state.orientation.coeffs()).norm() > 1e-12) {
          merged.end.orientation = seg.end.orientation;
          merged.end.efd = seg.end.efd;
          merged.end.palm = seg.end.palm;
        }
        if (std::memcmp(&seg.end.params, &state.params, sizeof(HandJointParams)) != 0) {
          merged.end.params = seg.end.params;
        }
      }
    }
    if (!have_position) {
      merged.path = straight_path(state.position, state.position);
      merged.manners.insert(Manner::Targetted);
    }
    merged.manners.merge(modifiers);
    state = merged.end;
    return {merged};
  }

  static MannerSet keep_modifiers(MannerSet set) {
    set.erase(Manner::Targetted);
    set.erase(Manner::Lax);
    set.erase(Manner::HardContact);
    set.erase(Manner::Linear);
    return set;
  }

  std::vector<Segment> compile_one(const RepeatMotion& m, HandState& state, Side side,
                                   SignPlan& plan) {
    std::vector<Segment> out;
    if (!m.child) return out;
    const HandState initial = state;
    std::vector<Segment> first = compile_node(*m.child, state, side, plan);
    out.insert(out.end(), first.begin(), first.end());

    switch (m.repetition) {
      case RepetitionKind::FromStart: {
        // lax return stroke to the initial posture, then replay
        Segment back;
        back.duration = resolve_duration(profile_, MovementKind::Transition,
                                         MannerSet{Manner::Lax});
        back.manners = MannerSet{Manner::Lax};
        back.kind = MovementKind::Transition;
        back.end = initial;
        back.path = straight_path(state.position, initial.position);
        out.push_back(std::move(back));
        state = initial;
        std::vector<Segment> replay = compile_node(*m.child, state, side, plan);
        out.insert(out.end(), replay.begin(), replay.end());
        break;
      }
      case RepetitionKind::Continue: {
        std::vector<Segment> again = compile_node(*m.child, state, side, plan);
        out.insert(out.end(), again.begin(), again.end());
        break;
      }
      case RepetitionKind::Reversing: {
        // the return stroke is as significant as the forward stroke
        std::vector<HandState> states;
        states.push_back(initial);
        for (const Segment& seg : first) states.push_back(seg.end);
        for (size_t i = first.size(); i-- > 0;) {
          Segment rev = first[i];
          rev.end = states[i];
          rev.path = reverse_path(first[i].path);
          if (!rev.manners.contains(Manner::Linear)) {
            rev.manners.erase(Manner::Lax);
            rev.manners.erase(Manner::HardContact);
            rev.manners.insert(Manner::Targetted);
          }
          rev.contact_end = states[i].contact;
          out.push_back(std::move(rev));
        }
        state = initial;
        break;
      }
    }
    return out;
  }

  static PathSpec reverse_path(const PathSpec& p) {
    PathSpec r = p;
    r.start = p.end;
    r.end = p.start;
    if (p.kind == PathSpec::Kind::Circle) r.sweep = -p.sweep;
    return r;
  }

  // ---- non-manual scheduling ----------------------------------------------

  void schedule_nonmanuals(const Sign& sign, SignPlan& plan) {
    if (!sign.nonmanual) return;
    const double manual_window = plan.keys.empty() ? 0.0 : plan.keys.back().time;
    double nonmanual_total = 0;

    for (const auto& [tier, actions] : sign.nonmanual->tiers) {
      if (actions.empty()) continue;
      std::vector<double> weights;
      double sum = 0;
      for (const NonManualAction& a : actions) {
        const double w = a.duration.value_or(profile_.durations.at(MovementKind::NonManual));
        weights.push_back(w);
        sum += w;
      }
      // actions run in sequence, start-aligned with the sign; with a manual
      // part they divide its window, otherwise the hints are absolute
      const double window = manual_window > 0 ? manual_window : sum;
      double start = 0;
      for (size_t i = 0; i < actions.size(); ++i) {
        const double slot = manual_window > 0 ? window * weights[i] / sum : weights[i];
        NonManualEvent ev;
        ev.tier = tier;
        ev.action_id = actions[i].id;
        ev.start = start;
        ev.attack = std::min(profile_.envelope_defaults.attack, 0.4 * slot);
        ev.release = std::min(profile_.envelope_defaults.release, 0.4 * slot);
        ev.sustain = std::max(0.0, slot - ev.attack - ev.release);
        ev.ramp = profile_.envelope_defaults.ramp;
        plan.events.push_back(std::move(ev));
        start += slot;
      }
      nonmanual_total = std::max(nonmanual_total, start);
    }

    if (plan.keys.size() < 2 && nonmanual_total > 0) {
      // non-manual-only sign: pad the timeline, hands untouched
      if (plan.keys.empty()) plan.keys.push_back(PostureKey{});
      PostureKey tail = plan.keys.back();
      tail.time = nonmanual_total;
      plan.keys.push_back(std::move(tail));
    }
  }

  void sample_key_channels(SignPlan& plan) const {
    for (PostureKey& key : plan.keys) {
      for (const NonManualEvent& ev : plan.events) {
        const double w = event_envelope(ev, key.time);
        if (w <= 0.0) continue;
        double& slot = key.nonmanual_channels[ev.action_id];
        slot = clamp01(slot + w);
      }
    }
  }
};

}  // namespace

SignPlan plan_key_postures(const Sign& sign, const AvatarDescription& avatar,
                           const BodyLanguageProfile& profile,
                           const std::optional<PostureKey>& previous_end) {
  Planner planner(avatar, profile);
  return planner.run(sign, previous_end);
}

}  // namespace animgen
