#include "animgen/handshape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace animgen {

namespace {

constexpr std::array<FingerId, 4> kFingers = {FingerId::Index, FingerId::Middle, FingerId::Ring,
                                              FingerId::Little};

bool is_cee_base(HandshapeBase b) {
  return b == HandshapeBase::Cee12 || b == HandshapeBase::CeeAll ||
         b == HandshapeBase::Cee12Open;
}

double& joint_ref(HandJointParams& p, FingerId finger, int joint) {
  // joint: 0 base_bend, 1 base_splay, 2 middle, 3 distal, 4 cmc
  FingerParams& f = p.fingers[static_cast<size_t>(finger)];
  switch (joint) {
    case 0: return f.base_bend;
    case 1: return f.base_splay;
    case 2: return f.middle;
    case 3: return f.distal;
    default: return f.cmc;
  }
}

// Flat list of every parameter for interpolation and explicit overrides.
struct NamedJoint {
  const char* name;
  double HandJointParams::* dummy;  // unused; resolution goes through accessor
};

double* named_joint(HandJointParams& p, std::string_view name) {
  static constexpr std::array<std::string_view, 4> kFingerKeys = {"index", "middle", "ring",
                                                                  "little"};
  for (size_t f = 0; f < 4; ++f) {
    const std::string_view key = kFingerKeys[f];
    if (name.substr(0, key.size()) != key) continue;
    const std::string_view rest = name.substr(key.size());
    FingerParams& fp = p.fingers[f];
    if (rest == "_base_bend") return &fp.base_bend;
    if (rest == "_base_splay") return &fp.base_splay;
    if (rest == "_middle") return &fp.middle;
    if (rest == "_distal") return &fp.distal;
    if (rest == "_cmc") return &fp.cmc;
  }
  if (name == "thumb_bend") return &p.thumb.bend;
  if (name == "thumb_splay") return &p.thumb.splay;
  if (name == "thumb_twist") return &p.thumb.twist;
  if (name == "thumb_hinge1") return &p.thumb.hinge1;
  if (name == "thumb_hinge2") return &p.thumb.hinge2;
  return nullptr;
}

void apply_bending(HandJointParams& p, FingerId finger, BendName bend, HandshapeBase base,
                   const AvatarDescription& avatar) {
  if (finger == FingerId::Thumb) {
    // the thumb has no bend/splay table rows; bend its hinges by the nominal tuple
    const auto nominal = nominal_bend_fractions(bend);
    p.thumb.bend = nominal[0] * avatar.finger_limits.base_max;
    p.thumb.hinge1 = nominal[1] * avatar.finger_limits.middle_max;
    p.thumb.hinge2 = nominal[2] * avatar.finger_limits.distal_max;
    return;
  }
  FingerParams& f = p.fingers[static_cast<size_t>(finger)];
  auto it = avatar.bending_tables.find({base, bend});
  if (it != avatar.bending_tables.end()) {
    f.base_bend = it->second.base;
    f.middle = it->second.middle;
    f.distal = it->second.distal;
  } else {
    // fallback: nominal fractions of the per-joint maxima
    const auto nominal = nominal_bend_fractions(bend);
    f.base_bend = nominal[0] * avatar.finger_limits.base_max;
    f.middle = nominal[1] * avatar.finger_limits.middle_max;
    f.distal = nominal[2] * avatar.finger_limits.distal_max;
  }
}

void clamp_params(HandJointParams& p, const FingerJointLimits& limits) {
  for (auto& f : p.fingers) {
    f.base_bend = std::clamp(f.base_bend, 0.0, limits.base_max);
    f.middle = std::clamp(f.middle, -0.1, limits.middle_max);
    f.distal = std::clamp(f.distal, -0.1, limits.distal_max);
    f.cmc = std::clamp(f.cmc, 0.0, limits.cmc_max);
  }
}

}  // namespace

Quat finger_base_rotation(double bend, double splay, const HandCalibration& cal,
                          const FingerFrame& frame) {
  if (bend < -1e-12 || bend > kPi / 2 + 1e-12) {
    throw std::domain_error("finger_base_rotation: bend outside [0, pi/2]");
  }
  const double b_prime = 2.0 * bend / kPi;
  return axis_angle(frame.sigma, mid(splay, 0.0, b_prime)) *
         axis_angle(frame.beta, bend) *
         axis_angle(frame.sigma, mid(cal.theta_flat, cal.theta_fist1, b_prime)) *
         axis_angle(frame.lambda, cal.theta_fist2 * b_prime);
}

HandJointParams base_handshape_params(HandshapeBase base, const AvatarDescription& avatar) {
  return avatar.handshape_tables.at(base).params;
}

HandJointParams apply_modifiers(const HandJointParams& params, const HandshapeSpec& spec,
                                const AvatarDescription& avatar) {
  HandJointParams p = params;
  const HandshapeTable& table = avatar.handshape_tables.at(spec.base);

  // re-target the extended finger set before bendings apply
  std::vector<FingerId> extended = table.extended;
  if (!spec.selected_fingers.empty()) {
    // prototype parameters: an extended finger of the base, and a curled one
    // (fist table when every finger of the base is extended)
    FingerParams extended_proto;
    if (!table.extended.empty() && table.extended.front() != FingerId::Thumb) {
      extended_proto = params.fingers[static_cast<size_t>(table.extended.front())];
    }
    FingerParams curled_proto =
        avatar.handshape_tables.at(HandshapeBase::Fist).params.fingers[0];
    for (FingerId f : kFingers) {
      if (std::find(table.extended.begin(), table.extended.end(), f) == table.extended.end()) {
        curled_proto = params.fingers[static_cast<size_t>(f)];
        break;
      }
    }
    extended.clear();
    for (FingerId f : kFingers) {
      const bool selected = std::find(spec.selected_fingers.begin(), spec.selected_fingers.end(),
                                      f) != spec.selected_fingers.end();
      const bool was = std::find(table.extended.begin(), table.extended.end(), f) !=
                       table.extended.end();
      if (selected) {
        extended.push_back(f);
        if (!was) p.fingers[static_cast<size_t>(f)] = extended_proto;
      } else if (was) {
        p.fingers[static_cast<size_t>(f)] = curled_proto;
      }
    }
  }

  if (spec.mainbend) {
    for (FingerId f : extended) apply_bending(p, f, *spec.mainbend, spec.base, avatar);
  }
  for (const auto& [finger, bend] : spec.finger_bends) {
    apply_bending(p, finger, bend, spec.base, avatar);
  }

  if (spec.thumbpos) {
    switch (*spec.thumbpos) {
      case ThumbPos::Splayed:
      case ThumbPos::Opposed:
      case ThumbPos::Across: {
        const Vec3& pose = avatar.thumb_base_table.at(*spec.thumbpos);
        p.thumb.bend = pose.x();
        p.thumb.splay = pose.y();
        p.thumb.twist = pose.z();
        break;
      }
      case ThumbPos::WideGap:
      case ThumbPos::NarrowGap: {
        if (!is_cee_base(spec.base)) {
          throw std::invalid_argument("wide_gap/narrow_gap apply only to cee handshapes");
        }
        // the gap is adjusted at the finger base joints, not the thumb
        const double delta = avatar.hand(Side::Right).cee_gap_delta;
        const double sign = *spec.thumbpos == ThumbPos::NarrowGap ? 1.0 : -1.0;
        for (FingerId f : extended) {
          if (f == FingerId::Thumb) continue;
          p.fingers[static_cast<size_t>(f)].base_bend += sign * delta;
        }
        break;
      }
    }
  }

  // crossings and thumb-between are table-driven poses: pull the crossing
  // finger over its neighbour by adding splay towards it plus extra bend
  for (const auto& [over, under] : spec.crossings) {
    if (over == FingerId::Thumb || under == FingerId::Thumb) continue;
    FingerParams& fo = p.fingers[static_cast<size_t>(over)];
    const double towards = static_cast<int>(under) > static_cast<int>(over) ? -0.25 : 0.25;
    fo.base_splay += towards;
    fo.base_bend += 0.25;
  }
  if (spec.thumb_between) {
    p.thumb.bend = std::max(p.thumb.bend, 1.0);
    p.thumb.splay = 0.35;
    p.thumb.twist = avatar.thumb_base_table.at(ThumbPos::Across).z();
  }

  // oblique carpometacarpal hinges engage when ring/little combine bend and splay
  for (FingerId f : {FingerId::Ring, FingerId::Little}) {
    FingerParams& fp = p.fingers[static_cast<size_t>(f)];
    if (fp.base_bend > 0 && std::abs(fp.base_splay) > 0) {
      const double coupling = avatar.hand(Side::Right).cmc_coupling;
      fp.cmc = coupling * std::min(fp.base_bend, std::abs(fp.base_splay));
    }
  }

  for (const auto& [name, angle] : spec.explicit_joint_angles) {
    if (double* slot = named_joint(p, name)) {
      *slot = angle;
    } else {
      throw std::invalid_argument("unknown joint \"" + name + "\"");
    }
  }

  clamp_params(p, avatar.finger_limits);
  return p;
}

HandJointParams interpolate_handshapes(const HandJointParams& a, const HandJointParams& b,
                                       double t) {
  HandJointParams out;
  for (size_t f = 0; f < 4; ++f) {
    out.fingers[f].base_bend = mid(a.fingers[f].base_bend, b.fingers[f].base_bend, t);
    out.fingers[f].base_splay = mid(a.fingers[f].base_splay, b.fingers[f].base_splay, t);
    out.fingers[f].middle = mid(a.fingers[f].middle, b.fingers[f].middle, t);
    out.fingers[f].distal = mid(a.fingers[f].distal, b.fingers[f].distal, t);
    out.fingers[f].cmc = mid(a.fingers[f].cmc, b.fingers[f].cmc, t);
  }
  out.thumb.bend = mid(a.thumb.bend, b.thumb.bend, t);
  out.thumb.splay = mid(a.thumb.splay, b.thumb.splay, t);
  out.thumb.twist = mid(a.thumb.twist, b.thumb.twist, t);
  out.thumb.hinge1 = mid(a.thumb.hinge1, b.thumb.hinge1, t);
  out.thumb.hinge2 = mid(a.thumb.hinge2, b.thumb.hinge2, t);
  return out;
}

HandJointParams resolve_handshape(const HandshapeSpec& spec, const AvatarDescription& avatar) {
  if (spec.between) {
    const HandJointParams a = resolve_handshape(spec.between->a, avatar);
    const HandJointParams b = resolve_handshape(spec.between->b, avatar);
    return interpolate_handshapes(a, b, spec.between->t);
  }
  return apply_modifiers(base_handshape_params(spec.base, avatar), spec, avatar);
}

std::vector<std::pair<int, Quat>> hand_params_to_rotations(const HandJointParams& params,
                                                           const AvatarDescription& avatar,
                                                           Side side) {
  std::vector<std::pair<int, Quat>> out;
  out.reserve(17);
  const HandLayout& hand = avatar.hand(side);
  const Skeleton& sk = avatar.skeleton;

  for (size_t f = 0; f < 4; ++f) {
    const FingerParams& fp = params.fingers[f];
    const HandCalibration& cal = avatar.calibration(side, kFingers[f]);
    const int base = sk.index_of(hand.finger_bones[f][0]);
    const int middle = sk.index_of(hand.finger_bones[f][1]);
    const int distal = sk.index_of(hand.finger_bones[f][2]);
    out.emplace_back(base,
                     finger_base_rotation(fp.base_bend, fp.base_splay, cal, hand.finger_frame));
    out.emplace_back(middle, axis_angle(hand.hinge_axis, fp.middle));
    out.emplace_back(distal, axis_angle(hand.hinge_axis, fp.distal));
    if (f >= 2) {
      const std::string& cmc_name = hand.cmc_bones[f - 2];
      if (!cmc_name.empty()) {
        out.emplace_back(sk.index_of(cmc_name), axis_angle(hand.cmc_axis, fp.cmc));
      }
    }
  }

  const ThumbParams& tp = params.thumb;
  const Quat thumb_base = axis_angle(hand.thumb_frame.bend_axis, tp.bend) *
                          axis_angle(hand.thumb_frame.splay_axis, tp.splay) *
                          axis_angle(hand.thumb_frame.twist_axis, tp.twist);
  out.emplace_back(sk.index_of(hand.thumb_bones[0]), thumb_base);
  out.emplace_back(sk.index_of(hand.thumb_bones[1]), axis_angle(hand.hinge_axis, tp.hinge1));
  out.emplace_back(sk.index_of(hand.thumb_bones[2]), axis_angle(hand.hinge_axis, tp.hinge2));
  return out;
}

void apply_hand_rotations(const HandJointParams& params, const AvatarDescription& avatar,
                          Side side, std::span<Quat> local_rotations) {
  for (const auto& [index, q] : hand_params_to_rotations(params, avatar, side)) {
    if (index >= 0) local_rotations[static_cast<size_t>(index)] = q;
  }
}

std::string hand_site_name(std::string_view point, Side side) {
  std::string name(point);
  const std::string_view suffix = side == Side::Left ? "_left" : "_right";
  if (name.size() > suffix.size() &&
      name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return name;
  }
  return name + std::string(suffix);
}

Vec3 hand_point_offset(const AvatarDescription& avatar, Side side, std::string_view point,
                       const HandJointParams& params) {
  const std::string site_name = hand_site_name(point, side);
  auto it = avatar.locations.find(site_name);
  if (it == avatar.locations.end()) {
    throw std::out_of_range("unknown hand point \"" + site_name + "\"");
  }
  const SurfacePoint& sp = it->second;
  const Skeleton& sk = avatar.skeleton;
  const int hand_bone = sk.index_of(avatar.hand(side).hand_bone);

  // pose the hand subtree locally: walk from the site's bone up to the hand bone
  std::vector<std::pair<int, Quat>> rotations = hand_params_to_rotations(params, avatar, side);
  auto local_rotation = [&](int bone) -> Quat {
    for (const auto& [index, q] : rotations) {
      if (index == bone) return q;
    }
    return sk.bones[static_cast<size_t>(bone)].rest_rotation;
  };

  Vec3 offset = sp.offset;
  int bone = sp.bone_index;
  while (bone != hand_bone && bone >= 0) {
    const Bone& b = sk.bones[static_cast<size_t>(bone)];
    offset = local_rotation(bone) * offset + b.offset;
    bone = b.parent;
  }
  if (bone != hand_bone) return Vec3::Zero();  // point not on this hand
  return offset;
}

}  // namespace animgen
