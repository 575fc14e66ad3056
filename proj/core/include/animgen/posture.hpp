#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "animgen/avatar.hpp"
#include "animgen/body_language.hpp"
#include "animgen/handshape.hpp"
#include "animgen/manner.hpp"
#include "animgen/math.hpp"
#include "animgen/sigml.hpp"

namespace animgen {

struct ResolvedLocation {
  Vec3 point = Vec3::Zero();
  bool contact = false;
  LocationSpec source;
};

// Spatial path of one segment, endpoints resolved.
struct PathSpec {
  enum class Kind { Straight, Arc, Circle };
  Kind kind = Kind::Straight;
  Vec3 start = Vec3::Zero();
  Vec3 end = Vec3::Zero();
  // arc: bows towards `bulge`, sagitta meters off the chord midpoint
  Vec3 bulge = Vec3(0, 1, 0);
  double sagitta = 0;
  // circle: rotation of `start` about the axis through `centre`
  Vec3 centre = Vec3::Zero();
  Vec3 axis = Vec3(0, 0, 1);
  double sweep = 0;  // signed radians, right-hand rule about `axis`
};

// A hand's fully resolved goal at a key time.
struct HandGoal {
  std::string hand_point = "palm_centre";
  ResolvedLocation target;
  Vec3 extfidir = Vec3(0, -1, 0);
  Vec3 palmor = Vec3(0, 0, -1);
  Quat orientation = Quat::Identity();
  HandJointParams handshape;
  Vec3 wrist_position = Vec3::Zero();
  std::optional<PathSpec> path_to_next;  // segment geometry towards the next key
};

struct PostureKey {
  double time = 0;
  std::optional<HandGoal> left;
  std::optional<HandGoal> right;
  std::map<std::string, double> nonmanual_channels;  // sampled envelope values
  MannerSet trajectory_manner;                        // of the segment starting here
  MovementKind segment_kind = MovementKind::Transition;
};

// A scheduled non-manual action: one envelope on one action channel.
struct NonManualEvent {
  Tier tier = Tier::Face;
  std::string action_id;
  double start = 0;
  double attack = 0;
  double sustain = 0;
  double release = 0;
  EnvelopeSpec::Ramp ramp = EnvelopeSpec::Ramp::Smooth;
};

// Envelope value of an event at time t (absolute sign time).
double event_envelope(const NonManualEvent& event, double t);

struct SignPlan {
  std::vector<PostureKey> keys;  // strictly increasing times, first at 0
  std::vector<NonManualEvent> events;
  double total_duration = 0;
  std::vector<Diagnostic> diagnostics;
};

// Single fixed point for a location spec. Signing-space points combine the
// level site height, the lateral grid column and the proximity along +Z;
// body points sit `proximity` out along the site normal, touch directly on
// the surface. Throws std::out_of_range for unknown sites.
ResolvedLocation resolve_location(const LocationSpec& spec, const AvatarDescription& avatar,
                                  const BodyLanguageProfile& profile, const GlobalPose& pose);

// The significant point on the hand: an explicit choice wins; a single-finger
// pointing handshape aimed at a nearby body target selects that fingertip;
// the palm centre otherwise.
std::string select_hand_point(const HandSpec& spec, const ResolvedLocation& target,
                              const AvatarDescription& avatar, const GlobalPose& pose);

// Two-hand constellation: the pair midpoint lands on the anchor and the named
// hand points separate by the resolved distance along the given direction
// (default: the left-right axis, dominant hand on its own side). Returns
// (dominant, nondominant) targets.
std::pair<ResolvedLocation, ResolvedLocation> resolve_hand_pair(
    const HandConstellation& constellation, const ResolvedLocation& anchor,
    const AvatarDescription& avatar, const BodyLanguageProfile& profile);

// Global hand orientation realizing extended-finger and palm directions.
Quat hand_orientation_from(const AvatarDescription& avatar, Side side, const Vec3& extfidir,
                           const Vec3& palmor);

// Turn one (symmetry-expanded) sign into its key postures: an optional
// transition from the previous sign (lax before movement, targetted before a
// static posture), the initial posture, and the motion tree's strokes with
// their context manners; repeated movements get a lax return stroke,
// reversing repetitions replay backwards targetted, contact strokes hold for
// the profile's contact_hold.
SignPlan plan_key_postures(const Sign& sign, const AvatarDescription& avatar,
                           const BodyLanguageProfile& profile,
                           const std::optional<PostureKey>& previous_end);

}  // namespace animgen
