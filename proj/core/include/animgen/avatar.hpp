#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "animgen/diagnostics.hpp"
#include "animgen/math.hpp"
#include "animgen/sigml.hpp"

namespace animgen {

enum class Side { Left, Right };
inline Side other_side(Side s) { return s == Side::Left ? Side::Right : Side::Left; }

struct Bone {
  std::string name;
  int parent = -1;            // index into Skeleton::bones, -1 for the root
  Vec3 offset = Vec3::Zero(); // rest offset in the parent frame, meters
  Quat rest_rotation = Quat::Identity();
};

// Rooted bone tree in topological order; the bone order is the canonical
// order of rotations in output frames.
struct Skeleton {
  std::vector<Bone> bones;
  std::map<std::string, int> index;

  int index_of(std::string_view name) const {
    auto it = index.find(std::string(name));
    return it == index.end() ? -1 : it->second;
  }
};

struct SurfacePoint {
  std::string bone;
  int bone_index = -1;
  Vec3 offset = Vec3::Zero();                // meters, in the bone frame
  std::optional<Vec3> outward_normal;        // unit, in the bone frame
};

// Per-finger deviations from the idealized straight-fingered hand, measured
// on the flat hand and the fist (see finger_base_rotation).
struct HandCalibration {
  double theta_flat = 0;
  double theta_fist1 = 0;
  double theta_fist2 = 0;
};

struct WristLimits {
  double flexion_max = 1.2;
  double extension_max = 1.0;
  double radial_max = 0.35;
  double ulnar_max = 0.55;
};

struct ArmSolverConfig {
  double alpha_max = kPi / 3.0;            // swivel ceiling when reaching across
  double clavicle_engage_fraction = 0.9;   // of arm length
  double clavicle_max = 0.2618;
  double torso_margin = 0.015;             // meters
  double alpha_wrist_budget = 0.3;         // swivel correction to relieve the wrist
};

// Bend/splay/longitudinal axes of a finger base joint, in the hand bone frame.
struct FingerFrame {
  Vec3 beta = Vec3(0, 0, 1);
  Vec3 sigma = Vec3(-1, 0, 0);
  Vec3 lambda = Vec3(0, -1, 0);
};

struct ThumbFrame {
  Vec3 bend_axis = Vec3(1, 0, 0);
  Vec3 splay_axis = Vec3(0, 0, 1);
  Vec3 twist_axis = Vec3(0, -1, 0);
};

// Joint-parameter sets. cmc is only driven for ring/little.
struct FingerParams {
  double base_bend = 0;
  double base_splay = 0;
  double middle = 0;
  double distal = 0;
  double cmc = 0;
};

struct ThumbParams {
  double bend = 0;
  double splay = 0;
  double twist = 0;
  double hinge1 = 0;
  double hinge2 = 0;
};

struct HandJointParams {
  std::array<FingerParams, 4> fingers;  // index, middle, ring, little
  ThumbParams thumb;
};

struct HandshapeTable {
  HandJointParams params;
  std::vector<FingerId> extended;  // the basic handshape's extended fingers
};

// Per-(base, bending) actual joint angles; the nominal tuples are only a
// fallback scaled by the per-joint maxima.
struct BendingOverride {
  double base = 0;
  double middle = 0;
  double distal = 0;
};

struct FingerJointLimits {
  double base_max = kPi / 2;
  double middle_max = 1.75;
  double distal_max = 1.2;
  double cmc_max = 0.35;
};

struct NonManualMapping {
  std::map<std::string, double> morphs;  // morph name -> full-weight value
  struct BoneRotation {
    std::string bone;
    Quat rotation = Quat::Identity();  // applied at full weight
  };
  std::vector<BoneRotation> bones;
};

// Bone names, frames and couplings of one hand rig.
struct HandLayout {
  std::string hand_bone;
  // chains exclude the hand bone: fingers are [base, middle, distal],
  // thumb is [base, hinge1, hinge2]
  std::array<std::array<std::string, 3>, 4> finger_bones;
  std::array<std::string, 3> thumb_bones;
  std::array<std::string, 2> cmc_bones;  // ring, little; empty when absent
  FingerFrame finger_frame;              // shared by the four fingers
  ThumbFrame thumb_frame;
  Vec3 hinge_axis = Vec3(0, 0, 1);       // middle/distal joints and thumb hinges
  Vec3 cmc_axis = Vec3(0, 0, 1);
  Vec3 finger_axis = Vec3(0, -1, 0);     // hand longitudinal axis (e.f.d. at rest)
  Vec3 palm_normal = Vec3(1, 0, 0);      // out of the palm surface
  Vec3 wrist_flexion_axis = Vec3(0, 0, 1);
  Vec3 wrist_deviation_axis = Vec3(-1, 0, 0);  // positive = radial
  double cmc_coupling = 0.4;             // cmc = coupling * min(bend, |splay|)
  double cee_gap_delta = 0.15;           // base-bend shift for wide/narrow cee gaps
};

struct ArmChain {
  int clavicle = -1, upper_arm = -1, forearm = -1, hand = -1;
  double upper_length = 0, forearm_length = 0;
  Vec3 elbow_rest_dir = Vec3(0, -1, 0);   // bone direction at rest, parent frame
  Vec3 elbow_hinge_axis = Vec3(-1, 0, 0); // flexion axis at rest
};

struct GlobalPose {
  std::vector<Quat> rotations;   // global, per bone in skeleton order
  std::vector<Vec3> positions;
};

struct AvatarDescription {
  Skeleton skeleton;
  std::map<std::string, SurfacePoint> locations;
  std::set<std::string> morphs;
  std::map<HandshapeBase, HandshapeTable> handshape_tables;
  std::map<std::pair<HandshapeBase, BendName>, BendingOverride> bending_tables;
  std::map<ThumbPos, Vec3> thumb_base_table;  // (bend, splay, twist)
  std::map<std::string, NonManualMapping> nonmanual_map;
  std::array<std::array<HandCalibration, 4>, 2> hand_calibration;  // [side][finger]
  std::array<HandLayout, 2> hands;                                 // [side]
  std::array<ArmChain, 2> arms;
  WristLimits wrist_limits;
  ArmSolverConfig arm_solver;
  FingerJointLimits finger_limits;

  // derived at load
  double arm_length = 0;       // upper arm + forearm rest lengths
  double shoulder_width = 0;   // distance between the shoulder joints
  double body_height = 0;      // ground to the head-top site

  const HandLayout& hand(Side s) const { return hands[static_cast<size_t>(s)]; }
  const ArmChain& arm(Side s) const { return arms[static_cast<size_t>(s)]; }
  const HandCalibration& calibration(Side s, FingerId finger) const {
    return hand_calibration[static_cast<size_t>(s)][static_cast<size_t>(finger)];
  }
};

struct AvatarLoadResult {
  std::optional<AvatarDescription> avatar;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return avatar.has_value(); }
};

// Load and fully validate an avatar description (JSON, see
// docs/avatar_format.md). All structural invariants are checked here so the
// rest of the pipeline never revalidates.
AvatarLoadResult load_avatar_text(std::string_view json_text);
AvatarLoadResult load_avatar_file(const std::string& path);

// Serialize back to JSON (round-trip support).
std::string save_avatar_text(const AvatarDescription& avatar);

// Compose global transforms root-to-leaf; bones absent from the map keep
// their rest rotation. Unknown bone names throw std::out_of_range.
GlobalPose forward_kinematics(const AvatarDescription& avatar,
                              const std::map<std::string, Quat>& joint_rotations);

// Fast path: local rotations for every bone, in skeleton order.
GlobalPose forward_kinematics(const AvatarDescription& avatar, std::span<const Quat> local);
void forward_kinematics_into(const AvatarDescription& avatar, std::span<const Quat> local,
                             GlobalPose& pose);

GlobalPose rest_pose(const AvatarDescription& avatar);

// Global coordinates of a named surface point. Throws std::out_of_range for
// unknown sites.
Vec3 site_position(const AvatarDescription& avatar, const GlobalPose& pose,
                   std::string_view site);

// Global direction of a site's outward normal (zero when the site has none).
Vec3 site_normal(const AvatarDescription& avatar, const GlobalPose& pose,
                 std::string_view site);

// Sites the loader requires so posture resolution never misses a name.
std::vector<std::string> required_site_names();

}  // namespace animgen
