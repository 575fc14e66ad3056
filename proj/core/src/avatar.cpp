#include "animgen/avatar.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace animgen {

using json = nlohmann::ordered_json;

namespace {

constexpr std::array<FingerId, 4> kFingers = {FingerId::Index, FingerId::Middle, FingerId::Ring,
                                              FingerId::Little};
constexpr std::array<std::string_view, 4> kFingerKeys = {"index", "middle", "ring", "little"};
constexpr std::array<std::string_view, 2> kSideKeys = {"left", "right"};

class Loader {
 public:
  AvatarLoadResult run(std::string_view text) {
    AvatarLoadResult result;
    json root;
    try {
      root = json::parse(text);
    } catch (const json::exception& e) {
      error("", std::string("invalid JSON: ") + e.what());
      result.diagnostics = std::move(diags_);
      return result;
    }
    AvatarDescription avatar;
    load(root, avatar);
    result.diagnostics = std::move(diags_);
    if (!has_errors(result.diagnostics)) result.avatar = std::move(avatar);
    return result;
  }

 private:
  std::vector<Diagnostic> diags_;

  void error(const std::string& path, std::string msg) {
    diags_.push_back({Severity::Error, path, std::move(msg)});
  }
  void warn(const std::string& path, std::string msg) {
    diags_.push_back({Severity::Warning, path, std::move(msg)});
  }

  double number(const json& j, const std::string& path, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) {
      error(path + "." + key, "expected a number");
      return fallback;
    }
    return j[key].get<double>();
  }

  double require_number(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) {
      error(path + "." + key, "required number missing");
      return 0;
    }
    return j[key].get<double>();
  }

  Vec3 vec3(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3 || !j[0].is_number()) {
      error(path, "expected a 3-vector");
      return Vec3::Zero();
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  }

  Vec3 vec3_field(const json& j, const std::string& path, const char* key, const Vec3& fallback) {
    if (!j.contains(key)) return fallback;
    return vec3(j[key], path + "." + key);
  }

  Vec3 unit_field(const json& j, const std::string& path, const char* key, const Vec3& fallback) {
    Vec3 v = vec3_field(j, path, key, fallback);
    if (v.norm() < 1e-9) {
      error(path + "." + key, "zero-length axis");
      return fallback;
    }
    return v.normalized();
  }

  void load(const json& root, AvatarDescription& a) {
    load_skeleton(root, a);
    load_sites(root, a);
    load_morphs(root, a);
    load_handshapes(root, a);
    load_bendings(root, a);
    load_thumb_base(root, a);
    load_nonmanuals(root, a);
    load_calibration(root, a);
    load_limits(root, a);
    load_solver(root, a);
    load_arms(root, a);
    load_hands(root, a);
    derive_measurements(a);
  }

  void load_skeleton(const json& root, AvatarDescription& a) {
    if (!root.contains("skeleton") || !root["skeleton"].is_array()) {
      error("skeleton", "required section missing");
      return;
    }
    const json& sk = root["skeleton"];
    for (size_t i = 0; i < sk.size(); ++i) {
      const std::string path = "skeleton[" + std::to_string(i) + "]";
      const json& jb = sk[i];
      Bone bone;
      if (!jb.contains("name") || !jb["name"].is_string()) {
        error(path, "bone requires a name");
        continue;
      }
      bone.name = jb["name"].get<std::string>();
      if (a.skeleton.index.count(bone.name)) {
        error(path, "duplicate bone \"" + bone.name + "\"");
        continue;
      }
      if (jb.contains("parent") && !jb["parent"].is_null()) {
        const std::string parent = jb["parent"].get<std::string>();
        if (parent == bone.name) {
          error(path, "bone \"" + bone.name + "\" is its own parent (cycle)");
          continue;
        }
        bone.parent = a.skeleton.index_of(parent);
        if (bone.parent < 0) {
          error(path, "parent \"" + parent +
                          "\" not defined before child (bones must be in topological order)");
          continue;
        }
      }
      bone.offset = vec3_field(jb, path, "offset", Vec3::Zero());
      if (!bone.offset.allFinite()) error(path, "offset is not finite");
      if (bone.parent >= 0 && bone.offset.norm() <= 0.0) {
        error(path, "bone \"" + bone.name + "\" has zero length");
      }
      if (jb.contains("rotation")) {
        const json& jq = jb["rotation"];
        if (!jq.is_array() || jq.size() != 4) {
          error(path + ".rotation", "expected [w,x,y,z]");
        } else {
          Quat q(jq[0].get<double>(), jq[1].get<double>(), jq[2].get<double>(),
                 jq[3].get<double>());
          if (q.norm() < 1e-9) {
            error(path + ".rotation", "zero quaternion");
          } else {
            bone.rest_rotation = normalized_w_positive(q);
          }
        }
      }
      a.skeleton.index[bone.name] = static_cast<int>(a.skeleton.bones.size());
      a.skeleton.bones.push_back(std::move(bone));
    }
    if (a.skeleton.bones.empty()) error("skeleton", "no bones");
  }

  void load_sites(const json& root, AvatarDescription& a) {
    if (!root.contains("sites") || !root["sites"].is_object()) {
      error("sites", "required section missing");
      return;
    }
    for (const auto& [name, js] : root["sites"].items()) {
      const std::string path = "sites." + name;
      SurfacePoint sp;
      if (!js.contains("bone") || !js["bone"].is_string()) {
        error(path, "site requires a bone");
        continue;
      }
      sp.bone = js["bone"].get<std::string>();
      sp.bone_index = a.skeleton.index_of(sp.bone);
      if (sp.bone_index < 0) {
        error(path, "unknown bone \"" + sp.bone + "\"");
        continue;
      }
      sp.offset = vec3_field(js, path, "offset", Vec3::Zero());
      if (!sp.offset.allFinite()) error(path, "offset is not finite");
      if (js.contains("normal")) {
        Vec3 n = vec3(js["normal"], path + ".normal");
        if (n.norm() < 1e-9) {
          error(path + ".normal", "zero normal");
        } else {
          sp.outward_normal = n.normalized();
        }
      }
      a.locations[name] = std::move(sp);
    }
    std::string missing;
    for (const std::string& name : required_site_names()) {
      if (!a.locations.count(name)) missing += missing.empty() ? name : ", " + name;
    }
    if (!missing.empty()) error("sites", "missing required sites: " + missing);
  }

  void load_morphs(const json& root, AvatarDescription& a) {
    if (!root.contains("morphs")) return;
    for (const auto& m : root["morphs"]) a.morphs.insert(m.get<std::string>());
  }

  HandJointParams hand_params(const json& j, const std::string& path) {
    HandJointParams p;
    if (j.contains("fingers")) {
      for (size_t f = 0; f < 4; ++f) {
        const std::string key(kFingerKeys[f]);
        if (!j["fingers"].contains(key)) {
          error(path + ".fingers", "missing finger \"" + key + "\"");
          continue;
        }
        const json& jf = j["fingers"][key];
        const std::string fp = path + ".fingers." + key;
        p.fingers[f].base_bend = number(jf, fp, "bend", 0);
        p.fingers[f].base_splay = number(jf, fp, "splay", 0);
        p.fingers[f].middle = number(jf, fp, "middle", 0);
        p.fingers[f].distal = number(jf, fp, "distal", 0);
        p.fingers[f].cmc = number(jf, fp, "cmc", 0);
        if (p.fingers[f].base_bend < 0 || p.fingers[f].base_bend > kPi / 2 + 1e-9) {
          error(fp, "base bend outside [0, pi/2]");
        }
      }
    }
    if (j.contains("thumb")) {
      const json& jt = j["thumb"];
      const std::string tp = path + ".thumb";
      p.thumb.bend = number(jt, tp, "bend", 0);
      p.thumb.splay = number(jt, tp, "splay", 0);
      p.thumb.twist = number(jt, tp, "twist", 0);
      p.thumb.hinge1 = number(jt, tp, "hinge1", 0);
      p.thumb.hinge2 = number(jt, tp, "hinge2", 0);
    }
    return p;
  }

  void load_handshapes(const json& root, AvatarDescription& a) {
    if (!root.contains("handshapes") || !root["handshapes"].is_object()) {
      error("handshapes", "required section missing");
      return;
    }
    for (int i = 0; i < kHandshapeBaseCount; ++i) {
      const auto base = static_cast<HandshapeBase>(i);
      const std::string key(to_sigml_name(base));
      if (!root["handshapes"].contains(key)) {
        error("handshapes", "missing handshape table \"" + key + "\"");
        continue;
      }
      const json& jh = root["handshapes"][key];
      const std::string path = "handshapes." + key;
      HandshapeTable table;
      table.params = hand_params(jh, path);
      if (jh.contains("extended")) {
        for (const auto& jf : jh["extended"]) {
          const std::string name = jf.get<std::string>();
          auto it = std::find(kFingerKeys.begin(), kFingerKeys.end(), name);
          if (it == kFingerKeys.end()) {
            error(path + ".extended", "unknown finger \"" + name + "\"");
          } else {
            table.extended.push_back(kFingers[static_cast<size_t>(it - kFingerKeys.begin())]);
          }
        }
      }
      a.handshape_tables[base] = std::move(table);
    }
  }

  void load_bendings(const json& root, AvatarDescription& a) {
    if (!root.contains("bendings")) return;
    for (const auto& [base_name, jtable] : root["bendings"].items()) {
      HandshapeBase base;
      bool found = false;
      for (int i = 0; i < kHandshapeBaseCount; ++i) {
        if (to_sigml_name(static_cast<HandshapeBase>(i)) == base_name) {
          base = static_cast<HandshapeBase>(i);
          found = true;
          break;
        }
      }
      if (!found) {
        error("bendings." + base_name, "unknown handshape");
        continue;
      }
      for (const auto& [bend_name, jo] : jtable.items()) {
        std::optional<BendName> bend;
        for (BendName b : {BendName::Bent, BendName::Round, BendName::Hooked, BendName::DblBent,
                           BendName::DblHooked}) {
          if (to_sigml_name(b) == bend_name) bend = b;
        }
        const std::string path = "bendings." + base_name + "." + bend_name;
        if (!bend) {
          error(path, "unknown bending");
          continue;
        }
        BendingOverride o;
        o.base = number(jo, path, "base", 0);
        o.middle = number(jo, path, "middle", 0);
        o.distal = number(jo, path, "distal", 0);
        a.bending_tables[{base, *bend}] = o;
      }
    }
  }

  void load_thumb_base(const json& root, AvatarDescription& a) {
    if (!root.contains("thumb_base") || !root["thumb_base"].is_object()) {
      error("thumb_base", "required section missing");
      return;
    }
    for (ThumbPos pos : {ThumbPos::Splayed, ThumbPos::Opposed, ThumbPos::Across}) {
      const std::string key(to_sigml_name(pos));
      if (!root["thumb_base"].contains(key)) {
        error("thumb_base", "missing pose \"" + key + "\"");
        continue;
      }
      a.thumb_base_table[pos] = vec3(root["thumb_base"][key], "thumb_base." + key);
    }
  }

  void load_nonmanuals(const json& root, AvatarDescription& a) {
    if (!root.contains("nonmanuals")) return;
    for (const auto& [name, jm] : root["nonmanuals"].items()) {
      const std::string path = "nonmanuals." + name;
      NonManualMapping mapping;
      if (jm.contains("morphs")) {
        for (const auto& [morph, w] : jm["morphs"].items()) {
          if (!a.morphs.count(morph)) {
            error(path, "weight targets unknown morph \"" + morph + "\"");
            continue;
          }
          mapping.morphs[morph] = w.get<double>();
        }
      }
      if (jm.contains("bones")) {
        for (const auto& [bone, jr] : jm["bones"].items()) {
          if (a.skeleton.index_of(bone) < 0) {
            error(path, "rotation targets unknown bone \"" + bone + "\"");
            continue;
          }
          const Vec3 axis = unit_field(jr, path + "." + bone, "axis", Vec3(1, 0, 0));
          const double angle = number(jr, path + "." + bone, "angle", 0);
          mapping.bones.push_back({bone, axis_angle(axis, angle)});
        }
      }
      a.nonmanual_map[name] = std::move(mapping);
    }
  }

  void load_calibration(const json& root, AvatarDescription& a) {
    if (!root.contains("calibration")) {
      error("calibration", "required section missing");
      return;
    }
    for (size_t s = 0; s < 2; ++s) {
      const std::string skey(kSideKeys[s]);
      if (!root["calibration"].contains(skey)) {
        error("calibration", "missing side \"" + skey + "\"");
        continue;
      }
      for (size_t f = 0; f < 4; ++f) {
        const std::string fkey(kFingerKeys[f]);
        const std::string path = "calibration." + skey + "." + fkey;
        if (!root["calibration"][skey].contains(fkey)) {
          error(path, "missing finger calibration");
          continue;
        }
        const Vec3 v = vec3(root["calibration"][skey][fkey], path);
        for (int i = 0; i < 3; ++i) {
          if (std::abs(v[i]) >= kPi / 4) error(path, "calibration angle outside (-pi/4, pi/4)");
        }
        a.hand_calibration[s][f] = {v.x(), v.y(), v.z()};
      }
    }
  }

  void load_limits(const json& root, AvatarDescription& a) {
    if (!root.contains("limits")) return;
    const json& jl = root["limits"];
    if (jl.contains("wrist")) {
      const json& jw = jl["wrist"];
      a.wrist_limits.flexion_max = number(jw, "limits.wrist", "flexion", 1.2);
      a.wrist_limits.extension_max = number(jw, "limits.wrist", "extension", 1.0);
      a.wrist_limits.radial_max = number(jw, "limits.wrist", "radial", 0.35);
      a.wrist_limits.ulnar_max = number(jw, "limits.wrist", "ulnar", 0.55);
      const WristLimits& w = a.wrist_limits;
      if (w.flexion_max <= 0 || w.extension_max <= 0 || w.radial_max <= 0 || w.ulnar_max <= 0) {
        error("limits.wrist", "limits must be positive");
      }
      if (w.radial_max >= w.flexion_max || w.ulnar_max >= w.flexion_max) {
        error("limits.wrist", "side-to-side limits must be below flexion/extension");
      }
    }
    if (jl.contains("fingers")) {
      const json& jf = jl["fingers"];
      a.finger_limits.base_max = number(jf, "limits.fingers", "base", kPi / 2);
      a.finger_limits.middle_max = number(jf, "limits.fingers", "middle", 1.75);
      a.finger_limits.distal_max = number(jf, "limits.fingers", "distal", 1.2);
      a.finger_limits.cmc_max = number(jf, "limits.fingers", "cmc", 0.35);
    }
  }

  void load_solver(const json& root, AvatarDescription& a) {
    if (!root.contains("solver")) return;
    const json& js = root["solver"];
    a.arm_solver.alpha_max = number(js, "solver", "alpha_max", kPi / 3);
    a.arm_solver.clavicle_engage_fraction = number(js, "solver", "clavicle_engage_fraction", 0.9);
    a.arm_solver.clavicle_max = number(js, "solver", "clavicle_max", 0.2618);
    a.arm_solver.torso_margin = number(js, "solver", "torso_margin", 0.015);
    a.arm_solver.alpha_wrist_budget = number(js, "solver", "alpha_wrist_budget", 0.3);
    if (a.arm_solver.alpha_max <= 0 || a.arm_solver.alpha_max > kPi / 2) {
      error("solver.alpha_max", "must lie in (0, pi/2]");
    }
    if (a.arm_solver.clavicle_engage_fraction <= 0.5 ||
        a.arm_solver.clavicle_engage_fraction > 1.0) {
      error("solver.clavicle_engage_fraction", "must lie in (0.5, 1.0]");
    }
  }

  void load_arms(const json& root, AvatarDescription& a) {
    if (!root.contains("arms")) {
      error("arms", "required section missing");
      return;
    }
    for (size_t s = 0; s < 2; ++s) {
      const std::string skey(kSideKeys[s]);
      const std::string path = "arms." + skey;
      if (!root["arms"].contains(skey)) {
        error(path, "missing arm");
        continue;
      }
      const json& ja = root["arms"][skey];
      ArmChain chain;
      auto bone_field = [&](const char* key) -> int {
        if (!ja.contains(key)) {
          error(path, std::string("missing bone \"") + key + "\"");
          return -1;
        }
        const std::string name = ja[key].get<std::string>();
        const int idx = a.skeleton.index_of(name);
        if (idx < 0) error(path, "unknown bone \"" + name + "\"");
        return idx;
      };
      chain.clavicle = bone_field("clavicle");
      chain.upper_arm = bone_field("upper_arm");
      chain.forearm = bone_field("forearm");
      chain.hand = bone_field("hand");
      if (chain.upper_arm >= 0 && chain.forearm >= 0 && chain.hand >= 0) {
        chain.upper_length = a.skeleton.bones[chain.forearm].offset.norm();
        chain.forearm_length = a.skeleton.bones[chain.hand].offset.norm();
        chain.elbow_rest_dir = a.skeleton.bones[chain.forearm].offset.normalized();
        if (chain.upper_length <= 0 || chain.forearm_length <= 0) {
          error(path, "arm bones must have positive length");
        }
      }
      chain.elbow_hinge_axis = unit_field(ja, path, "elbow_hinge_axis", Vec3(-1, 0, 0));
      a.arms[s] = chain;
    }
  }

  void load_hands(const json& root, AvatarDescription& a) {
    if (!root.contains("hands")) {
      error("hands", "required section missing");
      return;
    }
    for (size_t s = 0; s < 2; ++s) {
      const std::string skey(kSideKeys[s]);
      const std::string path = "hands." + skey;
      if (!root["hands"].contains(skey)) {
        error(path, "missing hand");
        continue;
      }
      const json& jh = root["hands"][skey];
      HandLayout hand;
      auto check_bone = [&](const std::string& name, const std::string& where) {
        if (a.skeleton.index_of(name) < 0) error(where, "unknown bone \"" + name + "\"");
      };
      hand.hand_bone = jh.value("hand_bone", "");
      check_bone(hand.hand_bone, path + ".hand_bone");
      if (jh.contains("fingers")) {
        for (size_t f = 0; f < 4; ++f) {
          const std::string fkey(kFingerKeys[f]);
          if (!jh["fingers"].contains(fkey) || jh["fingers"][fkey].size() != 3) {
            error(path + ".fingers." + fkey, "expected three chain bones");
            continue;
          }
          for (size_t i = 0; i < 3; ++i) {
            hand.finger_bones[f][i] = jh["fingers"][fkey][i].get<std::string>();
            check_bone(hand.finger_bones[f][i], path + ".fingers." + fkey);
          }
        }
      } else {
        error(path, "missing fingers");
      }
      if (jh.contains("thumb") && jh["thumb"].size() == 3) {
        for (size_t i = 0; i < 3; ++i) {
          hand.thumb_bones[i] = jh["thumb"][i].get<std::string>();
          check_bone(hand.thumb_bones[i], path + ".thumb");
        }
      } else {
        error(path, "missing thumb chain");
      }
      if (jh.contains("cmc")) {
        // carpometacarpal joints are optional; many rigs lack them
        const json& jc = jh["cmc"];
        if (jc.contains("ring")) {
          hand.cmc_bones[0] = jc["ring"].get<std::string>();
          check_bone(hand.cmc_bones[0], path + ".cmc.ring");
        }
        if (jc.contains("little")) {
          hand.cmc_bones[1] = jc["little"].get<std::string>();
          check_bone(hand.cmc_bones[1], path + ".cmc.little");
        }
      } else {
        warn(path, "no carpometacarpal joints; their rotations will be dropped");
      }
      if (jh.contains("finger_frame")) {
        const json& jf = jh["finger_frame"];
        hand.finger_frame.beta = unit_field(jf, path + ".finger_frame", "beta", Vec3(0, 0, 1));
        hand.finger_frame.sigma = unit_field(jf, path + ".finger_frame", "sigma", Vec3(-1, 0, 0));
        hand.finger_frame.lambda = unit_field(jf, path + ".finger_frame", "lambda", Vec3(0, -1, 0));
        const FingerFrame& ff = hand.finger_frame;
        if (std::abs(ff.beta.dot(ff.sigma)) > 1e-6 || std::abs(ff.beta.dot(ff.lambda)) > 1e-6 ||
            std::abs(ff.sigma.dot(ff.lambda)) > 1e-6) {
          error(path + ".finger_frame", "axes must be mutually orthogonal");
        } else if ((ff.beta.cross(ff.sigma) - ff.lambda).norm() > 1e-6) {
          error(path + ".finger_frame", "axes must form a right-handed frame");
        }
      }
      if (jh.contains("thumb_frame")) {
        const json& jt = jh["thumb_frame"];
        hand.thumb_frame.bend_axis = unit_field(jt, path + ".thumb_frame", "bend", Vec3(1, 0, 0));
        hand.thumb_frame.splay_axis = unit_field(jt, path + ".thumb_frame", "splay", Vec3(0, 0, 1));
        hand.thumb_frame.twist_axis = unit_field(jt, path + ".thumb_frame", "twist", Vec3(0, -1, 0));
      }
      hand.hinge_axis = unit_field(jh, path, "hinge_axis", Vec3(0, 0, 1));
      hand.cmc_axis = unit_field(jh, path, "cmc_axis", hand.hinge_axis);
      hand.finger_axis = unit_field(jh, path, "finger_axis", Vec3(0, -1, 0));
      hand.palm_normal = unit_field(jh, path, "palm_normal", Vec3(1, 0, 0));
      hand.wrist_flexion_axis = unit_field(jh, path, "wrist_flexion_axis", Vec3(0, 0, 1));
      hand.wrist_deviation_axis = unit_field(jh, path, "wrist_deviation_axis", Vec3(-1, 0, 0));
      hand.cmc_coupling = number(jh, path, "cmc_coupling", 0.4);
      hand.cee_gap_delta = number(jh, path, "cee_gap_delta", 0.15);
      a.hands[s] = std::move(hand);
    }
  }

  void derive_measurements(AvatarDescription& a) {
    if (has_errors(diags_)) return;
    const ArmChain& arm = a.arm(Side::Right);
    a.arm_length = arm.upper_length + arm.forearm_length;
    const GlobalPose pose = rest_pose(a);
    const Vec3 sr = pose.positions[static_cast<size_t>(a.arm(Side::Right).upper_arm)];
    const Vec3 sl = pose.positions[static_cast<size_t>(a.arm(Side::Left).upper_arm)];
    a.shoulder_width = (sl - sr).norm();
    a.body_height = site_position(a, pose, "head_top").y();
    if (a.arm_length <= 0 || a.shoulder_width <= 0 || a.body_height <= 0) {
      error("skeleton", "degenerate avatar measurements");
    }
  }
};

}  // namespace

std::vector<std::string> required_site_names() {
  std::vector<std::string> names = {
      "chest_centre",  "chest_left",  "chest_right",  "chest_back",
      "stomach_centre", "stomach_left", "stomach_right", "stomach_back",
      "shoulders_centre", "shoulders_back", "shoulder_left", "shoulder_right",
      "neck_centre",   "head_centre", "head_top",     "nose",
      "chin",          "mouth_centre", "ear_left",    "ear_right",
      "eyebrow_left",  "eyebrow_right",
  };
  for (std::string_view side : {"left", "right"}) {
    for (std::string_view point :
         {"palm_centre", "back_of_hand", "hand_radial", "hand_ulnar", "thumb_tip", "index_tip",
          "middle_tip", "ring_tip", "little_tip"}) {
      names.push_back(std::string(point) + "_" + std::string(side));
    }
  }
  return names;
}

AvatarLoadResult load_avatar_text(std::string_view json_text) {
  Loader loader;
  return loader.run(json_text);
}

AvatarLoadResult load_avatar_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    AvatarLoadResult r;
    r.diagnostics.push_back({Severity::Error, path, "cannot open file"});
    return r;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return load_avatar_text(ss.str());
}

// ---------------------------------------------------------------------------
// Forward kinematics
// ---------------------------------------------------------------------------

void forward_kinematics_into(const AvatarDescription& avatar, std::span<const Quat> local,
                             GlobalPose& pose) {
  const auto& bones = avatar.skeleton.bones;
  pose.rotations.resize(bones.size());
  pose.positions.resize(bones.size());
  for (size_t i = 0; i < bones.size(); ++i) {
    const Bone& b = bones[i];
    if (b.parent < 0) {
      pose.rotations[i] = local[i];
      pose.positions[i] = b.offset;
    } else {
      const auto p = static_cast<size_t>(b.parent);
      pose.rotations[i] = pose.rotations[p] * local[i];
      pose.positions[i] = pose.positions[p] + pose.rotations[p] * b.offset;
    }
  }
}

GlobalPose forward_kinematics(const AvatarDescription& avatar, std::span<const Quat> local) {
  GlobalPose pose;
  forward_kinematics_into(avatar, local, pose);
  return pose;
}

GlobalPose forward_kinematics(const AvatarDescription& avatar,
                              const std::map<std::string, Quat>& joint_rotations) {
  std::vector<Quat> local(avatar.skeleton.bones.size());
  for (size_t i = 0; i < avatar.skeleton.bones.size(); ++i) {
    local[i] = avatar.skeleton.bones[i].rest_rotation;
  }
  for (const auto& [name, q] : joint_rotations) {
    const int idx = avatar.skeleton.index_of(name);
    if (idx < 0) throw std::out_of_range("forward_kinematics: unknown bone \"" + name + "\"");
    local[static_cast<size_t>(idx)] = q;
  }
  return forward_kinematics(avatar, local);
}

GlobalPose rest_pose(const AvatarDescription& avatar) {
  std::vector<Quat> local(avatar.skeleton.bones.size());
  for (size_t i = 0; i < avatar.skeleton.bones.size(); ++i) {
    local[i] = avatar.skeleton.bones[i].rest_rotation;
  }
  return forward_kinematics(avatar, local);
}

Vec3 site_position(const AvatarDescription& avatar, const GlobalPose& pose,
                   std::string_view site) {
  auto it = avatar.locations.find(std::string(site));
  if (it == avatar.locations.end()) {
    throw std::out_of_range("unknown site \"" + std::string(site) + "\"");
  }
  const SurfacePoint& sp = it->second;
  const auto b = static_cast<size_t>(sp.bone_index);
  return pose.positions[b] + pose.rotations[b] * sp.offset;
}

Vec3 site_normal(const AvatarDescription& avatar, const GlobalPose& pose,
                 std::string_view site) {
  auto it = avatar.locations.find(std::string(site));
  if (it == avatar.locations.end()) {
    throw std::out_of_range("unknown site \"" + std::string(site) + "\"");
  }
  const SurfacePoint& sp = it->second;
  if (!sp.outward_normal) return Vec3::Zero();
  return pose.rotations[static_cast<size_t>(sp.bone_index)] * *sp.outward_normal;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json params_json(const HandJointParams& p) {
  json j;
  json fingers;
  for (size_t f = 0; f < 4; ++f) {
    fingers[std::string(kFingerKeys[f])] = {
        {"bend", p.fingers[f].base_bend}, {"splay", p.fingers[f].base_splay},
        {"middle", p.fingers[f].middle},  {"distal", p.fingers[f].distal},
        {"cmc", p.fingers[f].cmc},
    };
  }
  j["fingers"] = std::move(fingers);
  j["thumb"] = {{"bend", p.thumb.bend},
                {"splay", p.thumb.splay},
                {"twist", p.thumb.twist},
                {"hinge1", p.thumb.hinge1},
                {"hinge2", p.thumb.hinge2}};
  return j;
}

}  // namespace

std::string save_avatar_text(const AvatarDescription& a) {
  json root;
  json sk = json::array();
  for (const Bone& b : a.skeleton.bones) {
    json jb;
    jb["name"] = b.name;
    if (b.parent < 0) {
      jb["parent"] = nullptr;
    } else {
      jb["parent"] = a.skeleton.bones[static_cast<size_t>(b.parent)].name;
    }
    jb["offset"] = vec3_json(b.offset);
    if (!b.rest_rotation.isApprox(Quat::Identity())) {
      jb["rotation"] = {b.rest_rotation.w(), b.rest_rotation.x(), b.rest_rotation.y(),
                        b.rest_rotation.z()};
    }
    sk.push_back(std::move(jb));
  }
  root["skeleton"] = std::move(sk);

  json sites;
  for (const auto& [name, sp] : a.locations) {
    json js;
    js["bone"] = sp.bone;
    js["offset"] = vec3_json(sp.offset);
    if (sp.outward_normal) js["normal"] = vec3_json(*sp.outward_normal);
    sites[name] = std::move(js);
  }
  root["sites"] = std::move(sites);
  root["morphs"] = a.morphs;

  json handshapes;
  for (const auto& [base, table] : a.handshape_tables) {
    json jh = params_json(table.params);
    json extended = json::array();
    for (FingerId f : table.extended) extended.push_back(kFingerKeys[static_cast<size_t>(f)]);
    jh["extended"] = std::move(extended);
    handshapes[std::string(to_sigml_name(base))] = std::move(jh);
  }
  root["handshapes"] = std::move(handshapes);

  json bendings;
  for (const auto& [key, o] : a.bending_tables) {
    bendings[std::string(to_sigml_name(key.first))][std::string(to_sigml_name(key.second))] = {
        {"base", o.base}, {"middle", o.middle}, {"distal", o.distal}};
  }
  root["bendings"] = std::move(bendings);

  json thumb_base;
  for (const auto& [pos, v] : a.thumb_base_table) {
    thumb_base[std::string(to_sigml_name(pos))] = vec3_json(v);
  }
  root["thumb_base"] = std::move(thumb_base);

  json nonmanuals;
  for (const auto& [name, m] : a.nonmanual_map) {
    json jm;
    if (!m.morphs.empty()) jm["morphs"] = m.morphs;
    if (!m.bones.empty()) {
      json bones;
      for (const auto& br : m.bones) {
        const Eigen::AngleAxisd aa(br.rotation);
        bones[br.bone] = {{"axis", vec3_json(aa.axis())}, {"angle", aa.angle()}};
      }
      jm["bones"] = std::move(bones);
    }
    nonmanuals[name] = std::move(jm);
  }
  root["nonmanuals"] = std::move(nonmanuals);

  json calibration;
  for (size_t s = 0; s < 2; ++s) {
    json side;
    for (size_t f = 0; f < 4; ++f) {
      const HandCalibration& c = a.hand_calibration[s][f];
      side[std::string(kFingerKeys[f])] = {c.theta_flat, c.theta_fist1, c.theta_fist2};
    }
    calibration[std::string(kSideKeys[s])] = std::move(side);
  }
  root["calibration"] = std::move(calibration);

  root["limits"] = {
      {"wrist",
       {{"flexion", a.wrist_limits.flexion_max},
        {"extension", a.wrist_limits.extension_max},
        {"radial", a.wrist_limits.radial_max},
        {"ulnar", a.wrist_limits.ulnar_max}}},
      {"fingers",
       {{"base", a.finger_limits.base_max},
        {"middle", a.finger_limits.middle_max},
        {"distal", a.finger_limits.distal_max},
        {"cmc", a.finger_limits.cmc_max}}},
  };
  root["solver"] = {
      {"alpha_max", a.arm_solver.alpha_max},
      {"clavicle_engage_fraction", a.arm_solver.clavicle_engage_fraction},
      {"clavicle_max", a.arm_solver.clavicle_max},
      {"torso_margin", a.arm_solver.torso_margin},
      {"alpha_wrist_budget", a.arm_solver.alpha_wrist_budget},
  };

  json arms;
  for (size_t s = 0; s < 2; ++s) {
    const ArmChain& c = a.arms[s];
    const auto& bones = a.skeleton.bones;
    arms[std::string(kSideKeys[s])] = {
        {"clavicle", bones[static_cast<size_t>(c.clavicle)].name},
        {"upper_arm", bones[static_cast<size_t>(c.upper_arm)].name},
        {"forearm", bones[static_cast<size_t>(c.forearm)].name},
        {"hand", bones[static_cast<size_t>(c.hand)].name},
        {"elbow_hinge_axis", vec3_json(c.elbow_hinge_axis)},
    };
  }
  root["arms"] = std::move(arms);

  json hands;
  for (size_t s = 0; s < 2; ++s) {
    const HandLayout& h = a.hands[s];
    json jh;
    jh["hand_bone"] = h.hand_bone;
    json fingers;
    for (size_t f = 0; f < 4; ++f) {
      fingers[std::string(kFingerKeys[f])] = h.finger_bones[f];
    }
    jh["fingers"] = std::move(fingers);
    jh["thumb"] = h.thumb_bones;
    if (!h.cmc_bones[0].empty() || !h.cmc_bones[1].empty()) {
      json cmc;
      if (!h.cmc_bones[0].empty()) cmc["ring"] = h.cmc_bones[0];
      if (!h.cmc_bones[1].empty()) cmc["little"] = h.cmc_bones[1];
      jh["cmc"] = std::move(cmc);
    }
    jh["finger_frame"] = {{"beta", vec3_json(h.finger_frame.beta)},
                          {"sigma", vec3_json(h.finger_frame.sigma)},
                          {"lambda", vec3_json(h.finger_frame.lambda)}};
    jh["thumb_frame"] = {{"bend", vec3_json(h.thumb_frame.bend_axis)},
                         {"splay", vec3_json(h.thumb_frame.splay_axis)},
                         {"twist", vec3_json(h.thumb_frame.twist_axis)}};
    jh["hinge_axis"] = vec3_json(h.hinge_axis);
    jh["cmc_axis"] = vec3_json(h.cmc_axis);
    jh["finger_axis"] = vec3_json(h.finger_axis);
    jh["palm_normal"] = vec3_json(h.palm_normal);
    jh["wrist_flexion_axis"] = vec3_json(h.wrist_flexion_axis);
    jh["wrist_deviation_axis"] = vec3_json(h.wrist_deviation_axis);
    jh["cmc_coupling"] = h.cmc_coupling;
    jh["cee_gap_delta"] = h.cee_gap_delta;
    hands[std::string(kSideKeys[s])] = std::move(jh);
  }
  root["hands"] = std::move(hands);

  return root.dump(2) + "\n";
}

}  // namespace animgen
