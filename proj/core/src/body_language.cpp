#include "animgen/body_language.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace animgen {

using json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, kMannerCount> kMannerNames = {
    "targetted", "lax", "hard_contact", "linear", "fast", "slow", "tense", "sudden_stop",
};

constexpr std::array<std::pair<std::string_view, MovementKind>, 7> kKindNames = {{
    {"straight", MovementKind::Straight},
    {"curved", MovementKind::Curved},
    {"circular", MovementKind::Circular},
    {"handshape_change", MovementKind::HandshapeChange},
    {"orientation_change", MovementKind::OrientationChange},
    {"nonmanual", MovementKind::NonManual},
    {"transition", MovementKind::Transition},
}};

constexpr std::array<std::pair<std::string_view, Level>, 7> kLevelKeys = {{
    {"belowstomach", Level::BelowStomach},
    {"stomach", Level::Stomach},
    {"chest", Level::Chest},
    {"shoulders", Level::Shoulders},
    {"neck", Level::Neck},
    {"head", Level::Head},
    {"abovehead", Level::AboveHead},
}};

constexpr std::array<std::pair<std::string_view, Lateral>, 5> kLateralKeys = {{
    {"far_left", Lateral::FarLeft},
    {"near_left", Lateral::NearLeft},
    {"centre", Lateral::Centre},
    {"near_right", Lateral::NearRight},
    {"far_right", Lateral::FarRight},
}};

}  // namespace

std::string_view to_string(Manner m) { return kMannerNames[static_cast<size_t>(m)]; }

std::optional<Manner> manner_from_string(std::string_view name) {
  for (size_t i = 0; i < kMannerNames.size(); ++i) {
    if (kMannerNames[i] == name) return static_cast<Manner>(i);
  }
  return std::nullopt;
}

namespace {

class ProfileLoader {
 public:
  ProfileLoadResult run(std::string_view text) {
    ProfileLoadResult result;
    json root;
    try {
      root = json::parse(text);
    } catch (const json::exception& e) {
      error("", std::string("invalid JSON: ") + e.what());
      result.diagnostics = std::move(diags_);
      return result;
    }
    BodyLanguageProfile p;
    load(root, p);
    result.diagnostics = std::move(diags_);
    if (!has_errors(result.diagnostics)) result.profile = std::move(p);
    return result;
  }

 private:
  std::vector<Diagnostic> diags_;

  void error(const std::string& path, std::string msg) {
    diags_.push_back({Severity::Error, path, std::move(msg)});
  }

  double require_number(const json& j, const std::string& path, std::string_view key) {
    const std::string k(key);
    if (!j.contains(k) || !j[k].is_number()) {
      error(path + "." + k, "required number missing");
      return 0;
    }
    return j[k].get<double>();
  }

  void load(const json& root, BodyLanguageProfile& p) {
    if (root.contains("sizes")) {
      p.size_fractions[SizeClass::Small] = require_number(root["sizes"], "sizes", "small");
      p.size_fractions[SizeClass::Medium] = require_number(root["sizes"], "sizes", "medium");
      p.size_fractions[SizeClass::Large] = require_number(root["sizes"], "sizes", "large");
    } else {
      error("sizes", "required section missing");
    }
    if (root.contains("proximities")) {
      p.proximity_fractions[Proximity::Touch] = 0.0;
      if (root["proximities"].contains("touch") &&
          root["proximities"]["touch"].get<double>() != 0.0) {
        error("proximities.touch", "touch must be exactly 0");
      }
      p.proximity_fractions[Proximity::Near] =
          require_number(root["proximities"], "proximities", "near");
      p.proximity_fractions[Proximity::Medium] =
          require_number(root["proximities"], "proximities", "medium");
      p.proximity_fractions[Proximity::Far] =
          require_number(root["proximities"], "proximities", "far");
    } else {
      error("proximities", "required section missing");
    }
    if (root.contains("arc_depth")) {
      p.arc_depth[ArcDepthClass::Shallow] =
          require_number(root["arc_depth"], "arc_depth", "shallow");
      p.arc_depth[ArcDepthClass::Deep] = require_number(root["arc_depth"], "arc_depth", "deep");
    } else {
      error("arc_depth", "required section missing");
    }
    if (root.contains("durations")) {
      for (const auto& [key, kind] : kKindNames) {
        p.durations[kind] = require_number(root["durations"], "durations", key);
        if (p.durations[kind] <= 0) error("durations." + std::string(key), "must be > 0");
      }
    } else {
      error("durations", "required section missing");
    }
    if (root.contains("manner_multipliers")) {
      const json& jm = root["manner_multipliers"];
      p.manner_multipliers[Manner::Fast] = require_number(jm, "manner_multipliers", "fast");
      p.manner_multipliers[Manner::Slow] = require_number(jm, "manner_multipliers", "slow");
      p.manner_multipliers[Manner::Tense] = require_number(jm, "manner_multipliers", "tense");
      if (!(p.manner_multipliers[Manner::Fast] < 1.0)) {
        error("manner_multipliers.fast", "fast multiplier must be < 1");
      }
      if (!(p.manner_multipliers[Manner::Slow] > 1.0)) {
        error("manner_multipliers.slow", "slow multiplier must be > 1");
      }
      if (!(p.manner_multipliers[Manner::Tense] > 1.0)) {
        error("manner_multipliers.tense", "tense multiplier must be > 1");
      }
    } else {
      error("manner_multipliers", "required section missing");
    }
    if (root.contains("controllers")) {
      for (size_t i = 0; i < kMannerNames.size(); ++i) {
        const std::string key(kMannerNames[i]);
        if (!root["controllers"].contains(key)) {
          error("controllers", "missing controller for \"" + key + "\"");
          continue;
        }
        const json& jc = root["controllers"][key];
        const std::string path = "controllers." + key;
        ControllerParams c;
        c.linear_rate = jc.value("linear", false);
        if (!c.linear_rate) {
          c.k = require_number(jc, path, "k");
          c.k_prime = require_number(jc, path, "k_prime");
          c.stiffen_coeff = jc.value("stiffen", 0.0);
          c.truncate_at_target = jc.value("truncate_at_target", false);
          if (c.k <= 0 || c.k_prime <= 0) error(path, "gains must be positive");
          if (c.truncate_at_target && static_cast<Manner>(i) != Manner::SuddenStop) {
            error(path, "truncate_at_target is reserved for sudden_stop");
          }
        }
        p.manner_controllers[static_cast<Manner>(i)] = c;
      }
    } else {
      error("controllers", "required section missing");
    }
    if (root.contains("envelope")) {
      const json& je = root["envelope"];
      p.envelope_defaults.attack = je.value("attack", 0.18);
      p.envelope_defaults.sustain = je.value("sustain", 0.40);
      p.envelope_defaults.release = je.value("release", 0.22);
      const std::string ramp = je.value("ramp", "smooth");
      if (ramp == "linear") {
        p.envelope_defaults.ramp = EnvelopeSpec::Ramp::Linear;
      } else if (ramp == "smooth") {
        p.envelope_defaults.ramp = EnvelopeSpec::Ramp::Smooth;
      } else {
        error("envelope.ramp", "unknown ramp \"" + ramp + "\"");
      }
      if (p.envelope_defaults.attack < 0 || p.envelope_defaults.release < 0) {
        error("envelope", "attack and release must be >= 0");
      }
    }
    if (root.contains("signing_space")) {
      const json& js = root["signing_space"];
      if (js.contains("levels")) {
        for (const auto& [key, level] : kLevelKeys) {
          const std::string k(key);
          if (!js["levels"].contains(k)) {
            error("signing_space.levels", "missing level \"" + k + "\"");
            continue;
          }
          const json& jl = js["levels"][k];
          SpaceGrid::LevelRef ref;
          if (!jl.contains("site")) {
            error("signing_space.levels." + k, "level requires a site");
            continue;
          }
          ref.site = jl["site"].get<std::string>();
          ref.offset_fraction = jl.value("offset_fraction", 0.0);
          p.signing_space.level_heights[level] = std::move(ref);
        }
      } else {
        error("signing_space", "missing levels");
      }
      if (js.contains("laterals")) {
        for (const auto& [key, lateral] : kLateralKeys) {
          p.signing_space.lateral_offsets[lateral] =
              require_number(js["laterals"], "signing_space.laterals", key);
        }
        const auto& lo = p.signing_space.lateral_offsets;
        if (lo.at(Lateral::Centre) != 0.0 ||
            lo.at(Lateral::NearLeft) != -lo.at(Lateral::NearRight) ||
            lo.at(Lateral::FarLeft) != -lo.at(Lateral::FarRight)) {
          error("signing_space.laterals", "lateral offsets must be antisymmetric about centre");
        }
      } else {
        error("signing_space", "missing laterals");
      }
    } else {
      error("signing_space", "required section missing");
    }
    p.contact_hold = root.value("contact_hold", 0.1);

    if (!has_errors(diags_)) check_orderings(p);
  }

  void check_orderings(const BodyLanguageProfile& p) {
    const auto& sf = p.size_fractions;
    if (!(sf.at(SizeClass::Small) > 0 && sf.at(SizeClass::Small) < sf.at(SizeClass::Medium) &&
          sf.at(SizeClass::Medium) < sf.at(SizeClass::Large))) {
      error("sizes", "sizes must satisfy 0 < small < medium < large");
    }
    const auto& pf = p.proximity_fractions;
    if (!(pf.at(Proximity::Near) > 0 && pf.at(Proximity::Near) < pf.at(Proximity::Medium) &&
          pf.at(Proximity::Medium) < pf.at(Proximity::Far))) {
      error("proximities", "proximities must satisfy 0 < near < medium < far");
    }
  }
};

}  // namespace

ProfileLoadResult load_profile_text(std::string_view json_text) {
  ProfileLoader loader;
  return loader.run(json_text);
}

ProfileLoadResult load_profile_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    ProfileLoadResult r;
    r.diagnostics.push_back({Severity::Error, path, "cannot open file"});
    return r;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return load_profile_text(ss.str());
}

std::string save_profile_text(const BodyLanguageProfile& p) {
  json root;
  root["sizes"] = {{"small", p.size_fractions.at(SizeClass::Small)},
                   {"medium", p.size_fractions.at(SizeClass::Medium)},
                   {"large", p.size_fractions.at(SizeClass::Large)}};
  root["proximities"] = {{"touch", 0.0},
                         {"near", p.proximity_fractions.at(Proximity::Near)},
                         {"medium", p.proximity_fractions.at(Proximity::Medium)},
                         {"far", p.proximity_fractions.at(Proximity::Far)}};
  root["arc_depth"] = {{"shallow", p.arc_depth.at(ArcDepthClass::Shallow)},
                       {"deep", p.arc_depth.at(ArcDepthClass::Deep)}};
  json durations;
  for (const auto& [key, kind] : kKindNames) {
    durations[std::string(key)] = p.durations.at(kind);
  }
  root["durations"] = std::move(durations);
  root["manner_multipliers"] = {{"fast", p.manner_multipliers.at(Manner::Fast)},
                                {"slow", p.manner_multipliers.at(Manner::Slow)},
                                {"tense", p.manner_multipliers.at(Manner::Tense)}};
  json controllers;
  for (size_t i = 0; i < kMannerNames.size(); ++i) {
    const ControllerParams& c = p.manner_controllers.at(static_cast<Manner>(i));
    json jc;
    if (c.linear_rate) {
      jc["linear"] = true;
    } else {
      jc["k"] = c.k;
      jc["k_prime"] = c.k_prime;
      jc["stiffen"] = c.stiffen_coeff;
      if (c.truncate_at_target) jc["truncate_at_target"] = true;
    }
    controllers[std::string(kMannerNames[i])] = std::move(jc);
  }
  root["controllers"] = std::move(controllers);
  root["envelope"] = {
      {"attack", p.envelope_defaults.attack},
      {"sustain", p.envelope_defaults.sustain},
      {"release", p.envelope_defaults.release},
      {"ramp", p.envelope_defaults.ramp == EnvelopeSpec::Ramp::Smooth ? "smooth" : "linear"},
  };
  json levels;
  for (const auto& [key, level] : kLevelKeys) {
    const auto& ref = p.signing_space.level_heights.at(level);
    json jl;
    jl["site"] = ref.site;
    if (ref.offset_fraction != 0.0) jl["offset_fraction"] = ref.offset_fraction;
    levels[std::string(key)] = std::move(jl);
  }
  json laterals;
  for (const auto& [key, lateral] : kLateralKeys) {
    laterals[std::string(key)] = p.signing_space.lateral_offsets.at(lateral);
  }
  root["signing_space"] = {{"levels", std::move(levels)}, {"laterals", std::move(laterals)}};
  root["contact_hold"] = p.contact_hold;
  return root.dump(2) + "\n";
}

double resolve_size(const BodyLanguageProfile& profile, const SizeToken& token,
                    const AvatarDescription& avatar) {
  const double a = profile.size_fractions.at(token.primary) * avatar.arm_length;
  if (!token.secondary) return a;
  const double b = profile.size_fractions.at(*token.secondary) * avatar.arm_length;
  const double t = token.fraction.value_or(0.5);
  return lerp(a, b, t);
}

double resolve_proximity(const BodyLanguageProfile& profile, const ProximityToken& token,
                         const AvatarDescription& avatar) {
  const double a = profile.proximity_fractions.at(token.primary) * avatar.arm_length;
  if (!token.secondary) return a;
  const double b = profile.proximity_fractions.at(*token.secondary) * avatar.arm_length;
  const double t = token.fraction.value_or(0.5);
  return lerp(a, b, t);
}

double resolve_duration(const BodyLanguageProfile& profile, MovementKind kind,
                        const MannerSet& manners, const DurationOverrides& overrides) {
  if (overrides.absolute && overrides.scale) {
    throw std::invalid_argument("resolve_duration: absolute and scale overrides are exclusive");
  }
  double t = profile.durations.at(kind);
  for (Manner m : {Manner::Fast, Manner::Slow, Manner::Tense}) {
    if (manners.contains(m)) t *= profile.manner_multipliers.at(m);
  }
  if (overrides.absolute) return *overrides.absolute;
  if (overrides.scale) t *= *overrides.scale;
  return t;
}

Manner dominant_manner(const MannerSet& manners) {
  if (manners.contains(Manner::SuddenStop)) return Manner::SuddenStop;
  if (manners.contains(Manner::Tense)) return Manner::Tense;
  if (manners.contains(Manner::Fast)) return Manner::Fast;
  if (manners.contains(Manner::Slow)) return Manner::Slow;
  if (manners.contains(Manner::Lax)) return Manner::Lax;
  if (manners.contains(Manner::HardContact)) return Manner::HardContact;
  if (manners.contains(Manner::Linear)) return Manner::Linear;
  return Manner::Targetted;
}

ControllerParams controller_for(const BodyLanguageProfile& profile, const MannerSet& manners) {
  return profile.manner_controllers.at(dominant_manner(manners));
}

}  // namespace animgen
