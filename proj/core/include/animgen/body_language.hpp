#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "animgen/avatar.hpp"
#include "animgen/diagnostics.hpp"
#include "animgen/manner.hpp"
#include "animgen/sigml.hpp"

namespace animgen {

enum class MovementKind {
  Straight,
  Curved,
  Circular,
  HandshapeChange,
  OrientationChange,
  NonManual,
  Transition,
};

// Gains of the two-level cascade controller. k'/k = 4 is critical damping;
// stiffen_coeff scales both gains up as the target is approached.
struct ControllerParams {
  double k = 2.0;        // outer (position) gain, 1/s
  double k_prime = 8.0;  // inner (velocity) gain, 1/s
  double stiffen_coeff = 0.0;
  bool truncate_at_target = false;  // sudden_stop only
  bool linear_rate = false;         // constant-rate sentinel (circles)
};

struct EnvelopeSpec {
  double attack = 0.18;   // seconds
  double sustain = 0.40;  // default sustain when no context dictates one
  double release = 0.22;
  enum class Ramp { Linear, Smooth } ramp = Ramp::Smooth;
};

// Discrete signing-space grid: level heights ride named avatar sites, lateral
// columns are signed fractions of shoulder width (+X is the signer's left),
// proximities reuse the profile's arm-length fractions along +Z.
struct SpaceGrid {
  struct LevelRef {
    std::string site;
    double offset_fraction = 0;  // of body height, added to the site height
  };
  std::map<Level, LevelRef> level_heights;
  std::map<Lateral, double> lateral_offsets;
};

struct BodyLanguageProfile {
  std::map<SizeClass, double> size_fractions;      // of arm length
  std::map<Proximity, double> proximity_fractions; // of arm length; touch = 0
  std::map<ArcDepthClass, double> arc_depth;       // sagitta as fraction of chord
  std::map<MovementKind, double> durations;        // seconds
  std::map<Manner, double> manner_multipliers;     // fast/slow/tense time factors
  std::map<Manner, ControllerParams> manner_controllers;
  EnvelopeSpec envelope_defaults;
  SpaceGrid signing_space;
  double contact_hold = 0.1;  // seconds the hand stays on a contacted surface
};

struct ProfileLoadResult {
  std::optional<BodyLanguageProfile> profile;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return profile.has_value(); }
};

ProfileLoadResult load_profile_text(std::string_view json_text);
ProfileLoadResult load_profile_file(const std::string& path);
std::string save_profile_text(const BodyLanguageProfile& profile);

// Distance of a size token in meters: fraction(size) x arm length, with
// optional interpolation between two classes.
double resolve_size(const BodyLanguageProfile& profile, const SizeToken& token,
                    const AvatarDescription& avatar);
double resolve_proximity(const BodyLanguageProfile& profile, const ProximityToken& token,
                         const AvatarDescription& avatar);

struct DurationOverrides {
  std::optional<double> absolute;  // seconds
  std::optional<double> scale;
};

// Movement time: base duration for the kind, times each modality multiplier
// present. Distance never enters. Both overrides at once is an error.
double resolve_duration(const BodyLanguageProfile& profile, MovementKind kind,
                        const MannerSet& manners, const DurationOverrides& overrides = {});

// The manner whose controller shapes a movement, under the precedence
// sudden_stop > tense > fast/slow > lax/hard_contact/linear > targetted.
Manner dominant_manner(const MannerSet& manners);

ControllerParams controller_for(const BodyLanguageProfile& profile, const MannerSet& manners);

}  // namespace animgen
