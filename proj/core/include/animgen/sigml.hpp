#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "animgen/diagnostics.hpp"
#include "animgen/manner.hpp"
#include "animgen/math.hpp"

namespace animgen {

// Shared immutable box with deep value equality, for recursive AST nodes.
template <typename T>
class Box {
 public:
  Box() = default;
  explicit Box(T value) : ptr_(std::make_shared<const T>(std::move(value))) {}

  bool has_value() const { return ptr_ != nullptr; }
  explicit operator bool() const { return ptr_ != nullptr; }
  const T& operator*() const { return *ptr_; }
  const T* operator->() const { return ptr_.get(); }

  friend bool operator==(const Box& a, const Box& b) {
    if (!a.ptr_ || !b.ptr_) return a.ptr_ == b.ptr_;
    return *a.ptr_ == *b.ptr_;
  }

 private:
  std::shared_ptr<const T> ptr_;
};

// ---------------------------------------------------------------------------
// Hand configuration
// ---------------------------------------------------------------------------

enum class HandshapeBase {
  Fist,
  Flat,
  Finger2,
  Finger23,
  Finger23Spread,
  Finger2345,
  Pinch12,
  Cee12,
  PinchAll,
  CeeAll,
  Pinch12Open,
  Cee12Open,
};
inline constexpr int kHandshapeBaseCount = 12;

enum class BendName { Bent, Round, Hooked, DblBent, DblHooked };

// Nominal per-joint bend fractions (base, middle, distal joint), as fractions
// of each joint's maximum angle. Actual angles are avatar table data.
std::array<double, 3> nominal_bend_fractions(BendName name);

enum class ThumbPos { Splayed, Opposed, Across, WideGap, NarrowGap };

enum class FingerId { Index, Middle, Ring, Little, Thumb };

struct HandshapeSpec {
  HandshapeBase base = HandshapeBase::Flat;
  std::optional<BendName> mainbend;
  std::optional<ThumbPos> thumbpos;
  std::vector<FingerId> selected_fingers;
  std::map<FingerId, BendName> finger_bends;
  std::vector<std::pair<FingerId, FingerId>> crossings;  // (over, under)
  std::optional<std::pair<FingerId, FingerId>> thumb_between;
  // name -> radians; names listed in docs/avatar_format.md (per-joint override)
  std::map<std::string, double> explicit_joint_angles;

  // Intermediate handshape: interpolate a and b at t. Exclusive with all of
  // the modifier fields above.
  struct BetweenSpec;
  Box<BetweenSpec> between;

  friend bool operator==(const HandshapeSpec&, const HandshapeSpec&) = default;
};

struct HandshapeSpec::BetweenSpec {
  HandshapeSpec a;
  HandshapeSpec b;
  double t = 0.5;
  friend bool operator==(const BetweenSpec&, const BetweenSpec&) = default;
};

enum class Direction { Up, Down, Left, Right, In, Out };

Direction opposite(Direction d);

// A direction as a combination of up/down/left/right/in/out, at most three
// mutually non-opposite members. `fraction` weights the first two components
// when present (midway-value extension); default is the normalized sum.
struct DirectionSpec {
  std::vector<Direction> components;
  std::optional<double> fraction;

  friend bool operator==(const DirectionSpec&, const DirectionSpec&) = default;
};

// Unit vector for a direction spec in avatar space
// (+X signer's left, +Y up, +Z out of the chest).
Vec3 direction_vector(Direction d);
Vec3 direction_vector(const DirectionSpec& spec);

// ---------------------------------------------------------------------------
// Locations
// ---------------------------------------------------------------------------

enum class Level { BelowStomach, Stomach, Chest, Shoulders, Neck, Head, AboveHead };
enum class Lateral { FarLeft, NearLeft, Centre, NearRight, FarRight };
enum class Proximity { Touch, Near, Medium, Far };

Lateral mirror(Lateral l);

struct ProximityToken {
  Proximity primary = Proximity::Medium;
  std::optional<Proximity> secondary;  // midway-value extension
  std::optional<double> fraction;
  friend bool operator==(const ProximityToken&, const ProximityToken&) = default;
};

struct LocationSpec {
  enum class Kind { SigningSpace, Body };
  Kind kind = Kind::SigningSpace;

  // signing-space locations
  Level level = Level::Chest;
  Lateral lateral = Lateral::Centre;

  // body locations
  std::string body_site;

  ProximityToken proximity;
  std::optional<std::string> hand_point;  // explicit significant point on the hand

  struct MidpointSpec;
  Box<MidpointSpec> midpoint_of;  // exclusive with level/lateral/body_site

  friend bool operator==(const LocationSpec&, const LocationSpec&) = default;
};

struct LocationSpec::MidpointSpec {
  LocationSpec a;
  LocationSpec b;
  friend bool operator==(const MidpointSpec&, const MidpointSpec&) = default;
};

// ---------------------------------------------------------------------------
// Motions
// ---------------------------------------------------------------------------

enum class SizeClass { Small, Medium, Large };

struct SizeToken {
  SizeClass primary = SizeClass::Medium;
  std::optional<SizeClass> secondary;  // midway-value extension
  std::optional<double> fraction;
  friend bool operator==(const SizeToken&, const SizeToken&) = default;
};

enum class ArcDepthClass { Shallow, Deep };

struct MotionTree;

struct DirectedMotion {
  DirectionSpec direction;
  SizeToken size;
  struct Curve {
    Direction bulge = Direction::Up;  // side of the chord the arc bows towards
    ArcDepthClass depth = ArcDepthClass::Shallow;
    friend bool operator==(const Curve&, const Curve&) = default;
  };
  std::optional<Curve> curve;
  MannerSet modifiers;  // notated modalities: fast/slow/tense/sudden_stop
  friend bool operator==(const DirectedMotion&, const DirectedMotion&) = default;
};

struct CircularMotion {
  Direction plane_normal = Direction::Out;  // o: wall plane, u/d: floor plane, l/r: side plane
  bool clockwise = true;                    // as seen looking along the plane normal
  SizeToken extent;                         // resolved size is the circle diameter
  MannerSet modifiers;
  friend bool operator==(const CircularMotion&, const CircularMotion&) = default;
};

// Motion towards an explicit target: an end location and/or a hand
// configuration to arrive in. The optional child supplies the path shape.
struct TargetedMotion {
  Box<MotionTree> child;
  std::optional<LocationSpec> target_location;
  std::optional<HandshapeSpec> target_handshape;
  std::optional<DirectionSpec> target_extfidir;
  std::optional<DirectionSpec> target_palmor;
  MannerSet modifiers;
  friend bool operator==(const TargetedMotion&, const TargetedMotion&) = default;
};

struct SequenceMotion {
  std::vector<MotionTree> children;
  friend bool operator==(const SequenceMotion&, const SequenceMotion&) = default;
};

struct ParallelMotion {
  std::vector<MotionTree> children;
  friend bool operator==(const ParallelMotion&, const ParallelMotion&) = default;
};

enum class RepetitionKind { FromStart, Continue, Reversing };

struct RepeatMotion {
  Box<MotionTree> child;
  RepetitionKind repetition = RepetitionKind::FromStart;
  friend bool operator==(const RepeatMotion&, const RepeatMotion&) = default;
};

struct MotionTree {
  std::variant<DirectedMotion, CircularMotion, TargetedMotion, SequenceMotion,
               ParallelMotion, RepeatMotion>
      node;
  friend bool operator==(const MotionTree&, const MotionTree&) = default;
};

// ---------------------------------------------------------------------------
// Signs
// ---------------------------------------------------------------------------

struct HandSpec {
  HandshapeSpec handshape;
  DirectionSpec extfidir = {{Direction::Down}, std::nullopt};
  DirectionSpec palmor = {{Direction::In}, std::nullopt};
  LocationSpec location;
  friend bool operator==(const HandSpec&, const HandSpec&) = default;
};

enum class Symmetry { None, LeftRight, FrontBack, UpDown, Parallel };

struct HandConstellation {
  std::string dominant_point = "palm_centre";
  std::string nondominant_point = "palm_centre";
  ProximityToken distance;
  std::optional<DirectionSpec> direction;  // separation direction; default +-X
  friend bool operator==(const HandConstellation&, const HandConstellation&) = default;
};

struct ManualPart {
  bool both_hands = false;
  Symmetry symmetry = Symmetry::None;
  HandSpec dominant;
  std::optional<HandSpec> nondominant;  // only if both_hands and symmetry none
  std::optional<HandConstellation> constellation;
  std::optional<MotionTree> motion;  // absent: static posture
  // Motion of the nondominant hand when it differs from `motion`; filled in
  // by expand_symmetry, may also be given explicitly.
  std::optional<MotionTree> nondominant_motion;
  friend bool operator==(const ManualPart&, const ManualPart&) = default;
};

enum class Tier { Shoulders, Torso, Head, Eyes, Face, Mouth };

struct NonManualAction {
  std::string id;
  std::optional<double> duration;  // seconds hint
  friend bool operator==(const NonManualAction&, const NonManualAction&) = default;
};

struct NonManualPart {
  std::map<Tier, std::vector<NonManualAction>> tiers;
  friend bool operator==(const NonManualPart&, const NonManualPart&) = default;
};

struct Sign {
  std::optional<ManualPart> manual;
  std::optional<NonManualPart> nonmanual;
  std::optional<std::string> gloss;
  std::optional<double> duration_override;  // seconds, > 0
  std::optional<double> time_scale;         // dimensionless, > 0
  friend bool operator==(const Sign&, const Sign&) = default;
};

struct SignDocument {
  std::vector<Sign> signs;
  friend bool operator==(const SignDocument&, const SignDocument&) = default;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

struct ParseResult {
  std::optional<SignDocument> document;  // set iff no error diagnostics
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return document.has_value(); }
};

// Parse SiGML XML text into a document. Unknown elements, unknown attributes
// and out-of-range values are errors carrying the element path.
ParseResult parse_sigml(std::string_view xml_text);

// Semantic checks beyond grammar: symmetry with an explicit nondominant hand,
// touch proximity in signing space, opposite direction components, parallel
// motions fighting over one channel, conflicting duration overrides.
std::vector<Diagnostic> validate(const SignDocument& doc);

// Rewrite a symmetric two-handed sign into an explicit two-handed one.
// Precondition: m.symmetry != None (throws std::invalid_argument).
// The dominant half is returned unchanged.
ManualPart expand_symmetry(const ManualPart& m);

// Identity on signs without symmetry, expand_symmetry otherwise.
Sign expand_sign(const Sign& sign);

// Emit the document back as SiGML text (the accepted subset grammar).
std::string serialize_sigml(const SignDocument& doc);

// Enum names as they appear in SiGML attributes.
std::string_view to_sigml_name(HandshapeBase b);
std::string_view to_sigml_name(BendName b);
std::string_view to_sigml_name(ThumbPos t);
std::string_view to_sigml_name(Level l);
std::string_view to_sigml_name(Lateral l);
std::string_view to_sigml_name(Proximity p);
std::string_view to_sigml_name(SizeClass s);
std::string_view to_sigml_name(Tier t);
char direction_letter(Direction d);
std::string to_sigml_name(const DirectionSpec& d);

}  // namespace animgen
