#include "animgen/sigml.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "xml_dom.hpp"

namespace animgen {

std::string to_string(const Diagnostic& d) {
  std::string s = d.severity == Severity::Error ? "error: " : "warning: ";
  s += d.path;
  s += ": ";
  s += d.message;
  return s;
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

std::array<double, 3> nominal_bend_fractions(BendName name) {
  switch (name) {
    case BendName::Bent: return {1.0, 0.0, 0.0};
    case BendName::Round: return {0.5, 0.5, 0.5};
    case BendName::Hooked: return {0.0, 1.0, 1.0};
    case BendName::DblBent: return {1.0, 1.0, 0.0};
    case BendName::DblHooked: return {1.0, 1.0, 1.0};
  }
  return {0, 0, 0};
}

Direction opposite(Direction d) {
  switch (d) {
    case Direction::Up: return Direction::Down;
    case Direction::Down: return Direction::Up;
    case Direction::Left: return Direction::Right;
    case Direction::Right: return Direction::Left;
    case Direction::In: return Direction::Out;
    case Direction::Out: return Direction::In;
  }
  return d;
}

Lateral mirror(Lateral l) {
  switch (l) {
    case Lateral::FarLeft: return Lateral::FarRight;
    case Lateral::NearLeft: return Lateral::NearRight;
    case Lateral::Centre: return Lateral::Centre;
    case Lateral::NearRight: return Lateral::NearLeft;
    case Lateral::FarRight: return Lateral::FarLeft;
  }
  return l;
}

Vec3 direction_vector(Direction d) {
  switch (d) {
    case Direction::Up: return {0, 1, 0};
    case Direction::Down: return {0, -1, 0};
    case Direction::Left: return {1, 0, 0};  // +X is the signer's left
    case Direction::Right: return {-1, 0, 0};
    case Direction::In: return {0, 0, -1};  // towards the body
    case Direction::Out: return {0, 0, 1};  // out of the chest
  }
  return {0, 0, 1};
}

Vec3 direction_vector(const DirectionSpec& spec) {
  if (spec.components.empty()) return {0, 0, 1};
  if (spec.fraction && spec.components.size() == 2) {
    const double f = *spec.fraction;
    Vec3 v = direction_vector(spec.components[0]) * (1.0 - f) +
             direction_vector(spec.components[1]) * f;
    if (v.norm() < 1e-9) return direction_vector(spec.components[0]);
    return v.normalized();
  }
  Vec3 sum = Vec3::Zero();
  for (Direction d : spec.components) sum += direction_vector(d);
  if (sum.norm() < 1e-9) return direction_vector(spec.components[0]);
  return sum.normalized();
}

// ---------------------------------------------------------------------------
// Enum <-> SiGML attribute names
// ---------------------------------------------------------------------------

namespace {

template <typename E>
struct NameEntry {
  std::string_view name;
  E value;
};

constexpr NameEntry<HandshapeBase> kHandshapeNames[] = {
    {"fist", HandshapeBase::Fist},
    {"flat", HandshapeBase::Flat},
    {"finger2", HandshapeBase::Finger2},
    {"finger23", HandshapeBase::Finger23},
    {"finger23spread", HandshapeBase::Finger23Spread},
    {"finger2345", HandshapeBase::Finger2345},
    {"pinch12", HandshapeBase::Pinch12},
    {"cee12", HandshapeBase::Cee12},
    {"pinchall", HandshapeBase::PinchAll},
    {"ceeall", HandshapeBase::CeeAll},
    {"pinch12open", HandshapeBase::Pinch12Open},
    {"cee12open", HandshapeBase::Cee12Open},
};

constexpr NameEntry<BendName> kBendNames[] = {
    {"bent", BendName::Bent},           {"round", BendName::Round},
    {"hooked", BendName::Hooked},       {"dblbent", BendName::DblBent},
    {"dblhooked", BendName::DblHooked},
};

constexpr NameEntry<ThumbPos> kThumbPosNames[] = {
    {"splayed", ThumbPos::Splayed},     {"opposed", ThumbPos::Opposed},
    {"across", ThumbPos::Across},       {"wide_gap", ThumbPos::WideGap},
    {"narrow_gap", ThumbPos::NarrowGap},
};

constexpr NameEntry<Level> kLevelNames[] = {
    {"belowstomach", Level::BelowStomach}, {"stomach", Level::Stomach},
    {"chest", Level::Chest},               {"shoulders", Level::Shoulders},
    {"neck", Level::Neck},                 {"head", Level::Head},
    {"abovehead", Level::AboveHead},
};

constexpr NameEntry<Lateral> kSideNames[] = {
    {"far_left", Lateral::FarLeft}, {"left_at", Lateral::NearLeft},
    {"center", Lateral::Centre},    {"centre", Lateral::Centre},
    {"right_at", Lateral::NearRight}, {"far_right", Lateral::FarRight},
};

constexpr NameEntry<Proximity> kProximityNames[] = {
    {"touch", Proximity::Touch}, {"near", Proximity::Near},
    {"medium", Proximity::Medium}, {"far", Proximity::Far},
};

constexpr NameEntry<SizeClass> kSizeNames[] = {
    {"small", SizeClass::Small}, {"medium", SizeClass::Medium},
    {"large", SizeClass::Large},
};

constexpr NameEntry<Tier> kTierNames[] = {
    {"shoulders_tier", Tier::Shoulders}, {"torso_tier", Tier::Torso},
    {"head_tier", Tier::Head},           {"eyes_tier", Tier::Eyes},
    {"face_tier", Tier::Face},           {"mouth_tier", Tier::Mouth},
};

constexpr NameEntry<FingerId> kFingerNames[] = {
    {"index", FingerId::Index}, {"middle", FingerId::Middle},
    {"ring", FingerId::Ring},   {"little", FingerId::Little},
    {"thumb", FingerId::Thumb},
};

constexpr NameEntry<RepetitionKind> kRepetitionNames[] = {
    {"fromstart", RepetitionKind::FromStart},
    {"continue", RepetitionKind::Continue},
    {"reversing", RepetitionKind::Reversing},
};

constexpr NameEntry<ArcDepthClass> kDepthNames[] = {
    {"shallow", ArcDepthClass::Shallow}, {"deep", ArcDepthClass::Deep},
};

template <typename E, size_t N>
std::optional<E> lookup(const NameEntry<E> (&table)[N], std::string_view name) {
  for (const auto& e : table) {
    if (e.name == name) return e.value;
  }
  return std::nullopt;
}

template <typename E, size_t N>
std::string_view name_of(const NameEntry<E> (&table)[N], E value) {
  for (const auto& e : table) {
    if (e.value == value) return e.name;
  }
  return "?";
}

std::optional<Direction> direction_from_letter(char c) {
  switch (c) {
    case 'u': return Direction::Up;
    case 'd': return Direction::Down;
    case 'l': return Direction::Left;
    case 'r': return Direction::Right;
    case 'i': return Direction::In;
    case 'o': return Direction::Out;
    default: return std::nullopt;
  }
}

}  // namespace

std::string_view to_sigml_name(HandshapeBase b) { return name_of(kHandshapeNames, b); }
std::string_view to_sigml_name(BendName b) { return name_of(kBendNames, b); }
std::string_view to_sigml_name(ThumbPos t) { return name_of(kThumbPosNames, t); }
std::string_view to_sigml_name(Level l) { return name_of(kLevelNames, l); }
std::string_view to_sigml_name(Lateral l) {
  // serialize "centre" as "center"? keep the first table entry
  for (const auto& e : kSideNames) {
    if (e.value == l) return e.name;
  }
  return "?";
}
std::string_view to_sigml_name(Proximity p) { return name_of(kProximityNames, p); }
std::string_view to_sigml_name(SizeClass s) { return name_of(kSizeNames, s); }
std::string_view to_sigml_name(Tier t) { return name_of(kTierNames, t); }

char direction_letter(Direction d) {
  switch (d) {
    case Direction::Up: return 'u';
    case Direction::Down: return 'd';
    case Direction::Left: return 'l';
    case Direction::Right: return 'r';
    case Direction::In: return 'i';
    case Direction::Out: return 'o';
  }
  return '?';
}

std::string to_sigml_name(const DirectionSpec& d) {
  std::string s;
  for (Direction c : d.components) s.push_back(direction_letter(c));
  return s;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

class SigmlParser {
 public:
  ParseResult run(std::string_view text) {
    xml::ParseOutcome xml = xml::parse(text);
    if (!xml.root) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "line %d, column %d", xml.line, xml.column);
      error(buf, "malformed XML: " + xml.error);
      return finish({});
    }
    return finish(parse_root(*xml.root));
  }

 private:
  std::vector<Diagnostic> diags_;

  ParseResult finish(SignDocument doc) {
    ParseResult r;
    r.diagnostics = std::move(diags_);
    if (!has_errors(r.diagnostics)) r.document = std::move(doc);
    return r;
  }

  void error(const std::string& path, std::string message) {
    diags_.push_back({Severity::Error, path, std::move(message)});
  }
  void warn(const std::string& path, std::string message) {
    diags_.push_back({Severity::Warning, path, std::move(message)});
  }

  // Path of a child, with a 1-based ordinal when same-name siblings exist.
  static std::string child_path(const std::string& parent, const xml::Element& el,
                                const xml::Element& child) {
    int same = 0, ordinal = 0;
    for (const auto& c : el.children) {
      if (c.name == child.name) {
        ++same;
        if (&c == &child) ordinal = same;
      }
    }
    std::string p = parent + "/" + child.name;
    if (same > 1) p += "[" + std::to_string(ordinal) + "]";
    return p;
  }

  void check_attrs(const xml::Element& el, const std::string& path,
                   std::initializer_list<std::string_view> allowed) {
    for (const auto& a : el.attrs) {
      if (std::find(allowed.begin(), allowed.end(), a.name) == allowed.end()) {
        error(path, "unknown attribute \"" + a.name + "\"");
      }
    }
  }

  void check_no_text(const xml::Element& el, const std::string& path) {
    if (std::any_of(el.text.begin(), el.text.end(),
                    [](unsigned char c) { return !std::isspace(c); })) {
      error(path, "unexpected character data");
    }
  }

  std::optional<double> parse_number(const xml::Element& el, const std::string& path,
                                     std::string_view attr) {
    const std::string* v = el.attr(attr);
    if (!v) return std::nullopt;
    try {
      size_t pos = 0;
      double d = std::stod(*v, &pos);
      if (pos != v->size()) throw std::invalid_argument("trailing");
      return d;
    } catch (...) {
      error(path, "attribute \"" + std::string(attr) + "\" is not a number: \"" + *v + "\"");
      return std::nullopt;
    }
  }

  std::optional<double> parse_fraction(const xml::Element& el, const std::string& path,
                                       std::string_view attr) {
    auto d = parse_number(el, path, attr);
    if (d && (*d < 0.0 || *d > 1.0)) {
      error(path, "attribute \"" + std::string(attr) + "\" out of range [0,1]: " +
                      std::to_string(*d));
      return std::nullopt;
    }
    return d;
  }

  std::optional<bool> parse_bool(const xml::Element& el, const std::string& path,
                                 std::string_view attr) {
    const std::string* v = el.attr(attr);
    if (!v) return std::nullopt;
    if (*v == "true") return true;
    if (*v == "false") return false;
    error(path, "attribute \"" + std::string(attr) + "\" must be true or false");
    return std::nullopt;
  }

  template <typename E, size_t N>
  std::optional<E> parse_enum(const xml::Element& el, const std::string& path,
                              std::string_view attr, const NameEntry<E> (&table)[N],
                              std::string_view what) {
    const std::string* v = el.attr(attr);
    if (!v) return std::nullopt;
    auto e = lookup(table, *v);
    if (!e) error(path, "unknown " + std::string(what) + " \"" + *v + "\"");
    return e;
  }

  std::optional<DirectionSpec> parse_direction(const xml::Element& el, const std::string& path,
                                               std::string_view attr,
                                               std::string_view fraction_attr) {
    const std::string* v = el.attr(attr);
    if (!v) return std::nullopt;
    DirectionSpec spec;
    for (char c : *v) {
      auto d = direction_from_letter(c);
      if (!d) {
        error(path, "unknown direction letter '" + std::string(1, c) + "' in \"" + *v + "\"");
        return std::nullopt;
      }
      spec.components.push_back(*d);
    }
    if (spec.components.empty()) {
      error(path, "empty direction in attribute \"" + std::string(attr) + "\"");
      return std::nullopt;
    }
    if (spec.components.size() > 3) {
      error(path, "more than three direction components in \"" + *v + "\"");
      return std::nullopt;
    }
    spec.fraction = parse_fraction(el, path, fraction_attr);
    return spec;
  }

  MannerSet parse_manners(const xml::Element& el, const std::string& path) {
    MannerSet set;
    const std::string* v = el.attr("manner");
    if (!v) return set;
    std::stringstream ss{*v};
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto m = manner_from_string(item);
      if (!m) {
        error(path, "unknown manner \"" + item + "\"");
      } else if (*m != Manner::Fast && *m != Manner::Slow && *m != Manner::Tense &&
                 *m != Manner::SuddenStop) {
        error(path, "manner \"" + item + "\" is implied by context and cannot be notated");
      } else {
        set.insert(*m);
      }
    }
    return set;
  }

  ProximityToken parse_proximity(const xml::Element& el, const std::string& path,
                                 Proximity fallback) {
    ProximityToken t;
    t.primary = parse_enum(el, path, "proximity", kProximityNames, "proximity")
                    .value_or(fallback);
    t.secondary = parse_enum(el, path, "second_proximity", kProximityNames, "proximity");
    t.fraction = parse_fraction(el, path, "proximity_fraction");
    return t;
  }

  SizeToken parse_size(const xml::Element& el, const std::string& path,
                       std::string_view attr, std::string_view second,
                       std::string_view fraction) {
    SizeToken t;
    t.primary = parse_enum(el, path, attr, kSizeNames, "size").value_or(SizeClass::Medium);
    t.secondary = parse_enum(el, path, second, kSizeNames, "size");
    t.fraction = parse_fraction(el, path, fraction);
    return t;
  }

  // -------------------------------------------------------------------------

  SignDocument parse_root(const xml::Element& root) {
    SignDocument doc;
    if (root.name == "sigml") {
      const std::string path = "/sigml";
      check_attrs(root, path, {});
      check_no_text(root, path);
      for (const auto& child : root.children) {
        const std::string cp = child_path(path, root, child);
        if (child.name == "hns_sign") {
          doc.signs.push_back(parse_sign(child, cp));
        } else if (child.name == "sign_manual" || child.name == "sign_nonmanual") {
          doc.signs.push_back(parse_bare_sign(child, cp));
        } else {
          error(cp, "unknown element \"" + child.name + "\"");
        }
      }
    } else if (root.name == "hns_sign") {
      doc.signs.push_back(parse_sign(root, "/hns_sign"));
    } else if (root.name == "sign_manual" || root.name == "sign_nonmanual") {
      doc.signs.push_back(parse_bare_sign(root, "/" + root.name));
    } else {
      error("/" + root.name, "unknown root element \"" + root.name + "\"");
    }
    return doc;
  }

  Sign parse_bare_sign(const xml::Element& el, const std::string& path) {
    Sign sign;
    if (el.name == "sign_manual") {
      sign.manual = parse_manual(el, path, &sign);
    } else {
      sign.nonmanual = parse_nonmanual(el, path);
    }
    return sign;
  }

  Sign parse_sign(const xml::Element& el, const std::string& path) {
    Sign sign;
    check_attrs(el, path, {"gloss", "duration", "time_scale"});
    check_no_text(el, path);
    if (const std::string* g = el.attr("gloss")) sign.gloss = *g;
    sign.duration_override = parse_number(el, path, "duration");
    if (sign.duration_override && *sign.duration_override <= 0.0) {
      error(path, "duration must be > 0");
      sign.duration_override.reset();
    }
    sign.time_scale = parse_number(el, path, "time_scale");
    if (sign.time_scale && *sign.time_scale <= 0.0) {
      error(path, "time_scale must be > 0");
      sign.time_scale.reset();
    }
    for (const auto& child : el.children) {
      const std::string cp = child_path(path, el, child);
      if (child.name == "sign_manual") {
        sign.manual = parse_manual(child, cp, nullptr);
      } else if (child.name == "sign_nonmanual") {
        sign.nonmanual = parse_nonmanual(child, cp);
      } else {
        error(cp, "unknown element \"" + child.name + "\"");
      }
    }
    if (!sign.manual && !sign.nonmanual) {
      error(path, "sign has neither manual nor nonmanual part");
    }
    return sign;
  }

  // `bare_sign` non-null when sign_manual stands alone and may carry sign
  // timing attributes itself.
  ManualPart parse_manual(const xml::Element& el, const std::string& path, Sign* bare_sign) {
    ManualPart m;
    check_attrs(el, path,
                {"both_hands", "lr_symm", "fb_symm", "ud_symm", "parallel", "gloss",
                 "duration", "time_scale"});
    check_no_text(el, path);
    if (bare_sign) {
      if (const std::string* g = el.attr("gloss")) bare_sign->gloss = *g;
      bare_sign->duration_override = parse_number(el, path, "duration");
      bare_sign->time_scale = parse_number(el, path, "time_scale");
    } else if (el.attr("gloss") || el.attr("duration") || el.attr("time_scale")) {
      warn(path, "sign-level attributes on nested sign_manual are ignored");
    }

    m.both_hands = parse_bool(el, path, "both_hands").value_or(false);
    int symmetries = 0;
    if (parse_bool(el, path, "lr_symm").value_or(false)) {
      m.symmetry = Symmetry::LeftRight;
      ++symmetries;
    }
    if (parse_bool(el, path, "fb_symm").value_or(false)) {
      m.symmetry = Symmetry::FrontBack;
      ++symmetries;
    }
    if (parse_bool(el, path, "ud_symm").value_or(false)) {
      m.symmetry = Symmetry::UpDown;
      ++symmetries;
    }
    if (parse_bool(el, path, "parallel").value_or(false)) {
      m.symmetry = Symmetry::Parallel;
      ++symmetries;
    }
    if (symmetries > 1) error(path, "more than one symmetry attribute");

    std::vector<MotionTree> motions;
    for (const auto& child : el.children) {
      const std::string cp = child_path(path, el, child);
      if (child.name == "handconfig") {
        parse_handconfig_into(m.dominant, child, cp);
      } else if (child.name == "location_bodyarm" || child.name == "location_midpoint") {
        m.dominant.location = parse_location(child, cp);
      } else if (child.name == "handconstellation") {
        m.constellation = parse_constellation(child, cp);
      } else if (child.name == "nondominant_hand") {
        parse_nondominant(child, cp, m);
      } else if (is_motion_element(child.name)) {
        motions.push_back(parse_motion(child, cp));
      } else {
        error(cp, "unknown element \"" + child.name + "\"");
      }
    }
    if (motions.size() == 1) {
      m.motion = std::move(motions.front());
    } else if (motions.size() > 1) {
      m.motion = MotionTree{SequenceMotion{std::move(motions)}};
    }
    return m;
  }

  void parse_nondominant(const xml::Element& el, const std::string& path, ManualPart& m) {
    check_attrs(el, path, {});
    check_no_text(el, path);
    HandSpec spec;
    std::vector<MotionTree> motions;
    for (const auto& child : el.children) {
      const std::string cp = child_path(path, el, child);
      if (child.name == "handconfig") {
        parse_handconfig_into(spec, child, cp);
      } else if (child.name == "location_bodyarm" || child.name == "location_midpoint") {
        spec.location = parse_location(child, cp);
      } else if (is_motion_element(child.name)) {
        motions.push_back(parse_motion(child, cp));
      } else {
        error(cp, "unknown element \"" + child.name + "\"");
      }
    }
    m.nondominant = std::move(spec);
    if (motions.size() == 1) {
      m.nondominant_motion = std::move(motions.front());
    } else if (motions.size() > 1) {
      m.nondominant_motion = MotionTree{SequenceMotion{std::move(motions)}};
    }
  }

  void parse_handconfig_into(HandSpec& spec, const xml::Element& el, const std::string& path) {
    check_attrs(el, path,
                {"handshape", "second_handshape", "handshape_fraction", "thumbpos",
                 "mainbend", "selected_fingers", "extfidir", "extfidir_fraction", "palmor",
                 "palmor_fraction"});
    check_no_text(el, path);
    HandshapeSpec& hs = spec.handshape;

    if (const std::string* v = el.attr("handshape")) {
      auto base = lookup(kHandshapeNames, *v);
      if (!base) {
        error(path, "unknown handshape \"" + *v + "\"");
      } else if (const std::string* v2 = el.attr("second_handshape")) {
        auto base2 = lookup(kHandshapeNames, *v2);
        if (!base2) {
          error(path, "unknown handshape \"" + *v2 + "\"");
        } else {
          HandshapeSpec::BetweenSpec between;
          between.a.base = *base;
          between.b.base = *base2;
          between.t = parse_fraction(el, path, "handshape_fraction").value_or(0.5);
          hs = HandshapeSpec{};
          hs.base = *base;
          hs.between = Box<HandshapeSpec::BetweenSpec>(std::move(between));
        }
      } else {
        hs.base = *base;
      }
    } else if (el.attr("second_handshape")) {
      error(path, "second_handshape without handshape");
    }

    if (auto t = parse_enum(el, path, "thumbpos", kThumbPosNames, "thumbpos")) hs.thumbpos = t;
    if (auto b = parse_enum(el, path, "mainbend", kBendNames, "bending")) hs.mainbend = b;
    if (const std::string* v = el.attr("selected_fingers")) {
      std::stringstream ss{*v};
      std::string item;
      while (std::getline(ss, item, ',')) {
        auto f = lookup(kFingerNames, item);
        if (!f) {
          error(path, "unknown finger \"" + item + "\"");
        } else {
          hs.selected_fingers.push_back(*f);
        }
      }
    }
    if (auto d = parse_direction(el, path, "extfidir", "extfidir_fraction")) spec.extfidir = *d;
    if (auto d = parse_direction(el, path, "palmor", "palmor_fraction")) spec.palmor = *d;

    for (const auto& child : el.children) {
      const std::string cp = child_path(path, el, child);
      if (child.name == "finger_bend") {
        check_attrs(child, cp, {"finger", "bend"});
        auto f = parse_enum(child, cp, "finger", kFingerNames, "finger");
        auto b = parse_enum(child, cp, "bend", kBendNames, "bending");
        if (f && b) hs.finger_bends[*f] = *b;
      } else if (child.name == "finger_cross") {
        check_attrs(child, cp, {"over", "under"});
        auto over = parse_enum(child, cp, "over", kFingerNames, "finger");
        auto under = parse_enum(child, cp, "under", kFingerNames, "finger");
        if (over && under) hs.crossings.emplace_back(*over, *under);
      } else if (child.name == "thumb_between") {
        check_attrs(child, cp, {"first", "second"});
        auto first = parse_enum(child, cp, "first", kFingerNames, "finger");
        auto second = parse_enum(child, cp, "second", kFingerNames, "finger");
        if (first && second) hs.thumb_between = std::make_pair(*first, *second);
      } else if (child.name == "joint") {
        check_attrs(child, cp, {"name", "angle"});
        const std::string* name = child.attr("name");
        auto angle = parse_number(child, cp, "angle");
        if (!name) {
          error(cp, "joint element requires a name attribute");
        } else if (angle) {
          hs.explicit_joint_angles[*name] = *angle;
        }
      } else {
        error(cp, "unknown element \"" + child.name + "\"");
      }
    }
  }

  LocationSpec parse_location(const xml::Element& el, const std::string& path) {
    LocationSpec loc;
    if (el.name == "location_midpoint") {
      check_attrs(el, path, {"hand_point"});
      check_no_text(el, path);
      std::vector<LocationSpec> parts;
      for (const auto& child : el.children) {
        const std::string cp = child_path(path, el, child);
        if (child.name == "location_bodyarm" || child.name == "location_midpoint") {
          parts.push_back(parse_location(child, cp));
        } else {
          error(cp, "unknown element \"" + child.name + "\"");
        }
      }
      if (parts.size() != 2) {
        error(path, "location_midpoint requires exactly two child locations");
      } else {
        LocationSpec::MidpointSpec mid{std::move(parts[0]), std::move(parts[1])};
        loc.midpoint_of = Box<LocationSpec::MidpointSpec>(std::move(mid));
      }
      if (const std::string* hp = el.attr("hand_point")) loc.hand_point = *hp;
      return loc;
    }

    check_attrs(el, path,
                {"location", "side", "proximity", "second_proximity", "proximity_fraction",
                 "hand_point"});
    check_no_text(el, path);
    for (const auto& child : el.children) {
      error(child_path(path, el, child), "unknown element \"" + child.name + "\"");
    }
    const std::string* v = el.attr("location");
    if (!v) {
      error(path, "location attribute required");
      return loc;
    }
    if (auto level = lookup(kLevelNames, *v)) {
      loc.kind = LocationSpec::Kind::SigningSpace;
      loc.level = *level;
    } else {
      loc.kind = LocationSpec::Kind::Body;
      loc.body_site = *v;
    }
    loc.lateral =
        parse_enum(el, path, "side", kSideNames, "side").value_or(Lateral::Centre);
    loc.proximity = parse_proximity(el, path, Proximity::Medium);
    if (const std::string* hp = el.attr("hand_point")) loc.hand_point = *hp;
    return loc;
  }

  HandConstellation parse_constellation(const xml::Element& el, const std::string& path) {
    HandConstellation c;
    check_attrs(el, path,
                {"distance", "second_distance", "distance_fraction", "dominant_point",
                 "nondominant_point", "direction", "direction_fraction"});
    check_no_text(el, path);
    c.distance.primary =
        parse_enum(el, path, "distance", kProximityNames, "distance").value_or(Proximity::Touch);
    c.distance.secondary = parse_enum(el, path, "second_distance", kProximityNames, "distance");
    c.distance.fraction = parse_fraction(el, path, "distance_fraction");
    if (const std::string* v = el.attr("dominant_point")) c.dominant_point = *v;
    if (const std::string* v = el.attr("nondominant_point")) c.nondominant_point = *v;
    c.direction = parse_direction(el, path, "direction", "direction_fraction");
    return c;
  }

  static bool is_motion_element(const std::string& name) {
    return name == "directedmotion" || name == "circularmotion" || name == "tgt_motion" ||
           name == "seq_motion" || name == "par_motion" || name == "rpt_motion";
  }

  MotionTree parse_motion(const xml::Element& el, const std::string& path) {
    if (el.name == "directedmotion") {
      check_attrs(el, path,
                  {"direction", "direction_fraction", "size", "second_size", "size_fraction",
                   "curve", "curve_depth", "manner"});
      check_no_text(el, path);
      DirectedMotion m;
      m.modifiers = parse_manners(el, path);
      if (auto d = parse_direction(el, path, "direction", "direction_fraction")) {
        m.direction = *d;
      } else if (!el.attr("direction")) {
        error(path, "direction attribute required");
      }
      m.size = parse_size(el, path, "size", "second_size", "size_fraction");
      if (const std::string* v = el.attr("curve")) {
        DirectedMotion::Curve curve;
        if (v->size() == 1) {
          if (auto d = direction_from_letter((*v)[0])) {
            curve.bulge = *d;
            curve.depth = parse_enum(el, path, "curve_depth", kDepthNames, "curve depth")
                              .value_or(ArcDepthClass::Shallow);
            m.curve = curve;
          } else {
            error(path, "unknown curve direction \"" + *v + "\"");
          }
        } else {
          error(path, "unknown curve direction \"" + *v + "\"");
        }
      }
      for (const auto& child : el.children) {
        error(child_path(path, el, child), "unknown element \"" + child.name + "\"");
      }
      return MotionTree{std::move(m)};
    }
    if (el.name == "circularmotion") {
      check_attrs(el, path,
                  {"plane", "sense", "extent", "second_extent", "extent_fraction", "manner"});
      check_no_text(el, path);
      CircularMotion m;
      m.modifiers = parse_manners(el, path);
      if (const std::string* v = el.attr("plane")) {
        if (v->size() == 1) {
          if (auto d = direction_from_letter((*v)[0])) {
            m.plane_normal = *d;
          } else {
            error(path, "unknown plane \"" + *v + "\"");
          }
        } else {
          error(path, "unknown plane \"" + *v + "\"");
        }
      }
      if (const std::string* v = el.attr("sense")) {
        if (*v == "clockwise") {
          m.clockwise = true;
        } else if (*v == "anticlockwise") {
          m.clockwise = false;
        } else {
          error(path, "unknown sense \"" + *v + "\"");
        }
      }
      m.extent = parse_size(el, path, "extent", "second_extent", "extent_fraction");
      for (const auto& child : el.children) {
        error(child_path(path, el, child), "unknown element \"" + child.name + "\"");
      }
      return MotionTree{std::move(m)};
    }
    if (el.name == "tgt_motion") {
      check_attrs(el, path, {"manner"});
      check_no_text(el, path);
      TargetedMotion m;
      m.modifiers = parse_manners(el, path);
      std::vector<MotionTree> children;
      for (const auto& child : el.children) {
        const std::string cp = child_path(path, el, child);
        if (is_motion_element(child.name)) {
          children.push_back(parse_motion(child, cp));
        } else if (child.name == "location_bodyarm" || child.name == "location_midpoint") {
          m.target_location = parse_location(child, cp);
        } else if (child.name == "handconfig") {
          HandSpec target;
          parse_handconfig_into(target, child, cp);
          if (child.attr("handshape")) m.target_handshape = target.handshape;
          if (child.attr("extfidir")) m.target_extfidir = target.extfidir;
          if (child.attr("palmor")) m.target_palmor = target.palmor;
        } else {
          error(cp, "unknown element \"" + child.name + "\"");
        }
      }
      if (children.size() == 1) {
        m.child = Box<MotionTree>(std::move(children.front()));
      } else if (children.size() > 1) {
        m.child = Box<MotionTree>(MotionTree{SequenceMotion{std::move(children)}});
      }
      if (!m.child && !m.target_location && !m.target_handshape && !m.target_extfidir &&
          !m.target_palmor) {
        error(path, "tgt_motion requires a target or a child motion");
      }
      return MotionTree{std::move(m)};
    }
    if (el.name == "seq_motion" || el.name == "par_motion") {
      check_attrs(el, path, {});
      check_no_text(el, path);
      std::vector<MotionTree> children;
      for (const auto& child : el.children) {
        const std::string cp = child_path(path, el, child);
        if (is_motion_element(child.name)) {
          children.push_back(parse_motion(child, cp));
        } else {
          error(cp, "unknown element \"" + child.name + "\"");
        }
      }
      if (children.empty()) error(path, el.name + " requires at least one child motion");
      if (el.name == "seq_motion") return MotionTree{SequenceMotion{std::move(children)}};
      return MotionTree{ParallelMotion{std::move(children)}};
    }
    // rpt_motion
    check_attrs(el, path, {"repetition"});
    check_no_text(el, path);
    RepeatMotion m;
    if (auto r = parse_enum(el, path, "repetition", kRepetitionNames, "repetition")) {
      m.repetition = *r;
    } else if (!el.attr("repetition")) {
      error(path, "repetition attribute required");
    }
    std::vector<MotionTree> children;
    for (const auto& child : el.children) {
      const std::string cp = child_path(path, el, child);
      if (is_motion_element(child.name)) {
        children.push_back(parse_motion(child, cp));
      } else {
        error(cp, "unknown element \"" + child.name + "\"");
      }
    }
    if (children.size() == 1) {
      m.child = Box<MotionTree>(std::move(children.front()));
    } else if (children.empty()) {
      error(path, "rpt_motion requires a child motion");
    } else {
      m.child = Box<MotionTree>(MotionTree{SequenceMotion{std::move(children)}});
    }
    return MotionTree{std::move(m)};
  }

  NonManualPart parse_nonmanual(const xml::Element& el, const std::string& path) {
    NonManualPart part;
    check_attrs(el, path, {});
    check_no_text(el, path);
    for (const auto& child : el.children) {
      const std::string cp = child_path(path, el, child);
      auto tier = lookup(kTierNames, child.name);
      if (!tier) {
        error(cp, "unknown element \"" + child.name + "\"");
        continue;
      }
      if (part.tiers.count(*tier)) {
        error(cp, "duplicate tier \"" + child.name + "\"");
        continue;
      }
      check_attrs(child, cp, {});
      check_no_text(child, cp);
      std::vector<NonManualAction> actions;
      for (const auto& act : child.children) {
        const std::string ap = child_path(cp, child, act);
        if (act.name != "action") {
          error(ap, "unknown element \"" + act.name + "\"");
          continue;
        }
        check_attrs(act, ap, {"name", "duration"});
        const std::string* name = act.attr("name");
        if (!name || name->empty()) {
          error(ap, "action requires a name attribute");
          continue;
        }
        NonManualAction a;
        a.id = *name;
        a.duration = parse_number(act, ap, "duration");
        if (a.duration && *a.duration <= 0.0) {
          error(ap, "duration must be > 0");
          a.duration.reset();
        }
        actions.push_back(std::move(a));
      }
      part.tiers[*tier] = std::move(actions);
    }
    return part;
  }
};

}  // namespace

ParseResult parse_sigml(std::string_view xml_text) {
  SigmlParser parser;
  return parser.run(xml_text);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

bool is_cee_base(HandshapeBase b) {
  return b == HandshapeBase::Cee12 || b == HandshapeBase::CeeAll ||
         b == HandshapeBase::Cee12Open;
}

class Validator {
 public:
  std::vector<Diagnostic> run(const SignDocument& doc) {
    for (size_t i = 0; i < doc.signs.size(); ++i) {
      check_sign(doc.signs[i], "/sigml/hns_sign[" + std::to_string(i + 1) + "]");
    }
    return std::move(diags_);
  }

 private:
  std::vector<Diagnostic> diags_;

  void error(const std::string& path, std::string msg) {
    diags_.push_back({Severity::Error, path, std::move(msg)});
  }
  void warn(const std::string& path, std::string msg) {
    diags_.push_back({Severity::Warning, path, std::move(msg)});
  }

  void check_sign(const Sign& sign, const std::string& path) {
    if (!sign.manual && !sign.nonmanual) {
      error(path, "sign has neither manual nor nonmanual part");
    }
    if (sign.duration_override && sign.time_scale) {
      error(path, "duration and time_scale are mutually exclusive");
    }
    if (sign.manual) check_manual(*sign.manual, path + "/sign_manual");
  }

  void check_manual(const ManualPart& m, const std::string& path) {
    if (m.symmetry != Symmetry::None && !m.both_hands) {
      error(path, "symmetry requires both_hands=\"true\"");
    }
    if (m.symmetry != Symmetry::None && m.nondominant) {
      error(path, "explicit nondominant hand conflicts with symmetry");
    }
    if (m.nondominant && !m.both_hands) {
      error(path, "nondominant hand given but both_hands=\"false\"");
    }
    if (m.constellation && !m.both_hands) {
      error(path, "handconstellation requires both hands");
    }
    check_handspec(m.dominant, path);
    if (m.nondominant) check_handspec(*m.nondominant, path + "/nondominant_hand");
    if (m.motion) check_motion(*m.motion, path);
    if (m.nondominant_motion) check_motion(*m.nondominant_motion, path + "/nondominant_hand");
  }

  void check_handspec(const HandSpec& spec, const std::string& path) {
    check_direction(spec.extfidir, path);
    check_direction(spec.palmor, path);
    if (!has_opposites(spec.extfidir) && !has_opposites(spec.palmor)) {
      const Vec3 e = direction_vector(spec.extfidir);
      const Vec3 p = direction_vector(spec.palmor);
      const double cosangle = std::abs(e.dot(p));
      if (cosangle > 0.9999) {
        error(path, "extfidir and palmor are parallel; they must define a frame");
      } else if (cosangle > std::cos(30.0 * kPi / 180.0)) {
        warn(path, "extfidir and palmor are less than 30 degrees apart");
      }
    }
    check_handshape(spec.handshape, path);
    check_location(spec.location, path);
  }

  void check_handshape(const HandshapeSpec& hs, const std::string& path) {
    if (hs.between) {
      const bool has_modifiers = hs.mainbend || hs.thumbpos || !hs.selected_fingers.empty() ||
                                 !hs.finger_bends.empty() || !hs.crossings.empty() ||
                                 hs.thumb_between || !hs.explicit_joint_angles.empty();
      if (has_modifiers) {
        error(path, "intermediate handshape excludes other handshape modifiers");
      }
      check_handshape(hs.between->a, path);
      check_handshape(hs.between->b, path);
      return;
    }
    if (hs.thumbpos &&
        (*hs.thumbpos == ThumbPos::WideGap || *hs.thumbpos == ThumbPos::NarrowGap) &&
        !is_cee_base(hs.base)) {
      error(path, "wide_gap/narrow_gap apply only to cee handshapes");
    }
  }

  void check_location(const LocationSpec& loc, const std::string& path) {
    if (loc.midpoint_of) {
      check_location(loc.midpoint_of->a, path);
      check_location(loc.midpoint_of->b, path);
      return;
    }
    if (loc.kind == LocationSpec::Kind::SigningSpace &&
        loc.proximity.primary == Proximity::Touch) {
      error(path, "touch proximity is only meaningful for body locations");
    }
  }

  static bool has_opposites(const DirectionSpec& d) {
    for (size_t i = 0; i < d.components.size(); ++i) {
      for (size_t j = i + 1; j < d.components.size(); ++j) {
        if (d.components[j] == opposite(d.components[i])) return true;
      }
    }
    return false;
  }

  void check_direction(const DirectionSpec& d, const std::string& path) {
    if (has_opposites(d)) {
      error(path, "opposite components in direction \"" + to_sigml_name(d) + "\"");
    }
  }

  // Channels a motion tree drives, for parallel-conflict detection.
  enum Channel { kPosition = 1, kOrientation = 2, kHandshape = 4 };

  int motion_channels(const MotionTree& tree, const std::string& path) {
    return std::visit(
        [&](const auto& node) -> int {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, DirectedMotion>) {
            check_direction(node.direction, path);
            return kPosition;
          } else if constexpr (std::is_same_v<T, CircularMotion>) {
            return kPosition;
          } else if constexpr (std::is_same_v<T, TargetedMotion>) {
            int ch = 0;
            if (node.child) ch |= motion_channels(*node.child, path);
            if (node.target_location) {
              ch |= kPosition;
              check_location(*node.target_location, path);
            }
            if (node.target_handshape) {
              ch |= kHandshape;
              check_handshape(*node.target_handshape, path);
            }
            if (node.target_extfidir || node.target_palmor) ch |= kOrientation;
            if (node.target_extfidir) check_direction(*node.target_extfidir, path);
            if (node.target_palmor) check_direction(*node.target_palmor, path);
            return ch;
          } else if constexpr (std::is_same_v<T, SequenceMotion>) {
            int ch = 0;
            for (const auto& c : node.children) ch |= motion_channels(c, path);
            return ch;
          } else if constexpr (std::is_same_v<T, ParallelMotion>) {
            int seen = 0;
            for (const auto& c : node.children) {
              const int ch = motion_channels(c, path);
              if (seen & ch) {
                error(path, "parallel motions drive the same channel");
              }
              seen |= ch;
            }
            return seen;
          } else {  // RepeatMotion
            return node.child ? motion_channels(*node.child, path) : 0;
          }
        },
        tree.node);
  }

  void check_motion(const MotionTree& tree, const std::string& path) {
    motion_channels(tree, path);
  }
};

}  // namespace

std::vector<Diagnostic> validate(const SignDocument& doc) {
  Validator v;
  return v.run(doc);
}

// ---------------------------------------------------------------------------
// Symmetry expansion
// ---------------------------------------------------------------------------

namespace {

Direction mirror_direction(Direction d, Symmetry mode) {
  switch (mode) {
    case Symmetry::LeftRight:
      if (d == Direction::Left) return Direction::Right;
      if (d == Direction::Right) return Direction::Left;
      return d;
    case Symmetry::FrontBack:
      if (d == Direction::In) return Direction::Out;
      if (d == Direction::Out) return Direction::In;
      return d;
    case Symmetry::UpDown:
      if (d == Direction::Up) return Direction::Down;
      if (d == Direction::Down) return Direction::Up;
      return d;
    default:
      return d;
  }
}

DirectionSpec mirror_direction(const DirectionSpec& spec, Symmetry mode) {
  DirectionSpec out = spec;
  for (auto& c : out.components) c = mirror_direction(c, mode);
  return out;
}

std::string mirror_site_name(const std::string& site) {
  auto replace_suffix = [&](std::string_view from, std::string_view to) -> std::optional<std::string> {
    if (site.size() >= from.size() &&
        site.compare(site.size() - from.size(), from.size(), from) == 0) {
      return site.substr(0, site.size() - from.size()) + std::string(to);
    }
    return std::nullopt;
  };
  if (auto s = replace_suffix("_left", "_right")) return *s;
  if (auto s = replace_suffix("_right", "_left")) return *s;
  return site;
}

LocationSpec mirror_location(const LocationSpec& loc, Symmetry mode) {
  LocationSpec out = loc;
  if (loc.midpoint_of) {
    out.midpoint_of = Box<LocationSpec::MidpointSpec>(
        {mirror_location(loc.midpoint_of->a, mode), mirror_location(loc.midpoint_of->b, mode)});
    return out;
  }
  // Only lateral mirroring moves locations; fb/ud symmetry mirrors movement only.
  if (mode == Symmetry::LeftRight || mode == Symmetry::Parallel) {
    out.lateral = mirror(out.lateral);
    if (out.kind == LocationSpec::Kind::Body) out.body_site = mirror_site_name(out.body_site);
  }
  if (out.hand_point) out.hand_point = mirror_site_name(*out.hand_point);
  return out;
}

HandSpec mirror_handspec(const HandSpec& spec, Symmetry mode) {
  HandSpec out = spec;
  out.location = mirror_location(spec.location, mode);
  if (mode == Symmetry::Parallel) return out;  // orientation copied unmirrored
  out.extfidir = mirror_direction(spec.extfidir, mode);
  out.palmor = mirror_direction(spec.palmor, mode);
  return out;
}

// Mirroring flips the sense of a circle unless the plane normal itself flips,
// in which case flipping the stored normal and the sense cancel out.
bool mirrored_sense_flips(Direction plane_normal, Symmetry mode) {
  const Vec3 axis = direction_vector(plane_normal);
  Vec3 m = axis;
  switch (mode) {
    case Symmetry::LeftRight: m.x() = -m.x(); break;
    case Symmetry::FrontBack: m.z() = -m.z(); break;
    case Symmetry::UpDown: m.y() = -m.y(); break;
    default: return false;
  }
  const Vec3 mirrored_axis = -m;  // R(a, t) reflects to R(-Ma, t)
  return (mirrored_axis - axis).norm() > 1e-9;
}

MotionTree mirror_motion(const MotionTree& tree, Symmetry mode) {
  if (mode == Symmetry::Parallel) return tree;  // copied unmirrored
  return MotionTree{std::visit(
      [&](const auto& node) -> decltype(MotionTree::node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, DirectedMotion>) {
          DirectedMotion out = node;
          out.direction = mirror_direction(node.direction, mode);
          if (out.curve) out.curve->bulge = mirror_direction(out.curve->bulge, mode);
          return out;
        } else if constexpr (std::is_same_v<T, CircularMotion>) {
          CircularMotion out = node;
          if (mirrored_sense_flips(node.plane_normal, mode)) out.clockwise = !node.clockwise;
          return out;
        } else if constexpr (std::is_same_v<T, TargetedMotion>) {
          TargetedMotion out = node;
          if (node.child) out.child = Box<MotionTree>(mirror_motion(*node.child, mode));
          if (node.target_location) out.target_location = mirror_location(*node.target_location, mode);
          if (node.target_extfidir) out.target_extfidir = mirror_direction(*node.target_extfidir, mode);
          if (node.target_palmor) out.target_palmor = mirror_direction(*node.target_palmor, mode);
          return out;
        } else if constexpr (std::is_same_v<T, SequenceMotion>) {
          SequenceMotion out;
          for (const auto& c : node.children) out.children.push_back(mirror_motion(c, mode));
          return out;
        } else if constexpr (std::is_same_v<T, ParallelMotion>) {
          ParallelMotion out;
          for (const auto& c : node.children) out.children.push_back(mirror_motion(c, mode));
          return out;
        } else {  // RepeatMotion
          RepeatMotion out = node;
          if (node.child) out.child = Box<MotionTree>(mirror_motion(*node.child, mode));
          return out;
        }
      },
      tree.node)};
}

}  // namespace

ManualPart expand_symmetry(const ManualPart& m) {
  if (m.symmetry == Symmetry::None) {
    throw std::invalid_argument("expand_symmetry: manual part has no symmetry");
  }
  ManualPart out = m;
  out.symmetry = Symmetry::None;
  out.both_hands = true;
  out.nondominant = mirror_handspec(m.dominant, m.symmetry);
  if (m.motion) {
    if (m.symmetry == Symmetry::Parallel) {
      // parallel: the nondominant hand repeats the dominant movement as-is
      out.nondominant_motion = m.motion;
    } else {
      out.nondominant_motion = mirror_motion(*m.motion, m.symmetry);
    }
  }
  return out;
}

Sign expand_sign(const Sign& sign) {
  if (!sign.manual || sign.manual->symmetry == Symmetry::None) return sign;
  Sign out = sign;
  out.manual = expand_symmetry(*sign.manual);
  return out;
}

// ---------------------------------------------------------------------------
// Serializer
// ---------------------------------------------------------------------------

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string fmt_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

class Writer {
 public:
  std::string result;

  void open(int depth, const std::string& tag, bool self_close) {
    result.append(static_cast<size_t>(depth) * 2, ' ');
    result += "<" + tag + (self_close ? "/>\n" : ">\n");
  }
  void close(int depth, std::string_view name) {
    result.append(static_cast<size_t>(depth) * 2, ' ');
    result += "</";
    result += name;
    result += ">\n";
  }
};

std::string attr(std::string_view name, std::string_view value) {
  return " " + std::string(name) + "=\"" + xml_escape(value) + "\"";
}

std::string manner_attr(const MannerSet& set) {
  std::string list;
  for (Manner m : {Manner::Fast, Manner::Slow, Manner::Tense, Manner::SuddenStop}) {
    if (set.contains(m)) {
      if (!list.empty()) list += ",";
      list += to_string(m);
    }
  }
  return list.empty() ? std::string() : attr("manner", list);
}

void append_proximity_attrs(std::string& tag, const ProximityToken& p, std::string_view base,
                            std::string_view second, std::string_view fraction) {
  tag += attr(base, to_sigml_name(p.primary));
  if (p.secondary) tag += attr(second, to_sigml_name(*p.secondary));
  if (p.fraction) tag += attr(fraction, fmt_number(*p.fraction));
}

std::string location_tag(const LocationSpec& loc, Writer& w, int depth);

void write_location(const LocationSpec& loc, Writer& w, int depth) {
  if (loc.midpoint_of) {
    std::string tag = "location_midpoint";
    if (loc.hand_point) tag += attr("hand_point", *loc.hand_point);
    w.open(depth, tag, false);
    write_location(loc.midpoint_of->a, w, depth + 1);
    write_location(loc.midpoint_of->b, w, depth + 1);
    w.close(depth, "location_midpoint");
    return;
  }
  std::string tag = "location_bodyarm";
  tag += attr("location", loc.kind == LocationSpec::Kind::SigningSpace
                              ? std::string(to_sigml_name(loc.level))
                              : loc.body_site);
  if (loc.lateral != Lateral::Centre) tag += attr("side", to_sigml_name(loc.lateral));
  append_proximity_attrs(tag, loc.proximity, "proximity", "second_proximity",
                         "proximity_fraction");
  if (loc.hand_point) tag += attr("hand_point", *loc.hand_point);
  w.open(depth, tag, true);
}

void write_handconfig(const HandSpec& spec, Writer& w, int depth) {
  const HandshapeSpec& hs = spec.handshape;
  std::string tag = "handconfig";
  if (hs.between) {
    tag += attr("handshape", to_sigml_name(hs.between->a.base));
    tag += attr("second_handshape", to_sigml_name(hs.between->b.base));
    tag += attr("handshape_fraction", fmt_number(hs.between->t));
  } else {
    tag += attr("handshape", to_sigml_name(hs.base));
    if (hs.thumbpos) tag += attr("thumbpos", to_sigml_name(*hs.thumbpos));
    if (hs.mainbend) tag += attr("mainbend", to_sigml_name(*hs.mainbend));
    if (!hs.selected_fingers.empty()) {
      std::string list;
      for (FingerId f : hs.selected_fingers) {
        if (!list.empty()) list += ",";
        list += name_of(kFingerNames, f);
      }
      tag += attr("selected_fingers", list);
    }
  }
  tag += attr("extfidir", to_sigml_name(spec.extfidir));
  if (spec.extfidir.fraction) tag += attr("extfidir_fraction", fmt_number(*spec.extfidir.fraction));
  tag += attr("palmor", to_sigml_name(spec.palmor));
  if (spec.palmor.fraction) tag += attr("palmor_fraction", fmt_number(*spec.palmor.fraction));

  const bool has_children = !hs.between && (!hs.finger_bends.empty() || !hs.crossings.empty() ||
                                            hs.thumb_between || !hs.explicit_joint_angles.empty());
  w.open(depth, tag, !has_children);
  if (!has_children) return;
  for (const auto& [finger, bend] : hs.finger_bends) {
    w.open(depth + 1,
           "finger_bend" + attr("finger", name_of(kFingerNames, finger)) +
               attr("bend", to_sigml_name(bend)),
           true);
  }
  for (const auto& [over, under] : hs.crossings) {
    w.open(depth + 1,
           "finger_cross" + attr("over", name_of(kFingerNames, over)) +
               attr("under", name_of(kFingerNames, under)),
           true);
  }
  if (hs.thumb_between) {
    w.open(depth + 1,
           "thumb_between" + attr("first", name_of(kFingerNames, hs.thumb_between->first)) +
               attr("second", name_of(kFingerNames, hs.thumb_between->second)),
           true);
  }
  for (const auto& [name, angle] : hs.explicit_joint_angles) {
    w.open(depth + 1, "joint" + attr("name", name) + attr("angle", fmt_number(angle)), true);
  }
  w.close(depth, "handconfig");
}

void write_motion(const MotionTree& tree, Writer& w, int depth) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, DirectedMotion>) {
          std::string tag = "directedmotion";
          tag += attr("direction", to_sigml_name(node.direction));
          if (node.direction.fraction) tag += attr("direction_fraction", fmt_number(*node.direction.fraction));
          tag += attr("size", to_sigml_name(node.size.primary));
          if (node.size.secondary) tag += attr("second_size", to_sigml_name(*node.size.secondary));
          if (node.size.fraction) tag += attr("size_fraction", fmt_number(*node.size.fraction));
          if (node.curve) {
            tag += attr("curve", std::string(1, direction_letter(node.curve->bulge)));
            tag += attr("curve_depth", name_of(kDepthNames, node.curve->depth));
          }
          tag += manner_attr(node.modifiers);
          w.open(depth, tag, true);
        } else if constexpr (std::is_same_v<T, CircularMotion>) {
          std::string tag = "circularmotion";
          tag += attr("plane", std::string(1, direction_letter(node.plane_normal)));
          tag += attr("sense", node.clockwise ? "clockwise" : "anticlockwise");
          tag += attr("extent", to_sigml_name(node.extent.primary));
          if (node.extent.secondary) tag += attr("second_extent", to_sigml_name(*node.extent.secondary));
          if (node.extent.fraction) tag += attr("extent_fraction", fmt_number(*node.extent.fraction));
          tag += manner_attr(node.modifiers);
          w.open(depth, tag, true);
        } else if constexpr (std::is_same_v<T, TargetedMotion>) {
          w.open(depth, "tgt_motion" + manner_attr(node.modifiers), false);
          if (node.child) write_motion(*node.child, w, depth + 1);
          if (node.target_location) write_location(*node.target_location, w, depth + 1);
          if (node.target_handshape || node.target_extfidir || node.target_palmor) {
            std::string tag = "handconfig";
            if (node.target_handshape) {
              tag += attr("handshape", to_sigml_name(node.target_handshape->base));
              if (node.target_handshape->thumbpos)
                tag += attr("thumbpos", to_sigml_name(*node.target_handshape->thumbpos));
              if (node.target_handshape->mainbend)
                tag += attr("mainbend", to_sigml_name(*node.target_handshape->mainbend));
            }
            if (node.target_extfidir) tag += attr("extfidir", to_sigml_name(*node.target_extfidir));
            if (node.target_palmor) tag += attr("palmor", to_sigml_name(*node.target_palmor));
            w.open(depth + 1, tag, true);
          }
          w.close(depth, "tgt_motion");
        } else if constexpr (std::is_same_v<T, SequenceMotion>) {
          w.open(depth, "seq_motion", false);
          for (const auto& c : node.children) write_motion(c, w, depth + 1);
          w.close(depth, "seq_motion");
        } else if constexpr (std::is_same_v<T, ParallelMotion>) {
          w.open(depth, "par_motion", false);
          for (const auto& c : node.children) write_motion(c, w, depth + 1);
          w.close(depth, "par_motion");
        } else {  // RepeatMotion
          w.open(depth, "rpt_motion" + attr("repetition", name_of(kRepetitionNames, node.repetition)),
                 false);
          if (node.child) write_motion(*node.child, w, depth + 1);
          w.close(depth, "rpt_motion");
        }
      },
      tree.node);
}

void write_manual(const ManualPart& m, Writer& w, int depth) {
  std::string tag = "sign_manual";
  if (m.both_hands) tag += attr("both_hands", "true");
  switch (m.symmetry) {
    case Symmetry::LeftRight: tag += attr("lr_symm", "true"); break;
    case Symmetry::FrontBack: tag += attr("fb_symm", "true"); break;
    case Symmetry::UpDown: tag += attr("ud_symm", "true"); break;
    case Symmetry::Parallel: tag += attr("parallel", "true"); break;
    case Symmetry::None: break;
  }
  w.open(depth, tag, false);
  write_handconfig(m.dominant, w, depth + 1);
  write_location(m.dominant.location, w, depth + 1);
  if (m.constellation) {
    std::string ctag = "handconstellation";
    append_proximity_attrs(ctag, m.constellation->distance, "distance", "second_distance",
                           "distance_fraction");
    ctag += attr("dominant_point", m.constellation->dominant_point);
    ctag += attr("nondominant_point", m.constellation->nondominant_point);
    if (m.constellation->direction) {
      ctag += attr("direction", to_sigml_name(*m.constellation->direction));
      if (m.constellation->direction->fraction)
        ctag += attr("direction_fraction", fmt_number(*m.constellation->direction->fraction));
    }
    w.open(depth + 1, ctag, true);
  }
  if (m.nondominant) {
    w.open(depth + 1, "nondominant_hand", false);
    write_handconfig(*m.nondominant, w, depth + 2);
    write_location(m.nondominant->location, w, depth + 2);
    if (m.nondominant_motion) write_motion(*m.nondominant_motion, w, depth + 2);
    w.close(depth + 1, "nondominant_hand");
  }
  if (m.motion) write_motion(*m.motion, w, depth + 1);
  w.close(depth, "sign_manual");
}

}  // namespace

std::string serialize_sigml(const SignDocument& doc) {
  Writer w;
  w.result = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  w.open(0, "sigml", false);
  for (const Sign& sign : doc.signs) {
    std::string tag = "hns_sign";
    if (sign.gloss) tag += attr("gloss", *sign.gloss);
    if (sign.duration_override) tag += attr("duration", fmt_number(*sign.duration_override));
    if (sign.time_scale) tag += attr("time_scale", fmt_number(*sign.time_scale));
    w.open(1, tag, false);
    if (sign.manual) write_manual(*sign.manual, w, 2);
    if (sign.nonmanual) {
      w.open(2, "sign_nonmanual", false);
      for (const auto& [tier, actions] : sign.nonmanual->tiers) {
        w.open(3, std::string(to_sigml_name(tier)), false);
        for (const auto& action : actions) {
          std::string atag = "action" + attr("name", action.id);
          if (action.duration) atag += attr("duration", fmt_number(*action.duration));
          w.open(4, atag, true);
        }
        w.close(3, to_sigml_name(tier));
      }
      w.close(2, "sign_nonmanual");
    }
    w.close(1, "hns_sign");
  }
  w.close(0, "sigml");
  return w.result;
}

}  // namespace animgen
