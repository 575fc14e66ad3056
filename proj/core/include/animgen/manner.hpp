#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string_view>

namespace animgen {

// Movement manners: the four context manners implied by the planner
// (targetted/lax/hard_contact/linear) and the notated modalities
// (fast/slow/tense/sudden_stop).
enum class Manner : uint8_t {
  Targetted,
  Lax,
  HardContact,
  Linear,
  Fast,
  Slow,
  Tense,
  SuddenStop,
};
inline constexpr int kMannerCount = 8;

std::string_view to_string(Manner m);
std::optional<Manner> manner_from_string(std::string_view name);

class MannerSet {
 public:
  MannerSet() = default;
  MannerSet(std::initializer_list<Manner> manners) {
    for (Manner m : manners) insert(m);
  }
  void insert(Manner m) { bits_ |= bit(m); }
  void merge(MannerSet other) { bits_ |= other.bits_; }
  void erase(Manner m) { bits_ &= static_cast<uint8_t>(~bit(m)); }
  bool contains(Manner m) const { return (bits_ & bit(m)) != 0; }
  bool empty() const { return bits_ == 0; }
  friend bool operator==(const MannerSet&, const MannerSet&) = default;

 private:
  static uint8_t bit(Manner m) { return static_cast<uint8_t>(1u << static_cast<uint8_t>(m)); }
  uint8_t bits_ = 0;
};

}  // namespace animgen
