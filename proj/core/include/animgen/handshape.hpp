#pragma once

#include <span>

#include "animgen/avatar.hpp"
#include "animgen/math.hpp"
#include "animgen/sigml.hpp"

namespace animgen {

// Affine interpolation a(1-k) + bk.
inline double mid(double a, double b, double k) { return a * (1.0 - k) + b * k; }

// Total rotation of a finger base joint for bend b in [0, pi/2] and splay s,
// as the four-factor composition
//
//   (sigma, mid(s, 0, b')) . (beta, b) . (sigma, mid(th_flat, th_fist1, b')) . (lambda, th_fist2 b')
//
// with b' = 2b/pi; the rightmost factor is applied first. At b = 0 this
// reduces to (sigma, s + th_flat); at b = pi/2 full bend kills splay and it
// reduces to (beta, pi/2).(sigma, th_fist1).(lambda, th_fist2).
// Throws std::domain_error when b is outside [0, pi/2].
Quat finger_base_rotation(double bend, double splay, const HandCalibration& cal,
                          const FingerFrame& frame);

// Copy of the avatar's lookup table entry for a basic handshape.
HandJointParams base_handshape_params(HandshapeBase base, const AvatarDescription& avatar);

// Apply handshape modifiers on top of the base table entry: main bending over
// the extended fingers, per-finger bendings, thumb pose, cee gap width,
// re-selected extended fingers, carpometacarpal coupling, explicit joint
// angles last. Throws std::invalid_argument for wide/narrow gaps on non-cee
// bases (the validator flags these earlier).
HandJointParams apply_modifiers(const HandJointParams& params, const HandshapeSpec& spec,
                                const AvatarDescription& avatar);

// Componentwise mid() over every joint parameter, thumb twist included.
HandJointParams interpolate_handshapes(const HandJointParams& a, const HandJointParams& b,
                                       double t);

// Full resolution of a handshape spec: base table, modifiers, and the
// intermediate-handshape operator.
HandJointParams resolve_handshape(const HandshapeSpec& spec, const AvatarDescription& avatar);

// Joint rotations realizing the parameters: hinge joints rotate about their
// avatar axes, finger bases use finger_base_rotation with that finger's
// calibration, the thumb base composes bend, splay and twist about the thumb
// frame axes (twist applied first).
std::vector<std::pair<int, Quat>> hand_params_to_rotations(const HandJointParams& params,
                                                           const AvatarDescription& avatar,
                                                           Side side);

// As above but writing into a full local-rotation array (skeleton order).
void apply_hand_rotations(const HandJointParams& params, const AvatarDescription& avatar,
                          Side side, std::span<Quat> local_rotations);

// Offset of a named hand point from the wrist joint, in the hand bone frame,
// with the hand posed to `params`. Used to place the wrist so that the chosen
// point lands on the target. Points not on the hand subtree resolve to zero.
Vec3 hand_point_offset(const AvatarDescription& avatar, Side side, std::string_view point,
                       const HandJointParams& params);

// Name of a site on the given side's hand ("palm_centre" -> "palm_centre_right").
std::string hand_site_name(std::string_view point, Side side);

}  // namespace animgen
