#include "animgen/trajectory.hpp"

#include <cmath>
#include <stdexcept>

namespace animgen {

namespace {

struct Derivative {
  double dx, dv;
};

inline Derivative controller_rhs(const ControllerParams& p, double x, double v) {
  const double e = 1.0 - x;
  const double g = 1.0 + p.stiffen_coeff * (1.0 - clamp01(e));
  return {v, p.k_prime * g * (p.k * g * (1.0 - x) - v)};
}

// f(k) = k with smoothstep speed ramps over the first and last 5%.
TrajectoryTable linear_table(Manner manner) {
  constexpr double w = 0.05;
  TrajectoryTable table;
  table.manner = manner;
  table.settle_time = 1.0;
  // closed-form integral of the ramped speed profile, normalized to f(1) = 1
  auto ramp_integral = [&](double t) {  // integral of smoothstep01(u/w) du over [0,t], t<=w
    const double u = t / w;
    return w * (u * u * u - 0.5 * u * u * u * u);
  };
  const double total = 1.0 - w;  // raw integral of the speed profile
  for (size_t i = 0; i < table.samples.size(); ++i) {
    const double k = static_cast<double>(i) / 256.0;
    double raw;
    if (k <= w) {
      raw = ramp_integral(k);
    } else if (k < 1.0 - w) {
      raw = ramp_integral(w) + (k - w);
    } else {
      raw = total - ramp_integral(1.0 - k);
    }
    table.samples[i] = raw / total;
  }
  table.samples[0] = 0.0;
  table.samples[256] = 1.0;
  return table;
}

}  // namespace

std::vector<ControllerState> simulate_controller(const ControllerParams& params, double dt,
                                                 double horizon) {
  if (dt <= 0.0) throw std::invalid_argument("simulate_controller: dt must be positive");
  if (horizon <= 0.0) throw std::invalid_argument("simulate_controller: horizon must be positive");
  const double k_prime_max = params.k_prime * (1.0 + std::max(0.0, params.stiffen_coeff));
  if (dt * k_prime_max >= 0.1) {
    throw std::invalid_argument("simulate_controller: dt too coarse for the gains");
  }

  const auto steps = static_cast<size_t>(std::ceil(horizon / dt));
  std::vector<ControllerState> series;
  series.reserve(steps + 1);
  double x = 0.0, v = 0.0;
  series.push_back({0.0, x, v});
  for (size_t i = 1; i <= steps; ++i) {
    const Derivative a = controller_rhs(params, x, v);
    const Derivative b = controller_rhs(params, x + 0.5 * dt * a.dx, v + 0.5 * dt * a.dv);
    const Derivative c = controller_rhs(params, x + 0.5 * dt * b.dx, v + 0.5 * dt * b.dv);
    const Derivative d = controller_rhs(params, x + dt * c.dx, v + dt * c.dv);
    x += dt * (a.dx + 2.0 * b.dx + 2.0 * c.dx + d.dx) / 6.0;
    v += dt * (a.dv + 2.0 * b.dv + 2.0 * c.dv + d.dv) / 6.0;
    series.push_back({static_cast<double>(i) * dt, x, v});
  }
  return series;
}

TrajectoryTable build_trajectory_table(Manner manner, const BodyLanguageProfile& profile) {
  const ControllerParams params = profile.manner_controllers.at(manner);
  if (params.linear_rate) return linear_table(manner);

  // one characteristic time of the unstiffened system; 16 of them cover any
  // sane gain choice, 4096 steps per unit keep RK4 error far below 1e-3
  const double omega = std::sqrt(params.k * params.k_prime);
  const double horizon = 16.0 / omega;
  const double dt = horizon / 65536.0;
  const std::vector<ControllerState> series = simulate_controller(params, dt, horizon);

  size_t end_index = 0;
  if (params.truncate_at_target) {
    while (end_index < series.size() && series[end_index].x < 1.0) ++end_index;
    if (end_index >= series.size()) {
      throw std::runtime_error("build_trajectory_table: trajectory never reaches the target");
    }
  } else {
    // first index after which |x - 1| <= 0.01 holds for the rest of the horizon
    size_t last_outside = 0;
    bool settled = false;
    for (size_t i = 0; i < series.size(); ++i) {
      if (std::abs(series[i].x - 1.0) > 0.01) {
        last_outside = i;
        settled = false;
      } else {
        settled = true;
      }
    }
    if (!settled) {
      throw std::runtime_error("build_trajectory_table: gains do not settle within the horizon");
    }
    end_index = last_outside + 1;
  }

  TrajectoryTable table;
  table.manner = manner;
  table.settle_time = series[end_index].t;
  for (size_t i = 0; i < table.samples.size(); ++i) {
    const double t = table.settle_time * static_cast<double>(i) / 256.0;
    const double pos = t / dt;
    const auto lo = std::min(static_cast<size_t>(pos), series.size() - 1);
    const auto hi = std::min(lo + 1, series.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    table.samples[i] = lerp(series[lo].x, series[hi].x, frac);
  }
  table.samples[0] = 0.0;
  if (params.truncate_at_target) table.samples[256] = 1.0;
  return table;
}

double eval_trajectory(const TrajectoryTable& table, double k) {
  k = clamp01(k);
  const double pos = k * 256.0;
  const auto lo = std::min(static_cast<size_t>(pos), size_t{255});
  const double frac = pos - static_cast<double>(lo);
  return lerp(table.samples[lo], table.samples[lo + 1], frac);
}

TrajectoryTableSet TrajectoryTableSet::build(const BodyLanguageProfile& profile) {
  TrajectoryTableSet set;
  for (int i = 0; i < kMannerCount; ++i) {
    set.tables_[static_cast<size_t>(i)] =
        build_trajectory_table(static_cast<Manner>(i), profile);
  }
  return set;
}

}  // namespace animgen
