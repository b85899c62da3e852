#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "lie_algebra.hpp"

namespace sred {

enum class TrajectoryStatus { ok, nonfinite, out_of_domain, failed };

inline const char* to_string(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::ok: return "ok";
    case TrajectoryStatus::nonfinite: return "nonfinite";
    case TrajectoryStatus::out_of_domain: return "out_of_domain";
    case TrajectoryStatus::failed: return "failed";
  }
  return "unknown";
}

/// Sampled solution. On abort, holds every state up to the last valid time.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  TrajectoryStatus status = TrajectoryStatus::ok;
  std::string message;

  bool ok() const { return status == TrajectoryStatus::ok; }
  double last_time() const { return times.empty() ? 0.0 : times.back(); }
};

/// Returns an empty string when the state is admissible, else a diagnostic.
using Admissibility = std::function<std::string(const Vector&)>;

/**
 * Classical fixed-step RK4 for y' = f(t, y) on [0, t_end]. Sample times are
 * k*h; a final shorter step lands exactly on t_end.
 */
template <class Rhs>
Trajectory integrate_rk4(Rhs&& f, const Vector& y0, double t_end, double h, const Admissibility& admissible = {}) {
  if (!(h > 0.0) || !(t_end > 0.0)) throw StructuralError("integrate_rk4 needs h > 0 and t_end > 0");
  Trajectory tr;
  const auto steps = static_cast<long>(std::ceil(t_end / h - 1e-9));
  tr.times.reserve(static_cast<size_t>(steps) + 1);
  tr.states.reserve(static_cast<size_t>(steps) + 1);
  if (!y0.allFinite()) {
    tr.status = TrajectoryStatus::nonfinite;
    tr.message = "initial state is not finite";
    return tr;
  }
  if (admissible) {
    if (auto why = admissible(y0); !why.empty()) {
      tr.status = TrajectoryStatus::out_of_domain;
      tr.message = "initial state: " + why;
      return tr;
    }
  }
  tr.times.push_back(0.0);
  tr.states.push_back(y0);
  Vector y = y0;
  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * h;
    const double t1 = (k + 1 == steps) ? t_end : static_cast<double>(k + 1) * h;
    const double dt = t1 - t;
    Vector next;
    try {
      const Vector k1 = f(t, y);
      const Vector k2 = f(t + 0.5 * dt, Vector(y + 0.5 * dt * k1));
      const Vector k3 = f(t + 0.5 * dt, Vector(y + 0.5 * dt * k2));
      const Vector k4 = f(t + dt, Vector(y + dt * k3));
      next = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } catch (const Error& e) {
      tr.status = TrajectoryStatus::failed;
      tr.message = "t=" + std::to_string(t) + ": " + e.what();
      return tr;
    }
    if (!next.allFinite()) {
      tr.status = TrajectoryStatus::nonfinite;
      tr.message = "non-finite state after t=" + std::to_string(t);
      return tr;
    }
    if (admissible) {
      if (auto why = admissible(next); !why.empty()) {
        tr.status = TrajectoryStatus::out_of_domain;
        tr.message = "t=" + std::to_string(t1) + ": " + why;
        return tr;
      }
    }
    y = std::move(next);
    tr.times.push_back(t1);
    tr.states.push_back(y);
  }
  return tr;
}

}  // namespace sred
