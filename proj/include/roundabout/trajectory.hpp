#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "roundabout/errors.hpp"

namespace roundabout {

/// Fixed-time, fixed-endpoint boundary value problem for a double integrator.
template <typename Scalar>
struct BoundaryConditions {
  Scalar t0{0}, tf{0};
  Scalar p0{0}, v0{0};
  Scalar pf{0}, vf{0};
};

/// Energy-minimal trajectory over [valid_from, valid_to]. With
/// tau = t - valid_from the plan is
///
///   u(tau) = a tau + b
///   v(tau) = a tau^2 / 2 + b tau + c
///   p(tau) = a tau^3 / 6 + b tau^2 / 2 + c tau + d
///
/// Coefficients are kept relative to valid_from so that plans issued late in
/// a run (t ~ 1e3 s) stay well conditioned.
template <typename Scalar>
struct TrajectoryCoefficients {
  Scalar a{0}, b{0}, c{0}, d{0};
  Scalar valid_from{0}, valid_to{0};
};

template <typename Scalar>
struct KinematicSample {
  Scalar p{0}, v{0}, u{0};
};

struct ActuationLimits {
  double u_min = -4.5;
  double u_max = 4.5;
  double v_min = 1.0;
  double v_max = 15.6;

  void validate() const {
    if (!(u_min < 0.0 && 0.0 < u_max)) throw ConfigError("require u_min < 0 < u_max");
    if (!(v_min > 0.0)) {
      throw ConfigError(
          "v_min must be > 0: the latest merging time t0 + L/v_min needs a positive divisor");
    }
    if (!(v_min < v_max)) throw ConfigError("require v_min < v_max");
  }
};

enum class Bound { UMin, UMax, VMin, VMax };

inline const char* to_string(Bound b) {
  switch (b) {
    case Bound::UMin: return "u_min";
    case Bound::UMax: return "u_max";
    case Bound::VMin: return "v_min";
    case Bound::VMax: return "v_max";
  }
  return "?";
}

template <typename Scalar>
struct Violation {
  Bound bound;
  Scalar t;      // absolute time of the worst violation
  Scalar value;  // control or speed at that time
};

inline constexpr double kMinHorizon = 1e-6;

/// Solves the four boundary conditions p(t0)=p0, v(t0)=v0, p(tf)=pf, v(tf)=vf
/// for the cubic position profile, which is the unconstrained minimizer of
/// 1/2 * integral of u^2 under double-integrator dynamics.
template <typename Scalar>
TrajectoryCoefficients<Scalar> solve_cubic(const BoundaryConditions<Scalar>& bc) {
  using std::abs;
  const Scalar horizon = bc.tf - bc.t0;
  if (!(horizon >= Scalar(kMinHorizon))) {
    throw DegenerateHorizon("planning horizon " + std::to_string(static_cast<double>(horizon)) +
                            " s is below " + std::to_string(kMinHorizon) + " s");
  }
  const Scalar T = horizon;
  Eigen::Matrix<Scalar, 4, 4> system;
  // unknowns ordered (a, b, c, d)
  system << Scalar(0), Scalar(0), Scalar(0), Scalar(1),
            Scalar(0), Scalar(0), Scalar(1), Scalar(0),
            T * T * T / Scalar(6), T * T / Scalar(2), T, Scalar(1),
            T * T / Scalar(2), T, Scalar(1), Scalar(0);
  Eigen::Matrix<Scalar, 4, 1> rhs;
  rhs << bc.p0, bc.v0, bc.pf, bc.vf;
  const Eigen::Matrix<Scalar, 4, 1> x = system.partialPivLu().solve(rhs);
  return {x(0), x(1), x(2), x(3), bc.t0, bc.tf};
}

/// Evaluation without the validity-window check; used for extrapolation by
/// callers that know what they are doing (e.g. feasibility scans).
template <typename Scalar>
KinematicSample<Scalar> eval_unchecked(const TrajectoryCoefficients<Scalar>& k, Scalar t) {
  const Scalar tau = t - k.valid_from;
  return {((k.a * tau / Scalar(6) + k.b / Scalar(2)) * tau + k.c) * tau + k.d,
          (k.a * tau / Scalar(2) + k.b) * tau + k.c,
          k.a * tau + k.b};
}

template <typename Scalar>
KinematicSample<Scalar> eval(const TrajectoryCoefficients<Scalar>& k, Scalar t) {
  if (t < k.valid_from || t > k.valid_to) {
    throw OutOfValidity("t = " + std::to_string(static_cast<double>(t)) + " outside [" +
                        std::to_string(static_cast<double>(k.valid_from)) + ", " +
                        std::to_string(static_cast<double>(k.valid_to)) + "]");
  }
  return eval_unchecked(k, t);
}

/// Exact interval analysis of the control and speed bounds. The control is
/// affine, so its extrema sit on the window ends; the speed is quadratic with
/// at most one interior extremum at tau = -b/a.
template <typename Scalar>
std::vector<Violation<Scalar>> check_feasible(const TrajectoryCoefficients<Scalar>& k,
                                              const ActuationLimits& limits,
                                              Scalar slack = Scalar(1e-9)) {
  std::vector<Violation<Scalar>> out;
  const Scalar T = k.valid_to - k.valid_from;

  const Scalar u_start = k.b;
  const Scalar u_end = k.a * T + k.b;
  const bool end_is_max = u_end > u_start;
  const Scalar u_hi = end_is_max ? u_end : u_start;
  const Scalar u_lo = end_is_max ? u_start : u_end;
  const Scalar t_u_hi = end_is_max ? k.valid_to : k.valid_from;
  const Scalar t_u_lo = end_is_max ? k.valid_from : k.valid_to;
  if (u_hi > Scalar(limits.u_max) + slack) out.push_back({Bound::UMax, t_u_hi, u_hi});
  if (u_lo < Scalar(limits.u_min) - slack) out.push_back({Bound::UMin, t_u_lo, u_lo});

  Scalar taus[3] = {Scalar(0), T, Scalar(0)};
  int n = 2;
  if (k.a != Scalar(0)) {
    const Scalar vertex = -k.b / k.a;
    if (vertex > Scalar(0) && vertex < T) taus[n++] = vertex;
  }
  Scalar v_hi = eval_unchecked(k, k.valid_from).v, v_lo = v_hi;
  Scalar t_v_hi = k.valid_from, t_v_lo = k.valid_from;
  for (int i = 1; i < n; ++i) {
    const Scalar t = k.valid_from + taus[i];
    const Scalar v = eval_unchecked(k, t).v;
    if (v > v_hi) { v_hi = v; t_v_hi = t; }
    if (v < v_lo) { v_lo = v; t_v_lo = t; }
  }
  if (v_hi > Scalar(limits.v_max) + slack) out.push_back({Bound::VMax, t_v_hi, v_hi});
  if (v_lo < Scalar(limits.v_min) - slack) out.push_back({Bound::VMin, t_v_lo, v_lo});
  return out;
}

/// 1/2 * integral of (a tau + b)^2 over the validity window, in closed form.
template <typename Scalar>
Scalar cost(const TrajectoryCoefficients<Scalar>& k) {
  const Scalar T = k.valid_to - k.valid_from;
  return Scalar(0.5) *
         (k.a * k.a * T * T * T / Scalar(3) + k.a * k.b * T * T + k.b * k.b * T);
}

using BoundaryConditionsd = BoundaryConditions<double>;
using TrajectoryCoefficientsd = TrajectoryCoefficients<double>;

}  // namespace roundabout
