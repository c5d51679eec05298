#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spm/model.hpp"
#include "spm/numeric.hpp"
#include "spm/spectral.hpp"

namespace spm {

struct FinalSizeResult {
  enum class Method { equation_root, simulated };

  double S_inf = 0.0;
  Method method = Method::simulated;
  std::optional<double> lower_bound;
  std::optional<double> upper_bound;
  std::size_t iterations = 0;
};

inline const char* to_string(FinalSizeResult::Method m) {
  return m == FinalSizeResult::Method::equation_root ? "equation-root" : "simulated";
}

namespace detail {

/// g(x) = log(S0/x) - sum_j (c_j/g_j)(S0 + sum_{i<=j} I_i(0)) + delta x,
/// whose unique zero in (0, S0) is S_inf for exponential incidence.
struct FinalSizeFunction {
  double S0 = 0.0;
  double constant = 0.0;
  double delta = 0.0;

  double operator()(double x) const { return std::log(S0) - std::log(x) - constant + delta * x; }
};

inline FinalSizeFunction final_size_function(const Scenario& s, const std::vector<double>& rates) {
  FinalSizeFunction g;
  g.S0 = s.initial.S;
  CompensatedSum constant, delta, head;
  for (std::size_t j = 0; j < s.params.stages(); ++j) {
    head += s.initial.I[j];
    const double w = rates[j] / s.params.gamma(j);
    constant += w * (g.S0 + head.value());
    delta += w;
  }
  g.constant = constant.value();
  g.delta = delta.value();
  return g;
}

}  // namespace detail

/// Bracket guard, iteration cap and absolute tolerance (relative to N) of
/// the final-size bisection.
struct BisectionSettings {
  double lower_guard = 1e-300;
  std::size_t max_iterations = 200;
  double rel_tolerance = 1e-14;
};

/// S_inf as the root of the final-size equation, by bisection on
/// (guard, min(S0, 1/delta)). Only defined for incidence of the form
/// 1 - exp(-c . I).
inline FinalSizeResult final_size_equation_solve(const Scenario& s, const BisectionSettings& settings = {}) {
  const auto rates = exponential_rates(s.incidence);
  if (!rates) {
    throw std::invalid_argument("final_size_equation_solve: requires exponential incidence, got " +
                                s.incidence.family_name());
  }
  if (!is_admissible_start(s.initial)) {
    throw std::invalid_argument("final_size_equation_solve: needs S(0) > 0 and I(0) != 0");
  }
  const auto g = detail::final_size_function(s, *rates);
  double lo = settings.lower_guard;
  double hi = std::min(g.S0, 1.0 / g.delta) - settings.lower_guard;
  if (!(g(lo) > 0.0) || !(g(hi) < 0.0)) {
    throw std::runtime_error("final_size_equation_solve: no sign change on the bracket; initial condition not admissible?");
  }
  const double tol = settings.rel_tolerance * s.params.population();
  FinalSizeResult out;
  out.method = FinalSizeResult::Method::equation_root;
  std::size_t k = 0;
  for (; k < settings.max_iterations && hi - lo > tol; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.S_inf = 0.5 * (lo + hi);
  out.iterations = k;
  return out;
}

/// Bounds on S_inf:
///   upper = N/R0 = 1/delta when R0 > 1,
///   lower = S0 (1 - delta (S0 + I0)) / (1 - delta S0) when R0 < 1 and all
///   initial infecteds are in the first stage.
struct FinalSizeBounds {
  std::optional<double> lower;
  std::optional<double> upper;
  std::string lower_reason;
  std::string upper_reason;
};

inline FinalSizeBounds final_size_bounds(const Scenario& s) {
  FinalSizeBounds b;
  const double delta = transmission_delta(s.params, s.incidence);
  const double R0 = s.params.population() * delta;
  if (R0 > 1.0) {
    b.upper = 1.0 / delta;
    b.upper_reason = "R0 > 1";
  } else {
    b.upper_reason = "needs R0 > 1";
  }
  if (!(R0 < 1.0)) {
    b.lower_reason = "needs R0 < 1";
    return b;
  }
  const auto& I = s.initial.I;
  const bool first_stage_only =
      I[0] > 0.0 && std::all_of(I.begin() + 1, I.end(), [](double x) { return x == 0.0; });
  if (!first_stage_only) {
    b.lower_reason = "needs I(0) = (I0, 0, ..., 0)";
    return b;
  }
  const double S0 = s.initial.S;
  b.lower = S0 * (1.0 - delta * (S0 + I[0])) / (1.0 - delta * S0);
  b.lower_reason = "R0 < 1 and I(0) = (I0, 0, ..., 0)";
  return b;
}

/// Stopping rule used when S_inf feeds identity checks.
inline StoppingRule sharp_stopping(double population) {
  return {1'000'000, 1e-13 * population, 1e-14 * population};
}

/// S_inf read off a converged simulation, with the applicable bounds attached.
inline FinalSizeResult final_size_simulate(const Scenario& s, std::optional<StoppingRule> stopping = std::nullopt) {
  const Trajectory t = s.run(stopping.value_or(sharp_stopping(s.params.population())));
  if (t.stop_reason() != StopReason::converged) {
    throw std::runtime_error("final_size_simulate: trajectory did not converge within max_steps");
  }
  FinalSizeResult out;
  out.method = FinalSizeResult::Method::simulated;
  out.S_inf = t.final_susceptibles();
  out.iterations = t.horizon();
  const auto bounds = final_size_bounds(s);
  out.lower_bound = bounds.lower;
  out.upper_bound = bounds.upper;
  return out;
}

struct TailSumReport {
  std::size_t t0 = 0;
  std::vector<double> partial_sums;  ///< sum_{t >= t0} I_j(t) up to the horizon
  std::vector<double> closed_forms;  ///< (S(t0) - S_inf + sum_{i<=j} I_i(t0)) / g_j
  std::vector<double> relative_errors;
  double max_relative_error = 0.0;
};

/// Compares the partial tail sums of each stage against their closed form,
/// with S_inf taken as the last recorded S.
inline TailSumReport tail_sum_check(const Trajectory& traj, std::size_t t0) {
  if (t0 > traj.horizon()) throw std::out_of_range("tail_sum_check: t0 beyond the recorded horizon");
  const std::size_t n = traj.stages();
  const double S_inf = traj.final_susceptibles();
  TailSumReport rep;
  rep.t0 = t0;
  rep.partial_sums.resize(n);
  rep.closed_forms.resize(n);
  rep.relative_errors.resize(n);
  CompensatedSum head;
  for (std::size_t j = 0; j < n; ++j) {
    CompensatedSum tail;
    for (std::size_t t = t0; t <= traj.horizon(); ++t) tail += traj.I(t, j);
    head += traj.I(t0, j);
    CompensatedSum rhs;
    rhs += traj.S(t0);
    rhs += -S_inf;
    rhs += head.value();
    rep.partial_sums[j] = tail.value();
    rep.closed_forms[j] = rhs.value() / traj.params().gamma(j);
    rep.relative_errors[j] = relative_difference(rep.partial_sums[j], rep.closed_forms[j]);
    rep.max_relative_error = std::max(rep.max_relative_error, rep.relative_errors[j]);
  }
  return rep;
}

struct LimitDirection {
  std::size_t time = 0;           ///< t*, last step with ||I|| above the underflow guard
  std::vector<double> direction;  ///< I(t*) / ||I(t*)||_1
  std::vector<double> perron_vector;
  double perron_rho = 0.0;
  double perron_distance = 0.0;   ///< infinity norm
  double max_ratio_error = 0.0;   ///< max_{i,j} relative error of I_i/I_j against v_i/v_j
};

/// Stopping rule that keeps iterating until I is close to underflow, for
/// direction estimates.
inline StoppingRule underflow_stopping(double population) {
  return {1'000'000, 1e-200 * population, 1e-14 * population};
}

/// Compares the normalised infected vector at the last pre-underflow step
/// with the Perron vector of B(S_inf).
inline LimitDirection limit_direction(const Trajectory& traj, double underflow_guard = 1e-250) {
  const std::size_t n = traj.stages();
  if (traj.size() < n + 1) throw std::invalid_argument("limit_direction: trajectory shorter than the stage count");
  std::size_t t = traj.horizon();
  while (t > 0 && !(l1_norm(traj.I(t)) > underflow_guard)) --t;
  const double z = l1_norm(traj.I(t));
  if (!(z > underflow_guard)) throw std::invalid_argument("limit_direction: no infected mass recorded");
  LimitDirection out;
  out.time = t;
  out.direction.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.direction[j] = traj.I(t, j) / z;

  const auto decomposition = build_B(traj.final_susceptibles(), traj.params(), traj.incidence().r());
  const auto p = perron(decomposition);
  out.perron_vector = p.v;
  out.perron_rho = p.rho;
  for (std::size_t j = 0; j < n; ++j) {
    out.perron_distance = std::max(out.perron_distance, std::abs(out.direction[j] - p.v[j]));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double observed = traj.I(t, i) / traj.I(t, j);
      out.max_ratio_error = std::max(out.max_ratio_error, relative_difference(observed, p.v[i] / p.v[j]));
    }
  }
  return out;
}

struct MonotonicityOnset {
  std::optional<std::size_t> onset;  ///< first t0 with I(t0+1) < I(t0) in every component
  std::size_t violations = 0;        ///< later steps where the strict decrease fails
  std::optional<std::size_t> first_violation;

  bool persistent() const { return violations == 0; }
};

namespace detail {
inline bool strictly_decreasing(const Trajectory& traj, std::size_t t) {
  for (std::size_t j = 0; j < traj.stages(); ++j) {
    if (!(traj.I(t + 1, j) < traj.I(t, j))) return false;
  }
  return true;
}
}  // namespace detail

/// First time every infected stage strictly decreases, plus a scan that the
/// decrease persists for all later recorded steps. Exact comparisons.
inline MonotonicityOnset monotonicity_onset(const Trajectory& traj) {
  MonotonicityOnset out;
  for (std::size_t t = 0; t + 1 < traj.size(); ++t) {
    if (!out.onset) {
      if (detail::strictly_decreasing(traj, t)) out.onset = t;
      continue;
    }
    if (!detail::strictly_decreasing(traj, t)) {
      ++out.violations;
      if (!out.first_violation) out.first_violation = t;
    }
  }
  return out;
}

}  // namespace spm
