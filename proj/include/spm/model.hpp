#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spm/incidence.hpp"
#include "spm/numeric.hpp"
#include "spm/params.hpp"

namespace spm {

/// One step of the staged-progression recursion:
///   S' = (1 - phi(I)) S
///   I_1' = (1 - g_1) I_1 + phi(I) S
///   I_j' = (1 - g_j) I_j + g_{j-1} I_{j-1}
///   R' = R + g_n I_n
inline EpidemicState step(const EpidemicState& state, const StageParams& params, const IncidenceModel& incidence) {
  const std::size_t n = params.stages();
  if (state.I.size() != n) {
    throw std::invalid_argument("step: state has " + std::to_string(state.I.size()) + " stages, params has " +
                                std::to_string(n));
  }
  if (incidence.dimension() != n) throw std::invalid_argument("step: incidence dimension does not match params");
  const double phi = incidence.value(state.I);
  const double infections = phi * state.S;

  EpidemicState next;
  next.S = (1.0 - phi) * state.S;
  next.I.resize(n);
  next.I[0] = (1.0 - params.gamma(0)) * state.I[0] + infections;
  for (std::size_t j = 1; j < n; ++j) {
    next.I[j] = (1.0 - params.gamma(j)) * state.I[j] + params.gamma(j - 1) * state.I[j - 1];
  }
  next.R = state.R + params.gamma(n - 1) * state.I[n - 1];
  return next;
}

/// Absolute stopping thresholds; `defaults(N)` scales them with the population.
struct StoppingRule {
  std::uint64_t max_steps = 1'000'000;
  double eps_z = 1e-12;
  double eps_s = 1e-14;

  static StoppingRule defaults(double population) { return {1'000'000, 1e-12 * population, 1e-14 * population}; }

  bool operator==(const StoppingRule&) const = default;
};

enum class StopReason { max_steps, converged };

inline const char* to_string(StopReason reason) { return reason == StopReason::converged ? "converged" : "max-steps"; }

/// Recorded states t = 0..T, stored column-wise.
class Trajectory {
 public:
  Trajectory(StageParams params, IncidenceModel incidence, StoppingRule stopping)
      : params_(std::move(params)), incidence_(std::move(incidence)), stopping_(stopping) {}

  void push_back(const EpidemicState& s) {
    S_.push_back(s.S);
    R_.push_back(s.R);
    I_.insert(I_.end(), s.I.begin(), s.I.end());
  }

  std::size_t size() const { return S_.size(); }
  std::size_t stages() const { return params_.stages(); }
  /// Index of the last recorded state.
  std::size_t horizon() const { return size() - 1; }

  double S(std::size_t t) const { return S_[t]; }
  double R(std::size_t t) const { return R_[t]; }
  std::span<const double> I(std::size_t t) const { return {I_.data() + t * stages(), stages()}; }
  double I(std::size_t t, std::size_t j) const { return I_[t * stages() + j]; }
  double Z(std::size_t t) const {
    double z = 0.0;
    for (double x : I(t)) z += x;
    return z;
  }

  EpidemicState state(std::size_t t) const {
    auto i = I(t);
    return {S_[t], std::vector<double>(i.begin(), i.end()), R_[t]};
  }

  std::span<const double> susceptibles() const { return S_; }

  /// Last recorded S, the simulated estimate of S_inf.
  double final_susceptibles() const { return S_.back(); }

  const StageParams& params() const { return params_; }
  const IncidenceModel& incidence() const { return incidence_; }
  const StoppingRule& stopping() const { return stopping_; }
  StopReason stop_reason() const { return stop_reason_; }
  void set_stop_reason(StopReason r) { stop_reason_ = r; }

 private:
  StageParams params_;
  IncidenceModel incidence_;
  StoppingRule stopping_;
  StopReason stop_reason_ = StopReason::max_steps;
  std::vector<double> S_, R_, I_;
};

/// Iterates `step` until ||I(t)||_1 < eps_z and the last decrement of S is
/// below eps_s, or until max_steps. At t = 0 the decrement is the one the
/// next step would produce.
inline Trajectory simulate(const EpidemicState& initial, const StageParams& params, const IncidenceModel& incidence,
                           const StoppingRule& stopping) {
  check_state(initial, params, 1e-9);
  if (incidence.dimension() != params.stages()) {
    throw std::invalid_argument("simulate: incidence dimension does not match params");
  }
  Trajectory trajectory(params, incidence, stopping);
  trajectory.push_back(initial);

  EpidemicState current = initial;
  {
    const double decrement = incidence.value(current.I) * current.S;
    if (l1_norm(current.I) < stopping.eps_z && decrement < stopping.eps_s) {
      trajectory.set_stop_reason(StopReason::converged);
      return trajectory;
    }
  }
  for (std::uint64_t t = 0; t < stopping.max_steps; ++t) {
    EpidemicState next = step(current, params, incidence);
    trajectory.push_back(next);
    const double decrement = current.S - next.S;
    current = std::move(next);
    if (l1_norm(current.I) < stopping.eps_z && decrement < stopping.eps_s) {
      trajectory.set_stop_reason(StopReason::converged);
      return trajectory;
    }
  }
  trajectory.set_stop_reason(StopReason::max_steps);
  return trajectory;
}

/// Everything needed to run and analyse one epidemic.
struct Scenario {
  std::string label;
  StageParams params;
  IncidenceModel incidence;
  EpidemicState initial;
  StoppingRule stopping;

  Trajectory run() const { return simulate(initial, params, incidence, stopping); }

  Trajectory run(const StoppingRule& override_rule) const { return simulate(initial, params, incidence, override_rule); }

  bool operator==(const Scenario&) const = default;
};

}  // namespace spm
