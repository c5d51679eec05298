#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spm/numeric.hpp"

namespace spm {

/// Stage structure of the model: n infected stages with per-step
/// progression probabilities gamma_j, and a closed population of size N.
class StageParams {
 public:
  StageParams(std::vector<double> gamma, double population)
      : gamma_(std::move(gamma)), population_(population) {
    if (gamma_.empty()) throw std::invalid_argument("gamma: at least one infected stage is required");
    for (std::size_t j = 0; j < gamma_.size(); ++j) {
      const double g = gamma_[j];
      if (!(g > 0.0 && g < 1.0)) {
        throw std::invalid_argument("gamma[" + std::to_string(j + 1) + "]: progression probability must lie in (0,1), got " +
                                    std::to_string(g));
      }
    }
    if (!(population_ > 0.0) || !std::isfinite(population_)) {
      throw std::invalid_argument("N: total population must be positive and finite");
    }
  }

  std::size_t stages() const { return gamma_.size(); }
  std::span<const double> gamma() const { return gamma_; }
  double gamma(std::size_t j) const { return gamma_[j]; }
  double population() const { return population_; }

  bool operator==(const StageParams&) const = default;

 private:
  std::vector<double> gamma_;
  double population_;
};

/// (S, I_1..I_n, R) at one time step.
struct EpidemicState {
  double S = 0.0;
  std::vector<double> I;
  double R = 0.0;

  double prevalence() const {
    double z = 0.0;
    for (double x : I) z += x;
    return z;
  }

  double total() const { return S + prevalence() + R; }

  bool operator==(const EpidemicState&) const = default;
};

/// Checks nonnegativity and that the classes add up to N within `rel_tol`.
inline void check_state(const EpidemicState& state, const StageParams& params, double rel_tol = 1e-12) {
  if (state.I.size() != params.stages()) {
    throw std::invalid_argument("initial.I: expected " + std::to_string(params.stages()) + " stages, got " +
                                std::to_string(state.I.size()));
  }
  if (!(state.S >= 0.0)) throw std::invalid_argument("initial.S: must be nonnegative");
  if (!(state.R >= 0.0)) throw std::invalid_argument("initial.R: must be nonnegative");
  for (std::size_t j = 0; j < state.I.size(); ++j) {
    if (!(state.I[j] >= 0.0)) {
      throw std::invalid_argument("initial.I[" + std::to_string(j + 1) + "]: must be nonnegative");
    }
  }
  const double N = params.population();
  if (std::abs(state.total() - N) > rel_tol * N) {
    throw std::invalid_argument("initial: S + I_1 + ... + I_n + R must equal N");
  }
}

/// Admissible start: S(0) > 0 and a nonzero infected vector.
inline bool is_admissible_start(const EpidemicState& state) {
  return state.S > 0.0 && state.prevalence() > 0.0;
}

}  // namespace spm
