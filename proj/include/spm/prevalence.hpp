#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spm/model.hpp"
#include "spm/spectral.hpp"

namespace spm {

/// Z(t) = ||I(t)||_1 for every recorded step.
inline std::vector<double> prevalence_series(const Trajectory& traj) {
  std::vector<double> z(traj.size());
  for (std::size_t t = 0; t < traj.size(); ++t) z[t] = traj.Z(t);
  return z;
}

struct PrevalenceShape {
  enum class Kind { monotone_decreasing, single_peak, multi_peak };

  Kind classification = Kind::monotone_decreasing;
  std::vector<std::size_t> peak_times;  ///< first index of each strict local maximum
  bool initial_rise = false;            ///< Z(1) > Z(0)

  /// Rises from t = 0 to a single peak and falls afterwards.
  bool rise_then_fall() const { return classification == Kind::single_peak && initial_rise; }
};

inline const char* to_string(PrevalenceShape::Kind k) {
  switch (k) {
    case PrevalenceShape::Kind::monotone_decreasing: return "monotone-decreasing";
    case PrevalenceShape::Kind::single_peak: return "single-peak";
    case PrevalenceShape::Kind::multi_peak: return "multi-peak";
  }
  return "?";
}

/// Counts strict local maxima with exact comparisons. Runs of equal values
/// collapse to one point; a run is a peak when the runs on both sides are
/// lower. Near-flat peaks can split under rounding.
inline PrevalenceShape classify_shape(std::span<const double> Z) {
  PrevalenceShape shape;
  if (Z.size() >= 2) shape.initial_rise = Z[1] > Z[0];
  struct Run {
    double value;
    std::size_t start;
  };
  std::vector<Run> runs;
  for (std::size_t t = 0; t < Z.size(); ++t) {
    if (runs.empty() || Z[t] != runs.back().value) runs.push_back({Z[t], t});
  }
  for (std::size_t k = 1; k + 1 < runs.size(); ++k) {
    if (runs[k].value > runs[k - 1].value && runs[k].value > runs[k + 1].value) shape.peak_times.push_back(runs[k].start);
  }
  if (shape.peak_times.empty()) {
    shape.classification = PrevalenceShape::Kind::monotone_decreasing;
  } else if (shape.peak_times.size() == 1) {
    shape.classification = PrevalenceShape::Kind::single_peak;
  } else {
    shape.classification = PrevalenceShape::Kind::multi_peak;
  }
  return shape;
}

/// max_t |Z(t+1) - Z(t) - (S(t) phi(I(t)) - g_n I_n(t))|
inline double prevalence_balance_residual(const Trajectory& traj) {
  const std::size_t n = traj.stages();
  const double gn = traj.params().gamma(n - 1);
  double m = 0.0;
  for (std::size_t t = 0; t + 1 < traj.size(); ++t) {
    const double predicted = traj.S(t) * traj.incidence().value(traj.I(t)) - gn * traj.I(t, n - 1);
    m = std::max(m, std::abs((traj.Z(t + 1) - traj.Z(t)) - predicted));
  }
  return m;
}

/// True when r_1 = ... = r_{n-1} = 0, i.e. only the last stage infects to first order.
inline bool only_last_stage_infectious(const IncidenceModel& incidence) {
  const auto r = incidence.r();
  return std::all_of(r.begin(), r.end() - 1, [](double x) { return x == 0.0; });
}

struct InitialRisePrediction {
  std::optional<bool> predicted;  ///< Z(1) > Z(0), absent when deferred
  double threshold = 0.0;         ///< c = S(0) phi(I(0)) / g_n
  bool observed = false;          ///< Z(1) > Z(0) from one model step
  std::string reason;
};

/// When some early stage i < n has r_i > 0 and I_i(0) > 0, predicts an
/// initial rise iff I_n(0) < c = S(0) phi(I(0)) / g_n. Makes no claim past t = 1.
inline InitialRisePrediction initial_rise_predicate_general(const Scenario& s) {
  InitialRisePrediction out;
  const std::size_t n = s.params.stages();
  const auto r = s.incidence.r();
  const auto next = step(s.initial, s.params, s.incidence);
  out.observed = next.prevalence() > s.initial.prevalence();
  bool applies = false;
  for (std::size_t i = 0; i + 1 < n; ++i) applies = applies || (r[i] > 0.0 && s.initial.I[i] > 0.0);
  if (!applies) {
    out.reason = "no early stage with r_i > 0 and I_i(0) > 0; see the last-stage predicates";
    return out;
  }
  out.threshold = s.initial.S * s.incidence.value(s.initial.I) / s.params.gamma(n - 1);
  out.predicted = s.initial.I[n - 1] < out.threshold;
  out.reason = *out.predicted ? "I_n(0) < c" : "I_n(0) >= c";
  return out;
}

struct ThresholdDecay {
  std::optional<std::size_t> holds_from;  ///< first t* with S(t*) < N/R0
  std::size_t violations = 0;             ///< steps t >= t* where Z fails to fall
  std::optional<std::size_t> first_violation;
};

/// Under r_1 = ... = r_{n-1} = 0: once S(t*) < N/R0, Z(t+1) < Z(t) for every
/// later recorded t. A step with I_n(t) = 0 leaves Z unchanged in exact
/// arithmetic (phi vanishes there); whatever rounding does to the sum on such
/// a step is not counted as a violation.
inline ThresholdDecay threshold_decay_predicate(const Trajectory& traj) {
  if (!only_last_stage_infectious(traj.incidence())) {
    throw std::invalid_argument("threshold_decay_predicate: requires r_1 = ... = r_{n-1} = 0");
  }
  const double threshold = 1.0 / transmission_delta(traj.params(), traj.incidence());
  ThresholdDecay out;
  const std::size_t last = traj.stages() - 1;
  for (std::size_t t = 0; t < traj.size(); ++t) {
    if (traj.S(t) < threshold) {
      out.holds_from = t;
      break;
    }
  }
  if (!out.holds_from) return out;
  for (std::size_t t = *out.holds_from; t + 1 < traj.size(); ++t) {
    const double z0 = traj.Z(t);
    const double z1 = traj.Z(t + 1);
    const bool ok = z1 < z0 || traj.I(t, last) == 0.0;
    if (!ok) {
      ++out.violations;
      if (!out.first_violation) out.first_violation = t;
    }
  }
  return out;
}

struct OutbreakPrediction {
  bool applicable = false;
  bool rise = false;                  ///< Z(1) > Z(0) for the scenario as given
  std::optional<double> eta_witness;  ///< an I_n(0) for which a rise was found
  std::size_t halvings = 0;
  std::string reason;
};

/// For r_1 = ... = r_{n-1} = 0 and S(0) in (N/R0, N): whether prevalence
/// rises in the first step, and a concrete small-seed witness found by
/// halving I(0) (S(0) fixed) until Z(1) > Z(0).
inline OutbreakPrediction outbreak_predicate_lastclass(const Scenario& s, std::size_t max_halvings = 2000) {
  if (!only_last_stage_infectious(s.incidence)) {
    throw std::invalid_argument("outbreak_predicate_lastclass: requires r_1 = ... = r_{n-1} = 0");
  }
  OutbreakPrediction out;
  const double N = s.params.population();
  const double threshold = N / r0(s.params, s.incidence);
  if (!(s.initial.S > threshold && s.initial.S < N)) {
    out.reason = "S(0) not in (N/R0, N); the threshold decay predicate governs";
    return out;
  }
  out.applicable = true;
  const auto rises = [&](const EpidemicState& st) {
    return step(st, s.params, s.incidence).prevalence() > st.prevalence();
  };
  out.rise = rises(s.initial);
  EpidemicState probe = s.initial;
  const std::size_t n = s.params.stages();
  for (std::size_t k = 0; k <= max_halvings; ++k) {
    if (probe.I[n - 1] > 0.0 && rises(probe)) {
      out.eta_witness = probe.I[n - 1];
      out.halvings = k;
      out.reason = "rise found";
      return out;
    }
    double removed = 0.0;
    for (double& x : probe.I) {
      removed += 0.5 * x;
      x *= 0.5;
    }
    probe.R += removed;
    if (!(probe.I[n - 1] > 0.0)) break;
  }
  out.halvings = max_halvings;
  out.reason = "no rise before I_n(0) underflowed";
  return out;
}

struct SaturationCondition {
  bool holds = false;
  bool analytic = false;
  std::optional<double> counterexample;  ///< x where varphi(x) < r x / (1 + r x)
};

/// Checks varphi(x) >= r x / (1 + r x) on (0, N] for last-class-only
/// incidence. Linear and exponential varphi pass analytically; otherwise a
/// uniform grid of `grid_points` points is scanned.
inline SaturationCondition saturation_condition_check(const IncidenceModel& incidence, std::size_t grid_points = 10000) {
  const auto* last = std::get_if<family::LastClassOnly>(&incidence.family());
  if (!last) throw std::invalid_argument("saturation_condition_check: requires last-class-only incidence");
  SaturationCondition out;
  if (last->phi.kind != ScalarIncidence::Kind::custom) {
    out.holds = true;
    out.analytic = true;
    return out;
  }
  const double N = incidence.population();
  const double rn = incidence.r().back();
  out.holds = true;
  for (std::size_t k = 1; k <= grid_points; ++k) {
    const double x = N * static_cast<double>(k) / static_cast<double>(grid_points);
    const double bound = rn * x / (1.0 + rn * x);
    const double value = last->phi.value(x);
    // a few ulps of slack so that equality cases are not rejected by rounding
    if (value < bound - 4.0 * std::numeric_limits<double>::epsilon() * std::abs(bound)) {
      out.holds = false;
      out.counterexample = x;
      return out;
    }
  }
  return out;
}

struct DecreasePersistence {
  std::optional<std::size_t> first_decrease;  ///< first t with Z(t+1) < Z(t)
  std::size_t violations = 0;                 ///< later t with Z(t+1) > Z(t)
};

/// Once Z falls it never rises again (non-strict).
inline DecreasePersistence decrease_persistence(std::span<const double> Z) {
  DecreasePersistence out;
  for (std::size_t t = 0; t + 1 < Z.size(); ++t) {
    if (!out.first_decrease) {
      if (Z[t + 1] < Z[t]) out.first_decrease = t;
    } else if (Z[t + 1] > Z[t]) {
      ++out.violations;
    }
  }
  return out;
}

/// Same scan on a trajectory. A step with I_n(t) = 0 changes Z by exactly zero
/// in exact arithmetic, so a fall there is rounding in the sum and does not
/// start the decrease.
inline DecreasePersistence decrease_persistence(const Trajectory& traj) {
  const auto Z = prevalence_series(traj);
  const std::size_t last = traj.stages() - 1;
  DecreasePersistence out;
  for (std::size_t t = 0; t + 1 < Z.size(); ++t) {
    if (!out.first_decrease) {
      if (Z[t + 1] < Z[t] && traj.I(t, last) > 0.0) out.first_decrease = t;
    } else if (Z[t + 1] > Z[t]) {
      ++out.violations;
    }
  }
  return out;
}

}  // namespace spm
