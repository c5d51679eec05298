#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "spm/incidence.hpp"
#include "spm/numeric.hpp"

namespace spm {

struct ConditionResult {
  std::string name;
  bool passed = true;
  std::string detail;
};

/// Outcome of checking an incidence model against the standing regularity
/// hypothesis: range in [0,1), phi(0) = 0, nonnegative gradient, r_n > 0,
/// concavity. Verdicts for closed-form families are analytic; for custom
/// functions they come from a sampled grid and are advisory only.
struct ValidationReport {
  std::string family;
  bool analytic = false;
  std::size_t points_sampled = 0;
  std::vector<ConditionResult> conditions;

  bool passed() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const ConditionResult& c) { return c.passed; });
  }

  const ConditionResult* find(const std::string& name) const {
    for (const auto& c : conditions) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

namespace detail {

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

inline std::vector<ConditionResult> all_pass(const std::string& why) {
  return {{"range", true, why},
          {"zero-at-origin", true, why},
          {"nonnegative-gradient", true, why},
          {"last-stage-infectious", true, "r_n > 0 enforced at construction"},
          {"concavity", true, why}};
}

/// Analytic verdicts; empty when the model contains a custom function.
inline std::vector<ConditionResult> analytic_conditions(const IncidenceModel& inc) {
  const double N = inc.population();
  return std::visit(
      [&](const auto& f) -> std::vector<ConditionResult> {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, family::Exponential>) {
          return all_pass("1 - exp(-beta.I) with beta >= 0");
        } else if constexpr (std::is_same_v<F, family::SplitExponential>) {
          return all_pass("convex combination of 1 - exp(-beta_j I_j)");
        } else if constexpr (std::is_same_v<F, family::Linear>) {
          auto out = all_pass("linear with beta >= 0");
          CompensatedSum s;
          for (double b : f.beta) s += b;
          const double scaled = s.value() * N;
          out[0].passed = scaled <= 1.0 + 1e-12;
          out[0].detail = "sum(beta) * N = " + fmt(scaled) + (out[0].passed ? " <= 1" : " > 1, phi leaves [0,1) on U");
          return out;
        } else if constexpr (std::is_same_v<F, family::LastClassOnly>) {
          if (f.phi.kind == ScalarIncidence::Kind::custom) return {};
          if (f.phi.kind == ScalarIncidence::Kind::exponential) return all_pass("1 - exp(-beta I_n)");
          auto out = all_pass("beta I_n");
          out[0].passed = f.phi.beta * N <= 1.0 + 1e-12;
          out[0].detail = "beta * N = " + fmt(f.phi.beta * N) + (out[0].passed ? " <= 1" : " > 1");
          return out;
        } else if constexpr (std::is_same_v<F, family::ContactComposed> || std::is_same_v<F, family::PoissonComposed>) {
          // composition with any contact distribution inherits the kernel's verdict
          auto out = analytic_conditions(*f.kernel);
          for (auto& c : out) c.detail = "kernel: " + c.detail;
          return out;
        } else {
          return {};
        }
      },
      inc.family());
}

/// Lattice points k/g * N with k >= 0 and sum(k) <= g.
inline void for_each_simplex_point(std::size_t n, std::size_t density, double N,
                                   const std::function<void(const std::vector<double>&)>& visit) {
  std::vector<std::size_t> k(n, 0);
  std::vector<double> x(n, 0.0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t j, std::size_t remaining) {
    if (j == n) {
      for (std::size_t i = 0; i < n; ++i) x[i] = N * static_cast<double>(k[i]) / static_cast<double>(density);
      visit(x);
      return;
    }
    for (std::size_t v = 0; v <= remaining; ++v) {
      k[j] = v;
      rec(j + 1, remaining - v);
    }
  };
  rec(0, density);
}

/// Second-difference Hessian at a point pulled inside U so the stencil fits.
inline Eigen::MatrixXd hessian_fd(const IncidenceModel& inc, std::vector<double> c, double h) {
  const std::size_t n = c.size();
  const double N = inc.population();
  for (double& v : c) v = std::max(v, h);
  double total = 0.0;
  for (double v : c) total += v;
  const double room = N - 2.0 * h;
  if (total > room) {
    const double base = h * static_cast<double>(n);
    const double scale = (room - base) / (total - base);
    for (double& v : c) v = h + (v - h) * scale;
  }
  const auto f = [&](const std::vector<double>& x) { return inc.value_unchecked(x); };
  Eigen::MatrixXd H(n, n);
  const double f0 = f(c);
  std::vector<double> x = c;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = c[i] + h;
    const double up = f(x);
    x[i] = c[i] - h;
    const double down = f(x);
    x[i] = c[i];
    H(i, i) = (up - 2.0 * f0 + down) / (h * h);
    for (std::size_t j = i + 1; j < n; ++j) {
      double acc = 0.0;
      for (int si : {1, -1}) {
        for (int sj : {1, -1}) {
          x[i] = c[i] + si * h;
          x[j] = c[j] + sj * h;
          acc += si * sj * f(x);
        }
      }
      x[i] = c[i];
      x[j] = c[j];
      H(i, j) = H(j, i) = acc / (4.0 * h * h);
    }
  }
  return H;
}

}  // namespace detail

/// Tolerances of the sampled check. Curvature is measured in the scaled
/// coordinates I/N, so the eigenvalue bound is independent of N.
struct SampledCheckSettings {
  double hessian_step = 1e-3;        ///< relative to N
  /// The stencil's truncation error is O(h^2) times higher derivatives, so
  /// positive eigenvalues are allowed up to abs + rel * max |eigenvalue|.
  double max_eigenvalue = 1e-6;
  double relative_eigenvalue = 1e-3;
  double gradient_tolerance = 1e-9;  ///< on N * dphi/dI_j
  double zero_tolerance = 1e-15;
};

inline ValidationReport validate_hypothesis_H(const IncidenceModel& inc, std::size_t grid_density,
                                              const SampledCheckSettings& settings = {}) {
  if (grid_density < 2) throw std::invalid_argument("validate_hypothesis_H: grid density must be at least 2");
  ValidationReport rep;
  rep.family = inc.family_name();
  if (inc.is_builtin()) {
    rep.analytic = true;
    rep.conditions = detail::analytic_conditions(inc);
    return rep;
  }

  const std::size_t n = inc.dimension();
  const double N = inc.population();
  ConditionResult range{"range", true, ""};
  ConditionResult zero{"zero-at-origin", true, ""};
  ConditionResult gradient{"nonnegative-gradient", true, ""};
  ConditionResult last{"last-stage-infectious", inc.r().back() > 0.0, "r_n = " + detail::fmt(inc.r().back())};
  ConditionResult concave{"concavity", true, ""};

  const std::vector<double> origin(n, 0.0);
  const double phi0 = inc.value_unchecked(origin);
  if (std::abs(phi0) > settings.zero_tolerance) {
    zero.passed = false;
    zero.detail = "phi(0) = " + detail::fmt(phi0);
  }
  const double h = settings.hessian_step * N;
  double worst_eigen = -std::numeric_limits<double>::infinity();
  detail::for_each_simplex_point(n, grid_density, N, [&](const std::vector<double>& I) {
    ++rep.points_sampled;
    const double phi = inc.value_unchecked(I);
    if (range.passed && !(phi >= 0.0 && phi < 1.0)) {
      range.passed = false;
      range.detail = "phi = " + detail::fmt(phi) + " at ||I|| = " + detail::fmt(l1_norm(I));
    }
    const auto g = inc.gradient_unchecked(I);
    for (std::size_t j = 0; j < n && gradient.passed; ++j) {
      if (g[j] * N < -settings.gradient_tolerance) {
        gradient.passed = false;
        gradient.detail = "dphi/dI_" + std::to_string(j + 1) + " = " + detail::fmt(g[j]);
      }
    }
    const Eigen::MatrixXd H = detail::hessian_fd(inc, I, h) * (N * N);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H, Eigen::EigenvaluesOnly);
    const double top = eig.eigenvalues().maxCoeff();
    const double scale = eig.eigenvalues().cwiseAbs().maxCoeff();
    worst_eigen = std::max(worst_eigen, top);
    if (concave.passed && top > settings.max_eigenvalue + settings.relative_eigenvalue * scale) {
      concave.passed = false;
      concave.detail = "Hessian eigenvalue " + detail::fmt(top) + " (scaled by N^2)";
    }
  });
  if (concave.passed) concave.detail = "max scaled Hessian eigenvalue " + detail::fmt(worst_eigen);
  if (range.passed) range.detail = "sampled";
  if (gradient.passed) gradient.detail = "sampled";
  rep.conditions = {range, zero, gradient, last, concave};
  return rep;
}

}  // namespace spm
