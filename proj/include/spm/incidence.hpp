#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "spm/contact_distribution.hpp"
#include "spm/numeric.hpp"

namespace spm {

/// A scalar incidence x -> phi(x) used when only the last stage infects.
struct ScalarIncidence {
  enum class Kind { linear, exponential, custom };

  Kind kind = Kind::linear;
  double beta = 0.0;
  std::function<double(double)> value_fn;       // custom only
  std::function<double(double)> derivative_fn;  // custom, optional

  static ScalarIncidence linear(double beta) { return {Kind::linear, beta, {}, {}}; }
  static ScalarIncidence exponential(double beta) { return {Kind::exponential, beta, {}, {}}; }
  static ScalarIncidence custom(std::function<double(double)> f, std::function<double(double)> df = {}) {
    return {Kind::custom, 0.0, std::move(f), std::move(df)};
  }

  double value(double x) const {
    switch (kind) {
      case Kind::linear: return beta * x;
      case Kind::exponential: return -std::expm1(-beta * x);
      case Kind::custom: return value_fn(x);
    }
    return 0.0;
  }

  /// `h` is the finite-difference step used when no analytic derivative exists.
  double derivative(double x, double h) const {
    switch (kind) {
      case Kind::linear: return beta;
      case Kind::exponential: return beta * std::exp(-beta * x);
      case Kind::custom:
        if (derivative_fn) return derivative_fn(x);
        if (x >= h) return (value_fn(x + h) - value_fn(x - h)) / (2.0 * h);
        return (-3.0 * value_fn(x) + 4.0 * value_fn(x + h) - value_fn(x + 2.0 * h)) / (2.0 * h);
    }
    return 0.0;
  }
};

class IncidenceModel;

namespace family {

/// phi(I) = 1 - exp(-beta . I)
struct Exponential {
  std::vector<double> beta;
};

/// phi(I) = beta . I, meaningful while sum(beta) <= 1/N
struct Linear {
  std::vector<double> beta;
};

/// phi(I) = sum_j theta_j (1 - exp(-beta_j I_j))
struct SplitExponential {
  std::vector<double> theta;
  std::vector<double> beta;
};

/// phi(I) = varphi(I_n)
struct LastClassOnly {
  ScalarIncidence phi;
};

/// phi(I) = 1 - sum_i p_i (1 - Pi(I))^i over a finite contact distribution
struct ContactComposed {
  std::shared_ptr<const IncidenceModel> kernel;
  ContactDistribution contacts;
};

/// phi(I) = 1 - exp(-lambda Pi(I))
struct PoissonComposed {
  double lambda = 0.0;
  std::shared_ptr<const IncidenceModel> kernel;
};

/// User-supplied phi; the gradient falls back to finite differences.
struct Custom {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
};

}  // namespace family

/// Force of infection phi: probability that one susceptible is infected
/// during a step, as a function of the infected-stage vector.
///
/// Instances are immutable. The gradient at zero (r) is computed once at
/// construction and must satisfy r >= 0, r_n > 0.
class IncidenceModel {
 public:
  using Family = std::variant<family::Exponential, family::Linear, family::SplitExponential, family::LastClassOnly,
                              family::ContactComposed, family::PoissonComposed, family::Custom>;
  using ValueFn = std::function<double(std::span<const double>)>;
  using GradientFn = std::function<std::vector<double>(std::span<const double>)>;

  /// Relative slack on ||I||_1 <= N before a point is declared outside U.
  static constexpr double kDomainTolerance = 1e-12;
  /// Finite-difference step, relative to N, for gradients of custom families.
  static constexpr double kGradientStep = 1e-6;

  static IncidenceModel exponential(std::vector<double> beta, double population) {
    check_rates(beta, "incidence.beta");
    const std::size_t n = beta.size();
    return IncidenceModel(n, population, family::Exponential{std::move(beta)});
  }

  /// The sum(beta) <= 1/N range condition is left to validate_hypothesis_H
  /// so that out-of-range models can still be built and reported on.
  static IncidenceModel linear(std::vector<double> beta, double population) {
    check_rates(beta, "incidence.beta");
    const std::size_t n = beta.size();
    return IncidenceModel(n, population, family::Linear{std::move(beta)});
  }

  static IncidenceModel split_exponential(std::vector<double> theta, std::vector<double> beta, double population) {
    check_rates(beta, "incidence.beta");
    if (theta.size() != beta.size()) throw std::invalid_argument("incidence.theta: length must match incidence.beta");
    CompensatedSum total;
    for (std::size_t j = 0; j < theta.size(); ++j) {
      if (!(theta[j] > 0.0 && theta[j] <= 1.0)) {
        throw std::invalid_argument("incidence.theta[" + std::to_string(j + 1) + "]: weight must lie in (0,1]");
      }
      total += theta[j];
    }
    if (std::abs(total.value() - 1.0) > 1e-12) throw std::invalid_argument("incidence.theta: weights must sum to 1");
    const std::size_t n = beta.size();
    return IncidenceModel(n, population, family::SplitExponential{std::move(theta), std::move(beta)});
  }

  static IncidenceModel last_class(std::size_t stages, ScalarIncidence phi, double population) {
    if (stages == 0) throw std::invalid_argument("incidence: at least one stage is required");
    if (phi.kind == ScalarIncidence::Kind::custom && !phi.value_fn) {
      throw std::invalid_argument("incidence: custom scalar incidence needs a value function");
    }
    if (phi.kind != ScalarIncidence::Kind::custom && !(phi.beta > 0.0 && std::isfinite(phi.beta))) {
      throw std::invalid_argument("incidence.beta: last-class rate must be positive");
    }
    return IncidenceModel(stages, population, family::LastClassOnly{std::move(phi)});
  }

  static IncidenceModel custom(std::size_t stages, double population, ValueFn value, GradientFn gradient = {}) {
    if (stages == 0) throw std::invalid_argument("incidence: at least one stage is required");
    if (!value) throw std::invalid_argument("incidence: custom incidence needs a value function");
    return IncidenceModel(stages, population, family::Custom{std::move(value), std::move(gradient)});
  }

  /// Poisson distributions are routed to the closed-form family.
  static IncidenceModel contact_composed(IncidenceModel kernel, ContactDistribution contacts) {
    if (contacts.kind() == ContactDistribution::Kind::poisson) {
      return poisson_composed(contacts.lambda(), std::move(kernel));
    }
    const std::size_t n = kernel.dimension();
    const double population = kernel.population();
    return IncidenceModel(n, population,
                          family::ContactComposed{std::make_shared<const IncidenceModel>(std::move(kernel)),
                                                  std::move(contacts)});
  }

  static IncidenceModel poisson_composed(double lambda, IncidenceModel kernel) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("incidence.lambda: must be positive");
    const std::size_t n = kernel.dimension();
    const double population = kernel.population();
    return IncidenceModel(n, population,
                          family::PoissonComposed{lambda, std::make_shared<const IncidenceModel>(std::move(kernel))});
  }

  std::size_t dimension() const { return n_; }
  double population() const { return population_; }
  const Family& family() const { return family_; }

  /// Gradient at the disease-free point.
  std::span<const double> r() const { return r_; }

  std::string family_name() const {
    return std::visit(
        [](const auto& f) -> std::string {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, family::Exponential>) return "exponential";
          else if constexpr (std::is_same_v<F, family::Linear>) return "linear";
          else if constexpr (std::is_same_v<F, family::SplitExponential>) return "split-exponential";
          else if constexpr (std::is_same_v<F, family::LastClassOnly>) return "last-class";
          else if constexpr (std::is_same_v<F, family::ContactComposed>) return "contact";
          else if constexpr (std::is_same_v<F, family::PoissonComposed>) return "poisson";
          else return "custom";
        },
        family_);
  }

  /// True when every component is one of the closed-form families, so
  /// Hypothesis-(H) verdicts can be given analytically.
  bool is_builtin() const {
    return std::visit(
        [](const auto& f) -> bool {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, family::Custom>) return false;
          else if constexpr (std::is_same_v<F, family::LastClassOnly>) return f.phi.kind != ScalarIncidence::Kind::custom;
          else if constexpr (std::is_same_v<F, family::ContactComposed> || std::is_same_v<F, family::PoissonComposed>)
            return f.kernel->is_builtin();
          else return true;
        },
        family_);
  }

  /// Throws std::domain_error unless I lies in U = {I >= 0, ||I||_1 <= N}.
  void check_domain(std::span<const double> I) const {
    if (I.size() != n_) {
      throw std::invalid_argument("incidence: expected " + std::to_string(n_) + " stages, got " + std::to_string(I.size()));
    }
    CompensatedSum total;
    for (std::size_t j = 0; j < I.size(); ++j) {
      if (!(I[j] >= 0.0)) throw std::domain_error("incidence: I[" + std::to_string(j + 1) + "] is negative");
      total += I[j];
    }
    if (total.value() > population_ * (1.0 + kDomainTolerance)) {
      throw std::domain_error("incidence: ||I||_1 exceeds the population N");
    }
  }

  double value(std::span<const double> I) const {
    check_domain(I);
    return value_unchecked(I);
  }

  std::vector<double> gradient(std::span<const double> I) const {
    check_domain(I);
    return gradient_unchecked(I);
  }

  double value_unchecked(std::span<const double> I) const {
    return std::visit([&](const auto& f) { return evaluate(f, I); }, family_);
  }

  std::vector<double> gradient_unchecked(std::span<const double> I) const {
    return std::visit([&](const auto& f) { return differentiate(f, I); }, family_);
  }

  friend bool operator==(const IncidenceModel& a, const IncidenceModel& b) {
    if (a.n_ != b.n_ || a.population_ != b.population_ || a.family_.index() != b.family_.index()) return false;
    return std::visit(
        [&](const auto& fa) -> bool {
          using F = std::decay_t<decltype(fa)>;
          const auto& fb = std::get<F>(b.family_);
          if constexpr (std::is_same_v<F, family::Exponential> || std::is_same_v<F, family::Linear>) {
            return fa.beta == fb.beta;
          } else if constexpr (std::is_same_v<F, family::SplitExponential>) {
            return fa.theta == fb.theta && fa.beta == fb.beta;
          } else if constexpr (std::is_same_v<F, family::LastClassOnly>) {
            return fa.phi.kind == fb.phi.kind && fa.phi.kind != ScalarIncidence::Kind::custom && fa.phi.beta == fb.phi.beta;
          } else if constexpr (std::is_same_v<F, family::ContactComposed>) {
            return fa.contacts == fb.contacts && *fa.kernel == *fb.kernel;
          } else if constexpr (std::is_same_v<F, family::PoissonComposed>) {
            return fa.lambda == fb.lambda && *fa.kernel == *fb.kernel;
          } else {
            return false;  // functions have no value identity
          }
        },
        a.family_);
  }

 private:
  IncidenceModel(std::size_t n, double population, Family f) : n_(n), population_(population), family_(std::move(f)) {
    if (!(population_ > 0.0) || !std::isfinite(population_)) {
      throw std::invalid_argument("incidence: population N must be positive");
    }
    const std::vector<double> zero(n_, 0.0);
    r_ = gradient_unchecked(zero);
    for (std::size_t j = 0; j < n_; ++j) {
      if (!std::isfinite(r_[j]) || r_[j] < -1e-12) {
        throw std::invalid_argument("incidence: gradient at zero must be nonnegative (component " + std::to_string(j + 1) + ")");
      }
      if (r_[j] < 0.0) r_[j] = 0.0;
    }
    // custom functions are reported on by validate_hypothesis_H instead
    if (!std::holds_alternative<family::Custom>(family_) && !(r_[n_ - 1] > 0.0)) {
      throw std::invalid_argument("incidence: the last stage must be infectious (r_n = dphi/dI_n(0) > 0)");
    }
  }

  static void check_rates(const std::vector<double>& beta, const std::string& path) {
    if (beta.empty()) throw std::invalid_argument(path + ": at least one stage is required");
    for (std::size_t j = 0; j < beta.size(); ++j) {
      if (!(beta[j] >= 0.0) || !std::isfinite(beta[j])) {
        throw std::invalid_argument(path + "[" + std::to_string(j + 1) + "]: must be nonnegative and finite");
      }
    }
    if (!(beta.back() > 0.0)) throw std::invalid_argument(path + "[" + std::to_string(beta.size()) + "]: last-stage rate must be positive");
  }

  double fd_step() const { return kGradientStep * population_; }

  static double evaluate(const family::Exponential& f, std::span<const double> I) { return -std::expm1(-dot(f.beta, I)); }

  static double evaluate(const family::Linear& f, std::span<const double> I) { return dot(f.beta, I); }

  static double evaluate(const family::SplitExponential& f, std::span<const double> I) {
    CompensatedSum s;
    for (std::size_t j = 0; j < I.size(); ++j) s += f.theta[j] * -std::expm1(-f.beta[j] * I[j]);
    return s.value();
  }

  static double evaluate(const family::LastClassOnly& f, std::span<const double> I) { return f.phi.value(I.back()); }

  static double evaluate(const family::ContactComposed& f, std::span<const double> I) {
    const double pi = f.kernel->value_unchecked(I);
    const auto p = f.contacts.probabilities();
    // sum_i p_i (1 - (1-pi)^i); the i = 0 term vanishes
    const double log_escape = std::log1p(-pi);
    CompensatedSum s;
    for (std::size_t i = 1; i < p.size(); ++i) {
      if (p[i] == 0.0) continue;
      s += p[i] * -std::expm1(static_cast<double>(i) * log_escape);
    }
    return s.value();
  }

  static double evaluate(const family::PoissonComposed& f, std::span<const double> I) {
    return -std::expm1(-f.lambda * f.kernel->value_unchecked(I));
  }

  static double evaluate(const family::Custom& f, std::span<const double> I) { return f.value(I); }

  std::vector<double> differentiate(const family::Exponential& f, std::span<const double> I) const {
    const double escape = std::exp(-dot(f.beta, I));
    std::vector<double> g(f.beta);
    for (double& x : g) x *= escape;
    return g;
  }

  std::vector<double> differentiate(const family::Linear& f, std::span<const double>) const { return f.beta; }

  std::vector<double> differentiate(const family::SplitExponential& f, std::span<const double> I) const {
    std::vector<double> g(n_);
    for (std::size_t j = 0; j < n_; ++j) g[j] = f.theta[j] * f.beta[j] * std::exp(-f.beta[j] * I[j]);
    return g;
  }

  std::vector<double> differentiate(const family::LastClassOnly& f, std::span<const double> I) const {
    std::vector<double> g(n_, 0.0);
    g.back() = f.phi.derivative(I.back(), fd_step());
    return g;
  }

  std::vector<double> differentiate(const family::ContactComposed& f, std::span<const double> I) const {
    const double escape = 1.0 - f.kernel->value_unchecked(I);
    const auto p = f.contacts.probabilities();
    CompensatedSum factor;
    for (std::size_t i = 1; i < p.size(); ++i) {
      if (p[i] == 0.0) continue;
      factor += static_cast<double>(i) * p[i] * std::pow(escape, static_cast<double>(i - 1));
    }
    std::vector<double> g = f.kernel->gradient_unchecked(I);
    for (double& x : g) x *= factor.value();
    return g;
  }

  std::vector<double> differentiate(const family::PoissonComposed& f, std::span<const double> I) const {
    const double factor = f.lambda * std::exp(-f.lambda * f.kernel->value_unchecked(I));
    std::vector<double> g = f.kernel->gradient_unchecked(I);
    for (double& x : g) x *= factor;
    return g;
  }

  std::vector<double> differentiate(const family::Custom& f, std::span<const double> I) const {
    if (f.gradient) {
      auto g = f.gradient(I);
      if (g.size() != n_) throw std::invalid_argument("incidence: custom gradient has the wrong length");
      return g;
    }
    // central differences; second-order forward differences next to the I_j = 0 face
    const double h = fd_step();
    std::vector<double> x(I.begin(), I.end());
    std::vector<double> g(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      const double xj = x[j];
      if (xj >= h) {
        x[j] = xj + h;
        const double up = f.value(x);
        x[j] = xj - h;
        const double down = f.value(x);
        g[j] = (up - down) / (2.0 * h);
      } else {
        const double f0 = f.value(x);
        x[j] = xj + h;
        const double f1 = f.value(x);
        x[j] = xj + 2.0 * h;
        const double f2 = f.value(x);
        g[j] = (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
      }
      x[j] = xj;
    }
    return g;
  }

  std::size_t n_;
  double population_;
  Family family_;
  std::vector<double> r_;
};

/// phi(I), with a domain check on I.
inline double phi_eval(const IncidenceModel& incidence, std::span<const double> I) { return incidence.value(I); }

/// grad phi(I), with a domain check on I.
inline std::vector<double> phi_grad(const IncidenceModel& incidence, std::span<const double> I) {
  return incidence.gradient(I);
}

/// Rates c such that phi(I) = 1 - exp(-c . I) exactly, when the model is of
/// that form (exponential, last-class exponential, Poisson over a linear kernel).
inline std::optional<std::vector<double>> exponential_rates(const IncidenceModel& incidence) {
  const auto& f = incidence.family();
  if (const auto* e = std::get_if<family::Exponential>(&f)) return e->beta;
  if (const auto* l = std::get_if<family::LastClassOnly>(&f)) {
    if (l->phi.kind != ScalarIncidence::Kind::exponential) return std::nullopt;
    std::vector<double> c(incidence.dimension(), 0.0);
    c.back() = l->phi.beta;
    return c;
  }
  if (const auto* p = std::get_if<family::PoissonComposed>(&f)) {
    const auto& kf = p->kernel->family();
    std::vector<double> c;
    if (const auto* lin = std::get_if<family::Linear>(&kf)) {
      c = lin->beta;
    } else if (const auto* l = std::get_if<family::LastClassOnly>(&kf); l && l->phi.kind == ScalarIncidence::Kind::linear) {
      c.assign(incidence.dimension(), 0.0);
      c.back() = l->phi.beta;
    } else {
      return std::nullopt;
    }
    for (double& x : c) x *= p->lambda;
    return c;
  }
  return std::nullopt;
}

}  // namespace spm
