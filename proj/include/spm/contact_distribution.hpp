#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spm/numeric.hpp"

namespace spm {

/// Distribution of the number of contacts a susceptible makes per step.
/// Explicit distributions are finite (counts 0..K); Poisson keeps its
/// closed form and is never truncated.
class ContactDistribution {
 public:
  enum class Kind { explicit_counts, poisson };

  /// Largest mass deficit the explicit constructor will renormalize away.
  static constexpr double kMassTolerance = 1e-12;

  static ContactDistribution explicit_counts(std::vector<double> p) {
    if (p.empty()) throw std::invalid_argument("contacts: probability vector is empty");
    CompensatedSum total;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!(p[i] >= 0.0) || !std::isfinite(p[i])) {
        throw std::invalid_argument("contacts[" + std::to_string(i) + "]: probability must be nonnegative");
      }
      total += p[i];
    }
    const double mass = total.value();
    if (mass > 1.0 + kMassTolerance || mass < 1.0 - kMassTolerance) {
      throw std::invalid_argument("contacts: probabilities sum to " + std::to_string(mass) +
                                  ", mass deficit beyond 1e-12 is not accepted");
    }
    // leave rounding-level deficits alone so that renormalising is idempotent
    if (std::abs(mass - 1.0) > 64.0 * std::numeric_limits<double>::epsilon()) {
      for (double& x : p) x /= mass;
    }
    ContactDistribution d(Kind::explicit_counts);
    d.p_ = std::move(p);
    CompensatedSum mean;
    for (std::size_t i = 1; i < d.p_.size(); ++i) mean += static_cast<double>(i) * d.p_[i];
    d.mean_ = mean.value();
    return d;
  }

  static ContactDistribution poisson(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw std::invalid_argument("lambda: Poisson mean must be positive");
    }
    ContactDistribution d(Kind::poisson);
    d.lambda_ = lambda;
    d.mean_ = lambda;
    return d;
  }

  /// Poisson(lambda) cut at the first K whose remaining tail mass is below
  /// `tail_mass`, as an explicit distribution.
  static ContactDistribution poisson_truncated(double lambda, double tail_mass = 1e-13) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda: Poisson mean must be positive");
    std::vector<double> p;
    // log-space terms avoid overflow of lambda^i / i! for large lambda
    CompensatedSum cumulative;
    for (std::size_t i = 0;; ++i) {
      const double log_term = -lambda + static_cast<double>(i) * std::log(lambda) - std::lgamma(static_cast<double>(i) + 1.0);
      p.push_back(std::exp(log_term));
      cumulative += p.back();
      if (static_cast<double>(i) > lambda && 1.0 - cumulative.value() < tail_mass) break;
      if (i > 100000) throw std::runtime_error("poisson_truncated: tail did not fall below threshold");
    }
    return explicit_counts(std::move(p));
  }

  Kind kind() const { return kind_; }
  double mean() const { return mean_; }
  double lambda() const { return lambda_; }
  std::span<const double> probabilities() const { return p_; }

  bool operator==(const ContactDistribution&) const = default;

 private:
  explicit ContactDistribution(Kind kind) : kind_(kind) {}

  Kind kind_;
  std::vector<double> p_;
  double lambda_ = 0.0;
  double mean_ = 0.0;
};

}  // namespace spm
