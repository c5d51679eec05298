#pragma once

#include <cstddef>
#include <stdexcept>

#include "spm/contact_distribution.hpp"
#include "spm/incidence.hpp"
#include "spm/numeric.hpp"
#include "spm/params.hpp"

namespace spm {

/// phi(I) = 1 - sum_i p_i (1 - Pi(I))^i. A Poisson distribution yields the
/// closed form 1 - exp(-lambda Pi(I)) instead of a series.
inline IncidenceModel compose_incidence(const IncidenceModel& Pi, const ContactDistribution& dist) {
  return IncidenceModel::contact_composed(Pi, dist);
}

inline IncidenceModel poisson_incidence(double lambda, const IncidenceModel& Pi) {
  return IncidenceModel::poisson_composed(lambda, Pi);
}

/// N * mean(p) * sum_j dPi/dI_j(0) / g_j, without building the composed model.
inline double r0_with_contacts(const StageParams& params, const IncidenceModel& Pi, const ContactDistribution& dist) {
  if (Pi.dimension() != params.stages()) {
    throw std::invalid_argument("r0_with_contacts: kernel dimension does not match params");
  }
  const auto grad = Pi.r();
  CompensatedSum s;
  for (std::size_t j = 0; j < params.stages(); ++j) s += grad[j] / params.gamma(j);
  return params.population() * dist.mean() * s.value();
}

}  // namespace spm
