#pragma once

#include <cmath>
#include <string_view>

#include "qdtcal/error.hpp"
#include "qdtcal/qdt.hpp"
#include "qdtcal/stats.hpp"

namespace qdtcal {

/// Logit-CPT is the a = 0 member of the QDT family.
enum class ModelId { LogitCpt, Qdt };

inline std::string_view to_string(ModelId m) { return m == ModelId::LogitCpt ? "logit-cpt" : "qdt"; }

inline std::size_t free_parameter_count(ModelId m) { return m == ModelId::LogitCpt ? 5 : 7; }

struct LognormalSpec {
  double mu = 0.0;
  double sigma = 1.0;

  double median() const { return std::exp(mu); }
  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(mu)) throw DomainError("lognormal spec needs sigma > 0");
  }
};

/// Population distributions of the penalized individual parameters.
struct PriorSpec {
  LognormalSpec alpha;
  LognormalSpec lambda;
  LognormalSpec gamma;
  LognormalSpec delta;

  void validate() const {
    alpha.validate();
    lambda.validate();
    gamma.validate();
    delta.validate();
  }

  /// Sum of log-densities of the four penalized parameters.
  double log_density(const CptParams& p) const {
    return stats::lognormal_log_pdf(p.alpha, alpha.mu, alpha.sigma) +
           stats::lognormal_log_pdf(p.lambda, lambda.mu, lambda.sigma) +
           stats::lognormal_log_pdf(p.gamma, gamma.mu, gamma.sigma) +
           stats::lognormal_log_pdf(p.delta, delta.mu, delta.sigma);
  }
};

}  // namespace qdtcal
