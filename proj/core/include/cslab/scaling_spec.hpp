#pragma once

#include <limits>
#include <string>

namespace cslab {

enum class ScalingKind { hyperbolic, intermediate, frictionless, generalized_friction };

std::string to_string(ScalingKind kind);
/// Throws ConfigError for unknown names.
ScalingKind parse_scaling_kind(const std::string& name);

/// eps -> min(coef * eps^exponent, cap).
struct PowerLaw {
    double coef = 1.0;
    double exponent = 1.0;
    double cap = std::numeric_limits<double>::infinity();

    double operator()(double eps) const;
};

/// Which scaled kinetic system is simulated, at which epsilon.
struct ScalingSpec {
    ScalingKind kind = ScalingKind::hyperbolic;
    double gamma = 0.0;
    double epsilon = 1.0;
    double lambda = 0.25;
    /// Friction exponent k(eps) and self-propulsion alpha(eps) for the generalized system.
    PowerLaw k_law{1.0, 0.0, 0.5};
    PowerLaw alpha_law{1.0, 1.0};

    /// gamma actually used by the stepper (0 for hyperbolic and frictionless).
    double effective_gamma() const;
    void validate() const;
};

/// k(eps) = min(eps^(2 gamma), 0.5), alpha(eps) = eps.
ScalingSpec default_generalized(double gamma, double epsilon, double lambda);

}  // namespace cslab
