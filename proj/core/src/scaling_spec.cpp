#include "cslab/scaling_spec.hpp"

#include <algorithm>
#include <cmath>

#include "cslab/errors.hpp"

namespace cslab {

std::string to_string(ScalingKind kind) {
    switch (kind) {
        case ScalingKind::hyperbolic: return "hyperbolic";
        case ScalingKind::intermediate: return "intermediate";
        case ScalingKind::frictionless: return "frictionless";
        case ScalingKind::generalized_friction: return "generalized_friction";
    }
    return "unknown";
}

ScalingKind parse_scaling_kind(const std::string& name) {
    if (name == "hyperbolic") return ScalingKind::hyperbolic;
    if (name == "intermediate") return ScalingKind::intermediate;
    if (name == "frictionless") return ScalingKind::frictionless;
    if (name == "generalized_friction") return ScalingKind::generalized_friction;
    throw ConfigError("unknown scaling kind '" + name + "'");
}

double PowerLaw::operator()(double eps) const {
    if (coef == 0.0) return 0.0;
    return std::min(coef * std::pow(eps, exponent), cap);
}

double ScalingSpec::effective_gamma() const {
    switch (kind) {
        case ScalingKind::intermediate:
        case ScalingKind::generalized_friction: return gamma;
        default: return 0.0;
    }
}

void ScalingSpec::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("scaling epsilon must be > 0");
    if (!(lambda > 0.0)) throw ConfigError("scaling lambda must be > 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("scaling gamma must lie in [0, 1]");
    if (kind == ScalingKind::generalized_friction) {
        const double k = k_law(epsilon);
        if (!(k >= 0.0 && k <= 2.0)) throw ConfigError("friction exponent k(eps) must lie in [0, 2]");
        if (!(alpha_law(epsilon) >= 0.0)) throw ConfigError("alpha(eps) must be >= 0");
    }
}

ScalingSpec default_generalized(double gamma, double epsilon, double lambda) {
    ScalingSpec s;
    s.kind = ScalingKind::generalized_friction;
    s.gamma = gamma;
    s.epsilon = epsilon;
    s.lambda = lambda;
    s.k_law = PowerLaw{1.0, 2.0 * gamma, 0.5};
    s.alpha_law = PowerLaw{1.0, 1.0};
    return s;
}

}  // namespace cslab
