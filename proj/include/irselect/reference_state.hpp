#pragma once

#include <vector>

#include "irselect/common.hpp"
#include "irselect/kernels.hpp"

namespace irselect {

// Environment state tag shared by the analytic kernels and the Fock oracle.
struct ReferenceState {
    enum class Kind { Vacuum, Coherent, Thermal, Superposed };

    Kind kind = Kind::Vacuum;
    std::vector<cplx> displacement;            // Coherent
    double beta = kInfinity;                   // Thermal
    std::vector<CoherentComponent> components; // Superposed

    static ReferenceState vacuum() { return {}; }

    static ReferenceState coherent(std::vector<cplx> f) {
        ReferenceState r;
        r.kind = Kind::Coherent;
        r.displacement = std::move(f);
        return r;
    }

    static ReferenceState thermal(double beta) {
        if (!(beta > 0.0)) throw ValidationError("thermal reference: beta must be positive");
        ReferenceState r;
        r.kind = Kind::Thermal;
        r.beta = beta;
        return r;
    }

    static ReferenceState superposed(std::vector<CoherentComponent> comps) {
        if (comps.empty())
            throw ValidationError("superposed reference: need at least one component");
        if (comps.size() > 8)
            throw ValidationError("superposed reference: more than 8 components");
        ReferenceState r;
        r.kind = Kind::Superposed;
        r.components = std::move(comps);
        return r;
    }

    const char* name() const {
        switch (kind) {
            case Kind::Vacuum: return "vacuum";
            case Kind::Coherent: return "coherent";
            case Kind::Thermal: return "thermal";
            case Kind::Superposed: return "superposed";
        }
        return "?";
    }
};

// Closed-form chi(alpha, beta; t) for the given reference state.
inline cplx chi_analytic(const SpectralMeasure& sigma, const ReferenceState& ref,
                         double alpha, double beta_sector, double t) {
    switch (ref.kind) {
        case ReferenceState::Kind::Superposed:
            return chi_superposed(sigma, ref.components, alpha, beta_sector, t);
        case ReferenceState::Kind::Thermal: {
            const double z = zeta_kms(sigma, ref.beta, t);
            const double dth =
                phase_theta(sigma, alpha, t) - phase_theta(sigma, beta_sector, t);
            return chi0(alpha - beta_sector, z) * std::polar(1.0, dth);
        }
        case ReferenceState::Kind::Coherent: {
            const double z = zeta(sigma, t);
            const double dth = phase_theta(sigma, alpha, t, ref.displacement) -
                               phase_theta(sigma, beta_sector, t, ref.displacement);
            return chi0(alpha - beta_sector, z) * std::polar(1.0, dth);
        }
        case ReferenceState::Kind::Vacuum: {
            const double z = zeta(sigma, t);
            const double dth =
                phase_theta(sigma, alpha, t) - phase_theta(sigma, beta_sector, t);
            return chi0(alpha - beta_sector, z) * std::polar(1.0, dth);
        }
    }
    throw ValidationError("chi_analytic: unknown reference kind");
}

} // namespace irselect
