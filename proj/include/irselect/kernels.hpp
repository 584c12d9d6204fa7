#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "irselect/common.hpp"
#include "irselect/quadrature.hpp"
#include "irselect/spectral_measure.hpp"

namespace irselect {

// ---------------------------------------------------------------------------
// Decoherence exponent zeta(t) = 2 * int lambda^-2 sin^2(lambda t/2) dsigma
// ---------------------------------------------------------------------------

namespace detail {

// Power-series value of int_0^eps lambda^(2mu-2) * 2sin^2(lambda t/2) dlambda,
// valid for t*eps well below one oscillation.
inline double ir_series_vacuum(double c, double mu, double eps, double t) {
    double acc = 0.0;
    double tpow = t * t; // t^(2j)
    double sign = 1.0;
    double fact = 2.0; // (2j)!
    for (int j = 1; j <= 8; ++j) {
        const double expo = 2.0 * mu + 2.0 * j - 1.0;
        acc += sign * tpow * std::pow(eps, expo) / (fact * expo);
        sign = -sign;
        tpow *= t * t;
        fact *= (2.0 * j + 1.0) * (2.0 * j + 2.0);
    }
    return c * acc;
}

// int_0^eps lambda^(2mu-2) sin(lambda t) dlambda by the same series.
inline double ir_series_sin(double c, double mu, double eps, double t) {
    double acc = 0.0;
    double tpow = t; // t^(2j+1)
    double sign = 1.0;
    double fact = 1.0; // (2j+1)!
    for (int j = 0; j <= 7; ++j) {
        const double expo = 2.0 * mu + 2.0 * j;
        acc += sign * tpow * std::pow(eps, expo) / (fact * expo);
        sign = -sign;
        tpow *= t * t;
        fact *= (2.0 * j + 2.0) * (2.0 * j + 3.0);
    }
    return c * acc;
}

// int_0^eps lambda^(2mu-2) * 2sin^2(lambda t/2) * (coth(beta lambda/2)-1) dlambda.
inline double ir_series_thermal(double c, double mu, double eps, double t, double beta) {
    // sin part: coefficients of lambda^(2j), j = 1..4
    double sj[5];
    {
        double tpow = t * t, sign = 1.0, fact = 2.0;
        for (int j = 1; j <= 4; ++j) {
            sj[j] = sign * tpow / fact;
            sign = -sign;
            tpow *= t * t;
            fact *= (2.0 * j + 1.0) * (2.0 * j + 2.0);
        }
    }
    // coth(beta lambda/2)-1 = 2/(beta lambda) - 1 + beta lambda/6 - (beta lambda)^3/360 + ...
    const double ce[4] = {2.0 / beta, -1.0, beta / 6.0, -beta * beta * beta / 360.0};
    const int cp[4] = {-1, 0, 1, 3};
    double acc = 0.0;
    for (int j = 1; j <= 4; ++j)
        for (int e = 0; e < 4; ++e) {
            const double expo = 2.0 * mu + 2.0 * j + cp[e] - 1.0;
            acc += sj[j] * ce[e] * std::pow(eps, expo) / expo;
        }
    return c * acc;
}

// Asymptotic cosine integral, valid for large x.
inline double ci_asymptotic(double x) {
    const double x2 = x * x;
    const double p = 1.0 - 2.0 / x2 + 24.0 / (x2 * x2) - 720.0 / (x2 * x2 * x2);
    const double q = 1.0 - 6.0 / x2 + 120.0 / (x2 * x2) - 5040.0 / (x2 * x2 * x2);
    return std::sin(x) / x * p - std::cos(x) / x2 * q;
}

// I_inf(mu) = int_0^inf s^(2mu-2)(1-cos s) ds = -Gamma(2mu-1)cos(pi(2mu-1)/2).
inline double subohmic_full_integral(double mu) {
    const double s = 2.0 * mu - 1.0;
    return -std::tgamma(s) * std::cos(0.5 * kPi * s);
}

// tail(T) = int_T^inf s^(2mu-2)(1-cos s) ds via integration-by-parts series.
inline double subohmic_tail(double mu, double T) {
    const double a = 2.0 * mu - 2.0;
    cplx F(0.0, 0.0);
    double prod = 1.0;
    const cplx eiT(std::cos(T), std::sin(T));
    for (int k = 0; k < 10; ++k) {
        cplx ik(0.0, 1.0);
        cplx term = ik;
        for (int j = 0; j < k; ++j) term *= ik;
        F += term * prod * std::pow(T, a - k) * eiT;
        prod *= (a - k);
    }
    return -std::pow(T, a + 1.0) / (a + 1.0) - F.real();
}

inline constexpr double kSeriesCrossover = 600.0;

// Edge list for the direct oscillatory integral on [lo_edge, hi]: geometric
// grading down to the IR series point, then half-oscillation panels.
inline std::vector<double> oscillation_edges(double lo, double hi, double t) {
    std::vector<double> edges;
    const double step = (t > 0.0) ? kPi / t : kInfinity;
    double start = lo;
    if (std::isfinite(step) && step < hi) {
        auto osc = quad::stepped_edges(std::max(lo, step), hi, step);
        if (lo < osc.front()) {
            auto graded = quad::graded_edges(lo, osc.front(), 12);
            edges.insert(edges.end(), graded.begin(), graded.end());
            edges.pop_back();
        }
        edges.insert(edges.end(), osc.begin(), osc.end());
    } else {
        edges = quad::graded_edges(lo, hi, 12);
    }
    (void)start;
    return edges;
}

template <typename F>
double integrate_or_throw(const F& f, const std::vector<double>& edges,
                          const char* what) {
    auto r = quad::integrate_adaptive(f, edges);
    if (!r.converged)
        throw NumericalError(std::string(what) +
                             ": quadrature did not converge within the panel budget"
                             " (error estimate " +
                             std::to_string(r.error) + ")");
    return r.value;
}

} // namespace detail

inline double zeta(const SpectralMeasure& sigma, double t) {
    if (!(t >= 0.0)) throw ValidationError("zeta: t must be nonnegative");
    if (t == 0.0) return 0.0;
    switch (sigma.kind()) {
        case MeasureKind::Discrete: {
            double acc = 0.0;
            for (const auto& m : sigma.modes()) {
                const double s = std::sin(0.5 * m.omega * t);
                acc += 2.0 * m.weight * s * s / (m.omega * m.omega);
            }
            return acc;
        }
        case MeasureKind::PowerLaw: {
            const double c = sigma.scale(), mu = sigma.exponent(), lam_max = sigma.cutoff();
            const double T = lam_max * t;
            if (mu <= 0.5 && T > detail::kSeriesCrossover) {
                if (mu == 0.5)
                    return c * (std::log(T) + kEulerGamma - detail::ci_asymptotic(T));
                return c * std::pow(t, 1.0 - 2.0 * mu) *
                       (detail::subohmic_full_integral(mu) - detail::subohmic_tail(mu, T));
            }
            const double eps = std::min(kPi / t, lam_max) / 256.0;
            const double head = detail::ir_series_vacuum(c, mu, eps, t);
            auto f = [&](double lam) {
                const double s = std::sin(0.5 * lam * t);
                return c * std::pow(lam, 2.0 * mu - 2.0) * 2.0 * s * s;
            };
            return head + detail::integrate_or_throw(
                              f, detail::oscillation_edges(eps, lam_max, t), "zeta");
        }
        case MeasureKind::Tabulated: {
            auto f = [&](double lam) {
                const double s = std::sin(0.5 * lam * t);
                return sigma.density_at(lam) * 2.0 * s * s / (lam * lam);
            };
            std::vector<double> edges =
                detail::oscillation_edges(sigma.support_min(), sigma.cutoff(), t);
            edges.insert(edges.end(), sigma.table_lambda().begin(), sigma.table_lambda().end());
            std::sort(edges.begin(), edges.end());
            edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
            return detail::integrate_or_throw(f, edges, "zeta");
        }
    }
    return 0.0;
}

inline double zeta_kms(const SpectralMeasure& sigma, double beta, double t) {
    if (!(beta > 0.0)) throw ValidationError("zeta_kms: beta must be positive");
    if (!(t >= 0.0)) throw ValidationError("zeta_kms: t must be nonnegative");
    if (std::isinf(beta)) return zeta(sigma, t);
    if (t == 0.0) return 0.0;
    if (sigma.kind() == MeasureKind::Discrete) {
        double acc = 0.0;
        for (const auto& m : sigma.modes()) {
            const double s = std::sin(0.5 * m.omega * t);
            acc += 2.0 * m.weight * s * s * coth_half(beta, m.omega) / (m.omega * m.omega);
        }
        return acc;
    }
    // coth = 1 + (coth - 1): the first part is the vacuum exponent, the rest is
    // exponentially localized below ~45/beta.
    const double base = zeta(sigma, t);
    const double lam_max = sigma.cutoff();
    const double lam_hi = std::min(lam_max, 45.0 / beta);
    auto cothm1 = [&](double lam) {
        const double e = std::exp(-beta * lam);
        return 2.0 * e / (-std::expm1(-beta * lam));
    };
    double correction = 0.0;
    if (sigma.kind() == MeasureKind::PowerLaw) {
        const double c = sigma.scale(), mu = sigma.exponent();
        const double eps = std::min({kPi / t, 0.5 / beta, lam_max}) / 256.0;
        correction += detail::ir_series_thermal(c, mu, eps, t, beta);
        if (lam_hi > eps) {
            auto f = [&](double lam) {
                const double s = std::sin(0.5 * lam * t);
                return c * std::pow(lam, 2.0 * mu - 2.0) * 2.0 * s * s * cothm1(lam);
            };
            correction += detail::integrate_or_throw(
                f, detail::oscillation_edges(eps, lam_hi, t), "zeta_kms");
        }
    } else {
        const double lo = sigma.support_min();
        if (lam_hi > lo) {
            auto f = [&](double lam) {
                const double s = std::sin(0.5 * lam * t);
                return sigma.density_at(lam) * 2.0 * s * s * cothm1(lam) / (lam * lam);
            };
            std::vector<double> edges = detail::oscillation_edges(lo, lam_hi, t);
            for (double x : sigma.table_lambda())
                if (x > lo && x < lam_hi) edges.push_back(x);
            std::sort(edges.begin(), edges.end());
            edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
            correction += detail::integrate_or_throw(f, edges, "zeta_kms");
        }
    }
    return base + correction;
}

// |chi_0| = exp(-(delta lambda)^2 zeta); symmetric in the sign of delta lambda.
inline double chi0(double delta_lambda, double zeta_value) {
    return std::exp(-delta_lambda * delta_lambda * zeta_value);
}

// ---------------------------------------------------------------------------
// Phase function theta(alpha, t)
// ---------------------------------------------------------------------------

// int lambda^-2 sin(lambda t) dsigma
inline double sine_moment(const SpectralMeasure& sigma, double t) {
    if (t == 0.0) return 0.0;
    switch (sigma.kind()) {
        case MeasureKind::Discrete: {
            double acc = 0.0;
            for (const auto& m : sigma.modes())
                acc += m.weight * std::sin(m.omega * t) / (m.omega * m.omega);
            return acc;
        }
        case MeasureKind::PowerLaw: {
            const double c = sigma.scale(), mu = sigma.exponent(), lam_max = sigma.cutoff();
            const double eps = std::min(kPi / std::abs(t), lam_max) / 256.0;
            const double head = detail::ir_series_sin(c, mu, eps, t);
            auto f = [&](double lam) {
                return c * std::pow(lam, 2.0 * mu - 2.0) * std::sin(lam * t);
            };
            return head + detail::integrate_or_throw(
                              f, detail::oscillation_edges(eps, lam_max, std::abs(t)),
                              "sine_moment");
        }
        case MeasureKind::Tabulated: {
            auto f = [&](double lam) {
                return sigma.density_at(lam) * std::sin(lam * t) / (lam * lam);
            };
            std::vector<double> edges = detail::oscillation_edges(
                sigma.support_min(), sigma.cutoff(), std::abs(t));
            edges.insert(edges.end(), sigma.table_lambda().begin(), sigma.table_lambda().end());
            std::sort(edges.begin(), edges.end());
            edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
            return detail::integrate_or_throw(f, edges, "sine_moment");
        }
    }
    return 0.0;
}

// m_{-1} t - int lambda^-2 sin(lambda t) dsigma; the alpha^2 phase bracket.
inline double phase_bracket(const SpectralMeasure& sigma, double t) {
    return sigma.moment(-1) * t - sine_moment(sigma, t);
}

inline double phase_theta(const SpectralMeasure& sigma, double alpha, double t) {
    if (t == 0.0) return 0.0;
    return -alpha * alpha * phase_bracket(sigma, t);
}

// Diagonal coherent reference: the displacement enters as 2f in place of f+g.
inline double phase_theta(const SpectralMeasure& sigma, double alpha, double t,
                          const std::vector<cplx>& f) {
    if (f.empty()) return phase_theta(sigma, alpha, t);
    if (sigma.kind() != MeasureKind::Discrete)
        throw ValidationError("phase_theta: displacements require a Discrete measure");
    const auto& modes = sigma.modes();
    if (f.size() != modes.size())
        throw ValidationError("phase_theta: displacement length does not match mode count");
    if (t == 0.0) return 0.0;
    double lin = 0.0;
    for (std::size_t k = 0; k < modes.size(); ++k) {
        const double u = std::sqrt(modes[k].weight) / modes[k].omega;
        const cplx one_minus_v = 1.0 - std::polar(1.0, modes[k].omega * t);
        lin += std::imag(2.0 * std::conj(f[k]) * one_minus_v * u);
    }
    return -alpha * lin - alpha * alpha * phase_bracket(sigma, t);
}

// ---------------------------------------------------------------------------
// Kernel for superpositions of exponential vectors (Discrete baths)
// ---------------------------------------------------------------------------

struct CoherentComponent {
    cplx amplitude;
    std::vector<cplx> displacement;
};

inline cplx chi_superposed(const SpectralMeasure& sigma,
                           const std::vector<CoherentComponent>& components, double alpha,
                           double beta_sector, double t, double* norm_out = nullptr) {
    if (sigma.kind() != MeasureKind::Discrete)
        throw ValidationError("chi_superposed: measure must be Discrete");
    if (components.empty()) throw ValidationError("chi_superposed: empty component list");
    const auto& modes = sigma.modes();
    const std::size_t nm = modes.size();
    for (const auto& comp : components)
        if (comp.displacement.size() != nm)
            throw ValidationError("chi_superposed: displacement length mismatch");

    // w(t) = (alpha-beta) (V^+(t) - I) M^-1 h, mode-wise.
    std::vector<cplx> w(nm);
    for (std::size_t k = 0; k < nm; ++k) {
        const double u = std::sqrt(modes[k].weight) / modes[k].omega;
        w[k] = (alpha - beta_sector) * (std::polar(1.0, modes[k].omega * t) - 1.0) * u;
    }
    const double bracket = (t == 0.0) ? 0.0 : phase_bracket(sigma, t);
    const double quad_phase =
        -(alpha * alpha - beta_sector * beta_sector) * bracket;

    cplx numerator(0.0, 0.0);
    cplx norm2(0.0, 0.0);
    const std::size_t nc = components.size();
    for (std::size_t m = 0; m < nc; ++m) {
        for (std::size_t n = 0; n < nc; ++n) {
            const auto& fm = components[m].displacement;
            const auto& fn = components[n].displacement;
            const cplx cc = std::conj(components[m].amplitude) * components[n].amplitude;
            double dist2 = 0.0, overlap2 = 0.0;
            cplx fmfn(0.0, 0.0);
            double lin = 0.0;
            for (std::size_t k = 0; k < nm; ++k) {
                const cplx dv = w[k] + fn[k] - fm[k];
                dist2 += std::norm(dv);
                overlap2 += std::norm(fn[k] - fm[k]);
                fmfn += std::conj(fm[k]) * fn[k];
                const double u = std::sqrt(modes[k].weight) / modes[k].omega;
                const cplx one_minus_v = 1.0 - std::polar(1.0, modes[k].omega * t);
                lin += std::imag(std::conj(fn[k] + fm[k]) * one_minus_v * u);
            }
            const double phase =
                std::imag(fmfn) - (alpha - beta_sector) * lin + quad_phase;
            numerator += cc * std::exp(-0.5 * dist2) * std::polar(1.0, phase);
            norm2 += cc * std::exp(-0.5 * overlap2) *
                     std::polar(1.0, std::imag(fmfn));
        }
    }
    const double nrm = norm2.real();
    if (!(nrm > 0.0))
        throw ValidationError("chi_superposed: component state has zero norm");
    if (norm_out) *norm_out = nrm;
    return numerator / nrm;
}

// ---------------------------------------------------------------------------
// Point-measure lower bound (dominating low-energy contribution)
// ---------------------------------------------------------------------------

// zeta(t) >= (2/pi^2) t^2 sigma_h(pi/t): from sin x >= (2/pi)x on [0, pi/2]
// applied below lambda = pi/t.  Sharp in the single-mode limit omega t -> pi.
inline double point_measure_lower_bound(const SpectralMeasure& sigma, double t) {
    if (sigma.kind() != MeasureKind::Discrete)
        throw ValidationError("point_measure_lower_bound: measure must be Discrete");
    if (!(t > 0.0)) throw ValidationError("point_measure_lower_bound: t must be positive");
    const double lam = kPi / t;
    double cum = 0.0;
    for (const auto& m : sigma.modes())
        if (m.omega <= lam) cum += m.weight;
    return (2.0 / (kPi * kPi)) * t * t * cum;
}

// ---------------------------------------------------------------------------
// Profiles, fits, recurrence scan
// ---------------------------------------------------------------------------

struct TimeGrid {
    double t_min = 0.0;
    double t_max = 1.0;
    std::size_t points = 2;
    bool log_spacing = false;

    std::vector<double> times() const {
        if (points < 2) throw ValidationError("time grid needs at least two points");
        if (!(t_max > t_min)) throw ValidationError("time grid needs t_max > t_min");
        if (log_spacing && !(t_min > 0.0))
            throw ValidationError("log time grid needs t_min > 0");
        std::vector<double> t(points);
        for (std::size_t i = 0; i < points; ++i) {
            const double f = static_cast<double>(i) / (points - 1);
            t[i] = log_spacing ? t_min * std::pow(t_max / t_min, f)
                               : t_min + (t_max - t_min) * f;
        }
        return t;
    }
};

struct DecoherenceProfile {
    std::vector<double> times;
    std::vector<double> zeta;
    double beta = kInfinity; // infinity = vacuum/coherent reference
    std::string measure_ref;
};

namespace detail {
template <typename F>
void parallel_fill(std::vector<double>& out, const std::vector<double>& in, F f,
                   unsigned threads) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    unsigned n = threads == 0 ? hw : threads;
    n = std::min<unsigned>(n, static_cast<unsigned>(in.size()));
    if (n <= 1) {
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < n; ++w)
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = cursor.fetch_add(1);
                if (i >= in.size() || failed.load()) return;
                try {
                    out[i] = f(in[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true);
                    return;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}
} // namespace detail

inline DecoherenceProfile make_profile(const SpectralMeasure& sigma, double beta,
                                       const TimeGrid& grid, unsigned threads = 0) {
    DecoherenceProfile p;
    p.times = grid.times();
    p.zeta.resize(p.times.size());
    p.beta = beta;
    p.measure_ref = sigma.label();
    detail::parallel_fill(
        p.zeta, p.times,
        [&](double t) { return std::isinf(beta) ? zeta(sigma, t) : zeta_kms(sigma, beta, t); },
        threads);
    return p;
}

struct PhaseProfile {
    std::vector<double> times;
    std::vector<double> theta;
    double alpha = 0.0;
    std::vector<cplx> displacement_ref; // empty unless a coherent reference
};

inline PhaseProfile make_phase_profile(const SpectralMeasure& sigma, double alpha,
                                       const TimeGrid& grid,
                                       const std::vector<cplx>& displacement = {},
                                       unsigned threads = 0) {
    PhaseProfile p;
    p.times = grid.times();
    p.theta.resize(p.times.size());
    p.alpha = alpha;
    p.displacement_ref = displacement;
    detail::parallel_fill(
        p.theta, p.times,
        [&](double t) {
            return displacement.empty() ? phase_theta(sigma, alpha, t)
                                        : phase_theta(sigma, alpha, t, displacement);
        },
        threads);
    return p;
}

enum class FitModel { Log, Power };

struct FitReport {
    FitModel model;
    double coefficient = kNaN; // Log: slope vs ln t; Power: prefactor exp(intercept)
    double exponent = kNaN;    // Power only: slope of ln zeta vs ln t
    double r2 = kNaN;
    double window_lo = kNaN, window_hi = kNaN;
    std::size_t n_points = 0;
    bool non_monotone_tail = false;
};

// Least-squares over the top two decades of the profile.
inline FitReport asymptotic_fit(const DecoherenceProfile& profile, FitModel model) {
    FitReport rep;
    rep.model = model;
    if (profile.times.size() < 8)
        throw ValidationError("asymptotic_fit: profile too short");
    const double t_hi = profile.times.back();
    const double t_lo = t_hi / 100.0;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < profile.times.size(); ++i) {
        const double t = profile.times[i];
        if (t < t_lo || t <= 0.0) continue;
        if (model == FitModel::Power && !(profile.zeta[i] > 0.0)) continue;
        xs.push_back(std::log(t));
        ys.push_back(model == FitModel::Log ? profile.zeta[i] : std::log(profile.zeta[i]));
    }
    if (xs.size() < 8)
        throw ValidationError("asymptotic_fit: fewer than 8 usable points in the fit window");
    if (std::exp(xs.back() - xs.front()) < 49.0)
        throw ValidationError("asymptotic_fit: fit window spans well under two decades");
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double za = (model == FitModel::Log) ? ys[i] : std::exp(ys[i]);
        const double zb = (model == FitModel::Log) ? ys[i + 1] : std::exp(ys[i + 1]);
        if (zb < za - 1e-12 * std::max(1.0, std::abs(za))) rep.non_monotone_tail = true;
    }
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double d = ys[i] - (slope * xs[i] + intercept);
        ss_res += d * d;
    }
    const double ss_tot = syy - sy * sy / n;
    rep.r2 = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
    if (model == FitModel::Log) {
        rep.coefficient = slope;
    } else {
        rep.exponent = slope;
        rep.coefficient = std::exp(intercept);
    }
    rep.window_lo = t_lo;
    rep.window_hi = t_hi;
    rep.n_points = xs.size();
    return rep;
}

struct Revival {
    double t;
    double zeta;
};

// Grid minima below epsilon, refined by a parabola through the three
// surrounding samples.  Empty output is the expected result for divergent
// measures.
inline std::vector<Revival> recurrence_scan(const DecoherenceProfile& profile,
                                            double epsilon) {
    std::vector<Revival> out;
    const auto& t = profile.times;
    const auto& z = profile.zeta;
    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
        if (!(z[i] < epsilon)) continue;
        if (!(z[i] <= z[i - 1] && z[i] <= z[i + 1])) continue;
        if (!(t[i] > 0.0)) continue;
        const double d1 = t[i - 1] - t[i], d2 = t[i + 1] - t[i];
        const double num = d2 * (z[i - 1] - z[i]) - d1 * (z[i + 1] - z[i]);
        const double den = d1 * d2 * (d1 - d2);
        double tstar = t[i], zstar = z[i];
        if (den != 0.0) {
            const double A = num / den;
            const double B = ((z[i - 1] - z[i]) - A * d1 * d1) / d1;
            if (A > 0.0) {
                const double off = -B / (2.0 * A);
                if (off > d1 && off < d2) {
                    tstar = t[i] + off;
                    zstar = std::max(0.0, z[i] - B * B / (4.0 * A));
                }
            }
        }
        out.push_back({tstar, zstar});
    }
    return out;
}

// ---------------------------------------------------------------------------
// AZ commuting model: chi(t) = int exp(i lambda t) dmu(lambda)
// ---------------------------------------------------------------------------

// Probability measure on the spectrum of G; abscissae may be negative and the
// mass must be one, so this is deliberately not a SpectralMeasure.
struct AzMeasure {
    std::vector<PointMass> points;    // discrete part (omega = abscissa here)
    std::vector<double> lambda;       // or a tabulated density
    std::vector<double> density;

    static AzMeasure from_points(std::vector<PointMass> pts) {
        AzMeasure m;
        m.points = std::move(pts);
        return m;
    }
    static AzMeasure from_table(std::vector<double> lam, std::vector<double> den) {
        AzMeasure m;
        m.lambda = std::move(lam);
        m.density = std::move(den);
        return m;
    }

    double mass() const {
        double s = 0.0;
        for (const auto& p : points) s += p.weight;
        for (std::size_t i = 0; i + 1 < lambda.size(); ++i)
            s += 0.5 * (density[i] + density[i + 1]) * (lambda[i + 1] - lambda[i]);
        return s;
    }
};

inline cplx az_chi(const AzMeasure& mu, double t) {
    if (std::abs(mu.mass() - 1.0) > 1e-9)
        throw ValidationError("az_chi: measure mass differs from 1 by more than 1e-9");
    cplx acc(0.0, 0.0);
    for (const auto& p : mu.points) acc += p.weight * std::polar(1.0, p.omega * t);
    if (mu.lambda.size() >= 2) {
        auto density_at = [&](double x) {
            const auto it = std::upper_bound(mu.lambda.begin(), mu.lambda.end(), x);
            std::size_t i = static_cast<std::size_t>(it - mu.lambda.begin());
            if (i == 0) return mu.density.front();
            if (i == mu.lambda.size()) return mu.density.back();
            const double f = (x - mu.lambda[i - 1]) / (mu.lambda[i] - mu.lambda[i - 1]);
            return mu.density[i - 1] * (1.0 - f) + mu.density[i] * f;
        };
        std::vector<double> edges = mu.lambda;
        if (t != 0.0) {
            const double step = kPi / std::abs(t);
            for (double x = mu.lambda.front() + step; x < mu.lambda.back(); x += step)
                edges.push_back(x);
            std::sort(edges.begin(), edges.end());
            edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        }
        const double re = detail::integrate_or_throw(
            [&](double x) { return density_at(x) * std::cos(x * t); }, edges, "az_chi");
        const double im = detail::integrate_or_throw(
            [&](double x) { return density_at(x) * std::sin(x * t); }, edges, "az_chi");
        acc += cplx(re, im);
    }
    return acc;
}

} // namespace irselect
