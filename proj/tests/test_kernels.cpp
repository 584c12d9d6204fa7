#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "irselect/kernels.hpp"
#include "irselect/rng.hpp"
#include "irselect/spectral_measure.hpp"

using namespace irselect;
using Catch::Approx;

namespace {

// Brute-force midpoint Riemann sum of 2 int lambda^-2 sin^2(lambda t / 2) dsigma
// over [lo, hi] with uniform cells; independent of the adaptive machinery.
double riemann_zeta(const SpectralMeasure& sigma, double t, double lo, double hi,
                    std::size_t cells, double beta = kInfinity) {
    double acc = 0.0;
    const double h = (hi - lo) / static_cast<double>(cells);
    for (std::size_t i = 0; i < cells; ++i) {
        const double lam = lo + (i + 0.5) * h;
        const double s = std::sin(0.5 * lam * t);
        double v = sigma.density_at(lam) * 2.0 * s * s / (lam * lam);
        if (std::isfinite(beta)) v *= coth_half(beta, lam);
        acc += v * h;
    }
    return acc;
}

} // namespace

TEST_CASE("zeta: fixed values") {
    const auto one_mode = SpectralMeasure::discrete({{1.0, 0.25}});
    CHECK(zeta(one_mode, 0.0) == 0.0);
    CHECK(zeta(one_mode, kPi) == Approx(0.5).epsilon(1e-14));
    const auto ohmic = SpectralMeasure::power_law(0.05, 0.5, 1.0);
    CHECK(zeta(ohmic, 0.0) == 0.0);
    CHECK_THROWS_AS(zeta(ohmic, -1.0), ValidationError);

    // zero-mass measure: zeta vanishes identically
    const auto empty = SpectralMeasure::discrete({{1.0, 0.0}});
    for (double t : {0.0, 1.0, 100.0}) CHECK(zeta(empty, t) == 0.0);
}

TEST_CASE("zeta: continuous quadrature against a fine Riemann oracle") {
    const auto cases = {SpectralMeasure::power_law(0.05, 0.5, 1.0),
                        SpectralMeasure::power_law(0.8, 0.25, 1.0),
                        SpectralMeasure::power_law(0.3, 1.0, 2.0)};
    for (const auto& sigma : cases) {
        for (double t : {0.7, 5.0, 42.0}) {
            const double oracle =
                riemann_zeta(sigma, t, sigma.cutoff() * 1e-8, sigma.cutoff(), 1u << 20);
            CHECK(zeta(sigma, t) == Approx(oracle).margin(1e-8));
        }
    }
}

TEST_CASE("zeta: large-time series path agrees with the Riemann oracle") {
    // the power-law evaluator switches representation at cutoff*t = 600
    for (double mu : {0.25, 0.4, 0.5}) {
        const auto sigma = SpectralMeasure::power_law(0.05, mu, 1.0);
        for (double t : {700.0, 1500.0}) {
            const double oracle = riemann_zeta(sigma, t, 1e-8, 1.0, 1u << 22);
            CHECK(zeta(sigma, t) == Approx(oracle).margin(2e-8));
        }
    }
}

TEST_CASE("zeta: linear in the measure") {
    RngStream rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<PointMass> modes;
        for (int k = 0; k < 5; ++k)
            modes.push_back({0.2 + 0.7 * k + rng.uniform(0.0, 0.2), rng.uniform(0.0, 1.0)});
        const double s = rng.uniform(0.1, 3.0);
        auto scaled = modes;
        for (auto& m : scaled) m.weight *= s;
        const double t = rng.uniform(0.0, 20.0);
        CHECK(zeta(SpectralMeasure::discrete(scaled), t) ==
              Approx(s * zeta(SpectralMeasure::discrete(modes), t)).margin(1e-13));
    }
}

TEST_CASE("zeta: ohmic log law") {
    const double c = 0.05;
    const auto sigma = SpectralMeasure::power_law(c, 0.5, 1.0);
    TimeGrid grid{1.0, 1e4, 160, true};
    const auto profile = make_profile(sigma, kInfinity, grid);
    const auto fit = asymptotic_fit(profile, FitModel::Log);
    CHECK(fit.coefficient == Approx(c).epsilon(0.05));
    CHECK(fit.r2 >= 0.999);
}

TEST_CASE("zeta_kms: single-mode closed form and limits") {
    const auto one_mode = SpectralMeasure::discrete({{1.0, 0.25}});
    CHECK(zeta_kms(one_mode, 2.0, kPi) ==
          Approx(0.5 / std::tanh(1.0)).epsilon(1e-12)); // 0.65579...
    CHECK_THROWS_AS(zeta_kms(one_mode, -1.0, 1.0), ValidationError);

    const auto ohmic = SpectralMeasure::power_law(0.05, 0.5, 1.0);
    for (double t : {0.5, 3.0, 20.0, 100.0}) {
        const double z = zeta(ohmic, t);
        CHECK(std::abs(zeta_kms(ohmic, 1e6, t) - z) <= 1e-6 * z);
    }
}

TEST_CASE("zeta_kms: thermal dominance and monotonicity in beta") {
    const auto measures = {SpectralMeasure::power_law(0.05, 0.5, 1.0),
                           SpectralMeasure::power_law(0.05, 0.25, 1.0)};
    for (const auto& sigma : measures) {
        TimeGrid grid{0.01, 100.0, 40, true};
        for (double t : grid.times()) {
            const double z = zeta(sigma, t);
            double prev = kInfinity;
            for (double beta : {0.5, 2.0, 10.0}) {
                const double zb = zeta_kms(sigma, beta, t);
                CHECK(zb >= z - 1e-12);
                CHECK(zb <= prev + 1e-12);
                prev = zb;
            }
        }
    }
}

TEST_CASE("zeta_kms: continuous correction against the Riemann oracle") {
    const auto sigma = SpectralMeasure::power_law(0.3, 0.5, 1.0);
    for (double beta : {0.7, 5.0}) {
        for (double t : {1.3, 17.0}) {
            const double oracle = riemann_zeta(sigma, t, 1e-9, 1.0, 1u << 22, beta);
            CHECK(zeta_kms(sigma, beta, t) == Approx(oracle).margin(3e-8));
        }
    }
}

TEST_CASE("zeta of tabulated measures matches the power-law path") {
    // an ohmic density is exactly piecewise linear, so the tabulated branch
    // must reproduce the power-law value up to the missing [0, lambda_min) tail
    std::vector<double> lam, den;
    const double c = 0.4;
    for (int i = 0; i <= 120; ++i) {
        const double x = 1e-6 * std::pow(1e6, i / 120.0);
        lam.push_back(x);
        den.push_back(c * x);
    }
    const auto tab = SpectralMeasure::tabulated(lam, den);
    const auto pl = SpectralMeasure::power_law(c, 0.5, 1.0);
    for (double t : {0.9, 12.0, 77.0}) {
        const double tail = 0.5 * t * t * pl.mass_between(0.0, 1e-6);
        CHECK(std::abs(zeta(tab, t) - zeta(pl, t)) <= tail + 1e-9);
    }
    for (double t : {0.9, 12.0}) {
        // below lambda_min: integrand <= (t^2/2) dsigma * (1 + 2/(beta lambda))
        const double beta = 2.0, eps = 1e-6;
        const double tail =
            0.5 * t * t * (pl.mass_between(0.0, eps) + 2.0 * c * eps / beta);
        CHECK(std::abs(zeta_kms(tab, beta, t) - zeta_kms(pl, beta, t)) <= tail + 1e-9);
    }
}

TEST_CASE("chi0 fixed values") {
    CHECK(chi0(0.0, 5.0) == 1.0);
    CHECK(chi0(3.0, 0.0) == 1.0);
    CHECK(chi0(2.0, 1.0) == Approx(std::exp(-4.0)));
    CHECK(chi0(-2.0, 1.0) == chi0(2.0, 1.0));
}

TEST_CASE("phase_theta: fixed values and errors") {
    const auto one_mode = SpectralMeasure::discrete({{1.0, 1.0}});
    CHECK(phase_theta(one_mode, 1.4, 0.0) == 0.0);
    CHECK(phase_theta(one_mode, 1.0, kPi) == Approx(-kPi).epsilon(1e-14));
    const auto ohmic = SpectralMeasure::power_law(0.05, 0.5, 1.0);
    CHECK(phase_theta(ohmic, 2.0, 0.0) == 0.0);
    const std::vector<cplx> f{{0.1, 0.2}};
    CHECK_THROWS_AS(phase_theta(ohmic, 1.0, 1.0, f), ValidationError);
    const std::vector<cplx> wrong_len{{0.1, 0.2}, {0.0, 0.0}};
    CHECK_THROWS_AS(phase_theta(one_mode, 1.0, 1.0, wrong_len), ValidationError);
}

TEST_CASE("phase consistency for a single mode") {
    // theta(alpha,t) - theta(beta,t) = -(alpha^2-beta^2)[m_{-1} t - s2(t)]
    const double w = 0.3, om = 1.7;
    const auto sigma = SpectralMeasure::discrete({{om, w}});
    for (double t : {0.3, 2.0, 9.1}) {
        const double bracket = (w / om) * t - w * std::sin(om * t) / (om * om);
        const double lhs = phase_theta(sigma, 1.3, t) - phase_theta(sigma, 0.4, t);
        CHECK(lhs == Approx(-(1.3 * 1.3 - 0.4 * 0.4) * bracket).margin(1e-13));
    }
}

TEST_CASE("point-measure lower bound") {
    const double om = 2.0, w = 0.7;
    const auto one_mode = SpectralMeasure::discrete({{om, w}});
    const double coeff = 2.0 / (kPi * kPi);
    double t = 0.5 * kPi / om; // below pi/omega: cumulative mass = w
    CHECK(point_measure_lower_bound(one_mode, t) == Approx(coeff * t * t * w));
    t = 2.0 * kPi / om; // above: empty cumulative
    CHECK(point_measure_lower_bound(one_mode, t) == 0.0);
    CHECK_THROWS_AS(point_measure_lower_bound(one_mode, 0.0), ValidationError);
    CHECK_THROWS_AS(
        point_measure_lower_bound(SpectralMeasure::power_law(1.0, 0.5, 1.0), 1.0),
        ValidationError);
}

TEST_CASE("point-measure lower bound stays below zeta") {
    RngStream rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<PointMass> modes;
        const int n = 1 + static_cast<int>(rng.uniform_index(6));
        double om = 0.0;
        for (int k = 0; k < n; ++k) {
            om += rng.uniform(0.05, 2.0);
            modes.push_back({om, rng.uniform(0.0, 1.0)});
        }
        const auto sigma = SpectralMeasure::discrete(modes);
        for (double t : {0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 100.0, 1000.0}) {
            CHECK(point_measure_lower_bound(sigma, t) <= zeta(sigma, t) + 1e-12);
        }
    }
}

TEST_CASE("recurrence scan: periodic measures") {
    // single mode: revivals exactly at multiples of 2 pi / omega
    const double om = 1.3;
    const auto one_mode = SpectralMeasure::discrete({{om, 0.4}});
    TimeGrid grid{0.0, 3.1 * 2.0 * kPi / om, 6000, false};
    const auto profile = make_profile(one_mode, kInfinity, grid);
    const auto revivals = recurrence_scan(profile, 1e-4);
    REQUIRE(revivals.size() == 3);
    for (std::size_t k = 0; k < revivals.size(); ++k) {
        CHECK(revivals[k].t == Approx(2.0 * kPi * (k + 1) / om).margin(1e-4));
        CHECK(zeta(one_mode, revivals[k].t) < 1e-8);
    }

    // commensurate pair: exact zero at the common period
    const auto pair = SpectralMeasure::discrete({{1.0, 0.3}, {2.0, 0.2}});
    TimeGrid grid2{0.0, 4.0 * kPi, 4001, false};
    const auto prof2 = make_profile(pair, kInfinity, grid2);
    const auto rev2 = recurrence_scan(prof2, 1e-4);
    REQUIRE_FALSE(rev2.empty());
    double best = kInfinity, best_t = 0.0;
    for (const auto& r : rev2)
        if (std::abs(r.t - 2.0 * kPi) < best) {
            best = std::abs(r.t - 2.0 * kPi);
            best_t = r.t;
        }
    CHECK(best < 1e-3);
    CHECK(zeta(pair, best_t) <= 1e-12);
}

TEST_CASE("recurrence scan: divergent measures have no revivals") {
    const auto ohmic = SpectralMeasure::power_law(0.05, 0.5, 1.0);
    TimeGrid grid{10.0, 1e4, 400, true};
    const auto profile = make_profile(ohmic, kInfinity, grid);
    const auto revivals = recurrence_scan(profile, 0.1 * zeta(ohmic, 10.0));
    CHECK(revivals.empty());
}

TEST_CASE("asymptotic fit: subohmic exponent and prefactor") {
    const double c = 0.05, mu = 0.25;
    const auto sigma = SpectralMeasure::power_law(c, mu, 1.0);
    TimeGrid grid{1e2, 1e6, 200, true};
    const auto profile = make_profile(sigma, kInfinity, grid);
    const auto fit = asymptotic_fit(profile, FitModel::Power);
    CHECK(fit.exponent == Approx(0.5).epsilon(0.03));

    // prefactor: c * int_0^inf s^(2mu-2)(1-cos s) ds by direct quadrature
    double full = 0.0;
    {
        const double cap = 20000.0 * kPi;
        const std::size_t cells = 1u << 24;
        const double h = cap / static_cast<double>(cells);
        for (std::size_t i = 0; i < cells; ++i) {
            const double s = (i + 0.5) * h;
            full += std::pow(s, 2.0 * mu - 2.0) * (1.0 - std::cos(s)) * h;
        }
        full += std::pow(cap, 2.0 * mu - 1.0) / (1.0 - 2.0 * mu); // leading tail
    }
    CHECK(fit.coefficient == Approx(c * full).epsilon(0.03));
}

TEST_CASE("asymptotic fit: error and flag paths") {
    const auto ohmic = SpectralMeasure::power_law(0.05, 0.5, 1.0);
    TimeGrid short_grid{1.0, 2.0, 10, false};
    const auto short_profile = make_profile(ohmic, kInfinity, short_grid);
    CHECK_THROWS_AS(asymptotic_fit(short_profile, FitModel::Log), ValidationError);

    // a regular (almost periodic) measure has a non-monotone tail
    const auto disc = SpectralMeasure::discrete({{1.0, 0.3}, {1.7, 0.2}});
    TimeGrid grid{0.1, 100.0, 300, true};
    const auto profile = make_profile(disc, kInfinity, grid);
    const auto fit = asymptotic_fit(profile, FitModel::Log);
    CHECK(fit.non_monotone_tail);
}

TEST_CASE("az_chi: fixed values") {
    const auto point = AzMeasure::from_points({{0.0, 1.0}});
    CHECK(std::abs(az_chi(point, 3.7) - cplx(1.0, 0.0)) < 1e-14);

    const auto uniform = AzMeasure::from_table({0.0, 1.0}, {1.0, 1.0});
    for (double t : {0.5, 2.0, 11.0}) {
        const cplx expected = (std::exp(cplx(0.0, t)) - 1.0) / cplx(0.0, t);
        CHECK(std::abs(az_chi(uniform, t) - expected) < 1e-12);
    }

    std::vector<double> lam, den;
    const int n = 8000;
    for (int i = 0; i <= n; ++i) {
        const double x = -8.0 + 16.0 * i / n;
        lam.push_back(x);
        den.push_back(std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi));
    }
    auto gauss = AzMeasure::from_table(lam, den);
    const double mass = gauss.mass();
    for (auto& d : gauss.density) d /= mass;
    for (double t : {-3.0, -1.0, 0.5, 3.0})
        CHECK(std::abs(az_chi(gauss, t) - cplx(std::exp(-0.5 * t * t), 0.0)) < 1e-6);

    auto bad = uniform;
    bad.density = {1.1, 1.1};
    CHECK_THROWS_AS(az_chi(bad, 1.0), ValidationError);
}

TEST_CASE("chi_superposed: reductions and bounds") {
    const auto sigma = SpectralMeasure::discrete({{1.0, 0.04}, {2.3, 0.046}});
    const std::vector<cplx> zero{{0.0, 0.0}, {0.0, 0.0}};

    for (double t : {0.0, 1.0, 7.7}) {
        const cplx same = chi_superposed(sigma, {{cplx(1.0, 0.0), zero}}, 0.8, 0.8, t);
        CHECK(std::abs(same - cplx(1.0, 0.0)) < 1e-13);
        const cplx vac = chi_superposed(sigma, {{cplx(1.0, 0.0), zero}}, 1.0, -1.0, t);
        CHECK(std::abs(vac) == Approx(std::exp(-4.0 * zeta(sigma, t))).margin(1e-13));
    }

    CHECK_THROWS_AS(chi_superposed(sigma, {}, 1.0, 0.0, 1.0), ValidationError);
    CHECK_THROWS_AS(
        chi_superposed(sigma, {{cplx(1.0, 0.0), {cplx(0.1, 0.0)}}}, 1.0, 0.0, 1.0),
        ValidationError);
    CHECK_THROWS_AS(chi_superposed(SpectralMeasure::power_law(1.0, 0.5, 1.0),
                                   {{cplx(1.0, 0.0), zero}}, 1.0, 0.0, 1.0),
                    ValidationError);

    RngStream rng(5);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<CoherentComponent> comps;
        const int nc = 1 + static_cast<int>(rng.uniform_index(3));
        for (int k = 0; k < nc; ++k) {
            CoherentComponent comp;
            comp.amplitude = rng.normal_complex();
            comp.displacement = {0.3 * rng.normal_complex(), 0.3 * rng.normal_complex()};
            comps.push_back(comp);
        }
        const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
        const double t = rng.uniform(0.0, 20.0);
        double norm = 0.0;
        const cplx v = chi_superposed(sigma, comps, a, b, t, &norm);
        CHECK(std::abs(v) <= 1.0 + 1e-9);
        CHECK(norm > 0.0);
        const cplx at_equal = chi_superposed(sigma, comps, a, a, t);
        CHECK(std::abs(at_equal - cplx(1.0, 0.0)) < 1e-12);
    }
}

TEST_CASE("quadrature failure is reported, not fabricated") {
    const auto stiff = SpectralMeasure::power_law(0.05, 0.8, 1.0);
    CHECK_THROWS_AS(zeta(stiff, 1e9), NumericalError);
}
