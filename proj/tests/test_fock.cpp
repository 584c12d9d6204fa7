#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "irselect/fock.hpp"

using namespace irselect;
using Catch::Approx;

TEST_CASE("build_hamiltonian: fixed matrices") {
    // lambda = 0: diagonal with entries sum omega_k n_k
    const auto two = SpectralMeasure::discrete({{1.0, 0.25}, {2.5, 0.09}});
    const TruncatedFock fock(two, 3);
    const Matrix h0 = fock.hamiltonian(0.0);
    CHECK(h0.cwiseAbs().sum() == Approx(h0.diagonal().cwiseAbs().sum()));
    // mode 0 most significant: index = 3*n0 + n1
    CHECK(h0(4, 4).real() == Approx(1.0 + 2.5)); // n = (1,1)
    CHECK(h0(2, 2).real() == Approx(5.0));       // n = (0,2)

    // N=1, d=2, omega=1, h=gamma: [[0, gamma], [gamma, 1]]
    const double gamma = 0.37;
    const auto one = SpectralMeasure::discrete({{1.0, gamma * gamma}});
    const Matrix h1 = TruncatedFock(one, 2).hamiltonian(1.0);
    CHECK(h1(0, 0).real() == Approx(0.0).margin(1e-15));
    CHECK(h1(0, 1).real() == Approx(gamma));
    CHECK(h1(1, 0).real() == Approx(gamma));
    CHECK(h1(1, 1).real() == Approx(1.0));

    CHECK_THROWS_AS(TruncatedFock(two, 200), NumericalError); // budget
    CHECK_THROWS_AS(TruncatedFock(SpectralMeasure::power_law(1.0, 0.5, 1.0), 4),
                    ValidationError);
}

TEST_CASE("oracle matrices are Hermitian and the evolution is unitary") {
    const auto sigma = SpectralMeasure::discrete({{1.0, 0.3}, {1.9, 0.2}});
    const TruncatedFock fock(sigma, 6);
    for (double lam : {0.0, 0.7, -1.3}) {
        const Matrix h = fock.hamiltonian(lam);
        CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
        Eigen::SelfAdjointEigenSolver<Matrix> es(h);
        for (double t : {0.5, 4.0}) {
            Vector ph(es.eigenvalues().size());
            for (Eigen::Index p = 0; p < ph.size(); ++p)
                ph(p) = std::polar(1.0, -es.eigenvalues()(p) * t);
            const Matrix u = es.eigenvectors() * ph.asDiagonal() *
                             es.eigenvectors().adjoint();
            CHECK((u * u.adjoint() - Matrix::Identity(u.rows(), u.cols()))
                      .cwiseAbs()
                      .maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("ground energy approaches the displaced-oscillator value") {
    const double w = 0.4, om = 1.0;
    const auto sigma = SpectralMeasure::discrete({{om, w}});
    const TruncatedFock fock(sigma, 48);
    Eigen::SelfAdjointEigenSolver<Matrix> es(fock.hamiltonian(1.0), Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues()(0) == Approx(-w / om).margin(1e-10));
}

TEST_CASE("chi_numeric: trivial values") {
    const auto sigma = SpectralMeasure::discrete({{1.0, 0.04}, {2.3, 0.046}});
    const TruncatedFock fock(sigma, 10);
    for (const auto& ref :
         {ReferenceState::vacuum(), ReferenceState::thermal(3.0),
          ReferenceState::coherent({cplx(0.2, 0.1), cplx(-0.1, 0.0)})}) {
        CHECK(std::abs(chi_numeric(fock, 0.8, 0.8, 2.9, ref) - cplx(1.0, 0.0)) < 1e-10);
        CHECK(std::abs(chi_numeric(fock, 1.0, -1.0, 0.0, ref) - cplx(1.0, 0.0)) < 1e-12);
    }
}

TEST_CASE("chi_numeric: conjugation symmetry and modulus bound") {
    const auto sigma = SpectralMeasure::discrete({{1.0, 0.04}, {2.3, 0.046}});
    const TruncatedFock fock(sigma, 12);
    const auto ref = ReferenceState::coherent({cplx(0.2, -0.3), cplx(0.1, 0.1)});
    for (double t : {0.4, 2.0, 7.3}) {
        const cplx ab = chi_numeric(fock, 1.0, -0.5, t, ref);
        const cplx ba = chi_numeric(fock, -0.5, 1.0, t, ref);
        CHECK(std::abs(ab - std::conj(ba)) < 1e-10);
        CHECK(std::abs(ab) <= 1.0 + 1e-9);
    }
}

TEST_CASE("thermal kernel modulus is below the vacuum modulus") {
    const auto sigma = SpectralMeasure::discrete({{1.0, 0.05}, {2.3, 0.05}});
    const TruncatedFock fock(sigma, 16);
    const auto vac = ReferenceState::vacuum();
    const auto thermal = ReferenceState::thermal(2.0);
    for (double t : {0.5, 1.7, 6.1}) {
        const double mv = std::abs(chi_numeric(fock, 1.0, -1.0, t, vac));
        const double mt = std::abs(chi_numeric(fock, 1.0, -1.0, t, thermal));
        CHECK(mt <= mv + 1e-10);
    }
}

TEST_CASE("chi_numeric is stable under doubling the cutoff") {
    const auto sigma = SpectralMeasure::discrete({{1.0, 0.04}, {2.3, 0.046}});
    const TruncatedFock small(sigma, 8), large(sigma, 16);
    for (double t : {1.0, 5.0, 10.0}) {
        const cplx a = chi_numeric(small, 1.0, -1.0, t, ReferenceState::vacuum());
        const cplx b = chi_numeric(large, 1.0, -1.0, t, ReferenceState::vacuum());
        CHECK(std::abs(a - b) < 1e-8);
    }
}

TEST_CASE("cutoff escalation accepts a stable setting or hits the budget") {
    const auto sigma = SpectralMeasure::discrete({{1.0, 0.04}, {2.3, 0.046}});
    const int d = escalate_cutoff(sigma, 1.0, -1.0, ReferenceState::vacuum(),
                                  {1.0, 5.0, 10.0});
    CHECK(d >= 4);
    // the accepted setting really is doubling-stable
    const cplx a = chi_numeric(TruncatedFock(sigma, d), 1.0, -1.0, 5.0,
                               ReferenceState::vacuum());
    const cplx b = chi_numeric(TruncatedFock(sigma, 2 * d), 1.0, -1.0, 5.0,
                               ReferenceState::vacuum());
    CHECK(std::abs(a - b) < 1e-8);

    // strong coupling with a tiny budget cannot stabilize
    const auto strong = SpectralMeasure::discrete({{0.3, 2.0}, {0.9, 3.0}});
    CHECK_THROWS_AS(escalate_cutoff(strong, 2.0, -2.0, ReferenceState::vacuum(),
                                    {1.0, 5.0}, 4, 256),
                    NumericalError);
}

TEST_CASE("phase profile starts at zero") {
    const auto sigma = SpectralMeasure::discrete({{1.0, 0.3}, {2.0, 0.1}});
    TimeGrid grid{0.0, 10.0, 21, false};
    const auto prof = make_phase_profile(sigma, 1.2, grid);
    CHECK(prof.theta.front() == 0.0);
    CHECK(prof.theta[5] == Approx(phase_theta(sigma, 1.2, prof.times[5])));
    const std::vector<cplx> f{{0.2, 0.1}, {0.0, -0.1}};
    const auto prof_f = make_phase_profile(sigma, 1.2, grid, f);
    CHECK(prof_f.theta.front() == 0.0);
    CHECK(prof_f.theta[7] == Approx(phase_theta(sigma, 1.2, prof_f.times[7], f)));
}

TEST_CASE("reference state validity checks") {
    const auto sigma = SpectralMeasure::discrete({{0.4, 0.1}});
    const TruncatedFock fock(sigma, 8);
    // coherent amplitude too large for the box
    CHECK_THROWS_AS(coherent_vector(fock, {cplx(3.0, 0.0)}), ValidationError);
    // thermal tail too heavy at this cutoff
    CHECK_THROWS_AS(environment_density(fock, ReferenceState::thermal(0.5)),
                    ValidationError);
    CHECK_NOTHROW(environment_density(fock, ReferenceState::thermal(9.0)));
}

TEST_CASE("reduced_dynamics_numeric: product dynamics without coupling") {
    const SuperselectedSystem sys({0.9, -0.4}, {0.0, 0.0});
    const auto sigma = SpectralMeasure::discrete({{1.0, 0.2}});
    const TruncatedFock fock(sigma, 8);
    RngStream rng(3);
    const auto rho0 = random_density_matrix(2, rng);
    const double t = 2.1;
    const auto rt = reduced_dynamics_numeric(rho0, sys, fock, ReferenceState::vacuum(), t);
    // lambda = 0: rho(t) = U_S rho U_S^+
    Matrix expected(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            expected(i, j) = std::polar(1.0, -(sys.energies[i] - sys.energies[j]) * t) *
                             rho0.matrix()(i, j);
    CHECK((rt.matrix() - expected).cwiseAbs().maxCoeff() < 1e-10);

    const auto r0 = reduced_dynamics_numeric(rho0, sys, fock, ReferenceState::vacuum(), 0.0);
    CHECK((r0.matrix() - rho0.matrix()).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("reduced_dynamics_numeric preserves trace and positivity") {
    const auto sys = spin_system(0.7, 1.0);
    const auto sigma = SpectralMeasure::discrete({{1.0, 0.04}, {2.3, 0.046}});
    const TruncatedFock fock(sigma, 8);
    RngStream rng(5);
    const auto rho0 = random_density_matrix(2, rng);
    const auto oracle =
        ReducedDynamicsOracle::from_product(sys, fock, rho0, ReferenceState::vacuum());
    for (double t : {0.3, 1.1, 6.6}) {
        const Matrix rt = oracle.reduced_at(t);
        CHECK(std::abs(rt.trace().real() - 1.0) < 1e-10);
        CHECK(min_eigenvalue(rt) > -1e-9);
    }
}

TEST_CASE("spectrum shift check: single-mode refinement") {
    const auto sigma = SpectralMeasure::discrete({{1.0, 2.2}});
    const auto rep = spectrum_shift_check(sigma, {8, 16, 32}, 4);
    REQUIRE(rep.levels.size() == 3);
    // unitary equivalence with the shifted free Hamiltonian: deviations fall
    // at least 5x per doubling of the cutoff
    CHECK(rep.levels[0].max_deviation > rep.levels[1].max_deviation * 5.0);
    CHECK(rep.levels[1].max_deviation > rep.levels[2].max_deviation * 5.0);
}

TEST_CASE("lower bound check") {
    // h = 0: min eig = 0
    const auto zero = SpectralMeasure::discrete({{1.0, 0.0}});
    const auto rep0 = lower_bound_check(zero, 16);
    CHECK(rep0.applicable);
    CHECK(rep0.min_eig == Approx(0.0).margin(1e-12));
    CHECK(rep0.holds);

    const auto sigma = SpectralMeasure::discrete({{1.0, 0.2}});
    const auto rep = lower_bound_check(sigma, 64);
    CHECK(rep.applicable);
    CHECK(rep.bound == Approx(-0.2));
    CHECK(rep.min_eig >= rep.bound - 1e-10);
    CHECK(rep.holds);
    // exact value for omega=1, w=0.2: (sqrt(1 - 2w) - 1)/2
    CHECK(rep.min_eig == Approx(0.5 * (std::sqrt(0.6) - 1.0)).margin(1e-8));

    // hypothesis violated: inapplicable, not a failure
    const auto strong = SpectralMeasure::discrete({{1.0, 0.5}});
    CHECK_FALSE(lower_bound_check(strong, 16).applicable);

    // the floor is monotone in the weight
    const auto w1 = lower_bound_check(SpectralMeasure::discrete({{1.0, 0.1}}), 32);
    const auto w2 = lower_bound_check(SpectralMeasure::discrete({{1.0, 0.2}}), 32);
    CHECK(w2.bound < w1.bound);
    CHECK(w2.min_eig < w1.min_eig);
}

TEST_CASE("ground state diagnostics: closed forms and numeric cross-check") {
    const auto one = SpectralMeasure::discrete({{1.0, 1.0}});
    const auto rep = ground_state_diagnostics(one, 40);
    CHECK(rep.boson_number == Approx(1.0));
    CHECK(rep.vacuum_overlap == Approx(std::exp(-1.0)));
    REQUIRE(rep.numeric_checked);
    CHECK(rep.boson_number_numeric == Approx(1.0).margin(1e-8));
    CHECK(rep.vacuum_overlap_numeric == Approx(std::exp(-1.0)).margin(1e-8));
}

TEST_CASE("boson number diverges for ohmic, converges for regular measures") {
    const auto ohmic = SpectralMeasure::power_law(0.05, 0.5, 1.0);
    std::vector<double> eps{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    std::vector<double> xs, ys;
    for (double e : eps) {
        const std::size_t n =
            static_cast<std::size_t>(64.0 * std::log10(1.0 / e)) + 16;
        const auto rep = ground_state_diagnostics(ohmic.discretize(n, e));
        xs.push_back(std::log(1.0 / e));
        ys.push_back(rep.boson_number);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = xs.size();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope == Approx(0.05).epsilon(0.10));

    const auto regular = SpectralMeasure::power_law(0.05, 1.0, 1.0);
    const double b5 = ground_state_diagnostics(regular.discretize(400, 1e-5)).boson_number;
    const double b6 = ground_state_diagnostics(regular.discretize(464, 1e-6)).boson_number;
    CHECK(std::abs(b6 - b5) / b6 < 0.01);
}
