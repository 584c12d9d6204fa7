#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "irselect/common.hpp"
#include "irselect/dynamics.hpp"
#include "irselect/reference_state.hpp"
#include "irselect/spectral_measure.hpp"

namespace irselect {

inline constexpr std::size_t kDefaultFockBudget = 16384; // cap on d^N (and dim_S * d^N)

// ---------------------------------------------------------------------------
// Truncated Fock space over the modes of a Discrete measure
// ---------------------------------------------------------------------------

// Basis indexing is row-major over occupation tuples (n_0, ..., n_{N-1}) with
// mode 0 most significant: index = sum_k n_k d^{N-1-k}.  The vacuum is index 0.
class TruncatedFock {
public:
    TruncatedFock(const SpectralMeasure& discrete, int per_mode_cutoff,
                  std::size_t budget = kDefaultFockBudget)
        : cutoff_(per_mode_cutoff), budget_(budget) {
        if (discrete.kind() != MeasureKind::Discrete)
            throw ValidationError("TruncatedFock: measure must be Discrete");
        if (per_mode_cutoff < 2) throw ValidationError("TruncatedFock: cutoff must be >= 2");
        modes_ = discrete.modes();
        double dim = 1.0;
        for (std::size_t k = 0; k < modes_.size(); ++k) dim *= per_mode_cutoff;
        if (dim > static_cast<double>(budget))
            throw NumericalError("TruncatedFock: d^N exceeds the dimension budget");
        dim_ = static_cast<std::size_t>(dim);
    }

    std::size_t n_modes() const { return modes_.size(); }
    int cutoff() const { return cutoff_; }
    std::size_t dim() const { return dim_; }
    std::size_t budget() const { return budget_; }
    const std::vector<PointMass>& modes() const { return modes_; }
    double coupling(std::size_t k) const { return std::sqrt(modes_[k].weight); }

    Matrix annihilation(std::size_t k) const {
        Matrix single = Matrix::Zero(cutoff_, cutoff_);
        for (int n = 1; n < cutoff_; ++n) single(n - 1, n) = std::sqrt(static_cast<double>(n));
        Matrix op = Matrix::Identity(1, 1);
        for (std::size_t m = 0; m < modes_.size(); ++m)
            op = kron(op, m == k ? single : Matrix::Identity(cutoff_, cutoff_));
        return op;
    }

    Matrix free_hamiltonian() const {
        Matrix h = Matrix::Zero(dim_, dim_);
        for (std::size_t idx = 0; idx < dim_; ++idx) {
            double e = 0.0;
            std::size_t rest = idx;
            for (std::size_t k = modes_.size(); k-- > 0;) {
                e += modes_[k].omega * static_cast<double>(rest % cutoff_);
                rest /= cutoff_;
            }
            h(idx, idx) = e;
        }
        return h;
    }

    Matrix field_operator() const {
        Matrix phi = Matrix::Zero(dim_, dim_);
        for (std::size_t k = 0; k < modes_.size(); ++k) {
            const Matrix a = annihilation(k);
            phi += coupling(k) * (a + a.adjoint());
        }
        return phi;
    }

    // H_lambda = H_E + lambda Phi(h)
    Matrix hamiltonian(double lambda) const {
        return free_hamiltonian() + lambda * field_operator();
    }

    static Matrix kron(const Matrix& a, const Matrix& b) {
        Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < a.cols(); ++j)
                out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        return out;
    }

private:
    std::vector<PointMass> modes_;
    int cutoff_;
    std::size_t budget_;
    std::size_t dim_;
};

// ---------------------------------------------------------------------------
// Reference states in the truncation
// ---------------------------------------------------------------------------

namespace detail {
inline double poisson_tail(double nu, int cutoff) {
    // P(occupation >= cutoff) for a coherent state of mean nu
    double term = std::exp(-nu), cdf = term;
    for (int n = 1; n < cutoff; ++n) {
        term *= nu / n;
        cdf += term;
    }
    return std::max(0.0, 1.0 - cdf);
}
} // namespace detail

// T(f)|vac> via the exponentiated ladder matrices; no analytic displacement
// formulas so the oracle shares no path with the closed-form module.
inline Vector coherent_vector(const TruncatedFock& fock, const std::vector<cplx>& f) {
    if (f.size() != fock.n_modes())
        throw ValidationError("coherent_vector: displacement length mismatch");
    for (std::size_t k = 0; k < f.size(); ++k)
        if (detail::poisson_tail(std::norm(f[k]), fock.cutoff()) > 1e-10)
            throw ValidationError(
                "coherent_vector: occupation tail above 1e-10 at the cutoff; raise d");
    Matrix gen = Matrix::Zero(fock.dim(), fock.dim());
    for (std::size_t k = 0; k < f.size(); ++k) {
        const Matrix a = fock.annihilation(k);
        gen += f[k] * a.adjoint() - std::conj(f[k]) * a;
    }
    // gen is anti-Hermitian: exp(gen) = exp(i * (-i gen)) with -i*gen Hermitian
    Eigen::SelfAdjointEigenSolver<Matrix> es(cplx(0.0, -1.0) * gen);
    Vector vac = Vector::Zero(fock.dim());
    vac(0) = 1.0;
    Vector phases(fock.dim());
    for (Eigen::Index p = 0; p < phases.size(); ++p)
        phases(p) = std::polar(1.0, es.eigenvalues()(p));
    return es.eigenvectors() *
           (phases.asDiagonal() * (es.eigenvectors().adjoint() * vac));
}

inline Vector superposed_vector(const TruncatedFock& fock,
                                const std::vector<CoherentComponent>& comps) {
    if (comps.empty()) throw ValidationError("superposed_vector: empty component list");
    Vector psi = Vector::Zero(fock.dim());
    for (const auto& comp : comps)
        psi += comp.amplitude * coherent_vector(fock, comp.displacement);
    const double n = psi.norm();
    if (!(n > 1e-12)) throw ValidationError("superposed_vector: state has zero norm");
    return psi / n;
}

inline Matrix environment_density(const TruncatedFock& fock, const ReferenceState& ref) {
    switch (ref.kind) {
        case ReferenceState::Kind::Vacuum: {
            Matrix rho = Matrix::Zero(fock.dim(), fock.dim());
            rho(0, 0) = 1.0;
            return rho;
        }
        case ReferenceState::Kind::Coherent: {
            const Vector psi = coherent_vector(fock, ref.displacement);
            return psi * psi.adjoint();
        }
        case ReferenceState::Kind::Thermal: {
            for (const auto& m : fock.modes())
                if (std::exp(-ref.beta * m.omega * fock.cutoff()) >= 1e-12)
                    throw ValidationError(
                        "thermal reference: Gibbs tail above 1e-12 at the cutoff; raise d");
            const Matrix he = fock.free_hamiltonian();
            Eigen::VectorXd w(fock.dim());
            for (std::size_t i = 0; i < fock.dim(); ++i)
                w(i) = std::exp(-ref.beta * he(i, i).real());
            w /= w.sum();
            Matrix rho = Matrix::Zero(fock.dim(), fock.dim());
            rho.diagonal() = w.cast<cplx>();
            return rho;
        }
        case ReferenceState::Kind::Superposed: {
            const Vector psi = superposed_vector(fock, ref.components);
            return psi * psi.adjoint();
        }
    }
    throw ValidationError("environment_density: unknown reference kind");
}

// ---------------------------------------------------------------------------
// chi(alpha, beta; t) = tr_E( e^{i H_alpha t} e^{-i H_beta t} rho_E )
// ---------------------------------------------------------------------------

class ChiEvaluator {
public:
    ChiEvaluator(const TruncatedFock& fock, double alpha, double beta_sector,
                 const ReferenceState& ref) {
        Eigen::SelfAdjointEigenSolver<Matrix> ea(fock.hamiltonian(alpha));
        Eigen::SelfAdjointEigenSolver<Matrix> eb(fock.hamiltonian(beta_sector));
        theta_ = ea.eigenvalues();
        phi_ = eb.eigenvalues();
        const Matrix rho = environment_density(fock, ref);
        const Matrix q = ea.eigenvectors().adjoint() * eb.eigenvectors();
        const Matrix r = eb.eigenvectors().adjoint() * (rho * ea.eigenvectors());
        z_ = q.cwiseProduct(r.transpose());
    }

    cplx at(double t) const {
        const Eigen::Index n = z_.rows();
        Vector right(n);
        for (Eigen::Index q = 0; q < n; ++q) right(q) = std::polar(1.0, -phi_(q) * t);
        const Vector partial = z_ * right;
        cplx acc(0.0, 0.0);
        for (Eigen::Index p = 0; p < n; ++p)
            acc += std::polar(1.0, theta_(p) * t) * partial(p);
        return acc;
    }

private:
    Eigen::VectorXd theta_, phi_;
    Matrix z_; // Z_pq = Q_pq R_qp
};

inline cplx chi_numeric(const TruncatedFock& fock, double alpha, double beta_sector, double t,
                        const ReferenceState& ref) {
    return ChiEvaluator(fock, alpha, beta_sector, ref).at(t);
}

// Doubles the per-mode cutoff until another doubling changes chi by less than
// 1e-8 at every probe time; throws through TruncatedFock once the budget is hit.
inline int escalate_cutoff(const SpectralMeasure& discrete, double alpha,
                           double beta_sector, const ReferenceState& ref,
                           const std::vector<double>& probe_times, int initial_cutoff = 4,
                           std::size_t budget = kDefaultFockBudget) {
    int d = std::max(2, initial_cutoff);
    auto evaluate = [&](int cutoff) {
        const TruncatedFock fock(discrete, cutoff, budget);
        ChiEvaluator eval(fock, alpha, beta_sector, ref);
        std::vector<cplx> vals;
        vals.reserve(probe_times.size());
        for (double t : probe_times) vals.push_back(eval.at(t));
        return vals;
    };
    std::vector<cplx> prev = evaluate(d);
    for (;;) {
        const std::vector<cplx> next = evaluate(2 * d);
        double diff = 0.0;
        for (std::size_t i = 0; i < prev.size(); ++i)
            diff = std::max(diff, std::abs(prev[i] - next[i]));
        if (diff < 1e-8) return d;
        d *= 2;
        prev = next;
    }
}

// ---------------------------------------------------------------------------
// Reduced dynamics by full exponentiation + partial trace
// ---------------------------------------------------------------------------

class ReducedDynamicsOracle {
public:
    // W0 is an arbitrary trace-class matrix on H_S (x) H_E (mixtures included).
    ReducedDynamicsOracle(const SuperselectedSystem& sys, const TruncatedFock& fock,
                          const Matrix& w0)
        : dim_s_(sys.dim()), dim_e_(fock.dim()) {
        const std::size_t n = dim_s_ * dim_e_;
        if (n > fock.budget())
            throw NumericalError("reduced dynamics: dim_S * d^N exceeds the dimension budget");
        if (static_cast<std::size_t>(w0.rows()) != n || static_cast<std::size_t>(w0.cols()) != n)
            throw ValidationError("reduced dynamics: total state dimension mismatch");
        Matrix h = Matrix::Zero(n, n);
        const Matrix he = fock.free_hamiltonian();
        const Matrix phi = fock.field_operator();
        for (std::size_t i = 0; i < dim_s_; ++i) {
            h.block(i * dim_e_, i * dim_e_, dim_e_, dim_e_) =
                sys.energies[i] * Matrix::Identity(dim_e_, dim_e_) + he +
                sys.sectors[i] * phi;
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(h);
        evals_ = es.eigenvalues();
        v_ = es.eigenvectors();
        wtilde_ = v_.adjoint() * w0 * v_;
    }

    static ReducedDynamicsOracle from_product(const SuperselectedSystem& sys,
                                              const TruncatedFock& fock,
                                              const DensityMatrix& rho_s,
                                              const ReferenceState& ref) {
        return ReducedDynamicsOracle(
            sys, fock, TruncatedFock::kron(rho_s.matrix(), environment_density(fock, ref)));
    }

    Matrix reduced_at(double t) const {
        const Eigen::Index n = evals_.size();
        Matrix x(n, n);
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = 0; q < n; ++q)
                x(p, q) = wtilde_(p, q) * std::polar(1.0, -(evals_(p) - evals_(q)) * t);
        const Matrix y = v_ * x; // rho_tot(t) = y * v^+
        Matrix rho_s = Matrix::Zero(dim_s_, dim_s_);
        for (std::size_t i = 0; i < dim_s_; ++i)
            for (std::size_t j = 0; j < dim_s_; ++j) {
                cplx acc(0.0, 0.0);
                for (std::size_t e = 0; e < dim_e_; ++e)
                    acc += (y.row(i * dim_e_ + e) * v_.row(j * dim_e_ + e).adjoint())(0, 0);
                rho_s(i, j) = acc;
            }
        return rho_s;
    }

private:
    std::size_t dim_s_, dim_e_;
    Eigen::VectorXd evals_;
    Matrix v_;
    Matrix wtilde_;
};

inline DensityMatrix reduced_dynamics_numeric(const DensityMatrix& rho_s0,
                                              const SuperselectedSystem& sys,
                                              const TruncatedFock& fock,
                                              const ReferenceState& ref, double t) {
    const auto oracle = ReducedDynamicsOracle::from_product(sys, fock, rho_s0, ref);
    return DensityMatrix::from_matrix(oracle.reduced_at(t));
}

// ---------------------------------------------------------------------------
// Structural checks of the van Hove model
// ---------------------------------------------------------------------------

struct SpectrumShiftLevel {
    int cutoff;
    double max_deviation;
};

struct SpectrumShiftReport {
    std::vector<SpectrumShiftLevel> levels;
    int k_lowest;
};

// H_E + Phi(h) is H_E displaced down by ||M^{-1/2}h||^2: lowest eigenvalues of
// H_1 must approach those of H_0 shifted by -sum w/omega as d grows.
inline SpectrumShiftReport spectrum_shift_check(const SpectralMeasure& discrete,
                                                const std::vector<int>& cutoffs,
                                                int k_lowest = 4,
                                                std::size_t budget = kDefaultFockBudget) {
    SpectrumShiftReport rep;
    rep.k_lowest = k_lowest;
    double shift = 0.0;
    for (const auto& m : discrete.modes()) shift += m.weight / m.omega;
    for (int d : cutoffs) {
        TruncatedFock fock(discrete, d, budget);
        Eigen::SelfAdjointEigenSolver<Matrix> e1(fock.hamiltonian(1.0),
                                                 Eigen::EigenvaluesOnly);
        std::vector<double> free_levels(fock.dim());
        {
            const Matrix he = fock.free_hamiltonian();
            for (std::size_t i = 0; i < fock.dim(); ++i) free_levels[i] = he(i, i).real();
            std::sort(free_levels.begin(), free_levels.end());
        }
        double dev = 0.0;
        const int k = std::min<int>(k_lowest, static_cast<int>(fock.dim()));
        for (int i = 0; i < k; ++i)
            dev = std::max(dev, std::abs(e1.eigenvalues()(i) - (free_levels[i] - shift)));
        rep.levels.push_back({d, dev});
    }
    return rep;
}

struct LowerBoundReport {
    bool applicable = false;    // Lemma hypothesis sum w/omega <= 1/4
    double hypothesis_value = 0.0;
    double min_eig = 0.0;
    double bound = 0.0;         // -sum w
    double slack = 0.0;         // refinement gap between d/2 and d
    bool holds = false;
};

// H_E - Phi(h)^2/2 >= -||h||^2 under 4 sum w/omega <= 1.  The truncated
// operator is a compression plus a positive remainder, so the check can only
// fail by roundoff.
inline LowerBoundReport lower_bound_check(const SpectralMeasure& discrete, int cutoff,
                                          std::size_t budget = kDefaultFockBudget) {
    LowerBoundReport rep;
    double m1 = 0.0, mass = 0.0;
    for (const auto& m : discrete.modes()) {
        m1 += m.weight / m.omega;
        mass += m.weight;
    }
    rep.hypothesis_value = m1;
    rep.bound = -mass;
    if (m1 > 0.25) return rep; // inapplicable, not a failure
    rep.applicable = true;
    auto min_eig_at = [&](int d) {
        TruncatedFock fock(discrete, d, budget);
        const Matrix phi = fock.field_operator();
        const Matrix h = fock.free_hamiltonian() - 0.5 * phi * phi;
        Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    };
    rep.min_eig = min_eig_at(cutoff);
    if (cutoff >= 4) rep.slack = std::abs(min_eig_at(cutoff / 2) - rep.min_eig);
    rep.holds = rep.min_eig >= rep.bound - 1e-10;
    return rep;
}

struct GroundStateReport {
    double boson_number;          // ||M^{-1}h||^2 = sum w/omega^2
    double vacuum_overlap;        // exp(-boson_number)
    bool numeric_checked = false;
    double boson_number_numeric = kNaN;
    double vacuum_overlap_numeric = kNaN;
};

inline GroundStateReport ground_state_diagnostics(const SpectralMeasure& discrete,
                                                  int cutoff = 0,
                                                  std::size_t budget = kDefaultFockBudget) {
    if (discrete.kind() != MeasureKind::Discrete)
        throw ValidationError("ground_state_diagnostics: measure must be Discrete");
    GroundStateReport rep{0.0, 0.0};
    for (const auto& m : discrete.modes()) rep.boson_number += m.weight / (m.omega * m.omega);
    rep.vacuum_overlap = std::exp(-rep.boson_number);
    if (cutoff >= 2) {
        double dim = 1.0;
        for (std::size_t k = 0; k < discrete.modes().size(); ++k) dim *= cutoff;
        if (dim <= static_cast<double>(budget)) {
            TruncatedFock fock(discrete, cutoff, budget);
            Eigen::SelfAdjointEigenSolver<Matrix> es(fock.hamiltonian(1.0));
            const Vector ground = es.eigenvectors().col(0);
            Matrix number = Matrix::Zero(fock.dim(), fock.dim());
            for (std::size_t k = 0; k < fock.n_modes(); ++k) {
                const Matrix a = fock.annihilation(k);
                number += a.adjoint() * a;
            }
            rep.boson_number_numeric = (ground.adjoint() * number * ground)(0, 0).real();
            rep.vacuum_overlap_numeric = std::norm(ground(0));
            rep.numeric_checked = true;
        }
    }
    return rep;
}

} // namespace irselect
