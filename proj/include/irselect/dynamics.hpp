#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <functional>
#include <map>
#include <vector>

#include "irselect/common.hpp"
#include "irselect/kernels.hpp"
#include "irselect/reference_state.hpp"
#include "irselect/rng.hpp"
#include "irselect/spectral_measure.hpp"

namespace irselect {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// ---------------------------------------------------------------------------
// System data: joint eigenbasis of the commuting pair (H_S, F)
// ---------------------------------------------------------------------------

struct SuperselectedSystem {
    std::vector<double> energies; // H_S eigenvalues E_i
    std::vector<double> sectors;  // F eigenvalues lambda_i

    SuperselectedSystem() = default;
    SuperselectedSystem(std::vector<double> e, std::vector<double> s)
        : energies(std::move(e)), sectors(std::move(s)) {
        if (energies.empty() || energies.size() != sectors.size())
            throw ValidationError("system: energies/sectors must be non-empty, equal length");
        for (double x : energies)
            if (!std::isfinite(x)) throw ValidationError("system: non-finite energy");
        for (double x : sectors)
            if (!std::isfinite(x)) throw ValidationError("system: non-finite sector value");
    }

    std::size_t dim() const { return energies.size(); }
};

// H_S = a*sigma3, F = b*sigma3 in the sigma3 eigenbasis.
inline SuperselectedSystem spin_system(double a, double b) {
    return SuperselectedSystem({a, -a}, {b, -b});
}

// Particle with velocity coupling on a finite momentum grid: lambda = p, E = p^2/2.
inline SuperselectedSystem particle_grid_system(double p_min, double p_max, std::size_t n) {
    if (n < 2 || !(p_max > p_min))
        throw ValidationError("particle grid: need n >= 2 and p_max > p_min");
    std::vector<double> e(n), s(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = p_min + (p_max - p_min) * static_cast<double>(i) / (n - 1);
        s[i] = p;
        e[i] = 0.5 * p * p;
    }
    return SuperselectedSystem(std::move(e), std::move(s));
}

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

inline double min_eigenvalue(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()),
                                             Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

class DensityMatrix {
public:
    static constexpr double kHermTol = 1e-12;
    static constexpr double kTraceTol = 1e-12;
    static constexpr double kEigFloor = -1e-10;

    static DensityMatrix from_matrix(const Matrix& m) {
        if (m.rows() != m.cols() || m.rows() == 0)
            throw ValidationError("density matrix: must be square and non-empty");
        if ((m - m.adjoint()).cwiseAbs().maxCoeff() > kHermTol)
            throw ValidationError("density matrix: not Hermitian within 1e-12");
        if (std::abs(m.trace().real() - 1.0) > kTraceTol || std::abs(m.trace().imag()) > kTraceTol)
            throw ValidationError("density matrix: trace differs from 1");
        if (min_eigenvalue(m) < kEigFloor)
            throw ValidationError("density matrix: negative eigenvalue beyond floor");
        DensityMatrix r;
        r.m_ = 0.5 * (m + m.adjoint());
        return r;
    }

    static DensityMatrix pure(const Vector& psi) {
        const double n = psi.norm();
        if (!(n > 0.0)) throw ValidationError("density matrix: zero state vector");
        Vector v = psi / n;
        DensityMatrix r;
        r.m_ = v * v.adjoint();
        return r;
    }

    static DensityMatrix maximally_mixed(std::size_t dim) {
        DensityMatrix r;
        r.m_ = Matrix::Identity(dim, dim) / static_cast<double>(dim);
        return r;
    }

    const Matrix& matrix() const { return m_; }
    std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }

private:
    Matrix m_;
};

// Hilbert-Schmidt ensemble: rho = AA^+/tr(AA^+) with complex Gaussian A.
inline DensityMatrix random_density_matrix(std::size_t dim, RngStream& rng) {
    Matrix a(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) a(i, j) = rng.normal_complex();
    Matrix rho = a * a.adjoint();
    rho /= rho.trace().real();
    return DensityMatrix::from_matrix(rho);
}

inline double trace_norm(const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues().sum();
}

// ---------------------------------------------------------------------------
// Sector selections
// ---------------------------------------------------------------------------

struct SectorSelection {
    enum class Kind { Interval, Indices };
    Kind kind = Kind::Interval;
    double a = 0.0, b = 0.0;  // half-open [a, b)
    std::vector<int> indices; // explicit index set

    static SectorSelection interval(double a, double b) {
        if (!(b > a)) throw ValidationError("sector selection: need a < b");
        SectorSelection s;
        s.a = a;
        s.b = b;
        return s;
    }
    static SectorSelection index_set(std::vector<int> idx) {
        SectorSelection s;
        s.kind = Kind::Indices;
        s.indices = std::move(idx);
        return s;
    }

    std::vector<int> select(const SuperselectedSystem& sys) const {
        std::vector<int> out;
        if (kind == Kind::Indices) {
            for (int i : indices) {
                if (i < 0 || static_cast<std::size_t>(i) >= sys.dim())
                    throw ValidationError("sector selection: index out of range");
                out.push_back(i);
            }
            return out;
        }
        for (std::size_t i = 0; i < sys.dim(); ++i)
            if (sys.sectors[i] >= a && sys.sectors[i] < b) out.push_back(static_cast<int>(i));
        return out;
    }
};

inline double selection_distance(const SectorSelection& s1, const SectorSelection& s2,
                                 const SuperselectedSystem& sys) {
    if (s1.kind == SectorSelection::Kind::Interval &&
        s2.kind == SectorSelection::Kind::Interval) {
        if (s1.a <= s2.a)
            return std::max(0.0, s2.a - s1.b);
        return std::max(0.0, s1.a - s2.b);
    }
    double d = kInfinity;
    for (int i : s1.select(sys))
        for (int j : s2.select(sys)) d = std::min(d, std::abs(sys.sectors[i] - sys.sectors[j]));
    return std::isfinite(d) ? d : 0.0;
}

// ‖P(Delta1) rho P(Delta2)‖_1: sum of singular values of the selected block.
inline double offdiag_norm(const Matrix& rho, const SectorSelection& s1,
                           const SectorSelection& s2, const SuperselectedSystem& sys) {
    const auto r = s1.select(sys);
    const auto c = s2.select(sys);
    if (r.empty() || c.empty()) return 0.0;
    Matrix block(r.size(), c.size());
    for (std::size_t i = 0; i < r.size(); ++i)
        for (std::size_t j = 0; j < c.size(); ++j) block(i, j) = rho(r[i], c[j]);
    return trace_norm(block);
}

// ---------------------------------------------------------------------------
// Exact dephasing map
// ---------------------------------------------------------------------------

// Kernel entry K_ij multiplying rho_ij in the joint eigenbasis.  K_ij is the
// trace of e^{i H_{lambda_j} t} e^{-i H_{lambda_i} t} against the reference
// state, so the phase carries theta(lambda_j) - theta(lambda_i).
inline Matrix dephasing_kernel(const SuperselectedSystem& sys, const SpectralMeasure& sigma,
                               const ReferenceState& ref, double t) {
    const std::size_t n = sys.dim();
    Matrix k(n, n);
    if (ref.kind == ReferenceState::Kind::Superposed) {
        std::map<std::pair<double, double>, cplx> memo;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const std::pair<double, double> key{sys.sectors[j], sys.sectors[i]};
                auto it = memo.find(key);
                if (it == memo.end())
                    it = memo
                             .emplace(key, chi_superposed(sigma, ref.components, key.first,
                                                          key.second, t))
                             .first;
                k(i, j) = it->second;
            }
        return k;
    }
    const double z = (ref.kind == ReferenceState::Kind::Thermal) ? zeta_kms(sigma, ref.beta, t)
                                                                 : zeta(sigma, t);
    std::map<double, double> theta_memo;
    auto theta_of = [&](double lam) {
        auto it = theta_memo.find(lam);
        if (it == theta_memo.end()) {
            const double th = (ref.kind == ReferenceState::Kind::Coherent)
                                  ? phase_theta(sigma, lam, t, ref.displacement)
                                  : phase_theta(sigma, lam, t);
            it = theta_memo.emplace(lam, th).first;
        }
        return it->second;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double dl = sys.sectors[i] - sys.sectors[j];
            k(i, j) = chi0(dl, z) * std::polar(1.0, theta_of(sys.sectors[j]) -
                                                        theta_of(sys.sectors[i]));
        }
    return k;
}

inline DensityMatrix evolve(const DensityMatrix& rho0, const SuperselectedSystem& sys,
                            const SpectralMeasure& sigma, const ReferenceState& ref,
                            double t) {
    if (rho0.dim() != sys.dim())
        throw ValidationError("evolve: density matrix and system dimension mismatch");
    const std::size_t n = sys.dim();
    const Matrix k = dephasing_kernel(sys, sigma, ref, t);
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out(i, j) = std::polar(1.0, -(sys.energies[i] - sys.energies[j]) * t) * k(i, j) *
                        rho0.matrix()(i, j);
    // Hadamard with a Gram kernel: positivity can only fail by roundoff.
    if (min_eigenvalue(out) < DensityMatrix::kEigFloor)
        throw NumericalError("evolve: output lost positivity beyond the roundoff floor");
    return DensityMatrix::from_matrix(out);
}

inline DensityMatrix evolve(const DensityMatrix& rho0, const SuperselectedSystem& sys,
                            const SpectralMeasure& sigma, double beta, double t,
                            const std::vector<cplx>* displacement = nullptr) {
    if (displacement && !displacement->empty()) {
        if (std::isfinite(beta))
            throw ValidationError("evolve: coherent displacement requires beta = infinity");
        return evolve(rho0, sys, sigma, ReferenceState::coherent(*displacement), t);
    }
    if (std::isinf(beta)) return evolve(rho0, sys, sigma, ReferenceState::vacuum(), t);
    return evolve(rho0, sys, sigma, ReferenceState::thermal(beta), t);
}

// ---------------------------------------------------------------------------
// Non-factorized initial states: W = sum c_mu rho_mu (x) rho_E_mu
// ---------------------------------------------------------------------------

struct MixtureComponent {
    double c;
    DensityMatrix rho;
    ReferenceState ref;
};

struct MixtureResult {
    Matrix matrix;
    double trace = 0.0;
    double min_eig = 0.0;
    bool positive = false; // negative c_mu may legitimately break positivity
};

inline MixtureResult evolve_mixture(const std::vector<MixtureComponent>& components,
                                    const SuperselectedSystem& sys,
                                    const SpectralMeasure& sigma, double t) {
    if (components.empty()) throw ValidationError("evolve_mixture: empty component list");
    double csum = 0.0;
    for (const auto& comp : components) {
        csum += comp.c;
        if (comp.rho.dim() != sys.dim())
            throw ValidationError("evolve_mixture: component dimension mismatch");
    }
    if (std::abs(csum - 1.0) > 1e-12)
        throw ValidationError("evolve_mixture: coefficients must sum to 1");
    const std::size_t n = sys.dim();
    Matrix acc = Matrix::Zero(n, n);
    for (const auto& comp : components) {
        const Matrix k = dephasing_kernel(sys, sigma, comp.ref, t);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                acc(i, j) += comp.c *
                             std::polar(1.0, -(sys.energies[i] - sys.energies[j]) * t) *
                             k(i, j) * comp.rho.matrix()(i, j);
    }
    MixtureResult r;
    r.matrix = acc;
    r.trace = acc.trace().real();
    r.min_eig = min_eigenvalue(acc);
    r.positive = r.min_eig >= DensityMatrix::kEigFloor;
    return r;
}

// ---------------------------------------------------------------------------
// Uniform bound audit
// ---------------------------------------------------------------------------

struct BoundAuditReport {
    double delta = 0.0;
    std::vector<double> times, lhs, rhs, ratio;
    double max_ratio = 0.0;
    bool violation = false;
};

inline BoundAuditReport bound_audit(const DensityMatrix& rho0, const SuperselectedSystem& sys,
                                    const SpectralMeasure& sigma, double beta,
                                    const SectorSelection& d1, const SectorSelection& d2,
                                    const std::vector<double>& times) {
    BoundAuditReport rep;
    rep.delta = selection_distance(d1, d2, sys);
    for (double t : times) {
        const double z = std::isinf(beta) ? zeta(sigma, t) : zeta_kms(sigma, beta, t);
        const DensityMatrix rt = evolve(rho0, sys, sigma, beta, t);
        const double lhs = offdiag_norm(rt.matrix(), d1, d2, sys);
        const double rhs = std::exp(-rep.delta * rep.delta * z);
        rep.times.push_back(t);
        rep.lhs.push_back(lhs);
        rep.rhs.push_back(rhs);
        rep.ratio.push_back(lhs / rhs);
        rep.max_ratio = std::max(rep.max_ratio, lhs / rhs);
    }
    rep.violation = rep.max_ratio > 1.0 + 1e-9;
    return rep;
}

// Seeded audit instance: sector values, a split with the widest gap, and a
// Hilbert-Schmidt random state.
struct AuditCase {
    SuperselectedSystem sys;
    DensityMatrix rho;
    SectorSelection d1, d2;
    double delta;
};

inline AuditCase random_audit_case(std::size_t max_dim, RngStream& rng) {
    const std::size_t dim = 2 + rng.uniform_index(max_dim - 1);
    std::vector<double> lam(dim);
    for (auto& x : lam) x = rng.uniform(-2.0, 2.0);
    std::sort(lam.begin(), lam.end());
    std::size_t split = 1;
    double best = -1.0;
    for (std::size_t i = 1; i < dim; ++i)
        if (lam[i] - lam[i - 1] > best) {
            best = lam[i] - lam[i - 1];
            split = i;
        }
    const double gap = lam[split] - lam[split - 1];
    const double b1 = lam[split - 1] + 0.25 * gap;
    const double a2 = lam[split] - 0.25 * gap;
    std::vector<double> energies(dim);
    for (auto& e : energies) e = rng.uniform(0.0, 3.0);
    AuditCase c{SuperselectedSystem(std::move(energies), std::move(lam)),
                random_density_matrix(dim, rng),
                SectorSelection::interval(-1e9, b1), SectorSelection::interval(a2, 1e9), 0.0};
    c.delta = selection_distance(c.d1, c.d2, c.sys);
    return c;
}

// ---------------------------------------------------------------------------
// Finite-dimensional operator-integral bound (S_phi)
// ---------------------------------------------------------------------------

inline Matrix sphi_build(const std::vector<double>& points, const Matrix& s,
                         const std::function<cplx(double)>& chi) {
    if (static_cast<Eigen::Index>(points.size()) != s.rows() || s.rows() != s.cols())
        throw ValidationError("sphi_build: points and matrix dimension mismatch");
    Matrix out(s.rows(), s.cols());
    for (Eigen::Index i = 0; i < s.rows(); ++i)
        for (Eigen::Index j = 0; j < s.cols(); ++j)
            out(i, j) = chi(points[i] - points[j]) * s(i, j);
    return out;
}

// Dominating envelope for |chi'| with a closed-form tail integral.
struct KernelEnvelope {
    std::function<double(double)> phi;           // phi(|x|)
    std::function<double(double)> tail_integral; // int_delta^inf phi
};

inline KernelEnvelope gaussian_envelope(double zeta_value) {
    return {[zeta_value](double x) {
                return 2.0 * zeta_value * std::abs(x) * std::exp(-x * x * zeta_value);
            },
            [zeta_value](double delta) { return std::exp(-delta * delta * zeta_value); }};
}

inline std::function<cplx(double)> gaussian_kernel(double zeta_value) {
    return [zeta_value](double x) { return cplx(std::exp(-x * x * zeta_value), 0.0); };
}

struct SphiReport {
    double delta = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

// Delta1 = (-inf, b1), Delta2 = [a2, inf), delta = a2 - b1 >= 0.
inline SphiReport sphi_bound_check(const std::vector<double>& points, const Matrix& s,
                                   const std::function<cplx(double)>& chi,
                                   const KernelEnvelope& envelope, double b1, double a2) {
    if (!(a2 >= b1)) throw ValidationError("sphi_bound_check: need a2 >= b1");
    if (points.empty()) throw ValidationError("sphi_bound_check: empty point set");
    const auto [lo, hi] = std::minmax_element(points.begin(), points.end());
    const double range = std::max(1e-6, *hi - *lo);
    const double h = 1e-6 * range;
    for (int i = 0; i <= 800; ++i) {
        const double x = range * static_cast<double>(i) / 800.0;
        const double der = std::abs(chi(x + h) - chi(x - h)) / (2.0 * h);
        if (der > envelope.phi(x) + 1e-8)
            throw ValidationError("sphi_bound_check: sampled |chi'| exceeds the envelope");
    }
    const Matrix sphi = sphi_build(points, s, chi);
    std::vector<int> rows, cols;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i] < b1) rows.push_back(static_cast<int>(i));
        if (points[i] >= a2) cols.push_back(static_cast<int>(i));
    }
    SphiReport rep;
    rep.delta = a2 - b1;
    if (!rows.empty() && !cols.empty()) {
        Matrix block(rows.size(), cols.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < cols.size(); ++j) block(i, j) = sphi(rows[i], cols[j]);
        rep.lhs = trace_norm(block);
    }
    rep.rhs = trace_norm(s) * envelope.tail_integral(rep.delta);
    rep.holds = rep.lhs <= rep.rhs + 1e-10;
    return rep;
}

} // namespace irselect
