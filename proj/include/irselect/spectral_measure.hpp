#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "irselect/common.hpp"

namespace irselect {

enum class MeasureKind { PowerLaw, Tabulated, Discrete };
enum class IRClass { Regular, Divergent };

struct PointMass {
    double omega;
    double weight;
};

// The energy distribution of the coupling vector.  Continuous kinds carry a
// finite UV cutoff; the inverse first moment must be finite (constructors
// reject anything else).
class SpectralMeasure {
public:
    static SpectralMeasure power_law(double c, double mu, double cutoff) {
        if (!(c > 0.0)) throw ValidationError("power_law: scale c must be positive");
        if (!(cutoff > 0.0)) throw ValidationError("power_law: cutoff must be positive");
        if (!(mu > 0.0))
            throw ValidationError("power_law: mu must be positive (inverse first moment diverges)");
        SpectralMeasure m;
        m.kind_ = MeasureKind::PowerLaw;
        m.c_ = c;
        m.mu_ = mu;
        m.cutoff_ = cutoff;
        char buf[96];
        std::snprintf(buf, sizeof buf, "powerlaw(c=%g,mu=%g,cutoff=%g)", c, mu, cutoff);
        m.label_ = buf;
        return m;
    }

    static SpectralMeasure tabulated(std::vector<double> lambda, std::vector<double> density) {
        if (lambda.size() != density.size())
            throw ValidationError("tabulated: grid/density size mismatch");
        if (lambda.size() < 2) throw ValidationError("tabulated: need at least two points");
        if (!(lambda.front() > 0.0))
            throw ValidationError("tabulated: abscissae must be strictly positive");
        for (std::size_t i = 0; i + 1 < lambda.size(); ++i)
            if (!(lambda[i] < lambda[i + 1]))
                throw ValidationError("tabulated: abscissae must be strictly increasing");
        for (double d : density)
            if (!(d >= 0.0) || !std::isfinite(d))
                throw ValidationError("tabulated: densities must be finite and nonnegative");
        SpectralMeasure m;
        m.kind_ = MeasureKind::Tabulated;
        m.tab_lambda_ = std::move(lambda);
        m.tab_density_ = std::move(density);
        char buf[96];
        std::snprintf(buf, sizeof buf, "tabulated(%zu pts,[%g,%g])", m.tab_lambda_.size(),
                      m.tab_lambda_.front(), m.tab_lambda_.back());
        m.label_ = buf;
        return m;
    }

    // Two whitespace-separated columns; '#' starts a comment.
    static SpectralMeasure tabulated_from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("tabulated_from_file: cannot open " + path);
        std::vector<double> lam, den;
        std::string line;
        while (std::getline(in, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::istringstream ss(line);
            double a, b;
            if (ss >> a >> b) {
                lam.push_back(a);
                den.push_back(b);
            }
        }
        return tabulated(std::move(lam), std::move(den));
    }

    static SpectralMeasure discrete(std::vector<PointMass> modes) {
        if (modes.empty()) throw ValidationError("discrete: need at least one mode");
        for (std::size_t i = 0; i < modes.size(); ++i) {
            if (!(modes[i].omega > 0.0))
                throw ValidationError("discrete: frequencies must be strictly positive");
            if (!(modes[i].weight >= 0.0) || !std::isfinite(modes[i].weight))
                throw ValidationError("discrete: weights must be finite and nonnegative");
            if (i > 0 && !(modes[i - 1].omega < modes[i].omega))
                throw ValidationError("discrete: frequencies must be strictly increasing");
        }
        SpectralMeasure m;
        m.kind_ = MeasureKind::Discrete;
        m.modes_ = std::move(modes);
        char buf[64];
        std::snprintf(buf, sizeof buf, "discrete(%zu modes)", m.modes_.size());
        m.label_ = buf;
        return m;
    }

    MeasureKind kind() const { return kind_; }
    bool is_continuous() const { return kind_ != MeasureKind::Discrete; }
    const std::string& label() const { return label_; }

    double scale() const { return c_; }
    double exponent() const { return mu_; }
    double cutoff() const {
        switch (kind_) {
            case MeasureKind::PowerLaw: return cutoff_;
            case MeasureKind::Tabulated: return tab_lambda_.back();
            case MeasureKind::Discrete: return modes_.back().omega;
        }
        return 0.0;
    }
    double support_min() const {
        switch (kind_) {
            case MeasureKind::PowerLaw: return 0.0;
            case MeasureKind::Tabulated: return tab_lambda_.front();
            case MeasureKind::Discrete: return modes_.front().omega;
        }
        return 0.0;
    }
    const std::vector<PointMass>& modes() const { return modes_; }
    const std::vector<double>& table_lambda() const { return tab_lambda_; }
    const std::vector<double>& table_density() const { return tab_density_; }

    double density_at(double lam) const {
        switch (kind_) {
            case MeasureKind::PowerLaw:
                return (lam <= 0.0 || lam > cutoff_) ? 0.0 : c_ * std::pow(lam, 2.0 * mu_);
            case MeasureKind::Tabulated: {
                if (lam < tab_lambda_.front() || lam > tab_lambda_.back()) return 0.0;
                const auto it = std::upper_bound(tab_lambda_.begin(), tab_lambda_.end(), lam);
                std::size_t i = static_cast<std::size_t>(it - tab_lambda_.begin());
                if (i == 0) return tab_density_.front();
                if (i == tab_lambda_.size()) return tab_density_.back();
                const double x0 = tab_lambda_[i - 1], x1 = tab_lambda_[i];
                const double f = (lam - x0) / (x1 - x0);
                return tab_density_[i - 1] * (1.0 - f) + tab_density_[i] * f;
            }
            case MeasureKind::Discrete: return 0.0;
        }
        return 0.0;
    }

    // integral of lambda^p dsigma; +infinity is a value, not an error.
    double moment(int p) const {
        if (p < -2 || p > 1) throw ValidationError("moment: p must be in {-2,-1,0,1}");
        switch (kind_) {
            case MeasureKind::PowerLaw: {
                const double q = 2.0 * mu_ + p;
                if (q + 1.0 <= 0.0) return kInfinity;
                return c_ * std::pow(cutoff_, q + 1.0) / (q + 1.0);
            }
            case MeasureKind::Tabulated:
                return table_power_integral(p, tab_lambda_.front(), tab_lambda_.back());
            case MeasureKind::Discrete: {
                double s = 0.0;
                for (const auto& m : modes_) s += m.weight * std::pow(m.omega, p);
                return s;
            }
        }
        return 0.0;
    }

    struct Classification {
        IRClass cls;
        double m_minus_1;
        double m_minus_2;
        double mu_hat;       // fitted exponent, NaN unless Tabulated
        double mu_threshold; // Divergent verdict threshold on mu_hat
    };

    Classification classify() const {
        Classification r{IRClass::Regular, moment(-1), moment(-2), kNaN, 0.51};
        switch (kind_) {
            case MeasureKind::PowerLaw:
                r.cls = (mu_ > 0.5) ? IRClass::Regular : IRClass::Divergent;
                break;
            case MeasureKind::Discrete:
                r.cls = IRClass::Regular;
                break;
            case MeasureKind::Tabulated: {
                // local power-law exponent near lambda_min, log-log fit over the
                // lowest decade; the verdict is a lambda->0 extrapolation.
                const double lo = tab_lambda_.front();
                std::vector<double> lx, ly;
                for (std::size_t i = 0; i < tab_lambda_.size(); ++i) {
                    if (tab_lambda_[i] > 10.0 * lo) break;
                    if (tab_density_[i] > 0.0) {
                        lx.push_back(std::log(tab_lambda_[i]));
                        ly.push_back(std::log(tab_density_[i]));
                    }
                }
                if (lx.size() < 5)
                    throw ValidationError(
                        "classify: fewer than 5 usable low-energy points for exponent fit");
                double sx = 0, sy = 0, sxx = 0, sxy = 0;
                const double n = static_cast<double>(lx.size());
                for (std::size_t i = 0; i < lx.size(); ++i) {
                    sx += lx[i];
                    sy += ly[i];
                    sxx += lx[i] * lx[i];
                    sxy += lx[i] * ly[i];
                }
                const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
                r.mu_hat = 0.5 * slope;
                r.cls = (r.mu_hat > r.mu_threshold) ? IRClass::Regular : IRClass::Divergent;
                if (r.cls == IRClass::Divergent) r.m_minus_2 = kInfinity;
                break;
            }
        }
        return r;
    }

    struct Admissibility {
        bool admissible;
        double four_m_minus_1; // the constraint value 4*m_{-1} = (2||M^{-1/2}h||)^2
    };

    Admissibility coupling_admissible() const {
        const double v = 4.0 * moment(-1);
        return {v <= 1.0, v};
    }

    // Mass and first lambda-moment of the continuous density between a and b.
    double mass_between(double a, double b) const { return power_integral_between(0, a, b); }
    double first_moment_between(double a, double b) const {
        return power_integral_between(1, a, b);
    }

    // Point masses on a log-spaced grid over [ir_floor, cutoff]; each cell keeps
    // its exact mass and sits at its mass centroid.
    SpectralMeasure discretize(std::size_t n_modes, double ir_floor) const {
        if (!is_continuous())
            throw ValidationError("discretize: measure is already discrete");
        if (n_modes < 1) throw ValidationError("discretize: n_modes must be >= 1");
        const double lam_max = cutoff();
        if (!(ir_floor > 0.0) || !(ir_floor < lam_max))
            throw ValidationError("discretize: need 0 < ir_floor < cutoff");
        const double lr = std::log(lam_max / ir_floor);
        std::vector<PointMass> out;
        out.reserve(n_modes);
        for (std::size_t k = 0; k < n_modes; ++k) {
            const double lo = ir_floor * std::exp(lr * static_cast<double>(k) / n_modes);
            const double hi = (k + 1 == n_modes)
                                  ? lam_max
                                  : ir_floor * std::exp(lr * static_cast<double>(k + 1) / n_modes);
            const double mass = power_integral_between(0, lo, hi);
            if (mass <= 0.0) continue;
            const double centroid = power_integral_between(1, lo, hi) / mass;
            out.push_back({centroid, mass});
        }
        if (out.empty()) throw ValidationError("discretize: measure has no mass on [ir_floor, cutoff]");
        auto m = discrete(std::move(out));
        m.label_ = label_ + "|discretized";
        return m;
    }

private:
    double power_integral_between(int p, double a, double b) const {
        switch (kind_) {
            case MeasureKind::PowerLaw: {
                a = std::max(a, 0.0);
                b = std::min(b, cutoff_);
                if (!(b > a)) return 0.0;
                const double q = 2.0 * mu_ + p;
                if (a == 0.0 && q + 1.0 <= 0.0) return kInfinity;
                if (q == -1.0) return c_ * std::log(b / a);
                return c_ * (std::pow(b, q + 1.0) - std::pow(a, q + 1.0)) / (q + 1.0);
            }
            case MeasureKind::Tabulated:
                return table_power_integral(p, a, b);
            case MeasureKind::Discrete: {
                double s = 0.0;
                for (const auto& m : modes_)
                    if (m.omega >= a && m.omega <= b) s += m.weight * std::pow(m.omega, p);
                return s;
            }
        }
        return 0.0;
    }

    // Exact antiderivatives of lambda^p*(A + B*lambda) accumulated cell by cell.
    double table_power_integral(int p, double a, double b) const {
        a = std::max(a, tab_lambda_.front());
        b = std::min(b, tab_lambda_.back());
        if (!(b > a)) return 0.0;
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < tab_lambda_.size(); ++i) {
            const double x0 = tab_lambda_[i], x1 = tab_lambda_[i + 1];
            const double lo = std::max(a, x0), hi = std::min(b, x1);
            if (!(hi > lo)) continue;
            const double slope = (tab_density_[i + 1] - tab_density_[i]) / (x1 - x0);
            const double A = tab_density_[i] - slope * x0;
            const double B = slope;
            auto anti = [&](double x) {
                switch (p) {
                    case 1: return A * x * x / 2.0 + B * x * x * x / 3.0;
                    case 0: return A * x + B * x * x / 2.0;
                    case -1: return A * std::log(x) + B * x;
                    default: return -A / x + B * std::log(x); // p == -2
                }
            };
            acc += anti(hi) - anti(lo);
        }
        return acc;
    }

    MeasureKind kind_ = MeasureKind::Discrete;
    double c_ = 0.0, mu_ = 0.0, cutoff_ = 0.0;
    std::vector<double> tab_lambda_, tab_density_;
    std::vector<PointMass> modes_;
    std::string label_;
};

inline const char* to_string(IRClass c) {
    return c == IRClass::Regular ? "Regular" : "Divergent";
}

} // namespace irselect
