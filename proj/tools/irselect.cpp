// irselect: config-driven scenario runner for the dephasing library.
//
// Exit codes: 0 success, 1 validation error, 2 numerical failure,
// 3 audit violation found.  Errors are emitted as JSON on stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "irselect/config.hpp"
#include "irselect/dynamics.hpp"
#include "irselect/fock.hpp"
#include "irselect/io.hpp"
#include "irselect/kernels.hpp"
#include "irselect/reference_state.hpp"
#include "irselect/scenario.hpp"
#include "irselect/spectral_measure.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace irselect;

namespace {

std::size_t fock_budget_from_env() {
    if (const char* env = std::getenv("IRSELECT_BUDGET")) {
        const long long v = std::atoll(env);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    return kDefaultFockBudget;
}

struct Invocation {
    Config cfg;
    scenario::RunParams run;
    fs::path out_dir;
};

Invocation load(const std::string& config_path, const std::vector<std::string>& overrides,
                const std::string& out_override) {
    Invocation inv{Config::parse_file(config_path), {}, {}};
    for (const auto& s : overrides) inv.cfg.apply_override(s);
    inv.run = scenario::run_params_from_config(inv.cfg);
    inv.out_dir = out_override.empty() ? fs::path(inv.run.out_dir) : fs::path(out_override);
    return inv;
}

void note_artifact(const fs::path& p) { std::cout << "wrote " << p.string() << "\n"; }

json measure_json(const SpectralMeasure& m) {
    json j;
    j["label"] = m.label();
    return j;
}

int run_classify(const Invocation& inv) {
    const auto measure = scenario::measure_from_config(inv.cfg);
    const auto cls = measure.classify();
    const auto adm = measure.coupling_admissible();
    json j;
    j["class"] = to_string(cls.cls);
    j["m_minus_1"] = json_number(cls.m_minus_1);
    j["m_minus_2"] = json_number(cls.m_minus_2);
    if (std::isfinite(cls.mu_hat)) {
        j["mu_hat"] = cls.mu_hat;
        j["mu_threshold"] = cls.mu_threshold;
    }
    j["admissible"] = adm.admissible;
    j["four_m_minus_1"] = json_number(adm.four_m_minus_1);
    j["measure"] = measure_json(measure);
    const fs::path p = inv.out_dir / "classify.json";
    save_json(p, j);
    note_artifact(p);
    return 0;
}

int run_zeta(const Invocation& inv) {
    const auto measure = scenario::measure_from_config(inv.cfg);
    const auto grid = scenario::time_grid_from_config(inv.cfg);
    std::vector<double> betas;
    const std::string state = inv.cfg.string_or("reference", "state", "vacuum");
    if (state == "thermal")
        betas.push_back(inv.cfg.number("reference", "beta"));
    else
        betas.push_back(kInfinity);
    if (inv.cfg.has("reference", "beta_sweep"))
        for (double b : inv.cfg.get("reference", "beta_sweep").as_number_array())
            betas.push_back(b);
    CsvWriter csv({"t", "zeta", "beta"});
    for (double beta : betas) {
        const auto profile = make_profile(measure, beta, grid, inv.run.threads);
        for (std::size_t i = 0; i < profile.times.size(); ++i)
            csv.numeric_row({profile.times[i], profile.zeta[i], beta});
    }
    const fs::path p = inv.out_dir / "zeta.csv";
    csv.save(p);
    note_artifact(p);
    return 0;
}

int run_fit(const Invocation& inv) {
    const auto measure = scenario::measure_from_config(inv.cfg);
    const auto grid = scenario::time_grid_from_config(inv.cfg);
    const std::string model_name = inv.cfg.string_or("fit", "model", "log");
    const FitModel model = model_name == "power" ? FitModel::Power : FitModel::Log;
    const auto profile = make_profile(measure, kInfinity, grid, inv.run.threads);
    const auto rep = asymptotic_fit(profile, model);
    json j;
    j["model"] = model == FitModel::Power ? "power" : "log";
    j["coefficient"] = rep.coefficient;
    if (model == FitModel::Power) j["exponent"] = rep.exponent;
    j["r2"] = rep.r2;
    j["window"] = {rep.window_lo, rep.window_hi};
    j["n_points"] = rep.n_points;
    j["non_monotone_tail"] = rep.non_monotone_tail;
    j["measure"] = measure_json(measure);
    const fs::path p = inv.out_dir / "fit.json";
    save_json(p, j);
    note_artifact(p);
    return 0;
}

DensityMatrix initial_state_from_config(const Config& cfg, std::size_t dim) {
    const std::string kind = cfg.string_or("initial", "kind", "plus");
    if (kind == "plus") {
        Vector psi = Vector::Ones(dim);
        return DensityMatrix::pure(psi);
    }
    if (kind == "maximally-mixed") return DensityMatrix::maximally_mixed(dim);
    if (kind == "amplitudes") {
        const auto amps = scenario::complex_vector(cfg.get("initial", "amplitudes"));
        if (amps.size() != dim)
            throw ValidationError("initial.amplitudes length must match system dimension");
        Vector psi(dim);
        for (std::size_t i = 0; i < dim; ++i) psi(i) = amps[i];
        return DensityMatrix::pure(psi);
    }
    if (kind == "random") {
        RngStream rng(static_cast<std::uint64_t>(cfg.number_or("initial", "seed", 7.0)));
        return random_density_matrix(dim, rng);
    }
    throw ValidationError("initial.kind must be plus | maximally-mixed | amplitudes | random");
}

int run_evolve(const Invocation& inv) {
    const auto measure = scenario::measure_from_config(inv.cfg);
    const auto sys = scenario::system_from_config(inv.cfg);
    const auto ref = scenario::reference_from_config(inv.cfg);
    const auto grid = scenario::time_grid_from_config(inv.cfg);
    const auto rho0 = initial_state_from_config(inv.cfg, sys.dim());
    const auto d1 = scenario::selection_from_config(inv.cfg, "delta1");
    const auto d2 = scenario::selection_from_config(inv.cfg, "delta2");
    const double delta = selection_distance(d1, d2, sys);
    const bool offdiag_only =
        inv.cfg.string_or("evolve", "entries", "all") == std::string("offdiag");

    CsvWriter traj({"t", "i", "j", "re_rho_ij", "im_rho_ij"});
    CsvWriter norms({"t", "offdiag_norm", "envelope"});
    for (double t : grid.times()) {
        const auto rt = evolve(rho0, sys, measure, ref, t);
        for (std::size_t i = 0; i < sys.dim(); ++i)
            for (std::size_t j = 0; j < sys.dim(); ++j) {
                if (offdiag_only && i == j) continue;
                traj.row({fmt17(t), std::to_string(i), std::to_string(j),
                          fmt17(rt.matrix()(i, j).real()), fmt17(rt.matrix()(i, j).imag())});
            }
        const double z = (ref.kind == ReferenceState::Kind::Thermal)
                             ? zeta_kms(measure, ref.beta, t)
                             : zeta(measure, t);
        norms.numeric_row({t, offdiag_norm(rt.matrix(), d1, d2, sys),
                           std::exp(-delta * delta * z)});
    }
    const fs::path p1 = inv.out_dir / "evolve.csv";
    const fs::path p2 = inv.out_dir / "offdiag.csv";
    traj.save(p1);
    norms.save(p2);
    note_artifact(p1);
    note_artifact(p2);
    return 0;
}

int run_audit(const Invocation& inv) {
    const auto measure = scenario::measure_from_config(inv.cfg);
    const auto grid = scenario::time_grid_from_config(inv.cfg);
    const std::size_t max_dim =
        static_cast<std::size_t>(inv.cfg.number_or("audit", "max_dim", 32.0));
    double beta = kInfinity;
    if (inv.cfg.string_or("reference", "state", "vacuum") == std::string("thermal"))
        beta = inv.cfg.number("reference", "beta");
    const auto times = grid.times();

    RngStream rng(inv.run.seed);
    json samples = json::array();
    double max_ratio = 0.0;
    std::size_t violations = 0;
    for (std::size_t s = 0; s < inv.run.samples; ++s) {
        const auto c = random_audit_case(max_dim, rng);
        const auto rep = bound_audit(c.rho, c.sys, measure, beta, c.d1, c.d2, times);
        json js;
        js["delta"] = rep.delta;
        js["times"] = rep.times;
        js["lhs"] = rep.lhs;
        js["rhs"] = rep.rhs;
        js["max_ratio"] = rep.max_ratio;
        samples.push_back(js);
        max_ratio = std::max(max_ratio, rep.max_ratio);
        if (rep.violation) ++violations;
    }
    json j;
    j["seed"] = inv.run.seed;
    j["generator"] = "splitmix64-counter";
    j["beta"] = json_number(beta);
    j["measure"] = measure_json(measure);
    j["samples"] = samples;
    j["max_ratio"] = max_ratio;
    j["violations"] = violations;
    const fs::path p = inv.out_dir / "audit.json";
    save_json(p, j);
    note_artifact(p);
    return violations == 0 ? 0 : 3;
}

int run_oracle(const Invocation& inv) {
    const auto measure = scenario::measure_from_config(inv.cfg);
    if (measure.kind() != MeasureKind::Discrete)
        throw ValidationError("oracle: bath must be discrete");
    const auto ref = scenario::reference_from_config(inv.cfg);
    const auto grid = scenario::time_grid_from_config(inv.cfg);
    const int cutoff = static_cast<int>(inv.cfg.number_or("oracle", "cutoff", 16.0));
    std::vector<double> alphas{0.0, 1.0, -1.0};
    if (inv.cfg.has("oracle", "alphas"))
        alphas = inv.cfg.get("oracle", "alphas").as_number_array();
    const TruncatedFock fock(measure, cutoff, fock_budget_from_env());
    const auto times = grid.times();

    json pairs = json::array();
    double chi_max_diff = 0.0;
    for (double a : alphas)
        for (double b : alphas) {
            ChiEvaluator eval(fock, a, b, ref);
            json num_re = json::array(), num_im = json::array();
            json ana_re = json::array(), ana_im = json::array();
            double max_diff = 0.0;
            for (double t : times) {
                const cplx cn = eval.at(t);
                const cplx ca = chi_analytic(measure, ref, a, b, t);
                num_re.push_back(cn.real());
                num_im.push_back(cn.imag());
                ana_re.push_back(ca.real());
                ana_im.push_back(ca.imag());
                max_diff = std::max(max_diff, std::abs(cn - ca));
            }
            json jp;
            jp["alpha"] = a;
            jp["beta_sector"] = b;
            jp["chi_numeric_re"] = num_re;
            jp["chi_numeric_im"] = num_im;
            jp["chi_analytic_re"] = ana_re;
            jp["chi_analytic_im"] = ana_im;
            jp["max_abs_diff"] = max_diff;
            pairs.push_back(jp);
            chi_max_diff = std::max(chi_max_diff, max_diff);
        }

    // end-to-end reduced dynamics against the partial-trace oracle
    double evolve_max_diff = 0.0;
    bool evolve_checked = false;
    if (inv.cfg.has("system", "preset") || inv.cfg.has("system", "energies")) {
        const auto sys = scenario::system_from_config(inv.cfg);
        const auto rho0 = initial_state_from_config(inv.cfg, sys.dim());
        const auto oracle = ReducedDynamicsOracle::from_product(sys, fock, rho0, ref);
        for (double t : times) {
            const auto analytic = evolve(rho0, sys, measure, ref, t);
            const Matrix numeric = oracle.reduced_at(t);
            evolve_max_diff = std::max(
                evolve_max_diff,
                (analytic.matrix() - numeric).cwiseAbs().maxCoeff());
        }
        evolve_checked = true;
    }

    json j;
    j["config"] = {{"cutoff", cutoff},
                   {"n_modes", fock.n_modes()},
                   {"reference", ref.name()},
                   {"measure", measure_json(measure)}};
    j["t"] = times;
    j["chi_pairs"] = pairs;
    j["max_abs_diff"] = chi_max_diff;
    if (evolve_checked) j["evolve_max_abs_diff"] = evolve_max_diff;
    const fs::path p = inv.out_dir / "oracle.json";
    save_json(p, j);
    note_artifact(p);
    return 0;
}

int run_diverge_study(const Invocation& inv) {
    const auto measure = scenario::measure_from_config(inv.cfg);
    if (!measure.is_continuous())
        throw ValidationError("diverge-study: bath must be continuous");
    std::vector<double> eps_list{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    if (inv.cfg.has("study", "eps_list"))
        eps_list = inv.cfg.get("study", "eps_list").as_number_array();
    const double modes_per_decade = inv.cfg.number_or("study", "modes_per_decade", 64.0);

    CsvWriter csv({"epsilon", "n_modes", "boson_number", "vacuum_overlap"});
    std::vector<double> xs, ys;
    for (double eps : eps_list) {
        const double decades = std::log10(measure.cutoff() / eps);
        const std::size_t n =
            static_cast<std::size_t>(std::max(16.0, std::ceil(decades * modes_per_decade)));
        const auto disc = measure.discretize(n, eps);
        const auto rep = ground_state_diagnostics(disc);
        csv.numeric_row({eps, static_cast<double>(n), rep.boson_number, rep.vacuum_overlap});
        xs.push_back(std::log(1.0 / eps));
        ys.push_back(rep.boson_number);
    }
    const fs::path p = inv.out_dir / "diverge.csv";
    csv.save(p);
    note_artifact(p);

    // slope of boson number against log(1/eps)
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    json j;
    j["log_slope"] = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    j["last_change_relative"] =
        std::abs(ys.back() - ys[ys.size() - 2]) / std::max(1e-300, std::abs(ys.back()));
    j["measure"] = measure_json(measure);
    const fs::path pj = inv.out_dir / "diverge.json";
    save_json(pj, j);
    note_artifact(pj);
    return 0;
}

int run_sphi(const Invocation& inv) {
    const std::size_t dim = static_cast<std::size_t>(inv.cfg.number_or("sphi", "dim", 16.0));
    std::vector<double> zetas{0.1, 1.0, 10.0};
    if (inv.cfg.has("sphi", "zetas")) zetas = inv.cfg.get("sphi", "zetas").as_number_array();
    RngStream rng(inv.run.seed);
    json cases = json::array();
    bool all_hold = true;
    for (std::size_t s = 0; s < inv.run.samples; ++s) {
        std::vector<double> pts(dim);
        for (auto& x : pts) x = rng.uniform(-3.0, 3.0);
        std::sort(pts.begin(), pts.end());
        std::size_t split = 1;
        double best = -1.0;
        for (std::size_t i = 1; i < dim; ++i)
            if (pts[i] - pts[i - 1] > best) {
                best = pts[i] - pts[i - 1];
                split = i;
            }
        const double b1 = pts[split - 1] + 0.25 * best;
        const double a2 = pts[split] - 0.25 * best;
        Matrix mat(dim, dim);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t jcol = 0; jcol < dim; ++jcol) mat(i, jcol) = rng.normal_complex();
        const double z = zetas[s % zetas.size()];
        const auto rep =
            sphi_bound_check(pts, mat, gaussian_kernel(z), gaussian_envelope(z), b1, a2);
        json jc;
        jc["delta"] = rep.delta;
        jc["zeta"] = z;
        jc["lhs"] = rep.lhs;
        jc["rhs"] = rep.rhs;
        jc["holds"] = rep.holds;
        cases.push_back(jc);
        all_hold = all_hold && rep.holds;
    }
    json j;
    j["seed"] = inv.run.seed;
    j["cases"] = cases;
    j["all_hold"] = all_hold;
    const fs::path p = inv.out_dir / "sphi.json";
    save_json(p, j);
    note_artifact(p);
    return all_hold ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"decoherence scenarios for a system coupled to a mass-zero boson field"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::vector<std::string> overrides;

    const std::vector<std::pair<std::string, int (*)(const Invocation&)>> commands = {
        {"classify", run_classify}, {"zeta", run_zeta},
        {"fit", run_fit},           {"evolve", run_evolve},
        {"audit", run_audit},       {"oracle", run_oracle},
        {"diverge-study", run_diverge_study}, {"sphi", run_sphi}};

    for (const auto& [name, fn] : commands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "scenario config file")->required();
        sub->add_option("--set", overrides, "override: section.key=value");
        sub->add_option("--out", out_dir, "output directory");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        const Invocation inv = load(config_path, overrides, out_dir);
        for (const auto& [name, fn] : commands)
            if (app.get_subcommand(name)->parsed()) return fn(inv);
        return 1;
    } catch (const ValidationError& e) {
        nlohmann::json err{{"error", {{"kind", "validation"}, {"message", e.what()}, {"exit_code", 1}}}};
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        nlohmann::json err{{"error", {{"kind", "numerical"}, {"message", e.what()}, {"exit_code", 2}}}};
        std::cerr << err.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", {{"kind", "internal"}, {"message", e.what()}, {"exit_code", 2}}}};
        std::cerr << err.dump() << "\n";
        return 2;
    }
}
