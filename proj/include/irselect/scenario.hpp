#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "irselect/config.hpp"
#include "irselect/dynamics.hpp"
#include "irselect/kernels.hpp"
#include "irselect/reference_state.hpp"
#include "irselect/spectral_measure.hpp"

namespace irselect {
namespace scenario {

inline SpectralMeasure measure_from_config(const Config& cfg) {
    const std::string kind = cfg.get("bath", "kind").as_string();
    if (kind == "powerlaw") {
        return SpectralMeasure::power_law(cfg.number("bath", "c"), cfg.number("bath", "mu"),
                                          cfg.number("bath", "cutoff"));
    }
    if (kind == "discrete") {
        std::vector<PointMass> modes;
        for (const auto& row : cfg.get("bath", "modes").as_array()) {
            const auto pair = row.as_array();
            if (pair.size() != 2)
                throw ValidationError("bath.modes: each entry must be [omega, weight]");
            modes.push_back({pair[0].as_number(), pair[1].as_number()});
        }
        return SpectralMeasure::discrete(std::move(modes));
    }
    if (kind == "tabulated") {
        if (cfg.has("bath", "table_file"))
            return SpectralMeasure::tabulated_from_file(cfg.get("bath", "table_file").as_string());
        std::vector<double> lam, den;
        for (const auto& row : cfg.get("bath", "table").as_array()) {
            const auto pair = row.as_array();
            if (pair.size() != 2)
                throw ValidationError("bath.table: each entry must be [lambda, density]");
            lam.push_back(pair[0].as_number());
            den.push_back(pair[1].as_number());
        }
        return SpectralMeasure::tabulated(std::move(lam), std::move(den));
    }
    throw ValidationError("bath.kind must be powerlaw | tabulated | discrete");
}

inline SuperselectedSystem system_from_config(const Config& cfg) {
    const std::string preset = cfg.string_or("system", "preset", "spin");
    if (preset == "spin")
        return spin_system(cfg.number_or("system", "alpha", 1.0),
                           cfg.number_or("system", "beta", 1.0));
    if (preset == "particle-grid")
        return particle_grid_system(cfg.number("system", "p_min"),
                                    cfg.number("system", "p_max"),
                                    static_cast<std::size_t>(cfg.number("system", "points")));
    if (preset == "explicit")
        return SuperselectedSystem(cfg.get("system", "energies").as_number_array(),
                                   cfg.get("system", "sectors").as_number_array());
    throw ValidationError("system.preset must be spin | particle-grid | explicit");
}

inline std::vector<cplx> complex_vector(const ConfigValue& v) {
    std::vector<cplx> out;
    for (const auto& entry : v.as_array()) {
        const auto pair = entry.as_array();
        if (pair.size() != 2)
            throw ValidationError("complex arrays use [re, im] entries");
        out.push_back({pair[0].as_number(), pair[1].as_number()});
    }
    return out;
}

inline ReferenceState reference_from_config(const Config& cfg) {
    const std::string state = cfg.string_or("reference", "state", "vacuum");
    if (state == "vacuum") return ReferenceState::vacuum();
    if (state == "coherent")
        return ReferenceState::coherent(complex_vector(cfg.get("reference", "f")));
    if (state == "thermal") return ReferenceState::thermal(cfg.number("reference", "beta"));
    if (state == "superposed") {
        std::vector<CoherentComponent> comps;
        for (const auto& row : cfg.get("reference", "components").as_array()) {
            // [re(c), im(c), re(f_0), im(f_0), re(f_1), im(f_1), ...]
            const auto flat = row.as_number_array();
            if (flat.size() < 2 || flat.size() % 2 != 0)
                throw ValidationError("reference.components rows need 2 + 2*modes numbers");
            CoherentComponent comp;
            comp.amplitude = {flat[0], flat[1]};
            for (std::size_t i = 2; i + 1 < flat.size(); i += 2)
                comp.displacement.push_back({flat[i], flat[i + 1]});
            comps.push_back(std::move(comp));
        }
        return ReferenceState::superposed(std::move(comps));
    }
    throw ValidationError("reference.state must be vacuum | coherent | thermal | superposed");
}

inline TimeGrid time_grid_from_config(const Config& cfg) {
    TimeGrid g;
    g.t_min = cfg.number("time", "t_min");
    g.t_max = cfg.number("time", "t_max");
    g.points = static_cast<std::size_t>(cfg.number("time", "points"));
    const std::string spacing = cfg.string_or("time", "spacing", "lin");
    if (spacing == "log")
        g.log_spacing = true;
    else if (spacing != "lin")
        throw ValidationError("time.spacing must be lin | log");
    return g;
}

struct RunParams {
    std::uint64_t seed = 1;
    std::size_t samples = 200;
    unsigned threads = 0;
    std::string out_dir = ".";
};

inline RunParams run_params_from_config(const Config& cfg) {
    RunParams p;
    p.seed = static_cast<std::uint64_t>(cfg.number_or("run", "seed", 1.0));
    p.samples = static_cast<std::size_t>(cfg.number_or("run", "samples", 200.0));
    p.threads = static_cast<unsigned>(cfg.number_or("run", "threads", 0.0));
    p.out_dir = cfg.string_or("run", "out", ".");
    return p;
}

inline SectorSelection selection_from_config(const Config& cfg, const std::string& key) {
    const auto bounds = cfg.get("sectors", key).as_number_array();
    if (bounds.size() != 2)
        throw ValidationError("sectors." + key + " must be [a, b]");
    return SectorSelection::interval(bounds[0], bounds[1]);
}

} // namespace scenario
} // namespace irselect
