#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <thread>

#include <json.hpp>

#include "magsplit/amplitude.hpp"
#include "magsplit/fit.hpp"
#include "magsplit/spectra.hpp"

namespace magsplit {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Run configuration (one flat JSON file; every section optional).

struct SpectraConfig {
    std::vector<double> h_list{0.15,  0.12,  0.10,  0.08,  0.065, 0.05,  0.045, 0.04,
                               0.036, 0.032, 0.029, 0.026, 0.024, 0.022};
    std::string gauge = "landau_x";
    double spacing_factor = 0.15; // target spacing = factor * sqrt(h)
    double L1 = 0.0, L2 = 0.0;    // 0: box rule L2 = 2(c_u + 3 sqrt(h/b0)), L1 = c_u + 4 sqrt(h/b0)
    int k = 4;
    double tol = 1e-11;
    int max_iter = 400;
    bool richardson = true;
};

struct FitConfig {
    double noise_factor = 100.0;     // usable: gap > factor * eigenvalue noise
    double pair_separation = 0.01;   // and gap < separation * (lambda3 - lambda2)
    // two-term expansion window
    double expansion_h_min = 0.05;
    double expansion_h_max = 0.2;
};

struct RunConfig {
    ExampleFieldParams field;
    SealSpec seal;
    int eikonal_cells = 500;
    double eikonal_half_width = 0.0; // 0: default 2 c_u + 1
    AmplitudeOptions amplitude;
    SpectraConfig spectra;
    FitConfig fit;
    std::string out_dir = "out";
    std::uint64_t seed = 12345;
    int threads = 1;

    GaugeChoice gauge() const {
        if (spectra.gauge == "landau_x") return GaugeChoice::landau_x;
        if (spectra.gauge == "landau_y") return GaugeChoice::landau_y;
        if (spectra.gauge == "symmetric") return GaugeChoice::symmetric;
        throw ConfigError("unknown gauge '" + spectra.gauge + "'");
    }
};

namespace detail {

template <class T>
void get_to_if(const Json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

} // namespace detail

inline RunConfig parse_config(const Json& j) {
    RunConfig c;
    if (j.contains("field")) {
        const Json& f = j.at("field");
        detail::get_to_if(f, "b0", c.field.b0);
        detail::get_to_if(f, "eps1", c.field.eps1);
        detail::get_to_if(f, "eps2", c.field.eps2);
        detail::get_to_if(f, "c_u", c.field.c_u);
        detail::get_to_if(f, "beta", c.field.beta);
        detail::get_to_if(f, "strip_r", c.field.strip_r);
    }
    c.seal.center = -c.field.c_u;
    if (j.contains("seal")) {
        const Json& s = j.at("seal");
        detail::get_to_if(s, "sigma0", c.seal.sigma0);
        detail::get_to_if(s, "radius", c.seal.radius);
    }
    if (j.contains("eikonal")) {
        const Json& e = j.at("eikonal");
        detail::get_to_if(e, "cells_per_unit", c.eikonal_cells);
        detail::get_to_if(e, "half_width", c.eikonal_half_width);
    }
    if (j.contains("amplitude")) {
        const Json& a = j.at("amplitude");
        detail::get_to_if(a, "cells_per_unit", c.amplitude.cells_per_unit);
        detail::get_to_if(a, "extra_width", c.amplitude.extra_width);
        detail::get_to_if(a, "T_const", c.amplitude.T_const);
        detail::get_to_if(a, "fd_check", c.amplitude.fd_check);
        detail::get_to_if(a, "n_ladder", c.amplitude.n_ladder);
    }
    if (j.contains("spectra")) {
        const Json& s = j.at("spectra");
        detail::get_to_if(s, "h_list", c.spectra.h_list);
        detail::get_to_if(s, "gauge", c.spectra.gauge);
        detail::get_to_if(s, "spacing_factor", c.spectra.spacing_factor);
        detail::get_to_if(s, "L1", c.spectra.L1);
        detail::get_to_if(s, "L2", c.spectra.L2);
        detail::get_to_if(s, "k", c.spectra.k);
        detail::get_to_if(s, "tol", c.spectra.tol);
        detail::get_to_if(s, "max_iter", c.spectra.max_iter);
        detail::get_to_if(s, "richardson", c.spectra.richardson);
    }
    if (j.contains("fit")) {
        const Json& f = j.at("fit");
        detail::get_to_if(f, "noise_factor", c.fit.noise_factor);
        detail::get_to_if(f, "pair_separation", c.fit.pair_separation);
        detail::get_to_if(f, "expansion_h_min", c.fit.expansion_h_min);
        detail::get_to_if(f, "expansion_h_max", c.fit.expansion_h_max);
    }
    if (j.contains("output")) detail::get_to_if(j.at("output"), "dir", c.out_dir);
    detail::get_to_if(j, "seed", c.seed);
    detail::get_to_if(j, "threads", c.threads);

    // validation
    c.field.validate();
    if (c.spectra.h_list.size() < 4)
        throw ConfigError("spectra.h_list needs at least 4 values for fitting");
    for (std::size_t i = 1; i < c.spectra.h_list.size(); ++i)
        if (!(c.spectra.h_list[i] < c.spectra.h_list[i - 1]))
            throw ConfigError("spectra.h_list must be strictly descending");
    if (c.spectra.gauge != "landau_x" && c.spectra.gauge != "landau_y" &&
        c.spectra.gauge != "symmetric")
        throw ConfigError("spectra.gauge must be landau_x, landau_y or symmetric");
    return c;
}

inline RunConfig load_config(const std::string& path) {
    if (path.empty()) return parse_config(Json::object());
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// Output helpers

inline void write_text(const std::filesystem::path& p, const std::string& body) {
    std::ofstream out(p);
    if (!out) throw NumericalError("cannot write " + p.string());
    out << body;
}

inline void write_json(const std::filesystem::path& p, const Json& j) {
    write_text(p, j.dump(2) + "\n");
}

inline std::string csv_num(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// check

inline Json check_report_json(const AssumptionReport& rep) {
    auto item = [](const CheckItem& c) {
        return Json{{"pass", c.pass},
                    {"worst_margin", c.worst_margin},
                    {"worst_q1", {c.worst_q1.real(), c.worst_q1.imag()}},
                    {"worst_q2", c.worst_q2}};
    };
    return Json{{"symmetry_q1", item(rep.symmetry_q1)},
                {"symmetry_q2", item(rep.symmetry_q2)},
                {"variation", item(rep.variation)},
                {"d2_bound", item(rep.d2_bound)},
                {"positivity", item(rep.positivity)},
                {"monotonicity", item(rep.monotonicity)},
                {"well_position", item(rep.well_position)},
                {"well_nondegenerate", item(rep.well_nondegenerate)},
                {"all_pass", rep.all_pass()}};
}

// Runs the assumption checks; returns true when everything passes.
inline bool cmd_check(const RunConfig& cfg, std::ostream& log) {
    std::filesystem::create_directories(cfg.out_dir);
    FieldSpec f = make_example_field(cfg.field);
    cfg.seal.validate(f);
    CheckSampling cs;
    cs.seed = cfg.seed;
    AssumptionReport rep = check_assumptions(f, cs);
    Json j = check_report_json(rep);
    j["field"] = {{"b0", cfg.field.b0},     {"eps1", cfg.field.eps1},
                  {"eps2", cfg.field.eps2}, {"c_u", cfg.field.c_u},
                  {"beta", cfg.field.beta}, {"strip_r", cfg.field.strip_r},
                  {"eps_bound", f.eps}};
    write_json(std::filesystem::path(cfg.out_dir) / "check.json", j);
    log << "assumption checks: " << (rep.all_pass() ? "all pass" : "FAILURES") << "\n";
    auto line = [&](const char* name, const CheckItem& c) {
        log << "  " << std::left << std::setw(20) << name << (c.pass ? "pass" : "FAIL")
            << "  worst margin " << std::setprecision(3) << c.worst_margin << "\n";
    };
    line("symmetry_q1", rep.symmetry_q1);
    line("symmetry_q2", rep.symmetry_q2);
    line("variation", rep.variation);
    line("d2_bound", rep.d2_bound);
    line("positivity", rep.positivity);
    line("monotonicity", rep.monotonicity);
    line("well_position", rep.well_position);
    line("well_nondegenerate", rep.well_nondegenerate);
    return rep.all_pass();
}

// ---------------------------------------------------------------------------
// asymptotics

struct AsymptoticsResult {
    EikonalProfile prof;
    AmplitudeProfile amp;
    WellCoefficients wc;
};

inline AsymptoticsResult run_asymptotics(const RunConfig& cfg) {
    FieldSpec f = make_example_field(cfg.field);
    cfg.seal.validate(f);
    EikonalGrid eg;
    eg.cells_per_unit = cfg.eikonal_cells;
    eg.half_width = cfg.eikonal_half_width;
    AsymptoticsResult r;
    r.prof = solve_phi(f, cfg.seal, eg);
    OdSampler sampler(f, r.prof, cfg.amplitude);
    r.amp = build_amplitude_profile(sampler);
    prefactor_c0(r.amp); // enforces the cutoff-route agreement
    r.wc = well_coefficients(f);
    return r;
}

inline Json asymptotics_json(const RunConfig& cfg, const AsymptoticsResult& r) {
    return Json{{"b0", cfg.field.b0},
                {"S", r.prof.S},
                {"phi_dd_cu", r.prof.ddphi_cu},
                {"z2_closed", r.amp.z2_closed},
                {"z2_transport", r.amp.z2},
                {"z2_gap_rel",
                 std::abs(r.amp.z2 - r.amp.z2_closed) / std::max(1e-300, std::abs(r.amp.z2))},
                {"q2pm_cu", {r.amp.q2pm_cu.real(), r.amp.q2pm_cu.imag()}},
                {"c0", r.amp.c0},
                {"c0_route2", r.amp.c0_route2},
                {"c0_exponent_literal", r.amp.c0_exponent},
                {"const_check_spread", r.amp.const_spread},
                {"d0", r.wc.d0},
                {"d1", r.wc.d1},
                {"T_const", cfg.amplitude.T_const}};
}

inline void cmd_asymptotics(const RunConfig& cfg, std::ostream& log) {
    std::filesystem::create_directories(cfg.out_dir);
    AsymptoticsResult r = run_asymptotics(cfg);
    const auto dir = std::filesystem::path(cfg.out_dir);

    // eikonal profile CSV
    {
        std::ostringstream os;
        os << "x2,gamma,Gamma,phi,dphi\n";
        for (std::size_t i = 0; i < r.prof.grid.size(); ++i)
            os << csv_num(r.prof.grid[i]) << ',' << csv_num(r.prof.gamma[i]) << ','
               << csv_num(r.prof.Gamma[i]) << ',' << csv_num(r.prof.phi[i]) << ','
               << csv_num(r.prof.dphi[i]) << '\n';
        write_text(dir / "eikonal_profile.csv", os.str());
    }
    // amplitude profile CSV
    {
        std::ostringstream os;
        os << "x2,re_Q2pm,im_Q2pm,re_D,im_D,den,re_a0,im_a0,re_Jcal,im_Jcal,"
              "re_const_check,im_const_check,valid\n";
        for (std::size_t i = 0; i < r.amp.grid.size(); ++i)
            os << csv_num(r.amp.grid[i]) << ',' << csv_num(r.amp.Q2pm[i].real()) << ','
               << csv_num(r.amp.Q2pm[i].imag()) << ',' << csv_num(r.amp.D[i].real()) << ','
               << csv_num(r.amp.D[i].imag()) << ',' << csv_num(r.amp.den[i]) << ','
               << csv_num(r.amp.a0[i].real()) << ',' << csv_num(r.amp.a0[i].imag()) << ','
               << csv_num(r.amp.Jcal[i].real()) << ',' << csv_num(r.amp.Jcal[i].imag()) << ','
               << csv_num(r.amp.const_check[i].real()) << ','
               << csv_num(r.amp.const_check[i].imag()) << ',' << int(r.amp.valid[i]) << '\n';
        write_text(dir / "amplitude_profile.csv", os.str());
    }
    write_json(dir / "asymptotics.json", asymptotics_json(cfg, r));
    log << "S = " << std::setprecision(12) << r.prof.S << "\n"
        << "phi''(c_u) = " << r.prof.ddphi_cu << "\n"
        << "z2 (transport route, T=" << cfg.amplitude.T_const << ") = " << r.amp.z2 << "\n"
        << "z2 (closed form) = " << r.amp.z2_closed << "\n"
        << "c0 = " << r.amp.c0 << " (cutoff route " << r.amp.c0_route2
        << ", literal exponent form " << r.amp.c0_exponent << ")\n"
        << "constancy spread = " << r.amp.const_spread << "\n";
}

// ---------------------------------------------------------------------------
// sweep

struct SweepPoint {
    double h = 0.0;
    SpectrumResult coarse, fine;    // fine only when Richardson enabled
    std::vector<double> extrapolated; // per-eigenvalue Richardson values
    double gap = 0.0;               // extrapolated when enabled
    double gap_raw = 0.0;
    double noise = 0.0;             // Kato-Temple style eigenvalue error scale
    bool failed = false;
    std::string error;
};

inline GridSpec grid_for(const RunConfig& cfg, double h) {
    const double b0 = cfg.field.b0, cu = cfg.field.c_u;
    GridSpec g;
    g.L2 = cfg.spectra.L2 > 0.0 ? cfg.spectra.L2 : 2.0 * (cu + 3.0 * std::sqrt(h / b0));
    g.L1 = cfg.spectra.L1 > 0.0 ? cfg.spectra.L1 : cu + 4.0 * std::sqrt(h / b0);
    const double cap =
        std::min({cfg.spectra.spacing_factor * std::sqrt(h), g.L1 / 50.0, g.L2 / 50.0}) * 0.995;
    g.N1 = static_cast<int>(std::ceil(2.0 * g.L1 / cap)) + 1;
    g.N2 = static_cast<int>(std::ceil(2.0 * g.L2 / cap)) + 1;
    return g;
}

inline SweepPoint sweep_point(const RunConfig& cfg, const FieldSpec& f, double h) {
    SweepPoint p;
    p.h = h;
    EigOptions opt;
    opt.k = cfg.spectra.k;
    opt.tol = cfg.spectra.tol;
    opt.max_iter = cfg.spectra.max_iter;
    opt.seed = cfg.seed;
    const GaugeChoice gauge = cfg.gauge();

    GridSpec g = grid_for(cfg, h);
    p.coarse = lowest_eigenpairs(assemble(f, gauge, g, h), g, h, opt, f);
    p.gap_raw = p.coarse.gap;
    if (cfg.spectra.richardson) {
        GridSpec g2 = refine(g);
        p.fine = lowest_eigenpairs(assemble(f, gauge, g2, h), g2, h, opt, f);
        for (std::size_t j = 0; j < p.coarse.eigenvalues.size(); ++j)
            p.extrapolated.push_back(
                (4.0 * p.fine.eigenvalues[j] - p.coarse.eigenvalues[j]) / 3.0);
        p.gap = p.extrapolated[1] - p.extrapolated[0];
    } else {
        p.extrapolated = p.coarse.eigenvalues;
        p.gap = p.coarse.gap;
    }
    // eigenvalue error scale: residual^2 / distance to the next level in the
    // same sector (Kato-Temple), plus the Richardson disagreement of the gap
    const SpectrumResult& ref = cfg.spectra.richardson ? p.fine : p.coarse;
    const double spacing =
        std::max(1e-300, ref.eigenvalues[std::min<std::size_t>(2, ref.eigenvalues.size() - 1)] -
                             ref.eigenvalues[0]);
    double kato = 0.0;
    for (std::size_t j = 0; j < 2; ++j)
        kato += sqr(ref.residual_norms[j] * ref.hnorm) / spacing;
    p.noise = kato + 1e-16 * ref.eigenvalues[0];
    return p;
}

inline Json spectrum_json(const SpectrumResult& r) {
    return Json{{"h", r.h},
                {"eigenvalues", r.eigenvalues},
                {"residual_norms", r.residual_norms},
                {"parities", r.parities},
                {"gap", r.gap},
                {"grid", {{"L1", r.grid.L1}, {"L2", r.grid.L2}, {"N1", r.grid.N1}, {"N2", r.grid.N2}}},
                {"hnorm", r.hnorm},
                {"sigma", r.sigma}};
}

inline Json sweep_point_json(const SweepPoint& p) {
    Json j{{"h", p.h}, {"failed", p.failed}};
    if (p.failed) {
        j["error"] = p.error;
        return j;
    }
    j["coarse"] = spectrum_json(p.coarse);
    if (!p.fine.eigenvalues.empty()) j["fine"] = spectrum_json(p.fine);
    j["extrapolated"] = p.extrapolated;
    j["gap"] = p.gap;
    j["gap_raw"] = p.gap_raw;
    j["noise"] = p.noise;
    return j;
}

inline std::vector<SweepPoint> run_sweep(const RunConfig& cfg, std::ostream& log) {
    FieldSpec f = make_example_field(cfg.field);
    const auto& hs = cfg.spectra.h_list;
    std::vector<SweepPoint> pts(hs.size());
    const int n_threads = std::max(1, cfg.threads);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= hs.size()) break;
            try {
                pts[i] = sweep_point(cfg, f, hs[i]);
            } catch (const std::exception& e) {
                pts[i].h = hs[i];
                pts[i].failed = true;
                pts[i].error = e.what();
            }
        }
    };
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const SweepPoint& p : pts) {
        if (p.failed)
            log << "h = " << p.h << "  FAILED: " << p.error << "\n";
        else
            log << "h = " << std::setw(6) << p.h << "  lambda1 = " << std::setprecision(12)
                << p.extrapolated[0] << "  gap = " << std::setprecision(6) << p.gap
                << "  parities (" << p.coarse.parities[0] << "," << p.coarse.parities[1]
                << ")\n";
    }
    return pts;
}

inline bool cmd_sweep(const RunConfig& cfg, std::ostream& log) {
    std::filesystem::create_directories(cfg.out_dir);
    const auto dir = std::filesystem::path(cfg.out_dir);
    std::vector<SweepPoint> pts = run_sweep(cfg, log);

    Json all = Json::array();
    std::ostringstream csv;
    csv << "h,lambda1,lambda2,gap,parity1,parity2\n";
    bool any_failed = false;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const SweepPoint& p = pts[i];
        Json j = sweep_point_json(p);
        all.push_back(j);
        std::ostringstream name;
        name << "spectrum_h" << std::setw(2) << std::setfill('0') << i << ".json";
        write_json(dir / name.str(), j);
        if (p.failed) {
            any_failed = true;
            continue;
        }
        csv << csv_num(p.h) << ',' << csv_num(p.extrapolated[0]) << ','
            << csv_num(p.extrapolated[1]) << ',' << csv_num(p.gap) << ','
            << p.coarse.parities[0] << ',' << p.coarse.parities[1] << '\n';
    }
    write_json(dir / "sweep.json", all);
    write_text(dir / "sweep.csv", csv.str());
    return !any_failed;
}

// ---------------------------------------------------------------------------
// fit

struct FitInputs {
    std::vector<double> h, gap, noise, lambda3_gap;
};

inline GapFit run_fit(const RunConfig& cfg, const FitInputs& in, double S_pred, double c0_pred,
                      std::vector<double>* used_h = nullptr) {
    std::vector<double> h, gap;
    for (std::size_t i = 0; i < in.h.size(); ++i) {
        if (!(in.gap[i] > cfg.fit.noise_factor * in.noise[i])) continue;
        if (!(in.gap[i] < cfg.fit.pair_separation * in.lambda3_gap[i])) continue;
        h.push_back(in.h[i]);
        gap.push_back(in.gap[i]);
    }
    if (used_h) *used_h = h;
    GapFit fit = fit_gap_law(h, gap);
    fit.S_pred = S_pred;
    fit.c0_pred = c0_pred;
    fit.S_rel_err = std::abs(fit.S_fit - S_pred) / std::max(1e-300, std::abs(S_pred));
    fit.c0_ratio = fit.c0_fit / std::max(1e-300, c0_pred);
    return fit;
}

inline Json fit_json(const RunConfig& cfg, const GapFit& f) {
    return Json{{"S_fit", f.S_fit},
                {"S_stderr", f.S_stderr},
                {"c0_fit", f.c0_fit},
                {"ln_c0_stderr", f.ln_c0_stderr},
                {"p_hat", f.p_hat},
                {"p_stderr", f.p_stderr},
                {"S_fit_free", f.S_fit_free},
                {"c0_fit_free", f.c0_fit_free},
                {"h_used", f.h_used},
                {"residuals", f.residuals},
                {"condition", f.condition},
                {"S_pred", f.S_pred},
                {"c0_pred", f.c0_pred},
                {"S_rel_err", f.S_rel_err},
                {"c0_ratio", f.c0_ratio},
                {"window_rule",
                 {{"noise_factor", cfg.fit.noise_factor},
                  {"pair_separation", cfg.fit.pair_separation}}}};
}

inline FitInputs fit_inputs_from_sweep(const Json& sweep) {
    FitInputs in;
    for (const Json& j : sweep) {
        if (j.value("failed", true)) continue;
        const auto& extr = j.at("extrapolated");
        in.h.push_back(j.at("h").get<double>());
        in.gap.push_back(j.at("gap").get<double>());
        in.noise.push_back(j.at("noise").get<double>());
        in.lambda3_gap.push_back(extr[2].get<double>() - extr[1].get<double>());
    }
    return in;
}

inline void cmd_fit(const RunConfig& cfg, std::ostream& log) {
    const auto dir = std::filesystem::path(cfg.out_dir);
    std::ifstream sin(dir / "sweep.json"), ain(dir / "asymptotics.json");
    if (!sin) throw ConfigError("fit: missing sweep.json (run sweep first)");
    if (!ain) throw ConfigError("fit: missing asymptotics.json (run asymptotics first)");
    Json sweep, asym;
    sin >> sweep;
    ain >> asym;
    FitInputs in = fit_inputs_from_sweep(sweep);
    GapFit fit = run_fit(cfg, in, asym.at("S").get<double>(), asym.at("c0").get<double>());
    write_json(dir / "fit.json", fit_json(cfg, fit));
    log << "usable points: " << fit.h_used.size() << "\n"
        << "S_fit = " << std::setprecision(10) << fit.S_fit << "  (predicted " << fit.S_pred
        << ", rel err " << std::setprecision(3) << fit.S_rel_err << ")\n"
        << "c0_fit = " << std::setprecision(10) << fit.c0_fit << "  (predicted " << fit.c0_pred
        << ", ratio " << std::setprecision(3) << fit.c0_ratio << ")\n"
        << "free exponent p_hat = " << std::setprecision(6) << fit.p_hat << " +- "
        << fit.p_stderr << "\n";
}

// ---------------------------------------------------------------------------
// report

inline void cmd_report(const RunConfig& cfg, std::ostream& log) {
    const auto dir = std::filesystem::path(cfg.out_dir);
    Json report;
    auto load = [&](const char* name, bool required) {
        std::ifstream in(dir / name);
        if (!in) {
            if (required) throw ConfigError(std::string("report: missing ") + name);
            return Json();
        }
        Json j;
        in >> j;
        return j;
    };
    Json check = load("check.json", true);
    Json asym = load("asymptotics.json", true);
    Json sweep = load("sweep.json", true);
    Json fitj = load("fit.json", false);
    if (sweep.empty()) throw ConfigError("report: sweep.json is empty");

    report["check"] = check;
    report["asymptotics"] = asym;
    report["fit"] = fitj;

    // gap-law plot data and the compensated trend
    const double S = asym.at("S").get<double>();
    std::ostringstream csv;
    csv << "inv_h,ln_gap_over_h32,compensated_gap\n";
    Json trend = Json::array();
    int partial = 0;
    for (const Json& j : sweep) {
        if (j.value("failed", true)) {
            ++partial;
            continue;
        }
        const double h = j.at("h").get<double>();
        const double gap = j.at("gap").get<double>();
        if (!(gap > 0.0)) continue;
        const double y = std::log(gap) - 1.5 * std::log(h);
        const double comp = gap * std::exp(S / h) * std::pow(h, -1.5);
        csv << csv_num(1.0 / h) << ',' << csv_num(y) << ',' << csv_num(comp) << '\n';
        trend.push_back(Json{{"h", h}, {"compensated", comp}});
    }
    write_text(dir / "gap_vs_invh.csv", csv.str());
    report["gap_trend"] = trend;
    report["sweep_points"] = sweep.size();
    report["sweep_failed"] = partial;

    // two-term expansion over the configured window, adjudicating the
    // competing h^2-coefficient expressions
    {
        std::vector<double> h, lam;
        for (const Json& j : sweep) {
            if (j.value("failed", true)) continue;
            const double hv = j.at("h").get<double>();
            if (hv < cfg.fit.expansion_h_min - 1e-12 || hv > cfg.fit.expansion_h_max + 1e-12)
                continue;
            const auto& extr = j.at("extrapolated");
            h.push_back(hv);
            lam.push_back(0.5 * (extr[0].get<double>() + extr[1].get<double>()));
        }
        if (h.size() >= 3) {
            ExpansionFit ef = fit_two_term(h, lam, 1.0); // residual threshold reported, not fatal
            const double d0 = asym.at("d0").get<double>();
            const double d1 = asym.at("d1").get<double>();
            Json cand = {
                {"two_d0_plus_d1", {{"value", 2 * d0 + d1},
                                    {"rel_err", std::abs(ef.c_quad - (2 * d0 + d1)) / (2 * d0 + d1)}}},
                {"d0_plus_d1",
                 {{"value", d0 + d1}, {"rel_err", std::abs(ef.c_quad - (d0 + d1)) / (d0 + d1)}}},
                {"d1", {{"value", d1}, {"rel_err", std::abs(ef.c_quad - d1) / d1}}}};
            report["expansion"] = {{"h_window", {cfg.fit.expansion_h_min, cfg.fit.expansion_h_max}},
                                   {"points", h.size()},
                                   {"c_lin", ef.c_lin},
                                   {"c_lin_stderr", ef.c_lin_stderr},
                                   {"c_quad", ef.c_quad},
                                   {"c_quad_stderr", ef.c_quad_stderr},
                                   {"max_rel_resid", ef.max_rel_resid},
                                   {"candidates", cand}};
        }
    }
    write_json(dir / "report.json", report);
    log << "report written (" << sweep.size() - partial << " sweep points, " << partial
        << " failed)\n";
}

} // namespace magsplit
