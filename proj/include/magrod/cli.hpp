#ifndef MAGROD_CLI_HPP
#define MAGROD_CLI_HPP

// Command-line front end. Each subcommand drives one computation and
// emits a CSV data product plus a metadata record carrying every input
// (parameters, tolerances, seeds, tool version), so a run can be
// reproduced from its metadata alone. No timestamps: identical
// configurations must produce bitwise-identical files.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "magrod/analytic.hpp"
#include "magrod/io.hpp"
#include "magrod/manifolds.hpp"
#include "magrod/melnikov.hpp"
#include "magrod/model.hpp"

namespace magrod::cli {

using json = nlohmann::ordered_json;

namespace detail {

struct Emitter {
    std::filesystem::path dir;
    std::string base;
    json meta;
    std::vector<std::string> written;

    std::ofstream open(const std::string& suffix) {
        std::filesystem::create_directories(dir);
        const std::string name = base + suffix;
        std::ofstream os(dir / name);
        if (!os)
            throw std::invalid_argument("cannot open output file " +
                                        (dir / name).string());
        written.push_back(name);
        return os;
    }

    void finish() {
        meta["outputs"] = written;
        std::filesystem::create_directories(dir);
        std::ofstream os(dir / (base + "_meta.json"));
        os << meta.dump(2) << '\n';
    }
};

inline json params_json(const Params& p) {
    return json{{"alpha", p.alpha},   {"mu", p.mu},
                {"nu", p.nu},         {"eps", p.eps},
                {"gamma", p.gamma},   {"gamma_hat", p.gamma_hat},
                {"tol_sing", p.tol_sing}};
}

inline json state_json(const State& s) {
    return json{{"theta", s.theta},
                {"psi", s.psi},
                {"p_theta", s.p_theta},
                {"p_psi", s.p_psi}};
}

// Common physical-parameter flags. gamma and gamma-hat are alternative
// parameterizations of the same perturbation term; if gamma-hat is given
// the scaled convention gamma = eps * gamma_hat applies.
struct ParamOpts {
    double alpha = 0.5, mu = 0.1, nu = 0.0, eps = 0.0, gamma = 0.0;
    double gamma_hat = 0.0;
    bool scaled = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--alpha", alpha, "bending/torsional stiffness ratio")
            ->capture_default_str();
        cmd->add_option("--mu", mu, "inclination unfolding parameter")
            ->capture_default_str();
        cmd->add_option("--nu", nu, "axial magnetic moment parameter")
            ->capture_default_str();
        cmd->add_option("--eps", eps, "perturbation strength")
            ->capture_default_str();
        cmd->add_option("--gamma", gamma, "extensibility parameter")
            ->capture_default_str();
        cmd->add_option("--gamma-hat", gamma_hat,
                        "scaled extensibility (sets gamma = eps * gamma_hat)")
            ->capture_default_str();
    }

    Params build() const {
        if (gamma_hat != 0.0)
            return Params::scaled(alpha, mu, nu, eps, gamma_hat);
        return Params::direct(alpha, mu, nu, eps, gamma);
    }
};

struct SectionOpts {
    std::string which = "psi";
    double value = 0.0;
    int direction = +1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--section", which, "transversal section coordinate")
            ->check(CLI::IsMember({"psi", "p-theta"}))
            ->capture_default_str();
        cmd->add_option("--section-value", value, "section level")
            ->capture_default_str();
        cmd->add_option("--section-direction", direction,
                        "crossing direction (+1, -1)")
            ->check(CLI::IsMember({1, -1}))
            ->capture_default_str();
    }

    SectionSpec build() const {
        SectionSpec s;
        if (which == "psi") {
            s.angle = true;
            s.index = 1;
        } else {
            s.angle = false;
            s.index = 2;
        }
        s.value = value;
        s.direction = direction;
        return s;
    }

    json to_json() const {
        return json{{"section", which},
                    {"section_value", value},
                    {"section_direction", direction}};
    }
};

// Sheet-walking flags shared by manifold, slice, and homoclinic-detect.
struct SheetOpts {
    double phase = 0.0;
    int steps = 40;
    int direction = 0;  // 0 walks both directions and merges
    double step = 0.05;
    double seed_radius = 1e-5;
    int segments = 8;
    double bvp_tol = 1e-9;
    double max_time = 120.0;
    bool partial = true;

    void attach(CLI::App* cmd) {
        cmd->add_option("--phase", phase,
                        "seed angle on the eigenplane circle")
            ->capture_default_str();
        cmd->add_option("--steps", steps, "continuation steps per direction")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--direction", direction,
                        "walk direction (+1, -1, 0 = both merged)")
            ->check(CLI::IsMember({0, 1, -1}))
            ->capture_default_str();
        cmd->add_option("--step", step, "target endpoint arc step")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--seed-radius", seed_radius,
                        "distance of the near end from the equilibrium")
            ->capture_default_str();
        cmd->add_option("--segments", segments, "multiple-shooting segments")
            ->capture_default_str();
        cmd->add_option("--bvp-tol", bvp_tol, "boundary-value residual bound")
            ->capture_default_str();
        cmd->add_option("--max-time", max_time, "orbit time budget")
            ->capture_default_str();
        cmd->add_flag("--partial,!--no-partial", partial,
                      "keep the walked arc when a branch stalls")
            ->capture_default_str();
    }

    SheetConfig build(const SectionSpec& sec) const {
        SheetConfig cfg;
        cfg.seed_radius = seed_radius;
        cfg.segments = segments;
        cfg.bvp_tol = bvp_tol;
        cfg.step = step;
        cfg.section = sec;
        cfg.max_time = max_time;
        cfg.return_partial_on_stall = partial;
        return cfg;
    }

    json to_json() const {
        return json{{"phase", phase},       {"steps", steps},
                    {"direction", direction}, {"step", step},
                    {"seed_radius", seed_radius}, {"segments", segments},
                    {"bvp_tol", bvp_tol},   {"max_time", max_time},
                    {"partial", partial}};
    }
};

inline ManifoldSheet walk_sheet(const Equilibrium& eq, Side side,
                                const SheetOpts& so, const SheetConfig& cfg) {
    const auto init = initial_sheet_orbit(eq, side, cfg, so.phase);
    if (so.direction != 0)
        return continue_sheet(eq, init, side, so.direction, so.steps, cfg);
    const auto plus = continue_sheet(eq, init, side, +1, so.steps, cfg);
    const auto minus = continue_sheet(eq, init, side, -1, so.steps, cfg);
    return merge_sheets(plus, minus);
}

inline Side parse_side(const std::string& s) {
    return s == "stable" ? Side::stable : Side::unstable;
}

} // namespace detail

inline int run(int argc, const char* const* argv) {
    using detail::Emitter;

    CLI::App app{"magnetized-rod reduced dynamics toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "flat key=value file mirroring the flags; command-line "
                   "flags override file values");
    app.set_version_flag("--version", std::string(version_string));

    std::string out_dir = ".";
    app.add_option("--output-dir", out_dir, "directory for emitted files")
        ->envname("MAGROD_OUTPUT_DIR")
        ->capture_default_str();

    auto emitter = [&](const std::string& base, const char* command) {
        Emitter em;
        em.dir = out_dir;
        em.base = base;
        em.meta["tool"] = "magrod";
        em.meta["version"] = version_string;
        em.meta["command"] = command;
        return em;
    };

    // ---- equilibria ------------------------------------------------
    {
        auto* cmd = app.add_subcommand(
            "equilibria", "locate and refine the pair of saddle-focus "
                          "equilibria");
        auto po = std::make_shared<detail::ParamOpts>();
        po->attach(cmd);
        auto base = std::make_shared<std::string>("equilibria");
        cmd->add_option("-o,--output", *base, "output base name")
            ->capture_default_str();
        cmd->callback([this_po = po, base, &emitter]() {
            const Params p = this_po->build();
            const auto seeds = hyperbolic_equilibria(p.alpha, p.mu);
            auto em = emitter(*base, "equilibria");
            em.meta["params"] = detail::params_json(p);
            auto os = em.open(".csv");
            os << "branch,theta,psi,p_theta,p_psi,eig_re,eig_im,H\n";
            for (int k = 0; k < 2; ++k) {
                const auto eq = refine_equilibrium(p, seeds[k].state);
                write_csv_row(os, {double(k), eq.state.theta, eq.state.psi,
                                   eq.state.p_theta, eq.state.p_psi,
                                   eq.eigenvalues[0].real(),
                                   eq.eigenvalues[0].imag(),
                                   hamiltonian(eq.state, p)});
            }
            em.finish();
        });
    }

    // ---- eigs ------------------------------------------------------
    {
        auto* cmd = app.add_subcommand(
            "eigs", "eigenvalues of the linearization at a refined "
                    "equilibrium");
        auto po = std::make_shared<detail::ParamOpts>();
        po->attach(cmd);
        auto branch = std::make_shared<int>(0);
        cmd->add_option("--branch", *branch, "equilibrium branch (0 or 1)")
            ->check(CLI::IsMember({0, 1}))
            ->capture_default_str();
        auto base = std::make_shared<std::string>("eigs");
        cmd->add_option("-o,--output", *base, "output base name")
            ->capture_default_str();
        cmd->callback([po, branch, base, &emitter]() {
            const Params p = po->build();
            const auto seeds = hyperbolic_equilibria(p.alpha, p.mu);
            const auto eq = refine_equilibrium(p, seeds[*branch].state);
            auto em = emitter(*base, "eigs");
            em.meta["params"] = detail::params_json(p);
            em.meta["options"] = json{{"branch", *branch}};
            em.meta["equilibrium"] = detail::state_json(eq.state);
            auto os = em.open(".csv");
            os << "k,re,im\n";
            for (int k = 0; k < 4; ++k)
                write_csv_row(os, {double(k), eq.eigenvalues[k].real(),
                                   eq.eigenvalues[k].imag()});
            em.finish();
        });
    }

    // ---- integrate ---------------------------------------------------
    {
        auto* cmd = app.add_subcommand(
            "integrate", "integrate the reduced equations from a given state");
        auto po = std::make_shared<detail::ParamOpts>();
        po->attach(cmd);
        auto y0 = std::make_shared<std::vector<double>>();
        cmd->add_option("--y0", *y0, "initial state theta psi p_theta p_psi")
            ->expected(4)
            ->required();
        auto t0 = std::make_shared<double>(0.0);
        auto t1 = std::make_shared<double>(100.0);
        auto rel = std::make_shared<double>(1e-10);
        auto abs = std::make_shared<double>(1e-10);
        cmd->add_option("--t0", *t0, "start time")->capture_default_str();
        cmd->add_option("--t1", *t1, "end time")->capture_default_str();
        cmd->add_option("--rel-tol", *rel, "relative step tolerance")
            ->capture_default_str();
        cmd->add_option("--abs-tol", *abs, "absolute step tolerance")
            ->capture_default_str();
        auto base = std::make_shared<std::string>("trajectory");
        cmd->add_option("-o,--output", *base, "output base name")
            ->capture_default_str();
        cmd->callback([po, y0, t0, t1, rel, abs, base, &emitter]() {
            const Params p = po->build();
            IntegratorConfig icfg;
            icfg.rel_tol = *rel;
            icfg.abs_tol = *abs;
            const Vec4 x0((*y0)[0], (*y0)[1], (*y0)[2], (*y0)[3]);
            const auto tr = magrod::detail::flow(p, x0, *t0, *t1, icfg);
            auto em = emitter(*base, "integrate");
            em.meta["params"] = detail::params_json(p);
            em.meta["options"] =
                json{{"y0", *y0},        {"t0", *t0},
                     {"t1", *t1},        {"rel_tol", *rel},
                     {"abs_tol", *abs},  {"steps", tr.steps()}};
            auto os = em.open(".csv");
            write_trajectory(os, tr, p);
            em.finish();
        });
    }

    // ---- homoclinic-analytic ----------------------------------------
    {
        auto* cmd = app.add_subcommand(
            "homoclinic-analytic",
            "sample the closed-form leading-order homoclinic orbit");
        auto alpha = std::make_shared<double>(0.5);
        auto psi0 = std::make_shared<double>(0.0);
        auto branch = std::make_shared<int>(1);
        auto tmax = std::make_shared<double>(40.0);
        auto points = std::make_shared<int>(801);
        cmd->add_option("--alpha", *alpha, "stiffness ratio (> 1/4)")
            ->capture_default_str();
        cmd->add_option("--psi0", *psi0, "family phase")
            ->capture_default_str();
        cmd->add_option("--branch", *branch, "sign branch (+1 or -1)")
            ->check(CLI::IsMember({1, -1}))
            ->capture_default_str();
        cmd->add_option("--t-max", *tmax, "sample over [-t_max, t_max]")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--points", *points, "sample count")
            ->check(CLI::Range(2, 2000000))
            ->capture_default_str();
        auto base = std::make_shared<std::string>("homoclinic");
        cmd->add_option("-o,--output", *base, "output base name")
            ->capture_default_str();
        cmd->callback([alpha, psi0, branch, tmax, points, base, &emitter]() {
            const HomoclinicFamily fam(*alpha, *branch, *psi0);
            auto em = emitter(*base, "homoclinic-analytic");
            em.meta["options"] = json{{"alpha", *alpha},
                                      {"psi0", *psi0},
                                      {"branch", *branch},
                                      {"t_max", *tmax},
                                      {"points", *points}};
            em.meta["delta"] = fam.delta();
            auto os = em.open(".csv");
            os << "t,theta,psi,p_theta,p_psi\n";
            for (int i = 0; i < *points; ++i) {
                const double t =
                    -*tmax + 2.0 * *tmax * i / double(*points - 1);
                const State s = fam.state(t);
                write_csv_row(os, {t, s.theta, s.psi, s.p_theta, s.p_psi});
            }
            em.finish();
        });
    }

    // ---- melnikov ----------------------------------------------------
    {
        auto* cmd = app.add_subcommand(
            "melnikov",
            "Melnikov function over one period of the family phase, with "
            "its simple zeros");
        auto po = std::make_shared<detail::ParamOpts>();
        po->attach(cmd);
        auto grid = std::make_shared<int>(64);
        auto branch = std::make_shared<int>(1);
        auto half_width = std::make_shared<double>(50.0);
        auto nodes = std::make_shared<int>(1024);
        cmd->add_option("--grid", *grid, "phase grid size")
            ->check(CLI::Range(4, 1 << 20))
            ->capture_default_str();
        cmd->add_option("--branch", *branch, "homoclinic sign branch")
            ->check(CLI::IsMember({1, -1}))
            ->capture_default_str();
        cmd->add_option("--quad-half-width", *half_width,
                        "quadrature truncation half width")
            ->capture_default_str();
        cmd->add_option("--quad-nodes", *nodes, "quadrature node count")
            ->capture_default_str();
        auto base = std::make_shared<std::string>("melnikov");
        cmd->add_option("-o,--output", *base, "output base name")
            ->capture_default_str();
        cmd->callback([po, grid, branch, half_width, nodes, base,
                       &emitter]() {
            const Params p = po->build();
            QuadratureConfig qcfg;
            qcfg.half_width = *half_width;
            qcfg.node_count = *nodes;
            const auto pr = rod_problem(p, *branch);
            const auto res = find_simple_zeros(pr, *grid, qcfg);
            auto em = emitter(*base, "melnikov");
            em.meta["params"] = detail::params_json(p);
            em.meta["options"] = json{{"grid", *grid},
                                      {"branch", *branch},
                                      {"quad_half_width", *half_width},
                                      {"quad_nodes", *nodes}};
            json zl = json::array();
            for (const auto& z : res.zeros)
                zl.push_back(json{{"psi0", z.kappa},
                                  {"dM", z.dM},
                                  {"simple", z.simple}});
            em.meta["zeros"] = zl;
            {
                auto os = em.open(".csv");
                std::vector<std::pair<double, double>> scan;
                for (std::size_t i = 0; i < res.kappa_grid.size(); ++i)
                    scan.emplace_back(res.kappa_grid[i], res.M_values[i]);
                write_melnikov(os, scan);
            }
            {
                auto os = em.open("_zeros.csv");
                os << "psi0,dM,simple\n";
                for (const auto& z : res.zeros)
                    write_csv_row(os,
                                  {z.kappa, z.dM, z.simple ? 1.0 : 0.0});
            }
            em.finish();
        });
    }

    // ---- delta -------------------------------------------------------
    {
        auto* cmd = app.add_subcommand(
            "delta", "splitting amplitude curve over a stiffness range");
        auto amin = std::make_shared<double>(0.3);
        auto amax = std::make_shared<double>(5.0);
        auto points = std::make_shared<int>(100);
        cmd->add_option("--alpha-min", *amin, "range start (> 1/4)")
            ->capture_default_str();
        cmd->add_option("--alpha-max", *amax, "range end")
            ->capture_default_str();
        cmd->add_option("--points", *points, "grid size")
            ->check(CLI::Range(2, 2000000))
            ->capture_default_str();
        auto base = std::make_shared<std::string>("delta");
        cmd->add_option("-o,--output", *base, "output base name")
            ->capture_default_str();
        cmd->callback([amin, amax, points, base, &emitter]() {
            if (!(*amax > *amin))
                throw std::invalid_argument(
                    "--alpha-max must exceed --alpha-min");
            auto em = emitter(*base, "delta");
            em.meta["options"] = json{{"alpha_min", *amin},
                                      {"alpha_max", *amax},
                                      {"points", *points}};
            auto os = em.open(".csv");
            os << "alpha,delta\n";
            for (int i = 0; i < *points; ++i) {
                const double a =
                    *amin + (*amax - *amin) * i / double(*points - 1);
                write_csv_row(os, {a, delta_amplitude(a)});
            }
            em.finish();
        });
    }

    // ---- manifold ------------------------------------------------------
    {
        auto* cmd = app.add_subcommand(
            "manifold", "walk one invariant-manifold sheet and summarize "
                        "its orbit family");
        auto po = std::make_shared<detail::ParamOpts>();
        po->attach(cmd);
        auto side = std::make_shared<std::string>("unstable");
        cmd->add_option("--side", *side, "which manifold")
            ->check(CLI::IsMember({"unstable", "stable"}))
            ->capture_default_str();
        auto so = std::make_shared<detail::SheetOpts>();
        so->attach(cmd);
        auto sec = std::make_shared<detail::SectionOpts>();
        sec->attach(cmd);
        auto branch = std::make_shared<int>(0);
        cmd->add_option("--branch", *branch, "equilibrium branch (0 or 1)")
            ->check(CLI::IsMember({0, 1}))
            ->capture_default_str();
        auto base = std::make_shared<std::string>("manifold");
        cmd->add_option("-o,--output", *base, "output base name")
            ->capture_default_str();
        cmd->callback([po, side, so, sec, branch, base, &emitter]() {
            const Params p = po->build();
            const auto seeds = hyperbolic_equilibria(p.alpha, p.mu);
            const auto eq = refine_equilibrium(p, seeds[*branch].state);
            const auto cfg = so->build(sec->build());
            const auto sheet =
                detail::walk_sheet(eq, detail::parse_side(*side), *so, cfg);
            auto em = emitter(*base, "manifold");
            em.meta["params"] = detail::params_json(p);
            em.meta["options"] = so->to_json();
            em.meta["options"].update(sec->to_json());
            em.meta["options"]["side"] = *side;
            em.meta["options"]["branch"] = *branch;
            em.meta["equilibrium"] = detail::state_json(eq.state);
            auto os = em.open(".csv");
            os << "cont_param,T,residual,theta_near,psi_near,p_theta_near,"
                  "p_psi_near,theta_far,psi_far,p_theta_far,p_psi_far\n";
            for (const auto& o : sheet.orbits) {
                const Vec4 n = o.x_near(), f = o.x_far();
                write_csv_row(os, {o.cont_param, o.T, o.residual, n[0], n[1],
                                   n[2], n[3], f[0], f[1], f[2], f[3]});
            }
            em.finish();
        });
    }

    // ---- slice ---------------------------------------------------------
    {
        auto* cmd = app.add_subcommand(
            "slice", "section slice of a walked manifold sheet");
        auto po = std::make_shared<detail::ParamOpts>();
        po->attach(cmd);
        auto side = std::make_shared<std::string>("unstable");
        cmd->add_option("--side", *side, "which manifold")
            ->check(CLI::IsMember({"unstable", "stable"}))
            ->capture_default_str();
        auto so = std::make_shared<detail::SheetOpts>();
        so->attach(cmd);
        auto sec = std::make_shared<detail::SectionOpts>();
        sec->attach(cmd);
        auto branch = std::make_shared<int>(0);
        cmd->add_option("--branch", *branch, "equilibrium branch (0 or 1)")
            ->check(CLI::IsMember({0, 1}))
            ->capture_default_str();
        auto base = std::make_shared<std::string>("slice");
        cmd->add_option("-o,--output", *base, "output base name")
            ->capture_default_str();
        cmd->callback([po, side, so, sec, branch, base, &emitter]() {
            const Params p = po->build();
            const auto seeds = hyperbolic_equilibria(p.alpha, p.mu);
            const auto eq = refine_equilibrium(p, seeds[*branch].state);
            const auto spec = sec->build();
            const auto cfg = so->build(spec);
            const auto sheet =
                detail::walk_sheet(eq, detail::parse_side(*side), *so, cfg);
            const auto sl = slice(sheet, spec);
            auto em = emitter(*base, "slice");
            em.meta["params"] = detail::params_json(p);
            em.meta["options"] = so->to_json();
            em.meta["options"].update(sec->to_json());
            em.meta["options"]["side"] = *side;
            em.meta["options"]["branch"] = *branch;
            em.meta["equilibrium"] = detail::state_json(eq.state);
            em.meta["energy"] = sl.energy;
            auto os = em.open(".csv");
            write_slice(os, sl);
            em.finish();
        });
    }

    // ---- homoclinic-detect ----------------------------------------------
    {
        auto* cmd = app.add_subcommand(
            "homoclinic-detect",
            "walk both sheets, intersect their section slices, and refine "
            "a transverse homoclinic point");
        auto po = std::make_shared<detail::ParamOpts>();
        po->attach(cmd);
        auto so = std::make_shared<detail::SheetOpts>();
        so->step = 0.08;
        so->attach(cmd);
        auto sec = std::make_shared<detail::SectionOpts>();
        sec->attach(cmd);
        auto phase_s = std::make_shared<double>(2.1);
        cmd->add_option("--phase-s", *phase_s,
                        "stable-sheet seed phase (--phase seeds the "
                        "unstable sheet)")
            ->capture_default_str();
        auto angle_tol = std::make_shared<double>(1e-3);
        auto capture = std::make_shared<double>(0.05);
        cmd->add_option("--angle-tol", *angle_tol,
                        "below this crossing angle report tangency")
            ->capture_default_str();
        cmd->add_option("--capture-radius", *capture,
                        "maximum pre-refinement slice gap")
            ->capture_default_str();
        auto branch = std::make_shared<int>(0);
        cmd->add_option("--branch", *branch, "equilibrium branch (0 or 1)")
            ->check(CLI::IsMember({0, 1}))
            ->capture_default_str();
        auto base = std::make_shared<std::string>("connection");
        cmd->add_option("-o,--output", *base, "output base name")
            ->capture_default_str();
        cmd->callback([po, so, sec, phase_s, angle_tol, capture, branch,
                       base, &emitter]() {
            const Params p = po->build();
            const auto seeds = hyperbolic_equilibria(p.alpha, p.mu);
            const auto eq = refine_equilibrium(p, seeds[*branch].state);
            const auto spec = sec->build();
            const auto cfg = so->build(spec);
            const auto wu =
                detail::walk_sheet(eq, Side::unstable, *so, cfg);
            auto so_s = *so;
            so_s.phase = *phase_s;
            const auto ws = detail::walk_sheet(eq, Side::stable, so_s, cfg);
            DetectConfig dc;
            dc.angle_tol = *angle_tol;
            dc.capture_radius = *capture;
            dc.seed_radius = so->seed_radius;
            dc.max_time = so->max_time;
            const auto conn = detect_homoclinic(slice(wu, spec),
                                                slice(ws, spec), dc);
            auto em = emitter(*base, "homoclinic-detect");
            em.meta["params"] = detail::params_json(p);
            em.meta["options"] = so->to_json();
            em.meta["options"].update(sec->to_json());
            em.meta["options"]["phase_s"] = *phase_s;
            em.meta["options"]["angle_tol"] = *angle_tol;
            em.meta["options"]["capture_radius"] = *capture;
            em.meta["options"]["branch"] = *branch;
            em.meta["equilibrium"] = detail::state_json(eq.state);
            em.meta["crossing"] = detail::state_json(conn.crossing);
            em.meta["angle"] = conn.angle;
            em.meta["phase_u"] = conn.phase_u;
            em.meta["phase_s"] = conn.phase_s;
            em.meta["T_u"] = conn.T_u;
            em.meta["T_s"] = conn.T_s;
            em.meta["endpoint_residual_u"] = conn.endpoint_residual_u;
            em.meta["endpoint_residual_s"] = conn.endpoint_residual_s;
            {
                auto os = em.open("_u.csv");
                write_trajectory(os, conn.orbit_u, p);
            }
            {
                auto os = em.open("_s.csv");
                write_trajectory(os, conn.orbit_s, p);
            }
            em.finish();
        });
    }

    // ---- poincare -------------------------------------------------------
    {
        auto* cmd = app.add_subcommand(
            "poincare", "first-return map data on a transversal section "
                        "at fixed energy");
        auto po = std::make_shared<detail::ParamOpts>();
        po->attach(cmd);
        auto sec = std::make_shared<detail::SectionOpts>();
        sec->attach(cmd);
        auto seeds_flat = std::make_shared<std::vector<double>>();
        cmd->add_option("--seeds", *seeds_flat,
                        "seed list as theta p_psi pairs (the remaining "
                        "coordinates are completed from the section and "
                        "energy level)")
            ->required();
        auto energy = std::make_shared<double>(0.0);
        auto* eopt = cmd->add_option(
            "--energy", *energy,
            "energy level (default: refined equilibrium energy)");
        auto crossings = std::make_shared<int>(100);
        cmd->add_option("--crossings", *crossings, "crossings per seed")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        auto max_time = std::make_shared<double>(1e5);
        cmd->add_option("--max-time", *max_time, "time budget per seed")
            ->capture_default_str();
        auto escape = std::make_shared<double>(1e3);
        cmd->add_option("--escape-bound", *escape,
                        "abort when coordinates exceed this bound")
            ->capture_default_str();
        auto branch = std::make_shared<int>(0);
        cmd->add_option("--branch", *branch,
                        "equilibrium branch for the default energy")
            ->check(CLI::IsMember({0, 1}))
            ->capture_default_str();
        auto base = std::make_shared<std::string>("poincare");
        cmd->add_option("-o,--output", *base, "output base name")
            ->capture_default_str();
        cmd->callback([po, sec, seeds_flat, energy, eopt, crossings,
                       max_time, escape, branch, base, &emitter]() {
            const Params p = po->build();
            if (seeds_flat->empty() || seeds_flat->size() % 2 != 0)
                throw std::invalid_argument(
                    "--seeds needs a nonempty even-length list of "
                    "theta p_psi pairs");
            double E = *energy;
            if (eopt->count() == 0) {
                const auto eqs = hyperbolic_equilibria(p.alpha, p.mu);
                E = hamiltonian(
                    refine_equilibrium(p, eqs[*branch].state).state, p);
            }
            const auto spec = sec->build();
            std::vector<State> seeds;
            for (std::size_t i = 0; i < seeds_flat->size(); i += 2)
                seeds.push_back(
                    {(*seeds_flat)[i], spec.angle ? spec.value : 0.0, 0.0,
                     (*seeds_flat)[i + 1]});
            PoincareConfig pc;
            pc.max_time = *max_time;
            pc.escape_bound = *escape;
            const auto sl = poincare_map(p, E, spec, seeds, *crossings, pc);
            auto em = emitter(*base, "poincare");
            em.meta["params"] = detail::params_json(p);
            em.meta["options"] = json{{"seeds", *seeds_flat},
                                      {"crossings", *crossings},
                                      {"max_time", *max_time},
                                      {"escape_bound", *escape},
                                      {"branch", *branch}};
            em.meta["options"].update(sec->to_json());
            em.meta["energy"] = E;
            auto os = em.open(".csv");
            write_slice(os, sl);
            em.finish();
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const Error& e) {
        std::cerr << e.name() << ": " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

} // namespace magrod::cli

#endif
