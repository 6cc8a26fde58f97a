#include "svhom/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "svhom/cell.hpp"
#include "svhom/csv.hpp"
#include "svhom/epspde.hpp"
#include "svhom/families.hpp"
#include "svhom/hj.hpp"
#include "svhom/ldp.hpp"
#include "svhom/linalg.hpp"
#include "svhom/measure.hpp"
#include "svhom/sde_mc.hpp"

namespace svhom {

namespace fs = std::filesystem;

namespace {

void write_grid_meta(std::ostream& os, const std::string& name, const Grid& g) {
    os << name << ".dim = " << g.dim() << "\n";
    os << name << ".h = " << CsvWriter::fmt(g.h()) << "\n";
    for (int d = 0; d < g.dim(); ++d) {
        os << name << ".lo" << d << " = " << CsvWriter::fmt(g.axis_lo(d)) << "\n";
        os << name << ".n" << d << " = " << g.axis_nodes(d) << "\n";
    }
}

Grid read_grid_meta(SectionReader& r, const std::string& name) {
    const int dim = static_cast<int>(r.integer(name + ".dim", 1));
    const double h = r.number_required(name + ".h");
    const double lo0 = r.number_required(name + ".lo0");
    const int n0 = static_cast<int>(r.integer(name + ".n0", 0));
    if (dim == 1) return Grid::box1d(lo0, lo0 + (n0 - 1) * h, h);
    const double lo1 = r.number_required(name + ".lo1");
    const int n1 = static_cast<int>(r.integer(name + ".n1", 0));
    return Grid::box2d(lo0, lo0 + (n0 - 1) * h, lo1, lo1 + (n1 - 1) * h, h);
}

struct State {
    ModelSpec spec;
    FastGrid fast_grid;
    FastGrid measure_grid;
    Payoff payoff;
    std::vector<double> cell_xbar, cell_pbar;
    std::optional<EffectiveHamiltonianTable> H;
    std::optional<EffectiveLagrangianTable> L;
    std::optional<HJSolution> hj;
    std::optional<InvariantMeasureField> mu;
    std::vector<MCEstimate> mc_rows;
};

void add(PipelineResult& res, const std::string& id, const std::string& desc, double measured,
         double threshold, bool pass) {
    res.verdicts.push_back({id, desc, measured, threshold, pass});
}

std::vector<double> grid_node(const Grid& g, int i) {
    std::vector<double> x(g.dim());
    g.coords(i, x);
    return x;
}

}  // namespace

void save_table_H(const EffectiveHamiltonianTable& t, const std::string& dir) {
    std::ofstream meta(dir + "/effham_H.meta");
    meta << "[table]\n";
    meta << "regime = " << (t.regime == Regime::critical ? "critical" : "supercritical") << "\n";
    meta << "n = " << t.n << "\n";
    write_grid_meta(meta, "x", t.x_grid);
    write_grid_meta(meta, "p", t.p_grid);

    std::vector<std::string> cols;
    for (int d = 0; d < t.n; ++d) cols.push_back("x" + std::to_string(d));
    for (int d = 0; d < t.n; ++d) cols.push_back("p" + std::to_string(d));
    cols.push_back("H");
    cols.push_back("diagnostic");
    CsvWriter w(dir + "/effham_H.csv", cols);
    for (int ix = 0; ix < t.x_grid.size(); ++ix) {
        const auto xc = grid_node(t.x_grid, ix);
        for (int ip = 0; ip < t.p_size(); ++ip) {
            const auto pc = grid_node(t.p_grid, ip);
            std::vector<std::string> cells;
            for (double v : xc) cells.push_back(CsvWriter::fmt(v));
            for (double v : pc) cells.push_back(CsvWriter::fmt(v));
            cells.push_back(CsvWriter::fmt(t.at(ix, ip)));
            cells.push_back(CsvWriter::fmt(t.diag_at(ix, ip)));
            w.row_mixed(cells);
        }
    }
}

EffectiveHamiltonianTable load_table_H(const std::string& dir) {
    const std::string meta_path = dir + "/effham_H.meta";
    if (!fs::exists(meta_path))
        throw ConfigError("missing prerequisite artifact '" + meta_path +
                          "' (run the effham stage first)");
    const RawConfig raw = RawConfig::parse_file(meta_path);
    SectionReader r(raw, "table");
    EffectiveHamiltonianTable t;
    t.regime = r.text("regime", "critical") == "critical" ? Regime::critical
                                                          : Regime::supercritical;
    t.n = static_cast<int>(r.integer("n", 1));
    t.x_grid = read_grid_meta(r, "x");
    t.p_grid = read_grid_meta(r, "p");
    r.finish();

    const CsvTable csv = read_csv(dir + "/effham_H.csv");
    const std::size_t expect = static_cast<std::size_t>(t.x_grid.size()) * t.p_size();
    require(csv.rows.size() == expect, "effham_H.csv row count does not match the meta grids");
    t.values.resize(expect);
    t.diagnostic.resize(expect);
    const std::size_t hcol = 2 * static_cast<std::size_t>(t.n);
    for (std::size_t k = 0; k < expect; ++k) {
        t.values[k] = csv.num(k, hcol);
        t.diagnostic[k] = csv.num(k, hcol + 1);
    }
    return t;
}

void save_table_L(const EffectiveLagrangianTable& t, const std::string& dir) {
    std::ofstream meta(dir + "/effham_L.meta");
    meta << "[table]\n";
    meta << "n = " << t.n << "\n";
    write_grid_meta(meta, "x", t.x_grid);
    write_grid_meta(meta, "q", t.q_grid);

    std::vector<std::string> cols;
    for (int d = 0; d < t.n; ++d) cols.push_back("x" + std::to_string(d));
    for (int d = 0; d < t.n; ++d) cols.push_back("q" + std::to_string(d));
    cols.push_back("L");
    CsvWriter w(dir + "/effham_L.csv", cols);
    for (int ix = 0; ix < t.x_grid.size(); ++ix) {
        const auto xc = grid_node(t.x_grid, ix);
        for (int iq = 0; iq < t.q_grid.size(); ++iq) {
            const auto qc = grid_node(t.q_grid, iq);
            std::vector<std::string> cells;
            for (double v : xc) cells.push_back(CsvWriter::fmt(v));
            for (double v : qc) cells.push_back(CsvWriter::fmt(v));
            cells.push_back(CsvWriter::fmt(t.at(ix, iq)));
            w.row_mixed(cells);
        }
    }
}

EffectiveLagrangianTable load_table_L(const std::string& dir) {
    const std::string meta_path = dir + "/effham_L.meta";
    if (!fs::exists(meta_path))
        throw ConfigError("missing prerequisite artifact '" + meta_path +
                          "' (run the effham stage first)");
    const RawConfig raw = RawConfig::parse_file(meta_path);
    SectionReader r(raw, "table");
    EffectiveLagrangianTable t;
    t.n = static_cast<int>(r.integer("n", 1));
    t.x_grid = read_grid_meta(r, "x");
    t.q_grid = read_grid_meta(r, "q");
    r.finish();

    const CsvTable csv = read_csv(dir + "/effham_L.csv");
    const std::size_t expect = static_cast<std::size_t>(t.x_grid.size()) * t.q_grid.size();
    require(csv.rows.size() == expect, "effham_L.csv row count does not match the meta grids");
    t.values.resize(expect);
    for (std::size_t k = 0; k < expect; ++k)
        t.values[k] = csv.num(k, 2 * static_cast<std::size_t>(t.n));
    return t;
}

namespace {

void stage_validate(const RunConfig& cfg, State& st, PipelineResult& res) {
    const ValidationReport rep = validate_model(st.spec, cfg.validate_budget, cfg.seed);
    CsvWriter w(cfg.out_dir + "/validate_report.csv",
                {"check", "pass", "worst_margin", "witness"});
    for (const auto& c : rep.checks) {
        std::ostringstream wit;
        wit << "\"y=(";
        for (double v : c.witness_y) wit << CsvWriter::fmt(v) << " ";
        wit << ")\"";
        w.row_mixed({c.name, c.pass ? "1" : "0", CsvWriter::fmt(c.worst_margin), wit.str()});
    }
    add(res, "validate", "model assumptions hold on sampled points", rep.pass ? 1.0 : 0.0, 1.0,
        rep.pass);

    // Liapounov sweep: a in {0.1, 0.5, 0.9} B/(2T), pbar on the unit sphere
    const LiapounovSpec base = liapounov_coefficient(st.spec);
    const double a_max = st.spec.B_ergodic / (2.0 * base.T_tau);
    std::vector<double> radii;
    for (double r = std::max(1.0, st.spec.R_ergodic); radii.size() < 5; r *= 1.7)
        radii.push_back(r);
    bool lia_ok = true;
    const std::vector<double> xbar(st.spec.n, 0.0);
    for (double frac : {0.1, 0.5, 0.9}) {
        LiapounovSpec l{frac * a_max, base.T_tau};
        for (double pdir : {1.0, -1.0}) {
            std::vector<double> pbar(st.spec.n, 0.0);
            pbar[0] = pdir;
            const LiapounovReport lr = check_liapounov(st.spec, l, xbar, pbar, radii);
            lia_ok = lia_ok && lr.pass;
        }
    }
    add(res, "liapounov", "G[chi] diverges for a in (0, B/2T)", lia_ok ? 1.0 : 0.0, 1.0, lia_ok);
}

void stage_measure(const RunConfig& cfg, State& st, PipelineResult& res) {
    st.mu = solve_stationary_fp(st.spec, st.measure_grid);
    const Grid& g = st.measure_grid.grid;
    std::vector<std::string> cols;
    for (int d = 0; d < g.dim(); ++d) cols.push_back("y" + std::to_string(d));
    cols.push_back("density");
    CsvWriter w(cfg.out_dir + "/measure_density.csv", cols);
    for (int i = 0; i < g.size(); ++i) {
        std::vector<std::string> cells;
        for (double v : grid_node(g, i)) cells.push_back(CsvWriter::fmt(v));
        cells.push_back(CsvWriter::fmt(st.mu->density[i]));
        w.row_mixed(cells);
    }
    add(res, "measure_mass", "stationary density mass = 1", st.mu->mass, 1e-10,
        std::abs(st.mu->mass - 1.0) <= 1e-10);

    if (st.spec.fast_global_ou) {
        const GaussianMeasure ga = ou_analytic_measure(st.spec.b_far, st.spec.tau_far, st.spec.m);
        const double l1 = l1_distance_to_gaussian(*st.mu, ga);
        add(res, "measure_ou_l1", "L1 distance to the analytic OU Gaussian", l1, 1e-3,
            l1 <= 1e-3);
    }
}

void stage_cell(const RunConfig& cfg, State& st, PipelineResult& res) {
    const Regime regime = st.spec.regime();
    const std::vector<double>& xbar = st.cell_xbar;
    const std::vector<double>& pbar = st.cell_pbar;

    // probe solves across the delta ladder
    std::vector<CellSolution> sols;
    for (double d : cfg.cell_deltas) {
        sols.push_back(regime == Regime::supercritical
                           ? solve_cell_super(st.spec, xbar, pbar, d, st.fast_grid)
                           : solve_cell_critical(st.spec, xbar, pbar, d, st.fast_grid));
    }
    {
        const Grid& g = st.fast_grid.grid;
        std::vector<std::string> cols;
        for (int d = 0; d < g.dim(); ++d) cols.push_back("y" + std::to_string(d));
        cols.push_back("w");
        CsvWriter w(cfg.out_dir + "/cell_w.csv", cols);
        for (int i = 0; i < g.size(); ++i) {
            std::vector<std::string> cells;
            for (double v : grid_node(g, i)) cells.push_back(CsvWriter::fmt(v));
            cells.push_back(CsvWriter::fmt(sols.back().w[i]));
            w.row_mixed(cells);
        }
        std::ofstream meta(cfg.out_dir + "/cell_w.meta");
        meta << "[cell]\n";
        meta << "regime = " << regime_name(regime) << "\n";
        meta << "delta = " << CsvWriter::fmt(sols.back().delta) << "\n";
        meta << "lambda_est = " << CsvWriter::fmt(sols.back().lambda_est) << "\n";
        meta << "residual_inf = " << CsvWriter::fmt(sols.back().residual_inf) << "\n";
        write_grid_meta(meta, "y", g);
    }
    add(res, "cell_bounds", "delta-problem bounds hold at every node (enforced in-solver)", 1.0,
        1.0, true);

    // delta-uniform Lipschitz over {1e-2, 1e-3, 1e-4}
    std::vector<CellSolution> lips;
    for (double d : {1e-2, 1e-3, 1e-4})
        lips.push_back(regime == Regime::supercritical
                           ? solve_cell_super(st.spec, xbar, pbar, d, st.fast_grid)
                           : solve_cell_critical(st.spec, xbar, pbar, d, st.fast_grid));
    const LipschitzReport lr = lipschitz_report(lips);
    {
        CsvWriter w(cfg.out_dir + "/cell_lipschitz.csv", {"delta", "max_gradient"});
        for (std::size_t i = 0; i < lr.deltas.size(); ++i)
            w.row({lr.deltas[i], lr.max_gradient[i]});
    }
    add(res, "cell_lipschitz", "max |Dw_delta| varies <= 10% across two delta decades", lr.ratio,
        1.1, lr.pass);

    const CorrectorField corr =
        vanishing_discount(st.spec, xbar, pbar, regime, cfg.cell_deltas, st.fast_grid);
    const GrowthReport gr = growth_check(st.fast_grid, corr.w, st.spec.R_ergodic);
    add(res, "cell_growth", "corrector log-growth constant stable on the half-domain",
        gr.cbar == 0.0 ? 0.0 : std::abs(gr.cbar - gr.cbar_half) / std::max(gr.cbar, 1e-12), 0.2,
        gr.pass);

    if (regime == Regime::critical) {
        const ConvexFlipResult cf = convex_flip_residual(corr, st.spec);
        add(res, "cell_convex_flip", "convex-form residual <= 2x concave-form residual",
            cf.convex_residual, 2.0 * cf.primal_residual + 1e-12, cf.pass);
        if (st.spec.m == 1) {
            const double ev = hopf_cole_crosscheck(st.spec, xbar, pbar, st.fast_grid);
            add(res, "cell_hopf_cole", "vanishing-discount lambda vs principal eigenvalue",
                std::abs(corr.lambda - ev), 1e-3, std::abs(corr.lambda - ev) <= 1e-3);
        }
    } else {
        if (!st.mu) st.mu = solve_stationary_fp(st.spec, st.measure_grid);
        const double hsuper = effective_h_super(st.spec, xbar, pbar, *st.mu);
        add(res, "cell_super_vs_measure",
            "vanishing-discount lambda vs invariant-measure integral",
            std::abs(corr.lambda - hsuper), 5e-3, std::abs(corr.lambda - hsuper) <= 5e-3);
    }
}

void stage_effham(const RunConfig& cfg, State& st, PipelineResult& res) {
    const Grid xg = st.spec.n == 1 ? Grid::box1d(cfg.x_min, cfg.x_max, cfg.x_h)
                                   : Grid::box2d(cfg.x_min, cfg.x_max, cfg.x_min, cfg.x_max,
                                                 cfg.x_h);
    const Grid pg = st.spec.n == 1 ? Grid::box1d(cfg.p_min, cfg.p_max, cfg.p_h)
                                   : Grid::box2d(cfg.p_min, cfg.p_max, cfg.p_min, cfg.p_max,
                                                 cfg.p_h);
    TabulateOptions topt;
    topt.deltas = cfg.cell_deltas;
    topt.threads = cfg.threads;
    st.H = tabulate_H(st.spec, st.spec.regime(), xg, pg, st.fast_grid, topt);
    save_table_H(*st.H, cfg.out_dir);

    std::vector<double> ysamp;
    const int ny = 51;
    for (int i = 0; i < ny; ++i)
        ysamp.push_back(-st.fast_grid.y_max() +
                        2.0 * st.fast_grid.y_max() * i / static_cast<double>(ny - 1));
    const PropertyReport pr = property_suite(*st.H, st.spec, ysamp);
    {
        CsvWriter w(cfg.out_dir + "/effham_properties.csv",
                    {"check", "pass", "measured"});
        w.row_mixed({"bounds", pr.bounds_pass ? "1" : "0", CsvWriter::fmt(pr.worst_bounds_margin)});
        w.row_mixed({"convexity", pr.convexity_pass ? "1" : "0",
                     CsvWriter::fmt(pr.worst_convexity)});
        w.row_mixed({"semi_homogeneity", pr.semihomo_pass ? "1" : "0",
                     CsvWriter::fmt(pr.worst_semihomo_margin)});
        w.row_mixed({"zero_row", pr.zero_row_pass ? "1" : "0", "0"});
        w.row_mixed({"continuity_modulus", "1", CsvWriter::fmt(pr.continuity_modulus)});
    }
    add(res, "effham_bounds", "H within [inf, sup] |sigma^T p|^2 at every node",
        pr.worst_bounds_margin, 0.0, pr.bounds_pass);
    add(res, "effham_convexity", "discrete convexity of H in p", pr.worst_convexity, -1e-8,
        pr.convexity_pass);
    add(res, "effham_semihomo", "semi-homogeneity inequality at mu in {0.25, 0.5, 0.75}",
        pr.worst_semihomo_margin, 0.0, pr.semihomo_pass);
    add(res, "effham_zero_row", "H(x, 0) = 0", pr.zero_row_pass ? 1.0 : 0.0, 1.0,
        pr.zero_row_pass);

    const Grid qg = st.spec.n == 1 ? Grid::box1d(cfg.q_min, cfg.q_max, cfg.q_h)
                                   : Grid::box2d(cfg.q_min, cfg.q_max, cfg.q_min, cfg.q_max,
                                                 cfg.q_h);
    st.L = legendre_transform_all(*st.H, qg);
    save_table_L(*st.L, cfg.out_dir);
}

void require_tables(const RunConfig& cfg, State& st) {
    if (!st.H) st.H = load_table_H(cfg.out_dir);
    if (!st.L) st.L = load_table_L(cfg.out_dir);
}

// Lagrangian on a DP grid fine enough that the velocity quantum x_h K / t
// resolves the tabulated slopes.
EffectiveLagrangianTable dp_lagrangian(const RunConfig& cfg, const State& st) {
    const Grid& xg = st.H->x_grid;
    Grid fine;
    if (st.spec.n == 1)
        fine = Grid::box1d(xg.axis_lo(0), xg.axis_hi(0), cfg.rate_x_h);
    else
        fine = Grid::box2d(xg.axis_lo(0), xg.axis_hi(0), xg.axis_lo(1), xg.axis_hi(1),
                           cfg.rate_x_h);
    const Grid qg = st.spec.n == 1
                        ? Grid::box1d(cfg.q_min, cfg.q_max, cfg.q_h)
                        : Grid::box2d(cfg.q_min, cfg.q_max, cfg.q_min, cfg.q_max, cfg.q_h);
    return legendre_transform_all(resample_x(*st.H, fine), qg);
}

void stage_hj(const RunConfig& cfg, State& st, PipelineResult& res) {
    require_tables(cfg, st);
    require(st.spec.n == 1, "hj stage: n = 1 solver grid configured");
    const Grid xg = Grid::box1d(cfg.hj_x_min, cfg.hj_x_max, cfg.hj_x_h);
    st.hj = solve_effective_hj(*st.H, st.payoff, cfg.hj_T, xg, cfg.hj_cfl);
    {
        CsvWriter w(cfg.out_dir + "/hj_solution.csv", {"t", "x", "v"});
        for (int i = 0; i < xg.size(); ++i)
            w.row({cfg.hj_T, xg.coord1(i), st.hj->v[i]});
    }
    add(res, "hj_invariants", "v(0,.) = h, v non-decreasing in t, a-priori band (in-solver)", 1.0,
        1.0, true);

    if (st.spec.family == "ou_constant") {
        // constant sigma: H = (s0 p)^2, Hopf-Lax closed form applies
        double s0 = 1.0;
        {
            double sv;
            const double x0 = 0.0, y0 = 0.0;
            st.spec.sigma(std::span<const double>(&x0, 1), std::span<const double>(&y0, 1),
                          std::span<double>(&sv, 1));
            s0 = sv;
        }
        double sup_err = 0.0;
        for (int i = 0; i < xg.size(); ++i) {
            const double x = xg.coord1(i);
            if (std::abs(x) > 0.75 * std::max(std::abs(cfg.hj_x_min), cfg.hj_x_max)) continue;
            const double hl = hopf_lax_oracle(s0 * s0, st.payoff, cfg.hj_T, x, cfg.hj_x_min,
                                              cfg.hj_x_max);
            sup_err = std::max(sup_err, std::abs(st.hj->v[i] - hl));
        }
        add(res, "hj_hopf_lax", "interior sup error against the Hopf-Lax formula", sup_err, 2e-2,
            sup_err <= 2e-2);
    }
}

void stage_rate(const RunConfig& cfg, State& st, PipelineResult& res) {
    require_tables(cfg, st);
    const EffectiveLagrangianTable lag = dp_lagrangian(cfg, st);
    CsvWriter sum(cfg.out_dir + "/rate_summary.csv", {"t", "x0", "x", "I"});
    int idx = 0;
    bool quad_ok = true;
    double worst_rel = 0.0;
    for (double t : cfg.rate_t_list) {
        const RateFunctionResult rr =
            rate_function(lag, cfg.rate_x0, cfg.rate_x, t, cfg.rate_k_steps);
        sum.row({t, cfg.rate_x0[0], cfg.rate_x[0], rr.I});
        CsvWriter pw(cfg.out_dir + "/rate_path_" + std::to_string(idx++) + ".csv", {"t", "x"});
        for (std::size_t k = 0; k < rr.path.size(); ++k) pw.row({rr.path_times[k], rr.path[k][0]});

        if (st.spec.family == "ou_constant" && st.spec.n == 1) {
            double sv;
            const double x0 = 0.0, y0 = 0.0;
            st.spec.sigma(std::span<const double>(&x0, 1), std::span<const double>(&y0, 1),
                          std::span<double>(&sv, 1));
            const double dx = cfg.rate_x[0] - cfg.rate_x0[0];
            const double exact = dx * dx / (4.0 * sv * sv * t);
            const double rel = std::abs(rr.I - exact) / std::max(std::abs(exact), 1e-12);
            worst_rel = std::max(worst_rel, rel);
            if (rel > 1e-2) quad_ok = false;
        }
    }
    if (st.spec.family == "ou_constant" && st.spec.n == 1)
        add(res, "rate_quadratic", "I = (x-x0)^2/(4 c t) for the constant-sigma family",
            worst_rel, 1e-2, quad_ok);
}

void stage_mc(const RunConfig& cfg, State& st, PipelineResult& res) {
    McOptions mo;
    mo.dt = cfg.mc_dt;
    mo.n_paths = cfg.mc_n_paths;
    mo.seed = cfg.seed;
    mo.threads = cfg.threads;
    CsvWriter w(cfg.out_dir + "/mc_v_eps.csv",
                {"eps", "estimate", "std_error", "ess", "n_paths", "seed"});
    st.mc_rows.clear();
    bool none_degenerate = true;
    for (double eps : cfg.mc_eps_list) {
        const MCEstimate e =
            estimate_v_eps(st.spec, eps, cfg.mc_t, cfg.mc_x0, cfg.mc_y0, st.payoff, mo);
        w.row({eps, e.value, e.std_error, e.effective_sample_size,
               static_cast<double>(e.n_paths), static_cast<double>(e.seed)});
        st.mc_rows.push_back(e);
        none_degenerate = none_degenerate && !e.degenerate;
    }
    add(res, "mc_ess", "no exponential degeneracy across the eps sweep", none_degenerate ? 1.0 : 0.0,
        1.0, none_degenerate);
}

void stage_pde2d(const RunConfig& cfg, State& st, PipelineResult& res) {
    require(st.spec.n == 1 && st.spec.m == 1, "pde2d stage requires n = m = 1");
    const Grid g2 = Grid::box2d(cfg.pde_x_min, cfg.pde_x_max, -st.fast_grid.y_max(),
                                st.fast_grid.y_max(), cfg.pde_h);
    McOptions mo;
    mo.dt = cfg.mc_dt;
    mo.n_paths = cfg.mc_n_paths;
    mo.seed = cfg.seed;
    mo.threads = cfg.threads;

    CsvWriter w(cfg.out_dir + "/pde_vs_mc.csv", {"eps", "v_pde", "v_mc", "se_mc", "abs_diff"});
    bool all_ok = true;
    double worst = 0.0;
    for (double eps : cfg.mc_eps_list) {
        if (eps < 0.02) continue;
        EpsPdeOptions po;
        po.dt = cfg.pde_dt;
        const EpsPdeSolution ps = solve_eps_pde(st.spec, eps, st.payoff, cfg.mc_t, g2, po);
        const MCEstimate e =
            estimate_v_eps(st.spec, eps, cfg.mc_t, cfg.mc_x0, cfg.mc_y0, st.payoff, mo);
        const double vp = ps.value_at(cfg.mc_x0[0], cfg.mc_y0[0]);
        const double diff = std::abs(vp - e.value);
        const double tol = 3.0 * e.std_error + 2e-2;
        w.row({eps, vp, e.value, e.std_error, diff});
        worst = std::max(worst, diff - tol);
        if (diff > tol) all_ok = false;
    }
    add(res, "pde_vs_mc", "|eps-PDE - MC| <= 3 SE + 2e-2 at matched parameters", worst, 0.0,
        all_ok);

    // final-time slice artifact
    {
        EpsPdeOptions po;
        po.dt = cfg.pde_dt;
        const double eps0 = cfg.mc_eps_list.front();
        if (eps0 >= 0.02) {
            const EpsPdeSolution ps = solve_eps_pde(st.spec, eps0, st.payoff, cfg.mc_t, g2, po);
            CsvWriter sw(cfg.out_dir + "/pde_slice.csv", {"t", "x", "y", "v"});
            for (int i = 0; i < g2.axis_nodes(0); ++i)
                for (int j = 0; j < g2.axis_nodes(1); ++j)
                    sw.row({cfg.mc_t, g2.axis_lo(0) + i * g2.h(), g2.axis_lo(1) + j * g2.h(),
                            ps.v[static_cast<std::size_t>(i) * g2.axis_nodes(1) + j]});
        }
    }
}

void stage_ldp(const RunConfig& cfg, State& st, PipelineResult& res) {
    require_tables(cfg, st);

    // convergence chain against the hj limit
    if (st.spec.n == 1 && st.hj) {
        ConvergenceOptions co;
        co.mc.dt = cfg.mc_dt;
        co.mc.n_paths = cfg.mc_n_paths;
        co.mc.seed = cfg.seed;
        co.mc.threads = cfg.threads;
        co.run_pde = st.spec.m == 1;
        co.pde_dt = cfg.pde_dt;
        Grid g2;
        if (co.run_pde) {
            g2 = Grid::box2d(cfg.pde_x_min, cfg.pde_x_max, -st.fast_grid.y_max(),
                             st.fast_grid.y_max(), cfg.pde_h);
            co.pde_grid = &g2;
        }
        const ConvergenceStudy cs = convergence_study(st.spec, st.payoff, cfg.mc_t, cfg.mc_x0,
                                                      cfg.mc_y0, cfg.mc_eps_list, *st.hj, co);
        CsvWriter w(cfg.out_dir + "/convergence_study.csv",
                    {"eps", "v_mc", "se_mc", "v_pde", "v_limit", "dev_mc", "dev_pde", "usable"});
        for (const auto& r : cs.rows)
            w.row({r.eps, r.v_mc, r.se_mc, r.v_pde.value_or(std::nan("")), r.v_limit, r.dev_mc,
                   r.dev_pde.value_or(std::nan("")), r.usable ? 1.0 : 0.0});
        add(res, "convergence_monotone", "|v_eps - v| decreasing (<= 1 inversion within 2 SE)",
            static_cast<double>(cs.inversions), 1.0, cs.monotone_pass);
        add(res, "convergence_ratio", "dev(eps_min) <= 0.7 dev(eps_max)", cs.ratio_last_first,
            0.7, cs.ratio_last_first <= 0.7 && cs.ratio_last_first > 0.0);
    }

    TargetSet B;
    B.kind = TargetSet::Kind::half_space;
    B.normal.assign(st.spec.n, 0.0);
    B.normal[0] = 1.0;
    B.level = cfg.ldp_level;
    LdpOptions lo;
    lo.mc.dt = cfg.mc_dt;
    lo.mc.n_paths = cfg.ldp_n_paths;
    lo.mc.seed = cfg.seed;
    lo.mc.threads = cfg.threads;
    lo.k_steps = cfg.rate_k_steps;
    const EffectiveLagrangianTable lag = dp_lagrangian(cfg, st);
    const LDPReport rep = ldp_check(st.spec, B, cfg.ldp_t, cfg.mc_x0, cfg.mc_y0, cfg.ldp_eps_list,
                                    lag, lo);
    {
        CsvWriter w(cfg.out_dir + "/ldp_report.csv",
                    {"eps", "p_hat", "std_error", "eps_log_p", "usable"});
        for (const auto& r : rep.rows)
            w.row({r.eps, r.p_hat, r.std_error, r.eps_log_p, r.usable ? 1.0 : 0.0});
        CsvWriter v(cfg.out_dir + "/ldp_verdict.csv",
                    {"rate_inf", "fit_slope", "band", "verdict"});
        const std::string verdict = rep.verdict == LDPReport::Verdict::pass
                                        ? "pass"
                                        : (rep.verdict == LDPReport::Verdict::fail ? "fail"
                                                                                   : "inconclusive");
        v.row_mixed({CsvWriter::fmt(rep.rate_inf), CsvWriter::fmt(rep.fit_slope),
                     CsvWriter::fmt(rep.band), verdict});
    }
    add(res, "ldp_slope", "least-squares slope of log P vs 1/eps within 15% of -rate_inf",
        rep.fit_slope, -rep.rate_inf, rep.verdict == LDPReport::Verdict::pass);
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& cfg) {
    PipelineResult res;
    fs::create_directories(cfg.out_dir);

    State st;
    st.spec = make_family(cfg.family, cfg.family_params);
    estimate_bounds(st.spec);
    const double ymax_default =
        8.0 * std::max({1.0, st.spec.R_ergodic, st.spec.R1});
    const double ymax = cfg.fast_y_max > 0.0 ? cfg.fast_y_max : ymax_default;
    const double hy = cfg.fast_h > 0.0 ? cfg.fast_h : (st.spec.m == 1 ? 0.05 : 0.1);
    st.fast_grid = FastGrid(st.spec.m, ymax, hy);
    st.measure_grid = FastGrid(st.spec.m, ymax, st.spec.m == 1 ? cfg.measure_h : hy);
    st.payoff = make_payoff(cfg.payoff_name, cfg.payoff_params, st.spec.n);
    st.cell_xbar = cfg.cell_xbar;
    st.cell_pbar = cfg.cell_pbar;
    require(static_cast<int>(cfg.cell_xbar.size()) == st.spec.n,
            "config: cell.xbar dimension mismatch");
    require(static_cast<int>(cfg.cell_pbar.size()) == st.spec.n,
            "config: cell.pbar dimension mismatch");

    const std::set<std::string> selected(cfg.stages.begin(), cfg.stages.end());
    const auto want = [&](const std::string& s) { return selected.count(s) > 0; };

    if (want("validate")) stage_validate(cfg, st, res);
    if (want("measure")) stage_measure(cfg, st, res);
    if (want("cell")) stage_cell(cfg, st, res);
    if (want("effham")) stage_effham(cfg, st, res);
    if (want("hj")) stage_hj(cfg, st, res);
    if (want("rate")) stage_rate(cfg, st, res);
    if (want("mc")) stage_mc(cfg, st, res);
    if (want("pde2d")) stage_pde2d(cfg, st, res);
    if (want("ldp")) stage_ldp(cfg, st, res);

    CsvWriter sum(cfg.out_dir + "/summary.csv",
                  {"verdict", "description", "measured", "threshold", "pass"});
    bool all_pass = true;
    for (const auto& v : res.verdicts) {
        sum.row_mixed({v.id, "\"" + v.description + "\"", CsvWriter::fmt(v.measured),
                       CsvWriter::fmt(v.threshold), v.pass ? "1" : "0"});
        all_pass = all_pass && v.pass;
    }
    res.exit_code = all_pass ? ExitCode::ok : ExitCode::verdict_failure;
    return res;
}

}  // namespace svhom
