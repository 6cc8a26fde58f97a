#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "svhom/pipeline.hpp"

using namespace svhom;
namespace fs = std::filesystem;

namespace {

std::string small_config_text(const std::string& out_dir, int threads,
                              const std::string& stages) {
    std::ostringstream os;
    os << "[run]\n"
       << "stages = " << stages << "\n"
       << "out = \"" << out_dir << "\"\n"
       << "seed = 2024\n"
       << "threads = " << threads << "\n"
       << "[model]\n"
       << "family = \"bump\"\n"
       << "alpha = 2.0\n"
       << "params.s0 = 1.0\n"
       << "params.beta = 1.0\n"
       << "[validate]\n"
       << "budget = 1000\n"
       << "[cell]\n"
       << "deltas = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]\n"
       << "[effham]\n"
       << "x_min = -1.0\nx_max = 1.0\nx_h = 1.0\n"
       << "p_min = -2.0\np_max = 2.0\np_h = 0.25\n"
       << "q_min = -8.0\nq_max = 8.0\nq_h = 0.1\n"
       << "[hj]\n"
       << "payoff = \"gauss\"\n"
       << "payoff_params.a = 1.0\n"
       << "payoff_params.k = 1.0\n"
       << "T = 0.25\n"
       << "x_h = 0.05\n"
       << "[mc]\n"
       << "eps_list = [0.4, 0.2, 0.1]\n"
       << "n_paths = 4000\n"
       << "t = 0.25\n"
       << "[rate]\n"
       << "x = [1.0]\n"
       << "x_h = 0.0625\n"
       << "t_list = [1.0]\n"
       << "[ldp]\n"
       << "level = 0.75\n"
       << "eps_list = [0.4, 0.3, 0.2]\n"
       << "n_paths = 8000\n"
       << "[pde2d]\n"
       << "h = 0.2\n"
       << "dt = 2e-3\n";
    return os.str();
}

RunConfig load_text(const std::string& text, const std::string& name) {
    const std::string path = "/tmp/" + name;
    std::ofstream out(path);
    out << text;
    out.close();
    return RunConfig::load(path);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("full pipeline on the 1D bump family produces artifacts and verdicts") {
    const std::string out = "/tmp/svhom_pipe_full";
    fs::remove_all(out);
    const RunConfig cfg = load_text(
        small_config_text(out, 2,
                          "[validate, cell, measure, effham, hj, rate, mc, pde2d, ldp]"),
        "pipe_full.cfg");
    const PipelineResult res = run_pipeline(cfg);
    CHECK(res.verdicts.size() >= 10);
    for (const char* f :
         {"validate_report.csv", "cell_w.csv", "cell_lipschitz.csv", "measure_density.csv",
          "effham_H.csv", "effham_H.meta", "effham_L.csv", "effham_properties.csv",
          "hj_solution.csv", "rate_summary.csv", "rate_path_0.csv", "mc_v_eps.csv",
          "pde_vs_mc.csv", "convergence_study.csv", "ldp_report.csv", "ldp_verdict.csv",
          "summary.csv"})
        CHECK_MESSAGE(fs::exists(out + "/" + f), f);
}

TEST_CASE("tables round-trip bit-exactly through the artifact files") {
    const std::string out = "/tmp/svhom_pipe_full";  // reuse the previous run
    REQUIRE(fs::exists(out + "/effham_H.meta"));
    const EffectiveHamiltonianTable t = load_table_H(out);
    const EffectiveLagrangianTable l = load_table_L(out);
    CHECK(t.n == 1);
    CHECK(t.p_grid.size() == 17);
    save_table_H(t, "/tmp");
    const EffectiveHamiltonianTable t2 = load_table_H("/tmp");
    REQUIRE(t2.values.size() == t.values.size());
    for (std::size_t i = 0; i < t.values.size(); ++i) CHECK(t.values[i] == t2.values[i]);
    CHECK(l.q_grid.size() == 161);
}

TEST_CASE("stage subcommands load prerequisites and fail cleanly when missing") {
    const std::string out = "/tmp/svhom_pipe_stage";
    fs::remove_all(out);
    // hj alone without effham artifacts: missing prerequisite
    const RunConfig cfg = load_text(small_config_text(out, 1, "[hj]"), "pipe_hj.cfg");
    CHECK_THROWS_AS(run_pipeline(cfg), ConfigError);

    // effham then hj in separate invocations works
    const RunConfig cfg1 = load_text(small_config_text(out, 1, "[effham]"), "pipe_eff.cfg");
    CHECK(run_pipeline(cfg1).exit_code == ExitCode::ok);
    const RunConfig cfg2 = load_text(small_config_text(out, 1, "[hj]"), "pipe_hj2.cfg");
    CHECK(run_pipeline(cfg2).exit_code == ExitCode::ok);
}

TEST_CASE("re-running an unchanged config is byte-identical across thread counts") {
    const std::string out1 = "/tmp/svhom_pipe_det1";
    const std::string out2 = "/tmp/svhom_pipe_det2";
    fs::remove_all(out1);
    fs::remove_all(out2);
    const std::string stages = "[validate, cell, measure, effham, hj, rate, mc, ldp]";
    const RunConfig c1 = load_text(small_config_text(out1, 1, stages), "pipe_det1.cfg");
    const RunConfig c2 = load_text(small_config_text(out2, 4, stages), "pipe_det2.cfg");
    run_pipeline(c1);
    run_pipeline(c2);
    for (const char* f : {"summary.csv", "mc_v_eps.csv", "effham_H.csv", "ldp_report.csv",
                          "hj_solution.csv", "convergence_study.csv"}) {
        CHECK_MESSAGE(slurp(out1 + "/" + f) == slurp(out2 + "/" + f), f);
    }
}

TEST_CASE("unknown family is a config error naming the family") {
    const std::string text =
        "[run]\nstages = [validate]\n[model]\nfamily = \"foo\"\n";
    const RunConfig cfg = load_text(text, "pipe_bad.cfg");
    CHECK_THROWS_WITH_AS(run_pipeline(cfg), doctest::Contains("foo"), ConfigError);
}
