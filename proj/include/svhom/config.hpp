#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "svhom/errors.hpp"

namespace svhom {

// Strict sectioned key=value configuration. Sections are [name]; values are
// numbers, booleans, quoted or bare strings, or [comma, separated] lists.
// Every key must be consumed by the schema; unknown keys are errors.
struct RawConfig {
    // section -> key -> raw value text
    std::map<std::string, std::map<std::string, std::string>> sections;

    static RawConfig parse_file(const std::string& path);
    static RawConfig parse_string(const std::string& text);
};

// Typed view over one section that records consumed keys.
class SectionReader {
public:
    SectionReader(const RawConfig& cfg, const std::string& section);

    bool has(const std::string& key) const;
    double number(const std::string& key, double fallback);
    double number_required(const std::string& key);
    std::int64_t integer(const std::string& key, std::int64_t fallback);
    bool boolean(const std::string& key, bool fallback);
    std::string text(const std::string& key, const std::string& fallback);
    std::vector<double> numbers(const std::string& key, std::vector<double> fallback);
    std::vector<std::string> texts(const std::string& key, std::vector<std::string> fallback);
    // all keys with the given prefix ("params.") as a name -> number map
    std::map<std::string, double> number_group(const std::string& prefix);

    void finish();  // throws on unconsumed keys

private:
    std::string raw(const std::string& key);
    const std::map<std::string, std::string>* kv_;
    std::string section_;
    std::map<std::string, bool> consumed_;
};

struct StageSelection {
    std::vector<std::string> stages;
};

// Full run configuration for the pipeline; every field has a default except
// the model family.
struct RunConfig {
    std::string config_path;

    std::vector<std::string> stages;
    std::string out_dir = "out";
    std::uint64_t seed = 12345;
    int threads = 1;

    std::string family;
    std::map<std::string, double> family_params;

    double fast_y_max = 0.0;  // 0: default 8 max(1, R, R1)
    double fast_h = 0.0;      // 0: default 0.05 (m=1) or 0.1 (m=2)

    int validate_budget = 4096;

    std::vector<double> cell_deltas = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
    std::vector<double> cell_xbar = {0.0};
    std::vector<double> cell_pbar = {1.0};

    double measure_h = 0.02;

    double x_min = -4.0, x_max = 4.0, x_h = 0.5;       // effham x grid
    double p_min = -5.0, p_max = 5.0, p_h = 0.25;      // effham p grid
    double q_min = -10.0, q_max = 10.0, q_h = 0.05;    // lagrangian q grid

    std::string payoff_name = "gauss";
    std::map<std::string, double> payoff_params;

    double hj_T = 0.5;
    double hj_cfl = 0.8;
    double hj_x_min = -4.0, hj_x_max = 4.0, hj_x_h = 0.02;

    std::vector<double> rate_x0 = {0.0};
    std::vector<double> rate_x = {2.0};
    std::vector<double> rate_t_list = {1.0, 0.5};
    int rate_k_steps = 16;
    double rate_x_h = 0.03125;  // DP state grid spacing (velocity quantum = x_h K / t)

    std::vector<double> mc_eps_list = {0.4, 0.2, 0.1};
    std::int64_t mc_n_paths = 100000;
    double mc_t = 0.5;
    double mc_dt = 0.01;
    std::vector<double> mc_x0 = {0.0};
    std::vector<double> mc_y0 = {0.0};

    double pde_x_min = -4.0, pde_x_max = 4.0;
    double pde_h = 0.1;
    double pde_dt = 1e-3;

    double ldp_level = 1.0;  // B = {x : x_0 >= level}
    std::vector<double> ldp_eps_list = {0.4, 0.3, 0.2, 0.15, 0.1};
    std::int64_t ldp_n_paths = 1000000;
    double ldp_t = 1.0;

    static RunConfig load(const std::string& path);
};

const std::vector<std::string>& known_stages();

}  // namespace svhom
