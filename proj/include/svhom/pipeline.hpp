#pragma once

#include <optional>
#include <string>
#include <vector>

#include "svhom/config.hpp"
#include "svhom/effham.hpp"
#include "svhom/errors.hpp"

namespace svhom {

struct Verdict {
    std::string id;
    std::string description;
    double measured = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct PipelineResult {
    std::vector<Verdict> verdicts;
    ExitCode exit_code = ExitCode::ok;
};

// Executes the selected stages in dependency order
// (validate -> cell/measure -> effham -> hj/rate -> mc/pde2d -> ldp),
// writing per-stage CSV artifacts and a machine-readable summary into
// cfg.out_dir. Missing prerequisites of individually selected stages are
// loaded from earlier artifacts in the same directory.
PipelineResult run_pipeline(const RunConfig& cfg);

// Table artifact round-trips (17-significant-digit CSV plus a sidecar meta).
void save_table_H(const EffectiveHamiltonianTable& t, const std::string& dir);
EffectiveHamiltonianTable load_table_H(const std::string& dir);
void save_table_L(const EffectiveLagrangianTable& t, const std::string& dir);
EffectiveLagrangianTable load_table_L(const std::string& dir);

}  // namespace svhom
