#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "svhom/config.hpp"
#include "svhom/csv.hpp"

using namespace svhom;

namespace {

std::string write_tmp(const std::string& name, const std::string& text) {
    const std::string path = "/tmp/svhom_test_" + name;
    std::ofstream out(path);
    out << text;
    return path;
}

}  // namespace

TEST_CASE("raw config: sections, typed values, comments, quoting") {
    const RawConfig raw = RawConfig::parse_string(
        "# top comment\n"
        "[model]\n"
        "family = \"bump\"  # inline comment\n"
        "alpha = 2.0\n"
        "params.s0 = 1.5\n"
        "[run]\n"
        "stages = [validate, cell]\n"
        "seed = 42\n"
        "flag = true\n");
    SectionReader model(raw, "model");
    CHECK(model.text("family", "") == "bump");
    CHECK(model.number("alpha", 0.0) == 2.0);
    const auto params = model.number_group("params.");
    CHECK(params.at("s0") == 1.5);
    model.finish();

    SectionReader run(raw, "run");
    const auto stages = run.texts("stages", {});
    REQUIRE(stages.size() == 2);
    CHECK(stages[0] == "validate");
    CHECK(run.integer("seed", 0) == 42);
    CHECK(run.boolean("flag", false));
    run.finish();
}

TEST_CASE("unknown keys, duplicate keys and malformed lines are errors") {
    {
        const RawConfig raw = RawConfig::parse_string("[model]\nfamilly = \"x\"\n");
        SectionReader r(raw, "model");
        r.text("family", "");
        CHECK_THROWS_AS(r.finish(), ConfigError);
    }
    CHECK_THROWS_AS(RawConfig::parse_string("[model]\na = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(RawConfig::parse_string("loose = 1\n"), ConfigError);
    CHECK_THROWS_AS(RawConfig::parse_string("[model\n"), ConfigError);
    CHECK_THROWS_AS(RawConfig::parse_string("[model]\nkey\n"), ConfigError);
}

TEST_CASE("RunConfig: load, defaults, stage and section validation") {
    const std::string path = write_tmp("good.cfg",
                                       "[run]\n"
                                       "stages = [validate]\n"
                                       "seed = 7\n"
                                       "[model]\n"
                                       "family = \"ou_constant\"\n"
                                       "alpha = 2.0\n"
                                       "params.s0 = 1.0\n");
    const RunConfig cfg = RunConfig::load(path);
    CHECK(cfg.family == "ou_constant");
    CHECK(cfg.seed == 7);
    CHECK(cfg.stages.size() == 1);
    CHECK(cfg.mc_n_paths == 100000);  // default

    const std::string bad_stage = write_tmp("badstage.cfg",
                                            "[run]\nstages = [frobnicate]\n[model]\nfamily = \"bump\"\n");
    CHECK_THROWS_AS(RunConfig::load(bad_stage), ConfigError);

    const std::string bad_section = write_tmp("badsec.cfg",
                                              "[modle]\nfamily = \"bump\"\n");
    CHECK_THROWS_AS(RunConfig::load(bad_section), ConfigError);

    const std::string no_family = write_tmp("nofam.cfg", "[run]\nseed = 1\n");
    CHECK_THROWS_AS(RunConfig::load(no_family), ConfigError);

    CHECK_THROWS_AS(RunConfig::load("/nonexistent/svhom.cfg"), ConfigError);
}

TEST_CASE("csv writer emits 17-significant-digit round-trippable floats") {
    const std::string path = "/tmp/svhom_test_roundtrip.csv";
    {
        CsvWriter w(path, {"a", "b"});
        w.row({1.0 / 3.0, 2.0e-17});
        w.row({-0.1, 123456789.123456789});
    }
    const CsvTable t = read_csv(path);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.num(0, 0) == 1.0 / 3.0);
    CHECK(t.num(0, 1) == 2.0e-17);
    CHECK(t.num(1, 0) == -0.1);
    CHECK(t.num(1, 1) == 123456789.123456789);
}
