#include <doctest.h>

#include <sstream>

#include "fixture_run.hpp"
#include "fsel/cli.hpp"

using namespace fsel;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path fixture_config(const std::string& name, const nlohmann::json& patch = nlohmann::json::object()) {
    const auto dir = testing::fresh_temp_dir(name);
    auto j = testing::fixture_config_json(dir / "out");
    j.merge_patch(patch);
    return testing::write_fixture_config(dir, j);
}

}  // namespace

TEST_CASE("usage errors exit 1") {
    const auto none = run({});
    CHECK(none.code == kExitUsage);
    const auto unknown = run({"frobnicate"});
    CHECK(unknown.code == kExitUsage);
    CHECK((unknown.err + unknown.out).find("grid") != std::string::npos);
    CHECK(run({"grid"}).code == kExitUsage);
    CHECK(run({"grid", "--config", "/nonexistent/run.json"}).code == kExitUsage);
    CHECK(run({"grid", "--config", fixture_config("cli_badopt").string(), "--bogus"}).code == kExitUsage);
}

TEST_CASE("help exits 0") {
    const auto help = run({"--help"});
    CHECK(help.code == kExitOk);
    CHECK(help.out.find("prepare") != std::string::npos);
}

TEST_CASE("missing dataset exits 2 naming the path") {
    const auto dir = testing::fresh_temp_dir("cli_missing");
    auto j = testing::fixture_config_json(dir / "out");
    j["dataset_paths"] = {(dir / "flows_missing.csv").string()};
    const auto cfg = testing::write_fixture_config(dir, j);
    for (const char* cmd : {"prepare", "rank", "grid"}) {
        const auto r = run({cmd, "--config", cfg.string()});
        CHECK(r.code == kExitData);
        CHECK(r.err.find("flows_missing.csv") != std::string::npos);
    }
    CHECK(fs::exists(dir / "out" / "FAILED"));
}

TEST_CASE("invalid config contents exit 1") {
    const auto cfg = fixture_config("cli_badcfg", {{"baseline_fraction", 2.0}});
    CHECK(run({"grid", "--config", cfg.string()}).code == kExitUsage);
}

TEST_CASE("grid then report re-emits the same tables") {
    const auto cfg = fixture_config("cli_grid");
    const auto out = cfg.parent_path() / "out";
    const auto r = run({"grid", "--config", cfg.string(), "--threads", "2"});
    REQUIRE(r.code == kExitOk);
    CHECK(fs::exists(out / "accuracy_grid.csv"));
    CHECK_FALSE(fs::exists(out / "FAILED"));

    const auto again = cfg.parent_path() / "again";
    const auto rep = run({"report", "--input", (out / "grid_result.json").string(), "--out", again.string()});
    REQUIRE(rep.code == kExitOk);
    for (const char* f : {"accuracy_grid.csv", "metrics.csv", "curves_l1.csv", "common_features.csv"}) {
        CHECK(testing::read_file(out / f) == testing::read_file(again / f));
    }
    CHECK(run({"report", "--input", (out / "missing.json").string()}).code == kExitData);
}

TEST_CASE("seed override and include-problematic") {
    const auto cfg = fixture_config("cli_seed", {{"experiments", "none"}});
    const auto out = cfg.parent_path() / "out";
    REQUIRE(run({"grid", "--config", cfg.string(), "--seed", "99"}).code == kExitOk);
    auto manifest = nlohmann::json::parse(testing::read_file(out / "manifest.json"));
    CHECK(manifest.at("config").at("seed") == 99);
    CHECK(manifest.at("row_counts").at("sampled") == 300);

    REQUIRE(run({"grid", "--config", cfg.string(), "--include-problematic"}).code == kExitOk);
    manifest = nlohmann::json::parse(testing::read_file(out / "manifest.json"));
    CHECK(manifest.at("config").at("include_problematic") == true);
    CHECK(manifest.at("row_counts").at("sampled") == 360);
}

TEST_CASE("prepare, rank and curve subcommands") {
    const auto cfg = fixture_config("cli_stages");
    const auto out = cfg.parent_path() / "out";
    REQUIRE(run({"prepare", "--config", cfg.string()}).code == kExitOk);
    const auto prepared = parse_csv(testing::read_file(out / "prepared.csv"));
    CHECK(prepared.rows.size() == 300);
    CHECK(prepared.header.size() == 13);
    CHECK(fs::exists(out / "prepared.json"));

    REQUIRE(run({"rank", "--config", cfg.string()}).code == kExitOk);
    for (const char* f : {"weights_l1.json", "weights_l2.json", "ranking_l1.csv", "ranking_l2.csv"}) {
        CHECK_MESSAGE(fs::exists(out / f), f);
    }
    const auto ranking = parse_csv(testing::read_file(out / "ranking_l1.csv"));
    CHECK(ranking.rows.size() == 12);

    REQUIRE(run({"curve", "--config", cfg.string(), "--ordering", "l2", "--model", "dt"}).code == kExitOk);
    const auto curve = parse_csv(testing::read_file(out / "curve_l2_dt.csv"));
    CHECK(curve.rows.size() == 12);
    CHECK(run({"curve", "--config", cfg.string(), "--ordering", "l3"}).code == kExitUsage);
}
