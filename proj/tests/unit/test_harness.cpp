#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "frakdiff/harness/harness.hpp"

using namespace frakdiff;
using namespace frakdiff::harness;
namespace fs = std::filesystem;

namespace {

json small_trotter() {
    return json::parse(R"({
      "kind": "verify-trotter", "seed": 9,
      "problem": {"N": 8, "alpha": {"uniform": [0.5, 1.5]},
                  "potential": {"type": "random", "modes": 2}, "shift": true, "T": 0.5},
      "method": {"systems": 2},
      "sweep": {"parameter": "r", "values": [8, 16, 32]}
    })");
}

json cost_config() {
    return json::parse(R"({
      "kind": "estimate-cost",
      "method": {"methods": ["trotter", "lchs-ip"], "model": {"d": 2, "T": 5}, "audit": true},
      "sweep": {"parameter": "epsilon", "values": [1e-2, 1e-3, 1e-4]}
    })");
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("frakdiff_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    std::string write(const std::string& name, const json& j) const {
        const auto p = path_ / name;
        std::ofstream(p) << j.dump(2);
        return p.string();
    }

private:
    fs::path path_;
};

Outcome run_file(const std::string& cfg, const fs::path& out, std::ostream& err, unsigned threads = 1,
                 std::optional<std::uint64_t> seed = std::nullopt) {
    Invocation inv;
    inv.config_path = cfg;
    inv.out_dir = out.string();
    inv.threads = threads;
    inv.seed = seed;
    inv.version = "test";
    return run_and_write(inv, err);
}

}  // namespace

// ---------------------------------------------------------------------------- config validation

TEST(Config, ParsesMinimalTrotterConfig) {
    const auto c = parse_config(small_trotter());
    EXPECT_EQ(c.kind, Kind::VerifyTrotter);
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.problem.N, 8u);
    EXPECT_DOUBLE_EQ(c.problem.alpha.lo, 0.5);
    EXPECT_DOUBLE_EQ(c.problem.alpha.hi, 1.5);
    ASSERT_TRUE(c.sweep.has_value());
    EXPECT_EQ(c.sweep->parameter, "r");
    EXPECT_EQ(c.output.stem, "verify_trotter");
}

TEST(Config, RejectsUnknownKeysAtEveryLevel) {
    auto j = small_trotter();
    j["extra"] = 1;
    EXPECT_THROW(parse_config(j), SchemaError);
    j = small_trotter();
    j["problem"]["Nx"] = 8;
    EXPECT_THROW(parse_config(j), SchemaError);
    j = small_trotter();
    j["problem"]["potential"]["amplitude"] = 1;
    EXPECT_THROW(parse_config(j), SchemaError);
}

TEST(Config, RejectsKeysForeignToTheKind) {
    auto j = small_trotter();
    j["method"]["M_carl"] = 3;
    EXPECT_THROW(parse_config(j), SchemaError);
    j = cost_config();
    j["problem"] = json::object();
    EXPECT_THROW(parse_config(j), SchemaError);
}

TEST(Config, EmptySweepIsSchemaError) {
    auto j = small_trotter();
    j["sweep"]["values"] = json::array();
    EXPECT_THROW(parse_config(j), SchemaError);
}

TEST(Config, SweepValueChecks) {
    auto j = small_trotter();
    j["sweep"]["values"] = {8, 12.5};
    EXPECT_THROW(parse_config(j), SchemaError);
    j["sweep"] = {{"parameter", "N"}, {"values", {8, 12}}};
    EXPECT_THROW(parse_config(j), SchemaError);
    j["sweep"] = {{"parameter", "Xi"}, {"values", {8}}};
    EXPECT_THROW(parse_config(j), SchemaError);
    j["sweep"] = {{"parameter", "r"}, {"values", {8, 8}}};
    EXPECT_THROW(parse_config(j), SchemaError);
}

TEST(Config, SweepValuesAreSortedAscending) {
    auto j = small_trotter();
    j["sweep"]["values"] = {64, 8, 32};
    const auto c = parse_config(j);
    EXPECT_EQ(c.sweep->values, (std::vector<double>{8, 32, 64}));
}

TEST(Config, FieldRangeChecks) {
    auto j = small_trotter();
    j["problem"]["N"] = 12;
    EXPECT_THROW(parse_config(j), SchemaError);
    j = small_trotter();
    j["problem"]["alpha"] = 2.5;
    EXPECT_THROW(parse_config(j), SchemaError);
    j = small_trotter();
    j["problem"]["T"] = "one";
    EXPECT_THROW(parse_config(j), SchemaError);
    j = small_trotter();
    j["kind"] = "verify-everything";
    EXPECT_THROW(parse_config(j), SchemaError);
    j = small_trotter();
    j["tolerances"] = {{"reference", 1e-16}};
    EXPECT_THROW(parse_config(j), SchemaError);
}

TEST(Config, TimeFunctionForms) {
    auto j = json::parse(R"({"kind": "solve-linear", "problem": {"potential": {"type": "explicit",
        "offset": {"polynomial": [1, 0.5]},
        "modes": [{"k": [1], "basis": "sin", "coefficient": {"sinusoid": {"amplitude": 0.2, "omega": 3}}}]}}})");
    const auto c = parse_config(j);
    const auto& f = c.problem.potential.explicit_field;
    ASSERT_EQ(f.modes.size(), 1u);
    EXPECT_DOUBLE_EQ(evaluate(f.offset, 2.0), 2.0);
    EXPECT_NEAR(evaluate(f.modes[0].coefficient, 0.5), 0.2 * std::sin(1.5), 1e-15);
    j["problem"]["potential"]["offset"] = {{"constant", 1}, {"polynomial", {1}}};
    EXPECT_THROW(parse_config(j), SchemaError);
}

// ---------------------------------------------------------------------------- report formatting

TEST(Report, RealsRoundTripWithSeventeenDigits) {
    for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 1e-5}) {
        const auto s = format_real(x);
        EXPECT_EQ(std::strtod(s.c_str(), nullptr), x) << s;
        EXPECT_EQ(s.find(','), std::string::npos);
    }
    EXPECT_EQ(format_real(std::nan("")), "nan");
    EXPECT_EQ(format_real(-INFINITY), "-inf");
}

TEST(Report, CsvEscapingFollowsRfc4180) {
    EXPECT_EQ(csv_escape("plain"), "plain");
    EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(csv_escape("two\nlines"), "\"two\nlines\"");
}

TEST(Report, TableRendering) {
    Table t({"name", "n", "x", "ok", "empty"});
    t.add({std::string("a,b"), 3LL, 0.5, true, Cell{}});
    EXPECT_EQ(t.to_csv(), "name,n,x,ok,empty\r\n\"a,b\",3,0.5,true,\r\n");
    EXPECT_THROW(t.add({1LL}), Error);
    EXPECT_EQ(t.describe(0), "name=a,b, n=3, x=0.5, ok=true, empty=");
}

TEST(Report, ParallelMapKeepsIndexOrder) {
    for (unsigned threads : {1u, 2u, 5u}) {
        const auto v = parallel_map(37, threads, [](std::size_t i) { return i * i; });
        ASSERT_EQ(v.size(), 37u);
        for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v[i], i * i);
    }
}

TEST(Report, ParallelMapRethrowsLowestIndexFailure) {
    try {
        parallel_map(20, 4, [](std::size_t i) -> int {
            if (i == 7 || i == 13) throw std::runtime_error("fail " + std::to_string(i));
            return 0;
        });
        FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "fail 7");
    }
}

// ---------------------------------------------------------------------------- experiments

TEST(Experiments, TrotterReportHasOneRowPerSystemAndValue) {
    const auto c = parse_config(small_trotter());
    const auto rep = run_experiment(c, {});
    EXPECT_EQ(rep.table.rows().size(), 6u);
    EXPECT_TRUE(rep.violations.empty());
    EXPECT_EQ(rep.row_seconds.size(), 6u);
    for (const auto& f : rep.results["fits"]) EXPECT_NEAR(f["slope"].get<double>(), -2.0, 0.15);
}

TEST(Experiments, FewerThanThreeValuesOmitsSlopeWithWarning) {
    auto j = small_trotter();
    j["sweep"]["values"] = {8, 16};
    const auto rep = run_experiment(parse_config(j), {});
    ASSERT_FALSE(rep.warnings.empty());
    EXPECT_NE(rep.warnings[0].find("fewer than 3"), std::string::npos);
    for (const auto& f : rep.results["fits"]) EXPECT_TRUE(f["slope"].is_null());
}

TEST(Experiments, ThreadCountDoesNotChangeTheTable) {
    const auto c = parse_config(small_trotter());
    EXPECT_EQ(run_experiment(c, {1}).table.to_csv(), run_experiment(c, {3}).table.to_csv());
}

TEST(Experiments, SeedSelectsTheSystems) {
    auto a = parse_config(small_trotter());
    auto b = a;
    b.seed = a.seed + 1;
    EXPECT_EQ(run_experiment(a, {}).table.to_csv(), run_experiment(a, {}).table.to_csv());
    EXPECT_NE(run_experiment(a, {}).table.to_csv(), run_experiment(b, {}).table.to_csv());
}

TEST(Experiments, CostTableAndExponentAudit) {
    const auto rep = run_experiment(parse_config(cost_config()), {});
    EXPECT_EQ(rep.table.rows().size(), 6u);
    ASSERT_EQ(rep.extra_tables.size(), 1u);
    EXPECT_EQ(rep.extra_tables[0].first, "exponents");
    EXPECT_EQ(rep.extra_tables[0].second.rows().size(), 8u);
    EXPECT_TRUE(rep.violations.empty());
    EXPECT_NEAR(rep.results["epsilon_slopes"]["trotter"].get<double>(), 0.5, 0.1);
}

TEST(Experiments, ScalarLchsTracksTail) {
    const auto j = json::parse(R"({"kind": "verify-lchs", "problem": {"T": 1},
        "method": {"scalar_c0": 0.001, "M_per_Xi2": 400},
        "sweep": {"parameter": "Xi", "values": [10, 20, 40]}})");
    const auto rep = run_experiment(parse_config(j), {});
    EXPECT_TRUE(rep.results["tail_tracking"].get<bool>());
    EXPECT_TRUE(rep.violations.empty());
}

TEST(Experiments, CarlemanRowsAndMonotoneFlag) {
    const auto j = json::parse(R"({"kind": "verify-carleman",
        "problem": {"N": 4, "potential": {"type": "explicit", "offset": 1}, "a": 0.3,
                    "u0": {"type": "bump", "norm": 0.3}, "T": 1},
        "method": {"times": [0.5]},
        "sweep": {"parameter": "M_carl", "values": [1, 2, 3]}})");
    const auto rep = run_experiment(parse_config(j), {});
    EXPECT_EQ(rep.table.rows().size(), 3u);
    EXPECT_TRUE(rep.results["monotone_decrease"].get<bool>());
    EXPECT_TRUE(rep.violations.empty());
}

TEST(Experiments, CarlemanRejectsTimeDependentPotential) {
    const auto j = json::parse(R"({"kind": "verify-carleman",
        "problem": {"N": 4, "potential": {"type": "random", "time_dependent": true}, "a": 0.3}})");
    EXPECT_THROW(run_experiment(parse_config(j), {}), UnsupportedError);
}

TEST(Experiments, SolveLinearWritesStateTable) {
    const auto j = json::parse(R"({"kind": "solve-linear", "seed": 4,
        "problem": {"dim": 2, "N": 4, "potential": {"type": "random"}, "shift": true, "T": 0.2},
        "method": {"solver": "trotter", "r": 16}})");
    const auto rep = run_experiment(parse_config(j), {});
    EXPECT_EQ(rep.table.header(), (std::vector<std::string>{"index", "x0", "x1", "re", "im"}));
    EXPECT_EQ(rep.table.rows().size(), 16u);
    EXPECT_LE(rep.results["error_vs_reference"].get<double>(), rep.results["bound"].get<double>());
}

// ---------------------------------------------------------------------------- end to end

TEST(EndToEnd, WritesCsvAndSummary) {
    TempDir dir;
    std::ostringstream err;
    const auto out = run_file(dir.write("c.json", cost_config()), dir.path() / "out", err);
    EXPECT_EQ(out.code, kOk) << err.str();
    ASSERT_EQ(out.files.size(), 3u);
    for (const auto& f : out.files) EXPECT_TRUE(fs::exists(f)) << f;
    const auto summary = json::parse(slurp(dir.path() / "out" / "estimate_cost.json"));
    EXPECT_EQ(summary["kind"], "estimate-cost");
    EXPECT_EQ(summary["version"], "test");
    EXPECT_EQ(summary["status"], "ok");
    EXPECT_EQ(summary["config"], cost_config());
    EXPECT_TRUE(summary.contains("wall_time_seconds"));
    EXPECT_EQ(slurp(dir.path() / "out" / "estimate_cost.csv").find("wall"), std::string::npos);
}

TEST(EndToEnd, EmptySweepExitsWithTwo) {
    TempDir dir;
    auto j = small_trotter();
    j["sweep"]["values"] = json::array();
    std::ostringstream err;
    EXPECT_EQ(run_file(dir.write("c.json", j), dir.path(), err).code, kInvalidInput);
    EXPECT_NE(err.str().find("empty"), std::string::npos);
}

TEST(EndToEnd, MalformedJsonExitsWithTwo) {
    TempDir dir;
    const auto p = dir.path() / "bad.json";
    std::ofstream(p) << "{\"kind\": ";
    std::ostringstream err;
    EXPECT_EQ(run_file(p.string(), dir.path(), err).code, kInvalidInput);
}

TEST(EndToEnd, SubcommandMustMatchKind) {
    TempDir dir;
    Invocation inv;
    inv.config_path = dir.write("c.json", cost_config());
    inv.expected_kind = "verify-lchs";
    inv.out_dir = dir.path().string();
    std::ostringstream err;
    EXPECT_EQ(run_and_write(inv, err).code, kInvalidInput);
}

TEST(EndToEnd, BoundViolationExitsWithOneAndNamesTheRow) {
    TempDir dir;
    auto j = cost_config();
    j["method"]["audit_tolerance"] = 1e-15;
    std::ostringstream err;
    const auto out = run_file(dir.write("c.json", j), dir.path(), err);
    EXPECT_EQ(out.code, kBoundViolation);
    EXPECT_NE(err.str().find("method=trotter, parameter=d"), std::string::npos) << err.str();
    const auto summary = json::parse(slurp(dir.path() / "estimate_cost.json"));
    EXPECT_EQ(summary["status"], "bound-violation");
}

TEST(EndToEnd, CsvBytesAreReproducibleAcrossRunsAndThreads) {
    TempDir dir;
    const auto cfg = dir.write("c.json", small_trotter());
    std::ostringstream err;
    ASSERT_EQ(run_file(cfg, dir.path() / "a", err, 1).code, kOk);
    ASSERT_EQ(run_file(cfg, dir.path() / "b", err, 3).code, kOk);
    const auto a = slurp(dir.path() / "a" / "verify_trotter.csv");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir.path() / "b" / "verify_trotter.csv"));
}

TEST(EndToEnd, SeedOverrideChangesOutput) {
    TempDir dir;
    const auto cfg = dir.write("c.json", small_trotter());
    std::ostringstream err;
    ASSERT_EQ(run_file(cfg, dir.path() / "a", err).code, kOk);
    ASSERT_EQ(run_file(cfg, dir.path() / "b", err, 1, 12345).code, kOk);
    EXPECT_NE(slurp(dir.path() / "a" / "verify_trotter.csv"), slurp(dir.path() / "b" / "verify_trotter.csv"));
    EXPECT_EQ(json::parse(slurp(dir.path() / "b" / "verify_trotter.json"))["seed"], 12345);
}

TEST(ShippedConfigs, AllParse) {
    int count = 0;
    for (const auto& entry : fs::directory_iterator(fs::path(FRAKDIFF_SOURCE_DIR) / "configs")) {
        if (entry.path().extension() != ".json") continue;
        EXPECT_NO_THROW(parse_config(load_json_file(entry.path().string()))) << entry.path();
        ++count;
    }
    EXPECT_GE(count, 7);
}
