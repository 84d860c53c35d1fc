#include "css/cli.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace css;

namespace {

struct Run {
    int code;
    std::string out, err;
    nlohmann::json json() const { return nlohmann::json::parse(out); }
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "css");
    std::vector<const char*> argv;
    for (auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class TempDir {
public:
    TempDir()
        : path_(std::filesystem::temp_directory_path() /
                ("css_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()))) {
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

}  // namespace

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"no-such-command"}).code, 2);
    EXPECT_EQ(run({"--help"}).code, 0);
    EXPECT_EQ(run({"townes", "--json", "--csv"}).code, 2);
    EXPECT_EQ(run({"townes", "--tol", "1"}).code, 2);
    EXPECT_EQ(run({"estimate-gamma", "--beta", "-1"}).code, 2);
    EXPECT_EQ(run({"estimate-gamma"}).code, 2);
    EXPECT_EQ(run({"scan", "--betas", "2,1"}).code, 2);
    EXPECT_EQ(run({"verify-soliton", "--vortex", "n=0"}).code, 2);
    EXPECT_EQ(run({"verify-soliton", "--grid", "12"}).code, 2);
}

TEST(Cli, SolveWronskian) {
    auto r = run({"solve-wronskian", "--f", "[[1,0],[0,0],[1,0]]"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.json()["families"].size(), 2u);

    auto a = run({"solve-wronskian", "--f", "[[1,0]]"});
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.json()["families"].size(), 1u);

    auto z = run({"solve-wronskian", "--f", "[[0,0]]"});
    EXPECT_EQ(z.code, 2);
    EXPECT_NE(z.err.find("zero polynomial"), std::string::npos);

    EXPECT_EQ(run({"solve-wronskian", "--f", "[[1,0],"}).code, 2);

    auto g = run({"solve-wronskian", "--f", "[[1,0],[0,0],[1,0]]", "--method", "generic"});
    ASSERT_EQ(g.code, 0);
    EXPECT_EQ(g.json()["families"].size(), 2u);
}

TEST(Cli, Deterministic) {
    std::vector<std::string> args{"solve-wronskian", "--f", "[[1,0],[2,0],[0,1],[1,0]]", "--seed", "7"};
    EXPECT_EQ(run(args).out, run(args).out);
    EXPECT_EQ(run({"townes"}).out, run({"townes"}).out);
}

TEST(Cli, TownesCsv) {
    auto r = run({"townes", "--csv"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("tau0,", 0), 0u) << r.out;
}

TEST(Cli, VerifySoliton) {
    auto r = run({"verify-soliton", "--vortex", "n=1"});
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(r.json()["pass"].get<bool>());
    auto d = run({"verify-soliton", "--pair", R"({"P": [[1,0],[1,0]], "Q": [[2,0],[2,0]]})"});
    EXPECT_EQ(d.code, 2);
}

TEST(Cli, VerifyIdentitiesForResolvedPair) {
    auto r = run({"verify-identities", "--vortex", "1", "--csv"});
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(r.out.rfind("name,computed,expected,tol,error,pass\n", 0), 0u);
}

TEST(Cli, FieldRoundTripThroughFiles) {
    TempDir dir;
    std::string f = dir.file("u.bin");
    auto b = run({"build-soliton", "--vortex", "1", "--grid", "10,128", "--out", f});
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_TRUE(std::filesystem::exists(f + ".json"));

    auto e = run({"energy", "--field", f, "--beta", "2"});
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_NEAR(e.json()["bogomolnyi_gap"].get<double>(), 0.0, 1e-2);

    EXPECT_EQ(run({"energy", "--field", f}).code, 2);
    EXPECT_EQ(run({"energy", "--field", dir.file("missing.bin"), "--beta", "1"}).code, 2);
}

TEST(Cli, InequalityBatteryOnAField) {
    TempDir dir;
    std::mt19937_64 rng(3);
    Grid g(8.0, 96);
    std::string f = dir.file("random.bin");
    write_field(css::testing::random_smooth_field(rng, g), f);
    auto r = run({"verify-identities", "--field", f, "--beta", "1"});
    ASSERT_EQ(r.code, 0) << r.out << r.err;
    auto rows = r.json()["rows"];
    EXPECT_EQ(rows.size(), 5u);
    for (const auto& row : rows) EXPECT_NE(row["name"].get<std::string>().find("_violation"), std::string::npos);
}

TEST(Cli, ConfigFile) {
    TempDir dir;
    std::string cfg = dir.file("run.json");
    std::ofstream(cfg) << R"({"grid": {"L": 10, "M": 128}, "tolerances": {"mass_tol": 0.02}})";
    auto r = run({"build-soliton", "--vortex", "2", "--config", cfg, "--out", dir.file("u.bin")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.json()["grid"]["M"], 128);

    std::ofstream(cfg) << R"({"tolerances": {"mass_tol": -1}})";
    EXPECT_EQ(run({"build-soliton", "--vortex", "2", "--config", cfg}).code, 2);
}
