#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(ASYOUGO_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& sub = "") const { return (path / sub).string(); }
};

}  // namespace

TEST_CASE("exit codes") {
    TempDir d("asyougo_cli_codes");
    CHECK(run("--help") == 0);
    CHECK(run("frobnicate") == 2);
    CHECK(run("solve --kind geo-sum --xi-r -1 --out " + d.str()) == 2);
    CHECK(run("solve --kind nonsense --out " + d.str()) == 2);
    CHECK(run("solve --params /nonexistent.json --out " + d.str()) == 2);
    CHECK(run("serve --policies " + d.str("empty") + " --addr 127.0.0.1:0") == 4);
    CHECK(run("thresholds --policy /nonexistent.json") == 2);
}

TEST_CASE("solve, thresholds and simulate") {
    TempDir d("asyougo_cli_run");
    {
        std::ofstream cfg(d.str("cfg.json"));
        cfg << R"({"grid": {"step_db": 1.0}, "deployment": {"xi_r": 0.01}})";
    }
    REQUIRE(run("solve --kind geo-sum --params " + d.str("cfg.json") + " --out " + d.str("pol")) == 0);
    REQUIRE(fs::exists(d.path / "pol" / "geo-sum.json"));
    CHECK(run("thresholds --policy " + d.str("pol/geo-sum.json")) == 0);

    const std::string sim = "simulate --policy " + d.str("pol/geo-sum.json") + " --runs 200 --seed 3 --out ";
    REQUIRE(run(sim + d.str("a")) == 0);
    REQUIRE(run(sim + d.str("b")) == 0);
    CHECK(slurp(d.path / "a" / "traces.csv") == slurp(d.path / "b" / "traces.csv"));
    CHECK(slurp(d.path / "a" / "stats.json") == slurp(d.path / "b" / "stats.json"));
    CHECK(run("simulate --policy " + d.str("pol/geo-sum.json") + " --line infinite --out " + d.str("c")) == 2);

    const std::string env = "ASYOUGO_PARAMS=" + d.str("cfg.json") + " ";
    const int st = std::system((env + ASYOUGO_CLI_PATH + " solve --kind heuristic --out " + d.str("h") +
                                " > /dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(st) == 0);
    CHECK(slurp(d.path / "h" / "heuristic.json").find("\"step_db\": 1.0") != std::string::npos);
}
