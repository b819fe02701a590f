#include "doctest.h"

#include "sirlab/report_io.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "sirlab_cli_test";

int run(const std::string& args) {
    const std::string cmd = std::string(SIRLAB_CLI_PATH) + " " + args + " > " + (kWork / "stdout.txt").string() +
                            " 2> " + (kWork / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path write_scenario(const std::string& name, const std::string& text) {
    const fs::path p = kWork / name;
    std::ofstream(p) << text;
    return p;
}

const std::string kSmall = R"({
  "schema_version": 1,
  "name": "cli-small",
  "grid": {"dim": 1, "inv_eps": 4},
  "params": {"beta": 1.5, "alpha": 1.0, "mu_S": 0.1, "mu_I": 0.1, "mu_R": 0.1},
  "initial": {"s0": 1.0, "i0": {"type": "gaussian", "center": [0.3], "width": 0.1, "peak": 0.2}},
  "horizon": 1.0,
  "sampling": {"count": 8},
  "study": {
    "inv_eps_list": [2, 4], "inv_eps_ref": 16, "N_list": [50, 500], "replicas": 4,
    "martingale_replicas": 4, "dense_count": 256,
    "schedule": [{"inv_eps": 2, "N": 100}, {"inv_eps": 4, "N": 400}]
  }
})";

struct Workspace {
    Workspace() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
    }
};

}  // namespace

TEST_CASE("validate prints the normalized summary") {
    Workspace ws;
    const fs::path sc = write_scenario("ok.json", kSmall);
    CHECK(run("validate --scenario " + sc.string()) == 0);
    const std::string out = slurp(kWork / "stdout.txt");
    CHECK(out.find("normalization") != std::string::npos);
    CHECK(out.find("cli-small") != std::string::npos);
}

TEST_CASE("usage and validation failures exit 1") {
    Workspace ws;
    CHECK(run("simulate") == 1);
    CHECK(slurp(kWork / "stderr.txt").find("--scenario") != std::string::npos);
    CHECK(run("") == 1);
    const fs::path sc = write_scenario("ok.json", kSmall);
    CHECK(run("ode --scenario " + sc.string() + " --bogus") == 1);
    CHECK(run("ode --scenario " + sc.string() + " --format xml") == 1);
    const fs::path bad = write_scenario("bad.json", std::string(kSmall).replace(kSmall.find("\"mu_S\": 0.1"), 11, "\"mu_S\": -1"));
    CHECK(run("validate --scenario " + bad.string()) == 1);
    CHECK(slurp(kWork / "stderr.txt").find("mu_S") != std::string::npos);
    CHECK(run("--help") == 0);
}

TEST_CASE("runtime failures exit 2") {
    Workspace ws;
    // An output directory below a regular file cannot be created.
    const fs::path sc = write_scenario("ok.json", kSmall);
    std::ofstream(kWork / "blocker") << "x";
    CHECK(run("ode --scenario " + sc.string() + " --out " + (kWork / "blocker" / "sub").string()) == 2);
}

TEST_CASE("ode and simulate write their documented files") {
    Workspace ws;
    const fs::path sc = write_scenario("ok.json", kSmall);
    CHECK(run("ode --scenario " + sc.string() + " --out " + (kWork / "ode").string()) == 0);
    const sirlab::CsvTable t = sirlab::parse_csv(slurp(kWork / "ode" / "trajectory.csv"));
    CHECK(t.rows.size() == 9 * 4);
    CHECK(fs::exists(kWork / "ode" / "trajectory.json"));
    CHECK(fs::exists(kWork / "ode" / "manifest.json"));

    CHECK(run("simulate --scenario " + sc.string() + " --replicas 3 --threads 2 --out " + (kWork / "sim").string()) == 0);
    const sirlab::CsvTable s = sirlab::parse_csv(slurp(kWork / "sim" / "ssa.csv"));
    CHECK(s.rows.size() == 3 * 9 * 4);
    CHECK(s.numbers("replica_id").back() == 2);
    const auto m = sirlab::parse_manifest(slurp(kWork / "sim" / "manifest.json"));
    CHECK(m.replica_seeds.size() == 1);
    CHECK(m.replica_seeds[0].size() == 3);
}

TEST_CASE("study reruns are byte-identical, including across thread counts") {
    Workspace ws;
    const fs::path sc = write_scenario("ok.json", kSmall);
    for (const std::string cmd : {"study-eps", "study-lln", "study-supnorm", "study-martingale"}) {
        const std::string base = cmd + " --scenario " + sc.string() + " --seed 42 --format csv --format json --format svg";
        REQUIRE(run(base + " --threads 1 --out " + (kWork / (cmd + "_a")).string()) == 0);
        REQUIRE(run(base + " --threads 3 --out " + (kWork / (cmd + "_b")).string()) == 0);
        for (const auto& entry : fs::directory_iterator(kWork / (cmd + "_a"))) {
            const std::string name = entry.path().filename().string();
            if (name == "manifest.json") continue;
            CHECK_MESSAGE(slurp(entry.path()) == slurp(kWork / (cmd + "_b") / name), cmd << "/" << name);
        }
        CHECK(fs::exists(kWork / (cmd + "_a") / "plot.svg"));
    }
}

TEST_CASE("strict mode exits 3 when a study misses its thresholds") {
    Workspace ws;
    std::string text = kSmall;
    text.replace(text.find("\"dense_count\": 256"), 18, "\"dense_count\": 256, \"thresholds\": {\"final_error\": 1e-12}");
    const fs::path sc = write_scenario("strict.json", text);
    const std::string base = "study-eps --scenario " + sc.string() + " --out " + (kWork / "strict").string();
    CHECK(run(base) == 0);
    CHECK(run(base + " --strict") == 3);
}

TEST_CASE("a manifest regenerates deleted outputs bit for bit") {
    Workspace ws;
    const fs::path sc = write_scenario("ok.json", kSmall);
    const fs::path out = kWork / "orig";
    REQUIRE(run("study-lln --scenario " + sc.string() + " --seed 9 --replicas 3 --format svg --out " + out.string()) == 0);
    const auto m = sirlab::parse_manifest(slurp(out / "manifest.json"));
    std::map<std::string, std::string> before;
    for (const auto& f : m.outputs) {
        before[f.name] = slurp(out / f.name);
        fs::remove(out / f.name);
    }
    fs::remove(sc);
    CHECK(run("replay --manifest " + (out / "manifest.json").string() + " --out " + out.string()) == 0);
    for (const auto& [name, body] : before) CHECK(slurp(out / name) == body);
}
