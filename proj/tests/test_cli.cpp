// End-to-end smoke tests: spawn the CLI binary, check exit codes, report
// files, and reproducibility of emitted artifacts.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#ifndef QUENCHLAB_CLI_PATH
#error "QUENCHLAB_CLI_PATH must be defined"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(QUENCHLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    return json::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("quenchlab_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write_demo_chain(const fs::path& file) {
    json j;
    j["kernel"] = {{0.75, 0.25}, {0.25, 0.75}};
    j["f"] = {1.0, -1.0};
    std::ofstream(file) << j.dump();
}

}  // namespace

TEST_CASE("input errors exit with code 1") {
    CHECK(run_cli("map-orbit") == 1);                       // missing --gamma
    CHECK(run_cli("no-such-command") == 1);
    CHECK(run_cli("conditions --chain /nonexistent.json") == 1);
    CHECK(run_cli("map-orbit --gamma 1.5 --x0 0.3") == 1);  // gamma out of range
}

TEST_CASE("map-orbit writes an orbit table and a report") {
    const auto d = fresh_dir("orbit");
    CHECK(run_cli("--out-dir " + d.string() +
                  " --seed 5 map-orbit --gamma 0.25 --x0 0.3 --n 512") == 0);
    const json r = read_json(d / "map_orbit.json");
    CHECK(r["config"]["seed"].get<std::uint64_t>() == 5);
    CHECK(r.contains("config_hash"));
    CHECK(r["paper_condition"] == "3.1");
    const std::string csv = slurp(d / "map_orbit.csv");
    CHECK(csv.rfind("i,x,sum\n", 0) == 0);
}

TEST_CASE("ulam emits duality residuals and matrix CSVs") {
    const auto d = fresh_dir("ulam");
    CHECK(run_cli("--out-dir " + d.string() + " --seed 1 ulam --gamma 0.25 --cells 256") == 0);
    const json r = read_json(d / "ulam.json");
    CHECK(r["max_residual"].get<double>() < 1e-2);
    CHECK(fs::exists(d / "ulam_matrix.csv"));
    CHECK(fs::exists(d / "ulam_density.csv"));
    // an unreachable residual gate turns success into a numerical failure
    CHECK(run_cli("--out-dir " + d.string() +
                  " --seed 1 ulam --gamma 0.25 --cells 256 --max-residual 1e-12") == 2);
}

TEST_CASE("alpha produces the documented CSV schema and an SVG on request") {
    const auto d = fresh_dir("alpha");
    const auto chain = d / "chain.json";
    write_demo_chain(chain);
    CHECK(run_cli("--out-dir " + d.string() + " --seed 1 --svg alpha --chain " + chain.string() +
                  " --kmax 16") == 0);
    const std::string csv = slurp(d / "alpha.csv");
    CHECK(csv.rfind("k,alpha,loglog_slope_window\n", 0) == 0);
    CHECK(fs::exists(d / "alpha.svg"));
    CHECK(slurp(d / "alpha.svg").rfind("<svg", 0) == 0);
}

TEST_CASE("conditions reports all four criteria keyed by display") {
    const auto d = fresh_dir("cond");
    const auto chain = d / "chain.json";
    write_demo_chain(chain);
    CHECK(run_cli("--out-dir " + d.string() + " --seed 3 conditions --chain " + chain.string() +
                  " --kmax 64 --replicas 300") == 0);
    const json r = read_json(d / "conditions.json");
    for (const char* key : {"2.1", "2.2", "2.3", "5.2", "5.3"}) CHECK(r.contains(key));
    CHECK(r["2.2"]["eta"].get<double>() == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(r["2.1"]["verdict"] == "convergent-certified");
    const std::string csv = slurp(d / "conditions_21.csv");
    CHECK(csv.rfind("k,term,partial_sum\n", 0) == 0);
}

TEST_CASE("quenched gate passes on the demo chain and output is bit-stable") {
    const auto d = fresh_dir("quenched");
    const auto chain = d / "chain.json";
    write_demo_chain(chain);
    const std::string args = "--out-dir " + d.string() + " --seed 11 quenched --chain " +
                             chain.string() + " --x0 0 --n 256 --replicas 800 --modulus 4,16";
    CHECK(run_cli(args) == 0);
    const std::string first = slurp(d / "quenched.json");
    const std::string csv1 = slurp(d / "quenched_replicas.csv");
    CHECK(csv1.rfind("replica,S_n,S_n_scaled\n", 0) == 0);
    CHECK(slurp(d / "tightness.csv").rfind("m,q95,stderr\n", 0) == 0);
    CHECK(run_cli(args) == 0);
    CHECK(slurp(d / "quenched.json") == first);
    CHECK(slurp(d / "quenched_replicas.csv") == csv1);
}

TEST_CASE("fidis runs on the demo chain") {
    const auto d = fresh_dir("fidis");
    const auto chain = d / "chain.json";
    write_demo_chain(chain);
    CHECK(run_cli("--out-dir " + d.string() + " --seed 13 fidis --chain " + chain.string() +
                  " --x0 0 --n 256 --replicas 800 --times 0.5,1") == 0);
    const json r = read_json(d / "fidis.json");
    CHECK(r["paper_condition"] == "2.3");
    CHECK(r["config"]["ks_tol"].get<double>() > 0.0);
}

TEST_CASE("blocks reports the blocking statistics") {
    const auto d = fresh_dir("blocks");
    const auto chain = d / "chain.json";
    write_demo_chain(chain);
    CHECK(run_cli("--out-dir " + d.string() + " --seed 7 blocks --chain " + chain.string() +
                  " --x0 0 --m 8 --p 16 --replicas 400") == 0);
    const json r = read_json(d / "blocks.json");
    CHECK(r["paper_condition"] == "C1..C4");
}

TEST_CASE("counterexample series and realize modes") {
    const auto d = fresh_dir("cex");
    CHECK(run_cli("--out-dir " + d.string() + " --seed 2 counterexample --kmax 8") == 0);
    json r = read_json(d / "counterexample.json");
    CHECK(r["2.1"]["verdict"] == "convergent-certified");
    for (const char* key : {"2.3", "5.2", "5.3"})
        CHECK(r[key]["verdict"] == "divergent-evidence");
    CHECK(r["5.3"]["prefactor"].get<double>() == doctest::Approx(0.8164965809).epsilon(1e-8));
    CHECK(run_cli("--out-dir " + d.string() +
                  " --seed 2 counterexample --kmax 4 --mode realize --replicas 300") == 0);
    r = read_json(d / "counterexample.json");
    CHECK(r["system"]["properties_hold"].get<bool>());
    CHECK(r["conditional_norms"]["n_grid"].size() == 4);
}

TEST_CASE("tailcheck distinguishes finite and divergent tail integrals") {
    const auto d = fresh_dir("tail");
    CHECK(run_cli("--out-dir " + d.string() + " --seed 1 tailcheck --gamma 0.25 --tail-q 6") == 0);
    CHECK(read_json(d / "tailcheck.json")["finite"].get<bool>());
    CHECK(run_cli("--out-dir " + d.string() + " --seed 1 tailcheck --gamma 0.25 --tail-q 2") == 2);
}

TEST_CASE("inequalities brute force passes and gates on failures") {
    const auto d = fresh_dir("ineq");
    CHECK(run_cli("--out-dir " + d.string() +
                  " --seed 9 inequalities --chains 20 --spaces 100 --n 5") == 0);
    const json r = read_json(d / "inequalities.json");
    CHECK(r["maximal_inequality_failures"].get<int>() == 0);
    CHECK(r["truncation_failures"].get<int>() == 0);
}
