#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "ftla/lyap.hpp"
#include "ftla/output.hpp"
#include "ftla/runner.hpp"

using namespace ftla;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json tiny_ds_config() {
    return json::parse(R"({
        "system": {"builtin": "ds", "params": {"gamma": 3.0}},
        "region": {"bounds": [[0.0, 2.0], [0.0, 1.0]], "grid": [2, 2]},
        "T_bar": 2.0,
        "dt": 0.1,
        "t_samples": 10,
        "manifold": {
            "independent": [1],
            "values": [[0.5], [1.0]],
            "guess": [0.3],
            "schedule": {"T_fwd0": 2.0, "T_bwd0": 2.0, "dT_fwd": 0.0, "dT_bwd": 0.0}
        },
        "verify": {"t_plus": 0.5, "t_minus": -0.5, "estimator": "both"},
        "converge": {"checks": [{"direction": "-", "index": 1}],
                     "T_grid": [0.5, 1.0, 1.5, 2.0]},
        "output_dir": "cli_out",
        "workers": 2,
        "seed": 7
    })");
}

}  // namespace

TEST_CASE("config round-trips through serialization unchanged") {
    RunConfig a = parse_config(tiny_ds_config());
    json ja = config_to_json(a);
    RunConfig b = parse_config(ja);
    json jb = config_to_json(b);
    CHECK(ja == jb);
    CHECK(config_hash(a) == config_hash(b));
}

TEST_CASE("config validation errors") {
    json j = tiny_ds_config();
    j.erase("system");
    CHECK_THROWS_AS(parse_config(j), Error);

    j = tiny_ds_config();
    j["verify"]["estimator"] = "psychic";
    CHECK_THROWS_AS(parse_config(j), Error);

    j = tiny_ds_config();
    j["dt"] = -0.1;
    CHECK_THROWS_AS(parse_config(j), Error);

    j = tiny_ds_config();
    j["system"] = {{"dsl_file", "no_such_file.dsl"}};
    CHECK_THROWS_AS(parse_config(j), Error);
}

TEST_CASE("spectrum command is deterministic and bit-stable") {
    RunConfig cfg = parse_config(tiny_ds_config());
    RunResult r1 = run_command(cfg, "spectrum");
    REQUIRE(r1.files.size() == 1);
    std::string first = slurp(r1.files[0]);
    RunResult r2 = run_command(cfg, "spectrum");
    std::string second = slurp(r2.files[0]);
    CHECK(first == second);

    // Header block carries the tool version and the config hash.
    CHECK(first.rfind("# ftla ", 0) == 0);
    CHECK(first.find("# config-hash " + config_hash(cfg)) != std::string::npos);
    CHECK(first.find("point,direction,T,index,exponent") != std::string::npos);
}

TEST_CASE("single-segment spectrum equals the one-segment factorization") {
    json j = tiny_ds_config();
    j["T_bar"] = 0.1;
    j["t_samples"] = 1;
    RunConfig cfg = parse_config(j);
    RunResult r = run_command(cfg, "spectrum");
    std::string text = slurp(r.files[0]);

    BenchmarkSystem sys = cfg.resolve();
    VectorXd x = sys.default_region.points().front();
    TransitionChain chain = transition_chain(sys.field, x, 0.1, 0.1, Direction::Forward);
    LyapunovData d = compute_ftle_from_chain(chain, FtleMethod::Svd);
    std::string expect0 = fmt17(d.exponents[0]);
    CHECK(text.find(expect0) != std::string::npos);
}

TEST_CASE("diagnose command writes the documented schema and exit codes") {
    RunConfig cfg = parse_config(tiny_ds_config());
    RunResult r = run_command(cfg, "diagnose");
    CHECK(r.exit_code == 0);
    json d = json::parse(slurp(r.files[0]));
    CHECK(d["verdict"] == true);
    CHECK(d["n_s"] == 1);
    CHECK(d["n_c"] == 1);
    CHECK(d["n_u"] == 0);
    CHECK(std::abs(d["delta_mu"].get<double>() - 2.0) < 0.2);
    for (const char* key : {"alpha", "beta", "sigma", "nu", "t_s", "t_c", "T_bar",
                            "resolvability", "failure_reasons", "tool_version", "config_hash"})
        CHECK(d.contains(key));

    // A system without a usable gap exits with code 2.
    json j = tiny_ds_config();
    j["system"] = {{"builtin", "ds"}, {"params", {{"gamma", 1.2}}}};
    j["T_bar"] = 1.0;
    RunConfig bad = parse_config(j);
    RunResult rb = run_command(bad, "diagnose");
    CHECK(rb.exit_code == 2);
    json db = json::parse(slurp(rb.files[0]));
    CHECK(db["verdict"] == false);
    CHECK(!db["failure_reasons"].empty());
}

TEST_CASE("manifold, ildm, verify, and converge commands produce coherent tables") {
    RunConfig cfg = parse_config(tiny_ds_config());

    RunResult rm = run_command(cfg, "manifold");
    std::string m = slurp(rm.files[0]);
    CHECK(m.find("id,x1,x2,residual_max,theta,T_fwd,T_bwd") != std::string::npos);
    // Two points, both converged, with small reference errors.
    int lines = 0;
    for (char c : m)
        if (c == '\n') ++lines;
    CHECK(lines == 2 + 1 + 2);  // two header comments, column row, two data rows

    RunResult ri = run_command(cfg, "ildm");
    std::string i = slurp(ri.files[0]);
    CHECK(i.find("reference_error") != std::string::npos);

    RunResult rv = run_command(cfg, "verify");
    std::string v = slurp(rv.files[0]);
    CHECK(v.find("point,coordinate,direction,ftla_ip_percent,ildm_ip_percent") !=
          std::string::npos);
    CHECK(v.find("x2,+") != std::string::npos);
    CHECK(v.find("x2,-") != std::string::npos);

    RunResult rc = run_command(cfg, "converge");
    std::string c = slurp(rc.files[0]);
    CHECK(c.find("point,kind,direction,index,T,value") != std::string::npos);
    CHECK(c.find("dist") != std::string::npos);
    CHECK(c.find("angle") != std::string::npos);  // analytic normals exist for this system

    std::error_code ec;
    std::filesystem::remove_all("cli_out", ec);
}

TEST_CASE("csv fields are quoted only when needed") {
    Csv csv;
    csv.columns = {"a", "b"};
    csv.rows.push_back({"plain", "with,comma"});
    csv.rows.push_back({"quote\"inside", "1.5"});
    write_csv("quote_test.csv", csv, "deadbeef");
    std::string text = slurp("quote_test.csv");
    CHECK(text.find("plain,\"with,comma\"") != std::string::npos);
    CHECK(text.find("\"quote\"\"inside\",1.5") != std::string::npos);
    std::error_code ec;
    std::filesystem::remove("quote_test.csv", ec);
}

TEST_CASE("dims override reaches the resolved system") {
    json j = tiny_ds_config();
    j["dims"] = {1, 1, 0};
    RunConfig cfg = parse_config(j);
    BenchmarkSystem sys = cfg.resolve();
    CHECK(sys.ns == 1);
    CHECK(sys.nc == 1);
    CHECK(sys.nu == 0);
    j["dims"] = {1, 1};
    CHECK_THROWS_AS(parse_config(j), Error);
}

TEST_CASE("unknown command is rejected") {
    RunConfig cfg = parse_config(tiny_ds_config());
    CHECK_THROWS_AS(run_command(cfg, "interpolate"), Error);
}

#ifdef FTLA_BIN
TEST_CASE("command-line binary end to end") {
    json j = tiny_ds_config();
    j["output_dir"] = "cli_bin_out";
    {
        std::ofstream out("cli_bin_config.json");
        out << j.dump(2);
    }
    std::string bin = FTLA_BIN;
    CHECK(std::system((bin + " --version > /dev/null").c_str()) == 0);
    CHECK(std::system((bin + " diagnose --config cli_bin_config.json > /dev/null").c_str()) == 0);
    CHECK(std::filesystem::exists("cli_bin_out/diagnosis.json"));
    // Unknown flag fails fast.
    CHECK(std::system((bin + " diagnose --nope 2> /dev/null").c_str()) != 0);
    std::error_code ec;
    std::filesystem::remove_all("cli_bin_out", ec);
    std::filesystem::remove("cli_bin_config.json", ec);
}
#endif
