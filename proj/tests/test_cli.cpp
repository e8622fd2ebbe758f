#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "peaklab/config.hpp"
#include "peaklab/io.hpp"
#include "peaklab/runner.hpp"

using namespace peaklab;
namespace fs = std::filesystem;

namespace {

const std::string kConfigs = PEAKLAB_CONFIGS;

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("peaklab_test_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

int shell(const std::string& command) {
    const int status = std::system((command + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int cli(const std::string& args) { return shell(std::string(PEAKLAB_BINARY) + " " + args); }

std::string first_line(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    return line;
}

int line_count(const fs::path& path) {
    std::ifstream in(path);
    int n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

fs::path write_config(const fs::path& dir, const std::string& body) {
    fs::create_directories(dir);
    const fs::path path = dir / "config.json";
    write_text(path, body);
    return path;
}

}  // namespace

TEST_CASE("config validation") {
    const auto ok = parse_config(nlohmann::json::parse(R"({"profile": {"kind": "power", "exponent": 1.5},
        "eps_list": [0.2, 0.1], "nonlinearity": {"family": "cubic", "lambda": 5}})"));
    CHECK(ok.profile.alpha1() == 1.5);
    CHECK(ok.eps_list.size() == 2);

    auto rejects = [](const std::string& text, const std::string& field) {
        try {
            parse_config(nlohmann::json::parse(text));
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find(field) != std::string::npos);
            return true;
        }
        return false;
    };
    CHECK(rejects(R"({"profile": {}, "eps_list": [0.1, 0.2]})", "eps_list[1]"));
    CHECK(rejects(R"({"profile": {}, "eps_list": [0.5]})", "eps_list[0]"));
    CHECK(rejects(R"({"profile": {}, "coefficients": {"eps0": 1.0}})", "coefficients.eps0"));
    CHECK(rejects(R"({"profile": {}, "mesh": {"N_x": "many"}})", "mesh.N_x"));
    CHECK(rejects(R"({"profile": {}, "colour": 3})", "colour"));
    CHECK(rejects(R"({"profile": {"kind": "spline"}})", "profile"));
    CHECK(rejects(R"({"eps_list": [0.1]})", "profile"));
    CHECK(rejects(R"({"profile": {}, "nonlinearity": {"lambda": 4, "m_f": 3}})", "nonlinearity"));
    CHECK(rejects(R"({"profile": {}, "rates": ["fourier"]})", "rates"));
    CHECK(rejects(R"({"profile": {}, "norm": "H2"})", "norm"));
}

TEST_CASE("check command writes the hypothesis report") {
    const fs::path out = scratch("check");
    CHECK(cli("check --config " + kConfigs + "/cusp_x.json --out " + out.string()) == exit_ok);
    const auto doc = nlohmann::json::parse(read_text(out / "hypotheses.json"));
    CHECK(doc["h1_ok"].get<bool>());
    CHECK(doc["h2_integral"].get<double>() == doctest::Approx(0.143652916679128).epsilon(1e-8));
    CHECK(first_line(out / "hypotheses_W.csv") == "x,W");
    CHECK(fs::exists(out / "manifest.json"));
}

TEST_CASE("validation failures exit 2") {
    CHECK(cli("rates --config " + kConfigs + "/bad_eps_increasing.json --out " + scratch("bad").string()) ==
          exit_validation);
    const fs::path dir = scratch("malformed");
    CHECK(cli("check --config " + write_config(dir, "{ not json").string() + " --out " + dir.string()) ==
          exit_validation);
    CHECK(cli("rates --config " + kConfigs + "/resolvent_sweep.json --jobs 0") == exit_validation);
    CHECK(cli("frobnicate --config " + kConfigs + "/cusp_x.json") == exit_validation);
    CHECK(cli("check") == exit_validation);
}

TEST_CASE("resolvent rates produce a slope column and plot data") {
    const fs::path out = scratch("resolvent");
    CHECK(cli("rates --config " + kConfigs + "/resolvent_sweep.json --out " + out.string()) == exit_ok);
    CHECK(first_line(out / "rate_resolvent.csv") == "eps,distance,norm_kind,mesh_h,slope,r_squared,flag");
    CHECK(line_count(out / "rate_resolvent.csv") == 5);
    CHECK(cli("report " + out.string()) == exit_ok);
    CHECK(line_count(out / "report" / "plot_resolvent.dat") >= 4);
    const std::string summary = read_text(out / "report" / "summary.md");
    CHECK(summary.find("[resolvent]") != std::string::npos);
}

TEST_CASE("report needs a manifest") {
    const fs::path empty = scratch("empty");
    fs::create_directories(empty);
    CHECK(cli("report " + empty.string()) == exit_validation);
    CHECK(report(empty.string()).exit_code == exit_validation);
}

TEST_CASE("numerical flags exit 3 with partial outputs") {
    // lambda = 1 puts the constant state exactly at a bifurcation
    const fs::path dir = scratch("nonhyperbolic");
    const fs::path cfg = write_config(dir, R"({"profile": {"kind": "power", "exponent": 1.0},
        "nonlinearity": {"family": "cubic", "lambda": 1.0}, "mesh": {"N_x": 16},
        "equilibria": {"strategy": "constant_seeds"}})");
    CHECK(cli("equilibria --config " + cfg.string() + " --out " + (dir / "out").string()) == exit_numerical);
    CHECK(fs::exists(dir / "out" / "atlas.json"));
    const auto manifest = nlohmann::json::parse(read_text(dir / "out" / "manifest.json"));
    CHECK(manifest["steps"]["equilibria"]["exit_code"].get<int>() == exit_numerical);
}

TEST_CASE("full pipeline: schemas, report tags and determinism") {
    const fs::path a = scratch("pipeline_a");
    const fs::path b = scratch("pipeline_b");
    for (const auto& name : command_names()) {
        CAPTURE(name);
        CHECK(cli(name + " --config " + kConfigs + "/pipeline.json --out " + a.string()) == exit_ok);
        CHECK(cli(name + " --config " + kConfigs + "/pipeline.json --jobs 2 --out " + b.string()) == exit_ok);
    }
    CHECK(cli("report " + a.string()) == exit_ok);
    CHECK(cli("report " + b.string()) == exit_ok);

    const std::string summary = read_text(a / "report" / "summary.md");
    for (const char* tag : {"[resolvent]", "[equilibrium]", "[semigroup]", "[attractor]"}) {
        CAPTURE(tag);
        CHECK(summary.find(tag) != std::string::npos);
    }

    // every CSV has a header naming its columns, and the two runs agree byte for byte
    int csvs = 0;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), a);
        if (rel == "manifest.json") continue;
        CAPTURE(rel.string());
        REQUIRE(fs::exists(b / rel));
        CHECK(read_text(entry.path()) == read_text(b / rel));
        if (entry.path().extension() == ".csv") {
            ++csvs;
            const std::string header = first_line(entry.path());
            CHECK(header.find(',') != std::string::npos);
            CHECK(header.find_first_of("0123456789") != 0);
        }
    }
    CHECK(csvs >= 20);
    CHECK(first_line(a / "trajectory_limit.csv") == "t,L2_a,H1_a,Linf,energy");
    CHECK(first_line(a / "trajectory_eps_0.1.csv") == "t,L2,H1_eps,Linf");
    CHECK(first_line(a / "solve_eps_0.1.csv") == "node_index,x,y,value");
    CHECK(first_line(a / "rate_attractor.csv") == "eps,distance,norm_kind,mesh_h,slope,r_squared,flag,theta_report");
    CHECK(first_line(a / "pairing.csv") ==
          "eps,pair_id,morse_index,distance_H1_eps,distance_L2,unique_in_ball,slope");

    const auto manifest = nlohmann::json::parse(read_text(a / "manifest.json"));
    CHECK(manifest["config_hash"].get<std::string>().size() == 16);
    CHECK(manifest["steps"].size() == command_names().size());
    const auto mesh = nlohmann::json::parse(read_text(a / "mesh_thin.json"));
    CHECK(mesh["triangles"].size() > 0);
    CHECK(mesh["vertices"][0].size() == 2);
}
