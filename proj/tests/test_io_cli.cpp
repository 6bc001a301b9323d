#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <sstream>
#include <vector>

#include "sofctl/cli.hpp"
#include "sofctl/error.hpp"
#include "sofctl/io.hpp"
#include "sofctl/registry.hpp"

using namespace sofctl;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "sofctl");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "sofctl_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string data(const std::string& name) { return std::string(SOFCTL_DATA_DIR) + "/" + name; }

}  // namespace

TEST_CASE("shipped example files match the registry") {
    for (const char* name : {"example1", "example2"}) {
        const auto file = io::load_system(data(std::string(name) + ".json"));
        const auto& ex = find_example(name);
        CHECK((file.system.A - ex.file.system.A).norm() == 0.0);
        CHECK((file.system.B - ex.file.system.B).norm() == 0.0);
        CHECK((file.system.C - ex.file.system.C).norm() == 0.0);
        CHECK((*file.Q - *ex.file.Q).norm() == 0.0);
        CHECK((*file.R - *ex.file.R).norm() == 0.0);
        CHECK(file.system.mode == SystemMode::NoD);
    }
}

TEST_CASE("save and load round trip exactly") {
    auto file = find_example("example2").file;
    file.system.A(0, 0) = 0.1 + 0.2;  // needs all 17 digits
    file.system.A(1, 1) = 1.0 / 3.0;
    const auto path = scratch("roundtrip.json").string();
    io::save_system(path, file);
    const auto back = io::load_system(path);
    CHECK((back.system.A - file.system.A).norm() == 0.0);
    CHECK((back.system.B - file.system.B).norm() == 0.0);
    CHECK(io::format_double(0.1 + 0.2) == "0.30000000000000004");
}

TEST_CASE("load errors name the field and position") {
    const auto bad_b = scratch("bad_b.json").string();
    io::write_file(bad_b, R"({"n":2,"m":1,"p":1,"A":[[0,1],[0,0]],"B":[[0],[1],[2]],"C":[[1,0]]})");
    try {
        io::load_system(bad_b);
        FAIL("expected a dimension error");
    } catch (const DimensionError& e) {
        CHECK(std::string(e.what()).find("'B'") != std::string::npos);
    }

    const auto broken = scratch("broken.json").string();
    io::write_file(broken, "{\n  \"n\": 2,\n  \"m\": ,\n}");
    try {
        io::load_system(broken);
        FAIL("expected a parse error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }

    const auto ragged = scratch("ragged.json").string();
    io::write_file(ragged, R"({"n":2,"m":1,"p":1,"A":[[0,1],[0]],"B":[[0],[1]],"C":[[1,0]]})");
    CHECK_THROWS_AS(io::load_system(ragged), InputError);

    const auto needs_d = scratch("needs_d.json").string();
    io::write_file(needs_d,
                   R"({"n":1,"m":1,"p":1,"mode":"direct-feedthrough","A":[[0]],"B":[[1]],"C":[[1]]})");
    CHECK_THROWS_AS(io::load_system(needs_d), InputError);
}

TEST_CASE("weight specs") {
    CHECK((io::parse_weight_spec("identity", 3, "Q") - Matrix::Identity(3, 3)).norm() == 0.0);
    const Matrix d = io::parse_weight_spec("diag:1,3,0.1", 3, "Q");
    CHECK(d(2, 2) == 0.1);
    CHECK_THROWS_AS(io::parse_weight_spec("diag:1,2", 3, "Q"), DimensionError);
    CHECK_THROWS_AS(io::parse_weight_spec("diag:1,x,2", 3, "Q"), InputError);
}

TEST_CASE("lqr command on a scalar system") {
    const auto path = scratch("scalar.json").string();
    io::write_file(path, R"({"n":1,"m":1,"p":1,"A":[[0]],"B":[[1]],"C":[[1]],"Q":[[1]],"R":[[1]]})");
    auto r = invoke({"--system", path, "--deterministic", "lqr"});
    REQUIRE(r.code == 0);
    auto j = io::json::parse(r.out);
    CHECK(j["riccati"]["P"][0][0].get<double>() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(j["riccati"]["K"][0][0].get<double>() == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK_FALSE(j.contains("wall_time_s"));

    r = invoke({"--system", path, "lqr", "--via-sdp"});
    REQUIRE(r.code == 0);
    j = io::json::parse(r.out);
    CHECK(std::abs(j["riccati"]["P"][0][0].get<double>() - 1.0) < 1e-5);
    CHECK(j.contains("wall_time_s"));
}

TEST_CASE("sof and examples commands") {
    auto r = invoke({"--system", data("example1.json"), "--deterministic", "sof"});
    CHECK(r.code == cli::kStabilizing);
    auto j = io::json::parse(r.out);
    CHECK(j["result"]["status"] == "stabilizing");
    CHECK(j["tool"]["version"] == "0.1.0");

    r = invoke({"examples"});
    CHECK(r.code == 0);
    CHECK(io::json::parse(r.out)["examples"].size() == 2);
    r = invoke({"examples", "example2", "--deterministic"});
    CHECK(r.code == cli::kStabilizing);
    r = invoke({"examples", "bogus"});
    CHECK(r.code == cli::kInputError);

    // Double integrator measured through position: obstruction noted, synthesis attempted.
    const auto di = scratch("di.json").string();
    io::write_file(di, R"({"n":2,"m":1,"p":1,"A":[[0,1],[0,0]],"B":[[0],[1]],"C":[[1,0]]})");
    r = invoke({"--system", di, "--Q", "identity", "--R", "identity", "sof"});
    j = io::json::parse(r.out);
    CHECK(j["precheck"]["obstruction"] == true);
    CHECK(j["result"].contains("status"));
}

TEST_CASE("verify command") {
    auto r = invoke({"--system", data("example1.json"), "verify", "--gain", data("example1_gain.json")});
    CHECK(r.code == cli::kStabilizing);
    const auto zero = scratch("zero_gain.json").string();
    io::write_file(zero, R"({"F": [[0, 0]]})");
    r = invoke({"--system", data("example1.json"), "verify", "--gain", zero});
    CHECK(r.code == cli::kUnstable);
    r = invoke({"--system", data("example1.json"), "verify", "--gain", data("example2_gain.json")});
    CHECK(r.code == cli::kInputError);
}

TEST_CASE("simulate command and text output") {
    auto r = invoke({"--system", "example:example2", "--format", "text", "simulate", "--gain", "example:example2",
                  "--dt", "0.01", "--T", "1"});
    CHECK(r.code == 0);
    CHECK(r.out.find("samples: 101") != std::string::npos);
}

TEST_CASE("usage errors") {
    CHECK(invoke({}).code == cli::kInputError);
    CHECK(invoke({"sof"}).code == cli::kInputError);  // no --system
    CHECK(invoke({"--system", "/nonexistent.json", "sof"}).code == cli::kInputError);
    CHECK(invoke({"--format", "xml", "examples"}).code == cli::kInputError);
    CHECK(invoke({"--help"}).code == 0);
    const auto nw = scratch("no_weights.json").string();
    io::write_file(nw, R"({"n":1,"m":1,"p":1,"A":[[0]],"B":[[1]],"C":[[1]]})");
    CHECK(invoke({"--system", nw, "lqr"}).code == cli::kInputError);
}

TEST_CASE("reports are deterministic") {
    const auto a = invoke({"examples", "example1", "--deterministic"});
    const auto b = invoke({"examples", "example1", "--deterministic"});
    CHECK(a.out == b.out);
}
