#include <doctest.h>

#include <fstream>

#include "isospec/cli.hpp"
#include "isospec/io.hpp"

using namespace isospec;

namespace {

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "isospec");
    std::vector<char*> argv;
    for (std::string& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("isospec_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string strip_timing(std::string manifest) {
    json j = json::parse(manifest);
    j.erase("timing");
    return j.dump();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("models") {
    const fs::path dir = fresh_dir("models");
    write_text(dir / "lb.json", R"({"variant": "LaplaceBeltrami", "params": {"c": 1}})");
    REQUIRE(run({"models", "--config", (dir / "lb.json").string(), "--lmax", "8", "--out", (dir / "lb").string()}) == kExitOk);
    const std::string spectrum = read_text(dir / "lb" / "spectrum.csv");
    CHECK(spectrum.find("\n2,0.0204081632") != std::string::npos);
    CHECK(parse_spectrum_csv(spectrum).f[2] == 1.0 / 49.0);
    CHECK(fs::exists(dir / "lb" / "covariance.csv"));
    const json report = json::parse(read_text(dir / "lb" / "report.json"));
    CHECK(report.at("outputs").size() == 2u);
    CHECK(report.at("config_hash").get<std::string>().size() == 64u);

    write_text(dir / "ek.json", R"({"variant": "ExpKappa", "params": {"kappa": 1}})");
    REQUIRE(run({"models", "--config", (dir / "ek.json").string(), "--lmax", "2", "--out", (dir / "ek").string()}) == kExitOk);
    CHECK(read_text(dir / "ek" / "spectrum.csv").find("\n0,1.0\n") != std::string::npos);

    write_text(dir / "bad.json", R"({"variant": "NoSuchModel"})");
    CHECK(run({"models", "--config", (dir / "bad.json").string(), "--out", (dir / "bad").string()}) == kExitUsage);
    CHECK(run({"models", "--config", (dir / "absent.json").string(), "--out", (dir / "x").string()}) == kExitIo);
    CHECK(run({"models"}) == kExitUsage);
    CHECK(run({"frobnicate"}) == kExitUsage);
    fs::remove_all(dir);
}

TEST_CASE("simulate and estimate") {
    const fs::path dir = fresh_dir("pipeline");
    write_text(dir / "sim.json", R"({"lmax": 4, "n_replicates": 300, "seed": 7, "spectrum": {"values": [1, 1, 1, 1, 1]}})");
    REQUIRE(run({"simulate", "--config", (dir / "sim.json").string(), "--out", (dir / "a").string()}) == kExitOk);
    REQUIRE(run({"simulate", "--config", (dir / "sim.json").string(), "--out", (dir / "b").string(), "--threads", "2"}) == kExitOk);
    CHECK(strip_timing(read_text(dir / "a" / "manifest.json")) == strip_timing(read_text(dir / "b" / "manifest.json")));
    REQUIRE(run({"simulate", "--config", (dir / "sim.json").string(), "--out", (dir / "c").string(), "--seed", "8"}) == kExitOk);
    CHECK(strip_timing(read_text(dir / "a" / "manifest.json")) != strip_timing(read_text(dir / "c" / "manifest.json")));

    REQUIRE(run({"estimate", "--in", (dir / "a").string(), "--p", "3", "--out", (dir / "est").string()}) == kExitOk);
    const PolySpectrum b = polyspectrum_from_json(json::parse(read_text(dir / "est" / "polyspectrum_p3.json")));
    for (const auto& [k, e] : b.entries()) CHECK(std::abs(e.value) < 4.0 * e.se);
    CHECK(parse_spectrum_csv(read_text(dir / "est" / "power_spectrum.csv")).f.size() == 5u);

    write_text(dir / "zero.json", R"({"lmax": 2, "n_replicates": 0, "seed": 1, "spectrum": {"values": [1, 1, 1]}})");
    CHECK(run({"simulate", "--config", (dir / "zero.json").string(), "--out", (dir / "z").string()}) == kExitUsage);
    write_text(dir / "four.json", R"({"lmax": 2, "n_replicates": 4, "seed": 1, "spectrum": {"values": [1, 1, 1]}})");
    REQUIRE(run({"simulate", "--config", (dir / "four.json").string(), "--out", (dir / "four").string()}) == kExitOk);
    CHECK(run({"estimate", "--in", (dir / "four").string(), "--p", "4", "--out", (dir / "e4").string()}) == kExitUsage);
    fs::remove((dir / "four" / "replicates" / "rep_000002.csv"));
    CHECK(run({"estimate", "--in", (dir / "four").string(), "--p", "3", "--out", (dir / "e3").string()}) == kExitUsage);
    fs::remove_all(dir);
}

TEST_CASE("single deterministic replicate") {
    const fs::path dir = fresh_dir("single");
    fs::create_directories(dir / "ens" / "replicates");
    HarmonicCoeffs c(2);
    c.set(1, 0, 2.0);
    c.set(2, 1, cplx(1.0, 1.0));
    c.set(2, -1, cplx(-1.0, 1.0));
    CoeffEnsemble e;
    e.replicates = {c};
    write_ensemble(dir / "ens", e, json::object(), 0.0);
    REQUIRE(run({"estimate", "--in", (dir / "ens").string(), "--out", (dir / "out").string()}) == kExitOk);
    const AngularPowerSpectrum f = parse_spectrum_csv(read_text(dir / "out" / "power_spectrum.csv"));
    CHECK(f.f[0] == 0.0);
    CHECK(f.f[1] == doctest::Approx(4.0 / 3.0));
    CHECK(f.f[2] == doctest::Approx(4.0 / 5.0));
    fs::remove_all(dir);
}

TEST_CASE("verify") {
    const fs::path dir = fresh_dir("verify");
    CHECK(run({"verify", "--level", "quick", "--out", (dir / "ok").string()}) == kExitOk);
    const json ok = json::parse(read_text(dir / "ok" / "report.json"));
    for (const json& c : ok.at("checks")) CHECK(c.at("passed").get<bool>());

    CHECK(run({"verify", "--inject-fault", "wigner3j-sign", "--out", (dir / "bad").string()}) == kExitVerifyFailed);
    const json bad = json::parse(read_text(dir / "bad" / "report.json"));
    bool orthogonality_failed = false;
    for (const json& c : bad.at("checks"))
        if (c.at("name") == "wigner3j.orthogonality" && !c.at("passed").get<bool>()) orthogonality_failed = true;
    CHECK(orthogonality_failed);
    CHECK(run({"verify", "--level", "slow"}) == kExitUsage);
    fs::remove_all(dir);
}

}  // TEST_SUITE
