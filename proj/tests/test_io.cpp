#include <doctest.h>

#include <cmath>
#include <fstream>

#include "isospec/errors.hpp"
#include "isospec/io.hpp"
#include "test_helpers.hpp"

using namespace isospec;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("isospec_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("number formatting round trips") {
    Rng rng(61);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double v = n(rng) * std::pow(10.0, std::uniform_int_distribution<int>(-20, 20)(rng));
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(1.0) == "1.0");
    CHECK(format_double(0.0) == "0.0");
}

TEST_CASE("checksums") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("CSV round trips") {
    Rng rng(62);
    const HarmonicCoeffs c = testing_support::random_real_coeffs(5, rng);
    CHECK(parse_coeffs_csv(coeffs_csv(c)).values() == c.values());
    AngularPowerSpectrum f;
    f.f = {1.0, 1.0 / 9.0, 1.0 / 49.0};
    CHECK(spectrum_csv(f).rfind("l,f\n", 0) == 0);
    CHECK(parse_spectrum_csv(spectrum_csv(f)).f == f.f);
    CHECK_THROWS_AS(parse_spectrum_csv("l,f\n0,abc\n"), ConfigError);
    CHECK_THROWS_AS(parse_coeffs_csv("l,m,re,im\n1,3,0.0,0.0\n"), ConfigError);

    auto grid = std::make_shared<const SphereGrid>(SphereGrid::for_band_limit(5));
    const SphereMap map = synthesize(c, grid);
    const auto rows = parse_map_csv(map_csv(map));
    REQUIRE(rows.size() == static_cast<std::size_t>(grid->n_theta() * grid->n_phi()));
    CHECK(rows[0][2] == map.values(0, 0));

    const std::string cov = covariance_csv(LaplaceBeltrami{1.0, 64}, 512);
    CHECK(cov.rfind("gamma,C\n", 0) == 0);
    CHECK(std::count(cov.begin(), cov.end(), '\n') == 513);
}

TEST_CASE("model descriptors") {
    const json j = json::parse(R"({"variant": "ExpKappa", "params": {"kappa": 2.5}})");
    const CovarianceModel m = model_from_json(j);
    REQUIRE(std::holds_alternative<ExpKappa>(m));
    CHECK(std::get<ExpKappa>(m).kappa == 2.5);
    CHECK(model_from_json(model_to_json(m)).index() == m.index());
    for (const CovarianceModel& each : std::vector<CovarianceModel>{LaplaceBeltrami{2.0, 128}, GeneratingInvPow{0.3, 4.0},
                                                                   PoissonKernelPow{0.2, 3.0}, ExpJ0{1.5}, BesselI0Product{0.7},
                                                                   MaternRestricted{2.0, 0.5, 0.4}})
        CHECK(model_to_json(model_from_json(model_to_json(each))) == model_to_json(each));
    CHECK_THROWS_AS(model_from_json(json::parse(R"({"variant": "Nope"})")), ConfigError);
    CHECK_THROWS_AS(model_from_json(json::parse(R"({"variant": "ExpKappa", "params": {"kapa": 1}})")), ConfigError);
    CHECK_THROWS_AS(model_from_json(json::parse(R"({"variant": "LaplaceBeltrami", "params": {"c": -1}})")), ConfigError);
}

TEST_CASE("polyspectrum JSON") {
    PolySpectrum s(4);
    s.set(SpectrumKey{{2, 2, 2, 2}, {2}}, 0.25, 0.01);
    s.set(SpectrumKey{{1, 2, 3, 4}, {3}}, -1.0 / 3.0, 0.0);
    const PolySpectrum back = polyspectrum_from_json(polyspectrum_to_json(s));
    CHECK(back.order() == 4);
    for (const auto& [k, e] : s.entries()) {
        CHECK(back.find(k)->value == e.value);
        CHECK(back.find(k)->se == e.se);
    }
    json bad = polyspectrum_to_json(s);
    bad["entries"][0]["l"] = {1, 1, 1, 2};
    CHECK_THROWS_AS(polyspectrum_from_json(bad), ConfigError);
}

TEST_CASE("simulation configs") {
    const json j = json::parse(R"({"lmax": 3, "n_replicates": 5, "seed": 7,
        "spectrum": {"model": {"variant": "LaplaceBeltrami", "params": {"c": 1}}},
        "non_gaussian": [{"l": 2, "law": "centered_gamma", "shape": 2}]})");
    const SimulationConfig cfg = simulation_config_from_json(j);
    CHECK(cfg.n_replicates == 5);
    CHECK(cfg.master_seed == 7u);
    REQUIRE(std::holds_alternative<BaseArraySpec>(cfg.spec));
    CHECK(std::get<BaseArraySpec>(cfg.spec).m0[2].law == M0Law::centered_gamma);
    CHECK_THROWS_AS(simulation_config_from_json(json::parse(R"({"lmax": 3, "spectrum": {"values": [1, 1, 1, 1]}, "bogus": 1})")),
                    ConfigError);
    CHECK_THROWS_AS(simulation_config_from_json(json::parse(R"({"lmax": 3})")), ConfigError);
}

TEST_CASE("ensemble directories") {
    const fs::path dir = fresh_dir("ensemble");
    SimulationConfig cfg;
    AngularPowerSpectrum f;
    f.f = {1.0, 0.5, 0.25};
    cfg.spec = f;
    cfg.n_replicates = 4;
    cfg.lmax = 2;
    cfg.master_seed = 3;
    const CoeffEnsemble e = run_ensemble(cfg);
    const EnsembleManifest m = write_ensemble(dir, e, json{{"note", "test"}}, 0.5);
    for (const fs::path& p : m.files) CHECK(fs::exists(p));
    const CoeffEnsemble back = read_ensemble(dir);
    REQUIRE(back.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(back.replicates[i].values() == e.replicates[i].values());
    CHECK(back.master_seed == 3u);

    // Tampering with a replicate is detected.
    const fs::path rep = dir / m.document.at("replicates")[1].at("file").get<std::string>();
    std::ofstream(rep, std::ios::app) << "2,0,0.0,0.0\n";
    CHECK_THROWS_AS(read_ensemble(dir), ConfigError);
    fs::remove(rep);
    CHECK_THROWS_AS(read_ensemble(dir), ConfigError);
    CHECK_THROWS_AS(read_ensemble(dir / "missing"), Error);
    fs::remove_all(dir);
}

}  // TEST_SUITE
