#include "isospec/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "isospec/errors.hpp"
#include "isospec/io.hpp"
#include "isospec/verify.hpp"

namespace isospec {

namespace {

int default_threads() {
    if (const char* env = std::getenv("ISOSPEC_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (const std::exception&) {
        }
        throw ConfigError(std::string("ISOSPEC_THREADS: expected a positive integer, got '") + env + "'");
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Accumulates the run report while a subcommand executes.
class RunReport {
public:
    RunReport(std::string command, fs::path out_dir) : command_(std::move(command)), dir_(std::move(out_dir)) {
        start_ = std::chrono::steady_clock::now();
    }

    void set_config_hash(const std::string& h) { config_hash_ = h; }

    void write_output(const std::string& name, const std::string& text) {
        const fs::path path = dir_ / name;
        write_text(path, text);
        outputs_.push_back(path);
    }
    void add_outputs(const std::vector<fs::path>& paths) { outputs_.insert(outputs_.end(), paths.begin(), paths.end()); }

    void set_checks(const VerifyReport& r) {
        checks_ = json::array();
        for (const CheckResult& c : r.checks)
            checks_.push_back({{"name", c.name},
                               {"passed", c.passed},
                               {"residual", std::isfinite(c.residual) ? json(c.residual) : json(nullptr)},
                               {"tolerance", c.tolerance},
                               {"note", c.note}});
        findings_ = r.findings;
    }

    double elapsed() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

    // Writes report.json; every declared output must exist.
    fs::path finish() {
        for (const fs::path& p : outputs_)
            if (!fs::exists(p)) throw IoError("declared output missing: " + p.string());
        json outputs = json::array();
        for (const fs::path& p : outputs_) outputs.push_back(p.string());
        const json doc = {{"command", command_},   {"config_hash", config_hash_}, {"timing", {{"seconds", elapsed()}}},
                          {"outputs", outputs},    {"checks", checks_},          {"findings", findings_}};
        const fs::path path = dir_ / "report.json";
        write_text(path, doc.dump(2) + "\n");
        return path;
    }

private:
    std::string command_;
    fs::path dir_;
    std::chrono::steady_clock::time_point start_;
    std::string config_hash_;
    std::vector<fs::path> outputs_;
    json checks_ = json::array();
    json findings_ = json::array();
};

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

json parse_json_file(const fs::path& path) {
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::exception& ex) {
        throw ConfigError(path.string() + ": not valid JSON: " + ex.what());
    }
}

struct ModelsArgs {
    std::string config, out;
    int lmax = 32;
};

int cmd_models(const ModelsArgs& a, const std::string& command) {
    const fs::path out(a.out);
    const std::string text = read_text(a.config);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& ex) {
        throw ConfigError(a.config + ": not valid JSON: " + ex.what());
    }
    const CovarianceModel model = model_from_json(j);
    validate(model);
    const AngularPowerSpectrum f = model_spectrum(model, a.lmax);
    const std::string cov = covariance_csv(model, 512);
    make_dir(out);
    RunReport report(command, out);
    report.set_config_hash(sha256_hex(text));
    report.write_output("spectrum.csv", spectrum_csv(f));
    report.write_output("covariance.csv", cov);
    report.finish();
    return kExitOk;
}

struct SimulateArgs {
    std::string config, out;
    std::optional<std::uint64_t> seed;
    int threads = 1;
};

int cmd_simulate(const SimulateArgs& a, const std::string& command) {
    const fs::path out(a.out);
    json j = parse_json_file(a.config);
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    if (a.seed) j["seed"] = *a.seed;
    j["threads"] = a.threads;
    SimulationConfig cfg = simulation_config_from_json(j);
    cfg.validate();
    make_dir(out);
    RunReport report(command, out);
    json echo = j;
    echo.erase("threads");  // worker count does not affect the numbers
    report.set_config_hash(sha256_hex(echo.dump()));
    const auto t0 = std::chrono::steady_clock::now();
    const CoeffEnsemble e = run_ensemble(cfg);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const EnsembleManifest m = write_ensemble(out, e, echo, seconds);
    report.add_outputs(m.files);
    report.finish();
    return kExitOk;
}

struct EstimateArgs {
    std::string in, out;
    std::vector<int> orders;
    std::optional<int> lmax;
    int threads = 1;
    int jackknife_groups = 0;
};

int cmd_estimate(const EstimateArgs& a, const std::string& command) {
    const fs::path out(a.out);
    const CoeffEnsemble e = read_ensemble(a.in);
    const int lmax = a.lmax.value_or(e.lmax());
    if (lmax < 0 || lmax > e.lmax())
        throw ConfigError("--lmax " + std::to_string(lmax) + " outside the ensemble range 0.." + std::to_string(e.lmax()));
    for (int p : a.orders) {
        if (p < kMinPolyOrder || p > kMaxPolyOrder)
            throw ConfigError("--p " + std::to_string(p) + ": orders " + std::to_string(kMinPolyOrder) + ".." +
                              std::to_string(kMaxPolyOrder) + " are supported");
        if (e.size() < p + 1)
            throw ConfigError("order " + std::to_string(p) + " needs at least " + std::to_string(p + 1) + " replicates, ensemble has " +
                              std::to_string(e.size()));
    }
    make_dir(out);
    RunReport report(command, out);
    report.set_config_hash(sha256_file(fs::path(a.in) / "manifest.json"));
    AngularPowerSpectrum f = power_spectrum_estimate(e);
    f.f.resize(static_cast<std::size_t>(lmax) + 1);
    report.write_output("power_spectrum.csv", spectrum_csv(f));
    EstimateOptions opts;
    opts.threads = a.threads;
    opts.jackknife_groups = a.jackknife_groups;
    for (int p : a.orders) {
        const PolySpectrum s = polyspectrum_estimate(p, e, lmax, opts);
        report.write_output("polyspectrum_p" + std::to_string(p) + ".json", polyspectrum_to_json(s).dump(2) + "\n");
    }
    report.finish();
    return kExitOk;
}

struct VerifyArgs {
    std::string level = "quick", out = ".", fault;
    int threads = 1;
    std::uint64_t seed = 20240601;
    bool quiet = false;
};

int cmd_verify(const VerifyArgs& a, const std::string& command) {
    VerifyOptions opts;
    opts.level = a.level == "full" ? VerifyLevel::full : VerifyLevel::quick;
    opts.threads = a.threads;
    opts.seed = a.seed;
    if (a.fault == "wigner3j-sign") opts.threej = corrupted_wigner_3j;
    const fs::path out(a.out);
    make_dir(out);
    RunReport report(command, out);
    report.set_config_hash(sha256_hex(a.level + "|" + a.fault + "|" + std::to_string(a.seed)));
    const VerifyReport r = run_verification(opts);
    report.set_checks(r);
    report.finish();
    int failed = 0;
    for (const CheckResult& c : r.checks) {
        if (!c.passed) ++failed;
        if (a.quiet) continue;
        std::cout << (c.passed ? "ok    " : "FAIL  ") << c.name << "  residual=" << c.residual << " tol=" << c.tolerance;
        if (!c.note.empty()) std::cout << "  (" << c.note << ")";
        std::cout << "\n";
    }
    if (!a.quiet)
        for (const json& f : r.findings) std::cout << "finding  " << f.value("name", "") << ": " << f.value("summary", "") << "\n";
    if (failed) {
        std::cerr << failed << " check(s) failed\n";
        return kExitVerifyFailed;
    }
    return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
    std::string command;
    for (int i = 0; i < argc; ++i) command += (i ? " " : "") + std::string(argv[i]);

    CLI::App app{"Isotropic random fields on the sphere: models, simulation, polyspectrum estimation, verification"};
    app.require_subcommand(1);
    int threads = 1;
    try {
        threads = default_threads();
    } catch (const ConfigError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitUsage;
    }

    ModelsArgs ma;
    auto* models = app.add_subcommand("models", "Tabulate the angular power spectrum and covariance of a model");
    models->add_option("--config", ma.config, "Model descriptor JSON")->required();
    models->add_option("--lmax", ma.lmax, "Largest degree")->check(CLI::NonNegativeNumber);
    models->add_option("--out", ma.out, "Output directory")->required();

    SimulateArgs sa;
    auto* simulate = app.add_subcommand("simulate", "Generate a replicate ensemble of coefficient arrays");
    simulate->add_option("--config", sa.config, "Simulation config JSON")->required();
    simulate->add_option("--out", sa.out, "Output directory")->required();
    simulate->add_option("--seed", sa.seed, "Override the master seed");
    simulate->add_option("--threads", sa.threads, "Worker threads")->check(CLI::PositiveNumber);

    EstimateArgs ea;
    auto* estimate = app.add_subcommand("estimate", "Estimate power spectrum and polyspectra from an ensemble");
    estimate->add_option("--in", ea.in, "Ensemble directory")->required();
    estimate->add_option("--p", ea.orders, "Polyspectrum orders, comma separated (default: power spectrum only)")->delimiter(',');
    estimate->add_option("--lmax", ea.lmax, "Largest degree (default: ensemble lmax)");
    estimate->add_option("--out", ea.out, "Output directory")->required();
    estimate->add_option("--threads", ea.threads, "Worker threads")->check(CLI::PositiveNumber);
    estimate->add_option("--jackknife-groups", ea.jackknife_groups, "Delete-a-group jackknife groups (0: leave-one-out)")
        ->check(CLI::NonNegativeNumber);

    VerifyArgs va;
    auto* verify = app.add_subcommand("verify", "Run the cross-module identity suite");
    verify->add_option("--level", va.level, "quick or full")->check(CLI::IsMember({"quick", "full"}));
    verify->add_option("--out", va.out, "Directory for report.json");
    verify->add_option("--threads", va.threads, "Worker threads")->check(CLI::PositiveNumber);
    verify->add_option("--seed", va.seed, "Seed of the randomized checks");
    verify->add_flag("--quiet", va.quiet, "Only write the report");
    verify->add_option("--inject-fault", va.fault, "Exercise the harness with a corrupted input")
        ->check(CLI::IsMember({"wigner3j-sign"}))
        ->group("");

    sa.threads = ea.threads = va.threads = threads;
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (models->parsed()) return cmd_models(ma, command);
        if (simulate->parsed()) return cmd_simulate(sa, command);
        if (estimate->parsed()) return cmd_estimate(ea, command);
        if (verify->parsed()) return cmd_verify(va, command);
    } catch (const IoError& ex) {
        std::cerr << "I/O error: " << ex.what() << "\n";
        return kExitIo;
    } catch (const Error& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const json::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace isospec
