#include "isospec/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <openssl/evp.h>

#include "isospec/errors.hpp"

namespace isospec {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<std::vector<std::string>> parse_csv(const std::string& text, const std::string& header, std::size_t ncols) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("csv: empty input, expected header '" + header + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) throw ConfigError("csv: header '" + line + "' does not match '" + header + "'");
    std::vector<std::vector<std::string>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != ncols)
            throw ConfigError("csv: line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                              " fields, expected " + std::to_string(ncols));
        rows.push_back(std::move(cells));
    }
    return rows;
}

double to_double(const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw ConfigError("csv: malformed number '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        throw ConfigError("csv: malformed number '" + s + "'");
    }
}

int to_int(const std::string& s) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw ConfigError("csv: malformed integer '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        throw ConfigError("csv: malformed integer '" + s + "'");
    }
}

double get_param(const json& params, const std::string& variant, const char* name, double fallback, bool required) {
    if (!params.contains(name)) {
        if (required) throw ConfigError(variant + ": missing parameter '" + name + "'");
        return fallback;
    }
    const json& v = params.at(name);
    if (!v.is_number()) throw ConfigError(variant + ": parameter '" + std::string(name) + "' must be a number");
    return v.get<double>();
}

void reject_unknown(const json& params, const std::string& variant, std::initializer_list<const char*> known) {
    for (auto it = params.begin(); it != params.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw ConfigError(variant + ": unknown parameter '" + it.key() + "'");
    }
}

template <class T>
T json_get(const json& j, const char* key, const T& fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config: field '") + key + "' has the wrong type");
    }
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    out.close();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256: digest failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text(path)); }

std::string spectrum_csv(const AngularPowerSpectrum& f) {
    std::string out = "l,f\n";
    for (std::size_t l = 0; l < f.f.size(); ++l) out += std::to_string(l) + "," + format_double(f.f[l]) + "\n";
    return out;
}

AngularPowerSpectrum parse_spectrum_csv(const std::string& text) {
    AngularPowerSpectrum f;
    for (const auto& row : parse_csv(text, "l,f", 2)) {
        const int l = to_int(row[0]);
        if (l != static_cast<int>(f.f.size())) throw ConfigError("spectrum csv: degrees must be 0,1,2,... in order");
        f.f.push_back(to_double(row[1]));
    }
    return f;
}

std::string coeffs_csv(const HarmonicCoeffs& c) {
    std::string out = "l,m,re,im\n";
    for (int l = 0; l <= c.lmax(); ++l)
        for (int m = 0; m <= l; ++m) {
            const cplx z = c(l, m);
            out += std::to_string(l) + "," + std::to_string(m) + "," + format_double(z.real()) + "," +
                   format_double(z.imag()) + "\n";
        }
    return out;
}

HarmonicCoeffs parse_coeffs_csv(const std::string& text) {
    const auto rows = parse_csv(text, "l,m,re,im", 4);
    int lmax = -1;
    for (const auto& r : rows) lmax = std::max(lmax, to_int(r[0]));
    if (lmax < 0) throw ConfigError("coefficient csv: no rows");
    const std::size_t expected = static_cast<std::size_t>((lmax + 1) * (lmax + 2) / 2);
    if (rows.size() != expected)
        throw ConfigError("coefficient csv: expected " + std::to_string(expected) + " rows, got " + std::to_string(rows.size()));
    HarmonicCoeffs c(lmax);
    std::vector<bool> seen(expected, false);
    for (const auto& r : rows) {
        const int l = to_int(r[0]);
        const int m = to_int(r[1]);
        if (l < 0 || m < 0 || m > l) throw ConfigError("coefficient csv: invalid index (" + r[0] + "," + r[1] + ")");
        const std::size_t k = static_cast<std::size_t>(l * (l + 1) / 2 + m);
        if (seen[k]) throw ConfigError("coefficient csv: duplicate index (" + r[0] + "," + r[1] + ")");
        seen[k] = true;
        c.set(l, m, cplx(to_double(r[2]), to_double(r[3])));
    }
    return c;
}

std::string map_csv(const SphereMap& map) {
    std::string out = "theta,phi,value\n";
    const auto& th = map.grid->colatitudes();
    const auto& ph = map.grid->longitudes();
    for (int i = 0; i < map.grid->n_theta(); ++i)
        for (int j = 0; j < map.grid->n_phi(); ++j)
            out += format_double(th[static_cast<std::size_t>(i)]) + "," + format_double(ph[static_cast<std::size_t>(j)]) +
                   "," + format_double(map.values(i, j)) + "\n";
    return out;
}

std::vector<std::array<double, 3>> parse_map_csv(const std::string& text) {
    std::vector<std::array<double, 3>> out;
    for (const auto& r : parse_csv(text, "theta,phi,value", 3))
        out.push_back({to_double(r[0]), to_double(r[1]), to_double(r[2])});
    return out;
}

std::string covariance_csv(const CovarianceModel& model, int npts) {
    if (npts < 2) throw InvalidArgument("covariance_csv: need at least 2 points");
    std::string out = "gamma,C\n";
    for (int i = 0; i < npts; ++i) {
        const double g = std::numbers::pi * i / (npts - 1);
        out += format_double(g) + "," + format_double(model_covariance(model, g)) + "\n";
    }
    return out;
}

CovarianceModel model_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("model: descriptor must be a JSON object");
    if (!j.contains("variant") || !j.at("variant").is_string()) throw ConfigError("model: missing string field 'variant'");
    const std::string v = j.at("variant").get<std::string>();
    const json params = j.contains("params") ? j.at("params") : json::object();
    if (!params.is_object()) throw ConfigError(v + ": 'params' must be an object");
    CovarianceModel model;
    if (v == "LaplaceBeltrami") {
        reject_unknown(params, v, {"c", "series_lmax"});
        LaplaceBeltrami m;
        m.c = get_param(params, v, "c", 1.0, false);
        const double sl = get_param(params, v, "series_lmax", 1024, false);
        if (sl != std::floor(sl) || sl < 1 || sl > 100000) throw ConfigError(v + ": parameter 'series_lmax' must be a positive integer");
        m.series_lmax = static_cast<int>(sl);
        model = m;
    } else if (v == "GeneratingInvPow") {
        reject_unknown(params, v, {"z", "n"});
        model = GeneratingInvPow{get_param(params, v, "z", 0.5, true), get_param(params, v, "n", 3.0, false)};
    } else if (v == "PoissonKernelPow") {
        reject_unknown(params, v, {"a", "n"});
        model = PoissonKernelPow{get_param(params, v, "a", 0.5, true), get_param(params, v, "n", 3.0, false)};
    } else if (v == "ExpKappa") {
        reject_unknown(params, v, {"kappa"});
        model = ExpKappa{get_param(params, v, "kappa", 1.0, true)};
    } else if (v == "ExpJ0") {
        reject_unknown(params, v, {"kappa"});
        model = ExpJ0{get_param(params, v, "kappa", 1.0, true)};
    } else if (v == "BesselI0Product") {
        reject_unknown(params, v, {"kappa"});
        model = BesselI0Product{get_param(params, v, "kappa", 1.0, true)};
    } else if (v == "MaternRestricted") {
        reject_unknown(params, v, {"sigma2", "nu", "theta"});
        model = MaternRestricted{get_param(params, v, "sigma2", 1.0, false), get_param(params, v, "nu", 0.5, true),
                                 get_param(params, v, "theta", 1.0, true)};
    } else if (v == "SpectralMeasure") {
        reject_unknown(params, v, {"density", "c", "atoms"});
        SpectralMeasure m;
        const std::string density = params.contains("density") ? params.at("density").get<std::string>() : "none";
        if (density == "laplace_beltrami") {
            m = laplace_beltrami_measure(get_param(params, v, "c", 1.0, true));
        } else if (density != "none") {
            throw ConfigError(v + ": unknown density '" + density + "'");
        }
        if (params.contains("atoms")) {
            for (const json& a : params.at("atoms")) {
                if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
                    throw ConfigError(v + ": parameter 'atoms' must be a list of [lambda, mass] pairs");
                m.atoms.emplace_back(a[0].get<double>(), a[1].get<double>());
            }
        }
        model = m;
    } else {
        throw ConfigError("model: unknown variant '" + v + "'");
    }
    validate(model);
    return model;
}

json model_to_json(const CovarianceModel& model) {
    json params = std::visit(
        overloaded{[](const LaplaceBeltrami& m) { return json{{"c", m.c}, {"series_lmax", m.series_lmax}}; },
                   [](const GeneratingInvPow& m) { return json{{"z", m.z}, {"n", m.n}}; },
                   [](const PoissonKernelPow& m) { return json{{"a", m.a}, {"n", m.n}}; },
                   [](const ExpKappa& m) { return json{{"kappa", m.kappa}}; },
                   [](const ExpJ0& m) { return json{{"kappa", m.kappa}}; },
                   [](const BesselI0Product& m) { return json{{"kappa", m.kappa}}; },
                   [](const MaternRestricted& m) { return json{{"sigma2", m.sigma2}, {"nu", m.nu}, {"theta", m.theta}}; },
                   [](const SpectralMeasure& m) {
                       json p = json::object();
                       if (m.density) {
                           p["density"] = m.density_name;
                           p["c"] = m.density_param;
                       }
                       json atoms = json::array();
                       for (const auto& [lambda, mass] : m.atoms) atoms.push_back({lambda, mass});
                       p["atoms"] = atoms;
                       return p;
                   }},
        model);
    return json{{"variant", variant_name(model)}, {"params", params}};
}

json polyspectrum_to_json(const PolySpectrum& s) {
    json entries = json::array();
    for (const auto& [key, e] : s.entries())
        entries.push_back({{"l", key.l}, {"diag", key.diag}, {"value", e.value}, {"se", e.se}});
    return json{{"p", s.order()}, {"entries", entries}};
}

PolySpectrum polyspectrum_from_json(const json& j) {
    try {
        PolySpectrum s(j.at("p").get<int>());
        for (const json& e : j.at("entries")) {
            SpectrumKey key{e.at("l").get<std::vector<int>>(), e.at("diag").get<std::vector<int>>()};
            s.set(key, e.at("value").get<double>(), e.contains("se") ? e.at("se").get<double>() : 0.0);
        }
        return s;
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("polyspectrum json: ") + ex.what());
    } catch (const InvalidArgument& ex) {
        throw ConfigError(std::string("polyspectrum json: ") + ex.what());
    }
}

SimulationConfig simulation_config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        static const char* known[] = {"lmax", "n_replicates", "seed", "threads", "spectrum", "construction", "non_gaussian"};
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw ConfigError("config: unknown field '" + it.key() + "'");
    }
    SimulationConfig cfg;
    if (!j.contains("lmax")) throw ConfigError("config: missing field 'lmax'");
    cfg.lmax = json_get<int>(j, "lmax", 0);
    cfg.n_replicates = json_get<int>(j, "n_replicates", 1);
    cfg.master_seed = json_get<std::uint64_t>(j, "seed", 0);
    cfg.threads = json_get<int>(j, "threads", 1);
    if (cfg.lmax < 0 || cfg.lmax > 128) throw ConfigError("config: 'lmax' must be in [0, 128]");

    if (!j.contains("spectrum")) throw ConfigError("config: missing field 'spectrum'");
    const json& sj = j.at("spectrum");
    AngularPowerSpectrum f;
    if (sj.contains("values")) {
        f.f = json_get<std::vector<double>>(sj, "values", {});
    } else if (sj.contains("model")) {
        f = model_spectrum(model_from_json(sj.at("model")), cfg.lmax);
    } else {
        throw ConfigError("config: 'spectrum' needs 'values' or 'model'");
    }
    if (f.lmax() < cfg.lmax) throw ConfigError("config: spectrum has fewer than lmax+1 values");
    f.f.resize(static_cast<std::size_t>(cfg.lmax + 1));

    const std::string construction =
        json_get<std::string>(j, "construction", j.contains("non_gaussian") ? "wigner_d" : "gaussian");
    if (construction == "gaussian") {
        if (j.contains("non_gaussian")) throw ConfigError("config: 'non_gaussian' requires construction 'wigner_d'");
        cfg.spec = f;
    } else if (construction == "wigner_d") {
        BaseArraySpec spec;
        spec.f = f;
        spec.m0.assign(f.f.size(), M0Distribution{});
        if (j.contains("non_gaussian")) {
            for (const json& e : j.at("non_gaussian")) {
                const int l = json_get<int>(e, "l", -1);
                if (l < 0 || l > cfg.lmax) throw ConfigError("config: non_gaussian degree 'l' outside [0, lmax]");
                M0Distribution d;
                const std::string law = json_get<std::string>(e, "law", "");
                if (law == "gaussian") d.law = M0Law::gaussian;
                else if (law == "centered_exponential") d.law = M0Law::centered_exponential;
                else if (law == "centered_gamma") d.law = M0Law::centered_gamma;
                else throw ConfigError("config: unknown law '" + law + "'");
                d.rate = json_get<double>(e, "rate", 1.0);
                d.shape = json_get<double>(e, "shape", 1.0);
                spec.m0[static_cast<std::size_t>(l)] = d;
            }
        }
        cfg.spec = spec;
    } else {
        throw ConfigError("config: unknown construction '" + construction + "'");
    }
    cfg.validate();
    return cfg;
}

EnsembleManifest write_ensemble(const fs::path& dir, const CoeffEnsemble& e, const json& config_echo, double seconds) {
    std::error_code ec;
    fs::create_directories(dir / "replicates", ec);
    if (ec) throw IoError("cannot create '" + (dir / "replicates").string() + "': " + ec.message());
    EnsembleManifest out;
    json reps = json::array();
    for (int i = 0; i < e.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "rep_%06d.csv", i);
        const fs::path rel = fs::path("replicates") / name;
        const std::string text = coeffs_csv(e.replicates[static_cast<std::size_t>(i)]);
        write_text(dir / rel, text);
        reps.push_back({{"index", i}, {"file", rel.generic_string()}, {"sha256", sha256_hex(text)}});
        out.files.push_back(dir / rel);
    }
    out.document = json{{"config", config_echo},
                        {"seed", e.master_seed},
                        {"lmax", e.lmax()},
                        {"n_replicates", e.size()},
                        {"replicates", reps},
                        {"timing", {{"seconds", seconds}}}};
    write_text(dir / "manifest.json", out.document.dump(2) + "\n");
    out.files.push_back(dir / "manifest.json");
    return out;
}

CoeffEnsemble read_ensemble(const fs::path& dir) {
    const fs::path mpath = dir / "manifest.json";
    if (!fs::exists(mpath)) throw ConfigError("ensemble: missing manifest '" + mpath.string() + "'");
    json doc;
    try {
        doc = json::parse(read_text(mpath));
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("ensemble: malformed manifest: ") + ex.what());
    }
    CoeffEnsemble e;
    try {
        e.master_seed = doc.at("seed").get<std::uint64_t>();
        const int lmax = doc.at("lmax").get<int>();
        const json& reps = doc.at("replicates");
        if (static_cast<int>(reps.size()) != doc.at("n_replicates").get<int>())
            throw ConfigError("ensemble: replicate count does not match manifest");
        for (const json& r : reps) {
            const fs::path file = dir / r.at("file").get<std::string>();
            if (!fs::exists(file)) throw ConfigError("ensemble: missing replicate file '" + file.string() + "'");
            const std::string text = read_text(file);
            if (sha256_hex(text) != r.at("sha256").get<std::string>())
                throw ConfigError("ensemble: checksum mismatch for '" + file.string() + "'");
            HarmonicCoeffs c = parse_coeffs_csv(text);
            if (c.lmax() != lmax) throw ConfigError("ensemble: replicate '" + file.string() + "' has inconsistent lmax");
            e.replicates.push_back(std::move(c));
        }
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("ensemble: malformed manifest: ") + ex.what());
    }
    e.lineage = "read:" + dir.string();
    return e;
}

}  // namespace isospec
