#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "isospec/coeffs.hpp"
#include "isospec/harmonics.hpp"
#include "isospec/models.hpp"
#include "isospec/simulate.hpp"
#include "isospec/spectra.hpp"

namespace isospec {

using json = nlohmann::json;
namespace fs = std::filesystem;

// 17 significant digits; integral values keep a trailing ".0".
std::string format_double(double v);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

// SHA-256 of a byte string / file as lowercase hex.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const fs::path& path);

// Spectrum CSV: header "l,f".
std::string spectrum_csv(const AngularPowerSpectrum& f);
AngularPowerSpectrum parse_spectrum_csv(const std::string& text);

// Coefficient CSV: header "l,m,re,im", rows for m >= 0.
std::string coeffs_csv(const HarmonicCoeffs& c);
HarmonicCoeffs parse_coeffs_csv(const std::string& text);

// Map CSV: header "theta,phi,value".
std::string map_csv(const SphereMap& map);
std::vector<std::array<double, 3>> parse_map_csv(const std::string& text);

// Covariance curve CSV: header "gamma,C" on npts equispaced angles in [0, pi].
std::string covariance_csv(const CovarianceModel& model, int npts = 512);

// {"variant": "...", "params": {...}}; throws ConfigError naming the problem.
CovarianceModel model_from_json(const json& j);
json model_to_json(const CovarianceModel& model);

// {"p": 3, "entries": [{"l": [...], "diag": [...], "value": v, "se": s}, ...]}
json polyspectrum_to_json(const PolySpectrum& s);
PolySpectrum polyspectrum_from_json(const json& j);

// Simulation config:
// {"lmax": L, "n_replicates": N, "seed": S, "threads": T,
//  "spectrum": {"values": [...]} | {"model": {...}},
//  "construction": "gaussian" | "wigner_d",
//  "non_gaussian": [{"l": 2, "law": "centered_exponential", "rate": 1.0}, ...]}
SimulationConfig simulation_config_from_json(const json& j);

// Ensemble directory: manifest.json plus replicates/rep_NNNNNN.csv.
struct EnsembleManifest {
    json document;
    std::vector<fs::path> files;
};
EnsembleManifest write_ensemble(const fs::path& dir, const CoeffEnsemble& e, const json& config_echo, double seconds);
CoeffEnsemble read_ensemble(const fs::path& dir);

}  // namespace isospec
