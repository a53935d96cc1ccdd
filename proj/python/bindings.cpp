#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "isospec/errors.hpp"
#include "isospec/harmonics.hpp"
#include "isospec/io.hpp"
#include "isospec/models.hpp"
#include "isospec/simulate.hpp"
#include "isospec/spectra.hpp"
#include "isospec/verify.hpp"
#include "isospec/wigner.hpp"

namespace py = pybind11;
using namespace isospec;

namespace {

using CoeffArray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;

// Rows of (lmax+1)^2 coefficients in (l, m) order, index l^2 + l + m.
CoeffArray ensemble_to_array(const CoeffEnsemble& e) {
    const int lmax = e.lmax();
    const py::ssize_t width = static_cast<py::ssize_t>(lmax + 1) * (lmax + 1);
    CoeffArray out({static_cast<py::ssize_t>(e.size()), width});
    auto a = out.mutable_unchecked<2>();
    for (int i = 0; i < e.size(); ++i)
        for (py::ssize_t j = 0; j < width; ++j) a(i, j) = e.replicates[i].values()[static_cast<std::size_t>(j)];
    return out;
}

CoeffEnsemble array_to_ensemble(const CoeffArray& arr) {
    if (arr.ndim() != 2) throw InvalidArgument("coefficient array must be 2-D (replicates x coefficients)");
    const auto width = arr.shape(1);
    const int lmax = static_cast<int>(std::lround(std::sqrt(static_cast<double>(width)))) - 1;
    if (lmax < 0 || static_cast<py::ssize_t>(lmax + 1) * (lmax + 1) != width)
        throw InvalidArgument("coefficient rows must have (lmax+1)^2 entries");
    auto a = arr.unchecked<2>();
    CoeffEnsemble e;
    for (py::ssize_t i = 0; i < arr.shape(0); ++i) {
        HarmonicCoeffs c(lmax);
        for (int l = 0; l <= lmax; ++l)
            for (int m = -l; m <= l; ++m) c.set(l, m, a(i, static_cast<py::ssize_t>(HarmonicCoeffs::index(l, m))));
        e.replicates.push_back(std::move(c));
    }
    return e;
}

py::dict spectrum_to_dict(const PolySpectrum& s) {
    py::dict out;
    for (const auto& [k, e] : s.entries()) {
        py::tuple key = py::make_tuple(py::tuple(py::cast(k.l)), py::tuple(py::cast(k.diag)));
        out[key] = py::make_tuple(e.value, e.se);
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_isospec, m) {
    m.doc() = "Isotropic random fields on the sphere: Wigner symbols, models, simulation and polyspectra.";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.def("wigner_3j", &wigner_3j, py::arg("l1"), py::arg("l2"), py::arg("l3"), py::arg("m1"), py::arg("m2"), py::arg("m3"));
    m.def("wigner_3j_zero", &wigner_3j_zero, py::arg("l1"), py::arg("l2"), py::arg("l3"));
    m.def("clebsch_gordan", &clebsch_gordan, py::arg("l1"), py::arg("k1"), py::arg("l2"), py::arg("k2"), py::arg("l"), py::arg("k"));
    m.def("gaunt", &gaunt, py::arg("l1"), py::arg("m1"), py::arg("l2"), py::arg("m2"), py::arg("l3"), py::arg("m3"));
    m.def("wigner_d", [](int l, double theta) {
        const Eigen::MatrixXd d = wigner_d(l, theta);
        py::array_t<double> out({d.rows(), d.cols()});
        auto a = out.mutable_unchecked<2>();
        for (Eigen::Index i = 0; i < d.rows(); ++i)
            for (Eigen::Index j = 0; j < d.cols(); ++j) a(i, j) = d(i, j);
        return out;
    }, py::arg("l"), py::arg("theta"));
    m.def("wigner_D", [](int l, double phi, double theta, double gamma) {
        const Eigen::MatrixXcd D = wigner_D(l, make_rotation(phi, theta, gamma)).entries;
        py::array_t<std::complex<double>> out({D.rows(), D.cols()});
        auto a = out.mutable_unchecked<2>();
        for (Eigen::Index i = 0; i < D.rows(); ++i)
            for (Eigen::Index j = 0; j < D.cols(); ++j) a(i, j) = D(i, j);
        return out;
    }, py::arg("l"), py::arg("phi"), py::arg("theta"), py::arg("gamma"));
    m.def("spherical_harmonic", &spherical_harmonic, py::arg("l"), py::arg("m"), py::arg("theta"), py::arg("phi"));
    m.def("legendre", &legendre, py::arg("l"), py::arg("x"));

    m.def("model_spectrum", [](const std::string& descriptor, int lmax) {
        return model_spectrum(model_from_json(json::parse(descriptor)), lmax).f;
    }, py::arg("descriptor"), py::arg("lmax"));
    m.def("model_covariance", [](const std::string& descriptor, double gamma) {
        return model_covariance(model_from_json(json::parse(descriptor)), gamma);
    }, py::arg("descriptor"), py::arg("gamma"));

    m.def("simulate", [](const std::string& config) {
        const SimulationConfig cfg = simulation_config_from_json(json::parse(config));
        CoeffEnsemble e;
        {
            py::gil_scoped_release release;
            e = run_ensemble(cfg);
        }
        return ensemble_to_array(e);
    }, py::arg("config"));
    m.def("power_spectrum", [](const CoeffArray& coeffs) { return power_spectrum_estimate(array_to_ensemble(coeffs)).f; },
          py::arg("coeffs"));
    m.def("polyspectrum", [](int p, const CoeffArray& coeffs, int lmax, int threads) {
        const CoeffEnsemble e = array_to_ensemble(coeffs);
        EstimateOptions opts;
        opts.threads = threads;
        PolySpectrum s(p);
        {
            py::gil_scoped_release release;
            s = polyspectrum_estimate(p, e, lmax, opts);
        }
        return spectrum_to_dict(s);
    }, py::arg("p"), py::arg("coeffs"), py::arg("lmax"), py::arg("threads") = 1);
    m.def("theoretical_polyspectrum", [](const std::string& config, int p) {
        const SimulationConfig cfg = simulation_config_from_json(json::parse(config));
        const auto* spec = std::get_if<BaseArraySpec>(&cfg.spec);
        if (!spec) throw ConfigError("theoretical polyspectra need a wigner_d construction");
        return spectrum_to_dict(theoretical_polyspectra(*spec, p));
    }, py::arg("config"), py::arg("p"));

    m.def("verify", [](const std::string& level) {
        VerifyOptions opts;
        if (level == "full") opts.level = VerifyLevel::full;
        else if (level != "quick") throw ConfigError("level must be 'quick' or 'full'");
        VerifyReport r;
        {
            py::gil_scoped_release release;
            r = run_verification(opts);
        }
        py::list checks;
        for (const CheckResult& c : r.checks)
            checks.append(py::dict(py::arg("name") = c.name, py::arg("passed") = c.passed, py::arg("residual") = c.residual,
                                   py::arg("tolerance") = c.tolerance, py::arg("note") = c.note));
        return py::make_tuple(checks, r.findings.dump());
    }, py::arg("level") = "quick");
}
