#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mmwsar/attack.hpp"
#include "mmwsar/experiment.hpp"
#include "mmwsar/metrics.hpp"

namespace py = pybind11;
using namespace mmwsar;

namespace {

using CArray = py::array_t<Complex, py::array::c_style | py::array::forcecast>;
using DArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

CVec to_cvec(const CArray& arr, std::size_t expected, const char* what) {
    if (static_cast<std::size_t>(arr.size()) != expected)
        throw ShapeError(std::string(what) + ": expected " + std::to_string(expected) +
                         " elements");
    const auto* data = arr.data();
    return CVec(data, data + arr.size());
}

py::array to_numpy_image(const ReflectivityImage& img) {
    py::array_t<Complex> out({img.grid.ny, img.grid.nx});
    std::copy(img.values.begin(), img.values.end(), out.mutable_data());
    return out;
}

py::array to_numpy_vec(const CVec& v) {
    py::array_t<Complex> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

std::vector<double> to_dvec(const DArray& arr) {
    return std::vector<double>(arr.data(), arr.data() + arr.size());
}

ReconstructorSpec make_spec(const std::string& variant, double lambda_reg,
                            const std::optional<std::vector<double>>& mu,
                            const std::optional<std::vector<double>>& theta, int iters,
                            bool evanescent_cutoff) {
    ReconstructorSpec spec;
    spec.variant = variant_from_name(variant);
    spec.lambda_reg = lambda_reg;
    if (mu) spec.mu = *mu;
    if (theta) spec.theta = *theta;
    spec.iters = iters;
    spec.evanescent_cutoff = evanescent_cutoff;
    spec.validate();
    return spec;
}

py::dict report_to_dict(const MetricsReport& m) {
    py::dict d;
    d["psnr_ac"] = m.psnr_ac;
    d["ssim_ac"] = m.ssim_ac;
    d["psnr_at"] = m.psnr_at;
    d["ssim_at"] = m.ssim_at;
    d["power_ratio"] = m.power_ratio;
    if (m.roi) {
        py::dict roi;
        roi["ix0"] = m.roi->ix0;
        roi["iy0"] = m.roi->iy0;
        roi["nx"] = m.roi->nx;
        roi["ny"] = m.roi->ny;
        d["roi"] = roi;
        py::dict rm;
        rm["psnr_ac"] = m.roi_psnr_ac;
        rm["ssim_ac"] = m.roi_ssim_ac;
        rm["psnr_at"] = m.roi_psnr_at;
        rm["ssim_at"] = m.roi_ssim_at;
        d["roi_metrics"] = rm;
    } else {
        d["roi"] = py::none();
        d["roi_metrics"] = py::none();
    }
    return d;
}

}  // namespace

PYBIND11_MODULE(_mmwsar, m) {
    m.doc() = "near-field mmWave SAR imaging and waveform-domain attack simulation";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<NumericError>(m, "NumericError");

    py::class_<Vec3>(m, "Vec3")
        .def(py::init<double, double, double>(), py::arg("x"), py::arg("y"), py::arg("z"))
        .def_readwrite("x", &Vec3::x)
        .def_readwrite("y", &Vec3::y)
        .def_readwrite("z", &Vec3::z);

    py::class_<RadarConfig>(m, "RadarConfig")
        .def(py::init<double, double, double, std::size_t, double>(), py::arg("f0"),
             py::arg("slope"), py::arg("fs"), py::arg("n_samples"),
             py::arg("c") = 299792458.0)
        .def_readonly("f0", &RadarConfig::f0)
        .def_readonly("slope", &RadarConfig::slope)
        .def_readonly("fs", &RadarConfig::fs)
        .def_readonly("n_samples", &RadarConfig::n_samples)
        .def_readonly("c", &RadarConfig::c)
        .def_readonly("k", &RadarConfig::k);

    py::class_<ApertureGrid>(m, "ApertureGrid")
        .def(py::init([](std::size_t nx, std::size_t ny, double dx, double dy,
                         std::pair<double, double> origin, std::pair<double, double> tx_offset,
                         std::pair<double, double> rx_offset) {
                 ApertureGrid g;
                 g.nx = nx;
                 g.ny = ny;
                 g.dx = dx;
                 g.dy = dy;
                 g.origin_x = origin.first;
                 g.origin_y = origin.second;
                 g.tx_offset_x = tx_offset.first;
                 g.tx_offset_y = tx_offset.second;
                 g.rx_offset_x = rx_offset.first;
                 g.rx_offset_y = rx_offset.second;
                 g.validate();
                 return g;
             }),
             py::arg("nx"), py::arg("ny"), py::arg("dx"), py::arg("dy"), py::arg("origin"),
             py::arg("tx_offset") = std::pair<double, double>{0.0, 0.0},
             py::arg("rx_offset") = std::pair<double, double>{0.0, 0.0})
        .def_readonly("nx", &ApertureGrid::nx)
        .def_readonly("ny", &ApertureGrid::ny)
        .def("looks", &ApertureGrid::looks)
        .def("look_position", [](const ApertureGrid& g, std::size_t l) {
            const Vec3 p = g.look_position(l);
            return std::make_tuple(p.x, p.y, p.z);
        });

    py::class_<ImageGrid>(m, "ImageGrid")
        .def(py::init([](std::size_t nx, std::size_t ny, double dx, double dy,
                         std::pair<double, double> origin, double z0) {
                 ImageGrid g;
                 g.nx = nx;
                 g.ny = ny;
                 g.dx = dx;
                 g.dy = dy;
                 g.origin_x = origin.first;
                 g.origin_y = origin.second;
                 g.z0 = z0;
                 g.validate();
                 return g;
             }),
             py::arg("nx"), py::arg("ny"), py::arg("dx"), py::arg("dy"), py::arg("origin"),
             py::arg("z0"))
        .def_readonly("nx", &ImageGrid::nx)
        .def_readonly("ny", &ImageGrid::ny)
        .def_readonly("z0", &ImageGrid::z0)
        .def("voxels", &ImageGrid::voxels);

    py::class_<Scene>(m, "Scene")
        .def_static(
            "points",
            [](double z0, const std::vector<std::tuple<double, double, Complex>>& pts) {
                std::vector<PointReflector> refl;
                refl.reserve(pts.size());
                for (const auto& [x, y, amp] : pts) refl.push_back({x, y, amp});
                return Scene::points(z0, std::move(refl));
            },
            py::arg("z0"), py::arg("reflectors"))
        .def_static(
            "shape",
            [](const std::string& name, const ImageGrid& grid, double amplitude) {
                SceneSpec spec;
                spec.shape = name;
                spec.amplitude = amplitude;
                return build_scene(spec, grid);
            },
            py::arg("name"), py::arg("grid"), py::arg("amplitude") = 0.005);

    py::class_<PropagationOperator>(m, "PropagationOperator")
        .def(py::init<const RadarConfig&, const ApertureGrid&, const ImageGrid&, bool>(),
             py::arg("radar"), py::arg("aperture"), py::arg("image"),
             py::arg("materialize") = false)
        .def("looks", &PropagationOperator::looks)
        .def("voxels", &PropagationOperator::voxels)
        .def("entry", &PropagationOperator::entry, py::arg("look"), py::arg("voxel"))
        .def("norm_estimate", &PropagationOperator::norm_estimate)
        .def("apply",
             [](const PropagationOperator& H, const CArray& alpha) {
                 ReflectivityImage img(H.image(),
                                       to_cvec(alpha, H.voxels(), "apply"));
                 return to_numpy_vec(H.apply(img).values);
             },
             py::arg("alpha"))
        .def("adjoint",
             [](const PropagationOperator& H, const CArray& y) {
                 MeasurementVector v(H.aperture(), to_cvec(y, H.looks(), "adjoint"));
                 return to_numpy_image(H.adjoint(v));
             },
             py::arg("y"))
        .def("synthesize",
             [](const PropagationOperator& H, const Scene& scene,
                std::optional<double> snr_db, std::uint64_t seed) {
                 Rng rng(seed);
                 return to_numpy_vec(
                     synthesize_measurements(H, scene, snr_db, rng).values);
             },
             py::arg("scene"), py::arg("snr_db") = py::none(), py::arg("seed") = 1);

    m.def("synth_chirp",
          [](const RadarConfig& cfg) { return to_numpy_vec(synth_chirp(ChirpSpec(cfg))); },
          py::arg("radar"));

    m.def("soft_threshold", &soft_threshold, py::arg("x"), py::arg("theta"));

    m.def(
        "reconstruct",
        [](const std::string& variant, const PropagationOperator& H, const CArray& y,
           double lambda_reg, const std::optional<std::vector<double>>& mu,
           const std::optional<std::vector<double>>& theta, int iters, bool evanescent_cutoff) {
            const ReconstructorSpec spec =
                make_spec(variant, lambda_reg, mu, theta, iters, evanescent_cutoff);
            MeasurementVector v(H.aperture(), to_cvec(y, H.looks(), "reconstruct"));
            const Reconstruction rec = reconstruct(spec, H, v);
            return py::make_tuple(to_numpy_image(rec.image), rec.diagnostics);
        },
        py::arg("variant"), py::arg("H"), py::arg("y"), py::arg("lambda_reg") = 0.0,
        py::arg("mu") = py::none(), py::arg("theta") = py::none(), py::arg("iters") = 50,
        py::arg("evanescent_cutoff") = true);

    m.def(
        "vjp",
        [](const std::string& variant, const PropagationOperator& H, const CArray& y,
           const CArray& cotangent, double lambda_reg,
           const std::optional<std::vector<double>>& mu,
           const std::optional<std::vector<double>>& theta, int iters) {
            const ReconstructorSpec spec = make_spec(variant, lambda_reg, mu, theta, iters, true);
            MeasurementVector v(H.aperture(), to_cvec(y, H.looks(), "vjp"));
            ReflectivityImage cot(H.image(), to_cvec(cotangent, H.voxels(), "vjp cotangent"));
            return to_numpy_vec(vjp(spec, H, v, cot).values);
        },
        py::arg("variant"), py::arg("H"), py::arg("y"), py::arg("cotangent"),
        py::arg("lambda_reg") = 0.0, py::arg("mu") = py::none(), py::arg("theta") = py::none(),
        py::arg("iters") = 50);

    py::class_<InjectionOperator>(m, "InjectionOperator")
        .def(py::init([](const RadarConfig& cfg, const ApertureGrid& grid, const Vec3& r_a) {
                 return InjectionOperator::make(cfg, grid, r_a);
             }),
             py::arg("radar"), py::arg("aperture"), py::arg("attacker"))
        .def_property_readonly("phases", [](const InjectionOperator& d) {
            return to_numpy_vec(d.phases);
        });

    m.def(
        "inject",
        [](const CArray& y, const InjectionOperator& D, const CArray& w) {
            MeasurementVector v(D.aperture, to_cvec(y, D.aperture.looks(), "inject"));
            return to_numpy_vec(
                inject(v, D, to_cvec(w, D.aperture.looks(), "inject weights")).values);
        },
        py::arg("y"), py::arg("D"), py::arg("w"));

    m.def(
        "dia_optimize",
        [](const std::string& variant, const PropagationOperator& H, const CArray& y_clean,
           const InjectionOperator& D, const CArray& target, double lambda,
           std::optional<double> step, int iters, const std::string& power_mode,
           double power_cap, double tol, std::uint64_t seed, double lambda_reg,
           const std::optional<std::vector<double>>& mu,
           const std::optional<std::vector<double>>& theta, int recon_iters) {
            const ReconstructorSpec spec =
                make_spec(variant, lambda_reg, mu, theta, recon_iters, true);
            DIAConfig cfg;
            cfg.target = ReflectivityImage(H.image(), to_cvec(target, H.voxels(), "target"));
            cfg.lambda = lambda;
            cfg.step = step;
            cfg.iters = iters;
            cfg.power_mode = power_mode == "total_cap"
                                 ? PowerMode::TotalCap
                                 : power_mode == "per_look_cap" ? PowerMode::PerLookCap
                                                                : PowerMode::Regularized;
            cfg.power_cap = power_cap;
            cfg.tol = tol;
            cfg.seed = seed;
            MeasurementVector y(H.aperture(), to_cvec(y_clean, H.looks(), "y_clean"));
            const AttackResult r = dia_optimize(cfg, spec, H, y, D);
            py::dict out;
            out["w"] = to_numpy_vec(r.w);
            out["adv_image"] = to_numpy_image(r.adv_image);
            out["objective_trace"] = r.objective_trace;
            out["power_ratio"] = r.power_ratio;
            return out;
        },
        py::arg("variant"), py::arg("H"), py::arg("y_clean"), py::arg("D"), py::arg("target"),
        py::arg("lambda_") = 1e-6, py::arg("step") = py::none(), py::arg("iters") = 300,
        py::arg("power_mode") = "regularized", py::arg("power_cap") = 0.0,
        py::arg("tol") = 1e-9, py::arg("seed") = 0, py::arg("lambda_reg") = 0.0,
        py::arg("mu") = py::none(), py::arg("theta") = py::none(), py::arg("recon_iters") = 50);

    m.def(
        "psnr",
        [](const DArray& a, const DArray& b) { return psnr(to_dvec(a), to_dvec(b)); },
        py::arg("a"), py::arg("b"));

    m.def(
        "ssim",
        [](const DArray& a, const DArray& b) {
            if (a.ndim() != 2 || b.ndim() != 2)
                throw ShapeError("ssim: expected 2-D arrays");
            if (a.shape(0) != b.shape(0) || a.shape(1) != b.shape(1))
                throw ShapeError("ssim: shape mismatch");
            return ssim(to_dvec(a), to_dvec(b), static_cast<std::size_t>(a.shape(1)),
                        static_cast<std::size_t>(a.shape(0)));
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "to_magnitude",
        [](const CArray& img, const ImageGrid& grid) {
            ReflectivityImage r(grid, to_cvec(img, grid.voxels(), "to_magnitude"));
            const auto mag = to_magnitude(r);
            py::array_t<double> out({grid.ny, grid.nx});
            std::copy(mag.begin(), mag.end(), out.mutable_data());
            return out;
        },
        py::arg("img"), py::arg("grid"));

    m.def(
        "run_experiment",
        [](const std::string& config_json) {
            const ExperimentConfig cfg = parse_config(config_json);
            const ExperimentResult r = run_experiment(cfg);
            py::dict out;
            out["strategy"] = r.strategy;
            out["metrics"] = report_to_dict(r.metrics);
            out["clean"] = to_numpy_image(r.clean);
            out["target"] = to_numpy_image(r.target);
            out["adv"] = to_numpy_image(r.adv);
            out["w"] = to_numpy_vec(r.w);
            out["metrics_json"] = metrics_json(r);
            return out;
        },
        py::arg("config_json"));

    m.def(
        "run_experiment_to_dir",
        [](const std::string& config_json, const std::string& out_dir) {
            const ExperimentConfig cfg = parse_config(config_json);
            const ExperimentResult r = run_experiment_to_dir(cfg, out_dir);
            return report_to_dict(r.metrics);
        },
        py::arg("config_json"), py::arg("out_dir"));

    m.def("resolved_config",
          [](const std::string& config_json) {
              return resolved_config_json(parse_config(config_json));
          },
          py::arg("config_json"));
}
