// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Every tolerance is pinned here, in code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mmwsar/attack.hpp"
#include "mmwsar/experiment.hpp"
#include "mmwsar/metrics.hpp"

using namespace mmwsar;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int id;
    std::string name;
    std::function<bool(std::string&)> run;
};

RadarConfig radar_on_bin(double z0, long long bin) {
    const double tau = 2.0 * z0 / 299792458.0;
    return RadarConfig(77e9, (static_cast<double>(bin) * 5e6 / 256.0) / tau, 5e6, 256);
}

ApertureGrid centered_aperture(std::size_t nx, std::size_t ny, double dx, double dy) {
    ApertureGrid g;
    g.nx = nx;
    g.ny = ny;
    g.dx = dx;
    g.dy = dy;
    g.origin_x = -0.5 * static_cast<double>(nx - 1) * dx;
    g.origin_y = -0.5 * static_cast<double>(ny - 1) * dy;
    return g;
}

ImageGrid centered_image(std::size_t nx, std::size_t ny, double dx, double dy, double z0) {
    ImageGrid g;
    g.nx = nx;
    g.ny = ny;
    g.dx = dx;
    g.dy = dy;
    g.origin_x = -0.5 * static_cast<double>(nx - 1) * dx;
    g.origin_y = -0.5 * static_cast<double>(ny - 1) * dy;
    g.z0 = z0;
    return g;
}

PropagationOperator coincident_op(std::size_t n, double d, double z0, long long bin,
                                  bool materialize = true) {
    return PropagationOperator(radar_on_bin(z0, bin), centered_aperture(n, n, d, d),
                               centered_image(n, n, d, d, z0), materialize);
}

double norm2(const CVec& v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return s;
}

double objective_of(const ReconstructorSpec& spec, const PropagationOperator& H,
                    const MeasurementVector& y0, const InjectionOperator& D,
                    const ReflectivityImage& target, double lambda, const CVec& w) {
    const Reconstruction rec = reconstruct(spec, H, inject(y0, D, w));
    double obj = lambda * norm2(w);
    for (std::size_t i = 0; i < target.values.size(); ++i)
        obj += std::norm(rec.image.values[i] - target.values[i]);
    return obj;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

// ---- criterion 1: chirp-shift identity -----------------------------------

bool c1_chirp_shift(std::string& detail) {
    Rng rng(11);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const double f0 = 76e9 + 5e9 * rng.uniform();
        const double slope = 1e12 + 3.4e14 * rng.uniform();
        const double beta = 50e-9 * rng.uniform();
        ChirpSpec spec{RadarConfig(f0, slope, 5e6, 256)};
        const double delta = slope * beta;
        const long double b = beta;
        const Complex w = unit_phasor(-static_cast<long double>(f0) * b +
                                      0.5L * static_cast<long double>(slope) * b * b);
        for (std::size_t m = 0; m < 256; ++m) {
            const long double t = static_cast<long double>(m) / 5e6;
            const Complex lhs = unit_phasor(spec.phase_cycles(t - b));
            const Complex rhs =
                w * unit_phasor(spec.phase_cycles(t) - static_cast<long double>(delta) * t);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    }
    detail = fmt("max sample deviation %.3e (tol 1e-10)", worst);
    return worst < 1e-10;
}

// ---- criterion 2: theorem-1 end to end ------------------------------------

bool c2_theorem1(std::string& detail) {
    const double z0 = 0.23;
    const RadarConfig cfg = radar_on_bin(z0, 25);
    ChirpSpec spec(cfg);
    const ApertureGrid grid = centered_aperture(8, 8, 1e-3, 2e-3);  // 64 looks
    const Vec3 gate{0.0, 0.0, z0};
    const Vec3 attacker{0.05, 0.0, z0};

    Rng rng(17);
    CVec w_meas(grid.looks());
    for (auto& g : w_meas) g = rng.complex_gaussian(0.5);
    const AttackParams params =
        attack_params_for_measurement_gain(spec, grid, gate, attacker, w_meas);

    double worst_mag = 0.0, worst_phase = 0.0;
    for (std::size_t l = 0; l < grid.looks(); ++l) {
        const double tau_atk = (attacker - grid.rx_position(l)).norm() / cfg.c;
        CVec rx(cfg.n_samples);
        for (std::size_t m = 0; m < rx.size(); ++m) {
            const long double ta =
                static_cast<long double>(m) / cfg.fs - static_cast<long double>(tau_atk);
            rx[m] = params.w[l] * unit_phasor(spec.phase_cycles(ta) -
                                              static_cast<long double>(params.delta[l]) * ta);
        }
        DechirpedFrame frame = dechirp(spec, l, rx);
        const double tau = gate_delay(cfg, grid, l, gate);
        const Complex y = extract_measurement(frame, spec, tau, {.compensate = true});
        const Complex expected =
            w_meas[l] * unit_phasor(static_cast<long double>(cfg.f0) *
                                    static_cast<long double>(tau_atk));
        worst_mag = std::max(worst_mag, std::abs(std::abs(y) / std::abs(expected) - 1.0));
        worst_phase = std::max(worst_phase, std::abs(std::arg(y / expected)));
    }
    detail = fmt("64 looks: |mag err| %.2e (tol 0.02), |phase err| %.2e rad (tol 0.05)",
                 worst_mag, worst_phase);
    return worst_mag < 0.02 && worst_phase < 0.05;
}

// ---- criterion 3: adjoint + materialization --------------------------------

bool c3_adjoint(std::string& detail) {
    double worst_dot = 0.0;
    double worst_mat = 0.0;
    for (std::size_t n : {8ul, 16ul, 32ul}) {
        PropagationOperator H = coincident_op(n, 2e-3, 0.23, 25, false);
        Rng rng(100 + n);
        for (int trial = 0; trial < 20; ++trial) {
            ReflectivityImage x(H.image());
            MeasurementVector y(H.aperture());
            double nx = 0.0, ny = 0.0;
            for (auto& v : x.values) {
                v = rng.complex_gaussian(1.0);
                nx += std::norm(v);
            }
            for (auto& v : y.values) {
                v = rng.complex_gaussian(1.0);
                ny += std::norm(v);
            }
            Complex lhs{}, rhs{};
            const MeasurementVector hx = H.apply(x);
            const ReflectivityImage hy = H.adjoint(y);
            for (std::size_t l = 0; l < H.looks(); ++l)
                lhs += std::conj(hx.values[l]) * y.values[l];
            for (std::size_t i = 0; i < H.voxels(); ++i)
                rhs += std::conj(x.values[i]) * hy.values[i];
            worst_dot =
                std::max(worst_dot, std::abs(lhs - rhs) / std::sqrt(nx) / std::sqrt(ny));
        }

        // matrix-free vs materialized (32x32 x 32x32 = 2^20 <= 2^22 entries)
        PropagationOperator M = coincident_op(n, 2e-3, 0.23, 25, true);
        ReflectivityImage x(H.image());
        for (auto& v : x.values) v = rng.complex_gaussian(1.0);
        const MeasurementVector y1 = H.apply(x);
        const MeasurementVector y2 = M.apply(x);
        for (std::size_t l = 0; l < H.looks(); ++l)
            worst_mat = std::max(
                worst_mat, std::abs(y1.values[l] - y2.values[l]) / std::abs(y1.values[l]));
    }
    detail = fmt("dot-product err %.2e (tol 1e-10), dense-vs-free %.2e (tol 1e-12)", worst_dot,
                 worst_mat);
    return worst_dot < 1e-10 && worst_mat < 1e-12;
}

// ---- criterion 4: appendix-A consistency -----------------------------------

bool c4_consistency(std::string& detail) {
    double raw_max = 0.0, comp_max = 0.0;
    const std::vector<std::pair<double, long long>> cases = {{0.23, 25}, {0.55, 60}};
    for (const auto& [z0, bin] : cases) {
        PropagationOperator H(radar_on_bin(z0, bin), centered_aperture(5, 5, 1e-3, 1e-3),
                              centered_image(5, 5, 1e-3, 1e-3, z0));
        const Vec3 c = H.image().center();
        const Scene scene = Scene::points(
            z0, {{c.x, c.y, Complex{1.0, 0.0}}, {c.x + 1e-3, c.y - 1e-3, Complex{0.7, 0.0}}});
        raw_max = std::max(
            raw_max, timedomain_consistency(H, scene, {.compensate = false}).max_rel_error);
        comp_max = std::max(
            comp_max, timedomain_consistency(H, scene, {.compensate = true}).max_rel_error);
    }
    detail = fmt("per-look rel err: raw %.3e (tol 0.02), compensated %.3e (tol 0.005)",
                 raw_max, comp_max);
    return raw_max < 0.02 && comp_max < 0.005;
}

// ---- criterion 5: gradient correctness --------------------------------------

bool c5_gradients(std::string& detail) {
    PropagationOperator H = coincident_op(8, 6e-3, 0.15, 25);
    const Vec3 c = H.image().center();
    const Scene scene =
        Scene::points(0.15, {{c.x - 6e-3, c.y, Complex{0.005, 0.0}},
                             {c.x + 6e-3, c.y + 6e-3, Complex{0.005, 0.0}}});
    Rng srng(3);
    const MeasurementVector y0 = synthesize_measurements(H, scene, std::nullopt, srng);
    const InjectionOperator D =
        InjectionOperator::make(H.config(), H.aperture(), Vec3{0.05, 0.0, 0.15});
    const double hn = H.norm_estimate();

    double worst_linear = 0.0, worst_unrolled = 0.0;
    for (const Variant variant :
         {Variant::BPA, Variant::MFA, Variant::RMA, Variant::CSA, Variant::RMIST}) {
        ReconstructorSpec spec;
        spec.variant = variant;
        if (spec.is_unrolled()) {
            spec.iters = 4;
            spec.mu = {0.6 / (hn * hn)};
            if (variant == Variant::CSA)
                spec.lambda_reg = 0.5;
            else
                spec.theta = {0.01};
        }

        Rng prng(40 + static_cast<int>(variant));
        CVec w(H.looks());
        for (auto& v : w) v = 0.1 * prng.complex_gaussian(1.0);
        ReflectivityImage target(H.image());
        for (auto& v : target.values) v = 0.02 * prng.complex_gaussian(1.0);
        const double lambda = 1e-3;

        const MeasurementVector y_w = inject(y0, D, w);
        const Reconstruction rec = reconstruct(spec, H, y_w);
        ReflectivityImage resid(H.image());
        for (std::size_t i = 0; i < resid.values.size(); ++i)
            resid.values[i] = rec.image.values[i] - target.values[i];
        const MeasurementVector gy = vjp(spec, H, y_w, resid);

        const double h = 1e-6;
        for (int probe = 0; probe < 5; ++probe) {
            const std::size_t l = static_cast<std::size_t>(prng.uniform() * H.looks());
            const Complex grad_l =
                2.0 * (std::conj(D.phases[l]) * gy.values[l] + lambda * w[l]);
            for (int comp = 0; comp < 2; ++comp) {
                const Complex dir = comp == 0 ? Complex{1.0, 0.0} : Complex{0.0, 1.0};
                CVec wp = w, wm = w;
                wp[l] += h * dir;
                wm[l] -= h * dir;
                const double fd = (objective_of(spec, H, y0, D, target, lambda, wp) -
                                   objective_of(spec, H, y0, D, target, lambda, wm)) /
                                  (2.0 * h);
                const double an = (std::conj(grad_l) * dir).real();
                const double rel = std::abs(fd - an) / std::max(std::abs(an), 1e-6);
                if (spec.is_unrolled())
                    worst_unrolled = std::max(worst_unrolled, rel);
                else
                    worst_linear = std::max(worst_linear, rel);
            }
        }
    }
    detail = fmt("FD rel err: linear %.2e (tol 1e-5), unrolled %.2e (tol 1e-4)", worst_linear,
                 worst_unrolled);
    return worst_linear < 1e-5 && worst_unrolled < 1e-4;
}

// ---- criterion 6: oracle equivalence ----------------------------------------

bool c6_oracle(std::string& detail) {
    PropagationOperator H = coincident_op(8, 6e-3, 0.15, 25);
    const Vec3 c = H.image().center();
    const Scene scene =
        Scene::points(0.15, {{c.x, c.y, Complex{0.005, 0.0}},
                             {c.x + 6e-3, c.y - 6e-3, Complex{0.005, 0.0}}});
    Rng srng(5);
    const MeasurementVector y0 = synthesize_measurements(H, scene, std::nullopt, srng);
    const InjectionOperator D =
        InjectionOperator::make(H.config(), H.aperture(), Vec3{0.05, 0.0, 0.15});
    const double hn = H.norm_estimate();
    const double lambda = 0.02 * hn * hn;

    double worst_gap = 0.0;
    for (const Variant variant : {Variant::BPA, Variant::MFA, Variant::RMA}) {
        ReconstructorSpec spec;
        spec.variant = variant;
        for (int t = 0; t < 3; ++t) {
            Rng trng(60 + 10 * static_cast<int>(variant) + t);
            ReflectivityImage target(H.image());
            for (auto& v : target.values) v = 0.05 * trng.complex_gaussian(1.0);

            DIAConfig cfg;
            cfg.target = target;
            cfg.lambda = lambda;
            cfg.iters = 2000;
            cfg.tol = 0.0;
            const AttackResult dia = dia_optimize(cfg, spec, H, y0, D);
            const CVec w_star = closed_form_oracle(spec, H, y0, D, target, lambda);

            const double f_dia = objective_of(spec, H, y0, D, target, lambda, dia.w);
            const double f_star = objective_of(spec, H, y0, D, target, lambda, w_star);
            if (f_star > f_dia + 1e-6) {
                detail = fmt("%s: oracle objective above DIA by %.3e",
                             variant_name(variant).c_str(), f_star - f_dia);
                return false;
            }
            worst_gap = std::max(worst_gap, std::abs(f_dia - f_star) / f_star);
        }
    }
    detail = fmt("max relative objective gap %.3e (tol 1e-3)", worst_gap);
    return worst_gap < 1e-3;
}

// ---- criterion 7: conceal reproduction ---------------------------------------

const char* kDeskConceal = R"json({
  "radar": {"f0": 77e9, "slope": 3.1824e14, "fs": 5e6, "n_samples": 256},
  "aperture": {"nx": 16, "ny": 16, "dx": 2e-3, "dy": 2e-3},
  "image": {"nx": 16, "ny": 16, "dx": 2e-3, "dy": 2e-3, "z0": 0.23},
  "scene": {"shape": "triangle"},
  "reconstructor": {"variant": "bpa"},
  "attack": {"strategy": "conceal", "attacker_position": [0.06, 0.0, 0.23],
             "dia": {"lambda": 1e-6, "iters": 500, "tol": 1e-12}},
  "snr_db": 30,
  "seed": 1,
  "output_dir": "out"
})json";

bool c7_conceal(std::string& detail) {
    const ExperimentConfig cfg = parse_config(kDeskConceal);
    const ExperimentResult r = run_experiment(cfg);
    detail = fmt("ssim_at %.4f (>= 0.99), ssim_ac %.4f (<= 0.3)", r.metrics.ssim_at,
                 r.metrics.ssim_ac);
    return r.metrics.ssim_at >= 0.99 && r.metrics.ssim_ac <= 0.3;
}

// ---- criterion 8: directional finding across reconstructors -------------------

bool c8_directions(std::string& detail) {
    const double z0 = 0.23;
    PropagationOperator H = coincident_op(16, 2e-3, z0, 25);
    const std::vector<std::string> scenes = {"triangle", "bar", "square"};
    const double hn = H.norm_estimate();

    int runs = 0;
    for (const Variant variant :
         {Variant::BPA, Variant::MFA, Variant::RMA, Variant::CSA, Variant::RMIST}) {
        for (std::size_t si = 0; si < scenes.size(); ++si) {
            ReconstructorSpec spec;
            spec.variant = variant;

            SceneSpec sspec;
            sspec.shape = scenes[si];
            const Scene scene = build_scene(sspec, H.image());
            Rng srng(7 + si);
            const MeasurementVector y0 = synthesize_measurements(H, scene, 30.0, srng);

            if (spec.is_unrolled()) {
                spec.iters = 6;
                const double mu = 0.8 / (hn * hn);
                spec.mu = {mu};
                // threshold at a few percent of the first gradient step
                double peak = 0.0;
                const ReflectivityImage grad0 = H.adjoint(y0);
                for (const auto& v : grad0.values) peak = std::max(peak, std::abs(v) * mu);
                if (variant == Variant::CSA)
                    spec.lambda_reg = 0.02 * peak / mu;
                else
                    spec.theta = {0.02 * peak};
            }
            const Reconstruction clean = reconstruct(spec, H, y0);

            const InjectionOperator D =
                InjectionOperator::make(H.config(), H.aperture(), Vec3{0.06, 0.0, z0});
            DIAConfig dia;
            dia.lambda = 1e-6;
            dia.iters = spec.is_unrolled() ? 120 : 400;
            dia.tol = 1e-12;
            dia.seed = 1;

            const auto check = [&](const AttackResult& atk, const ReflectivityImage& target,
                                   const char* what) {
                const MetricsReport base =
                    compute_report(clean.image, clean.image, target, 0.0, false);
                const MetricsReport fin = compute_report(clean.image, atk.adv_image, target,
                                                         atk.power_ratio, false);
                ++runs;
                if (!(fin.ssim_at > base.ssim_at && fin.ssim_ac < base.ssim_ac)) {
                    detail = fmt("%s %s on %s: ssim_at %.4f->%.4f, ssim_ac %.4f->%.4f",
                                 variant_name(variant).c_str(), what, scenes[si].c_str(),
                                 base.ssim_at, fin.ssim_at, base.ssim_ac, fin.ssim_ac);
                    return false;
                }
                return true;
            };

            const AttackResult conceal = strategy_conceal(dia, spec, H, y0, D);
            if (!check(conceal, ReflectivityImage(H.image()), "conceal")) return false;

            for (std::size_t ti = 0; ti < scenes.size(); ++ti) {
                if (ti == si) continue;
                SceneSpec tspec;
                tspec.shape = scenes[ti];
                const Scene swap = build_scene(tspec, H.image());
                const AttackResult atk = strategy_swap(dia, spec, H, y0, D, scene, swap);
                Rng trng(dia.seed ^ 0x5AAFull);
                const ReflectivityImage target =
                    reconstruct(spec, H,
                                synthesize_measurements(H, swap, std::nullopt, trng))
                        .image;
                if (!check(atk, target, "swap")) return false;
            }
        }
    }
    detail = fmt("%d attack runs all raised SSIM_AT and lowered SSIM_AC", runs);
    return true;
}

// ---- criterion 9: power accounting --------------------------------------------

bool c9_power(std::string& detail) {
    PropagationOperator H = coincident_op(8, 6e-3, 0.15, 25);
    const Vec3 c = H.image().center();
    const Scene scene = Scene::points(0.15, {{c.x, c.y, Complex{0.005, 0.0}}});
    Rng srng(5);
    const MeasurementVector y0 = synthesize_measurements(H, scene, std::nullopt, srng);
    const InjectionOperator D =
        InjectionOperator::make(H.config(), H.aperture(), Vec3{0.05, 0.0, 0.15});
    ReconstructorSpec bpa;

    Rng arng(9);
    const AttackResult rnd = strategy_random(10.0, bpa, H, y0, D, arng);
    if (std::abs(rnd.power_ratio - 10.0) > 1e-12) {
        detail = fmt("random P=10 reported %.17g", rnd.power_ratio);
        return false;
    }
    if (rnd.power_ratio != norm2(rnd.w)) {
        detail = "power_ratio is not exactly ||w||^2";
        return false;
    }

    DIAConfig total;
    total.target = ReflectivityImage(H.image());
    total.power_mode = PowerMode::TotalCap;
    total.power_cap = 0.1;
    total.iters = 80;
    const AttackResult cap1 = dia_optimize(total, bpa, H, y0, D);
    if (cap1.power_ratio > 0.1 + 1e-12) {
        detail = fmt("total cap exceeded: %.17g", cap1.power_ratio);
        return false;
    }

    DIAConfig per;
    per.target = ReflectivityImage(H.image());
    per.power_mode = PowerMode::PerLookCap;
    per.power_cap = 1e-4;
    per.iters = 50;
    const AttackResult cap2 = dia_optimize(per, bpa, H, y0, D);
    double worst_look = 0.0;
    for (const auto& w : cap2.w) worst_look = std::max(worst_look, std::norm(w));
    if (worst_look > 1e-4 + 1e-12) {
        detail = fmt("per-look cap exceeded: %.17g", worst_look);
        return false;
    }

    detail = fmt("random P=10 ratio %.17g, total-cap %.4g <= 0.1, per-look max %.4g <= 1e-4",
                 rnd.power_ratio, cap1.power_ratio, worst_look);
    return true;
}

// ---- criterion 10: randomization degradation -----------------------------------

bool c10_random_degradation(std::string& detail) {
    const double z0 = 0.23;
    PropagationOperator H = coincident_op(16, 2e-3, z0, 25);
    SceneSpec sspec;
    sspec.shape = "triangle";
    const Scene scene = build_scene(sspec, H.image());

    Rng srng(7);
    const MeasurementVector y_clean = synthesize_measurements(H, scene, std::nullopt, srng);
    const MeasurementVector y_noisy = synthesize_measurements(H, scene, 20.0, srng);
    ReconstructorSpec bpa;
    const ReflectivityImage clean_ref = reconstruct(bpa, H, y_clean).image;
    const ReflectivityImage baseline = reconstruct(bpa, H, y_noisy).image;

    const InjectionOperator D =
        InjectionOperator::make(H.config(), H.aperture(), Vec3{0.06, 0.0, z0});
    Rng arng(13);
    const AttackResult atk = strategy_random(10.0, bpa, H, y_noisy, D, arng);

    double scale = 0.0;
    for (const auto& v : clean_ref.values) scale = std::max(scale, std::abs(v));
    const auto mc = magnitude_scaled(clean_ref, scale);
    const double psnr_baseline = psnr(magnitude_scaled(baseline, scale), mc);
    const double psnr_attacked = psnr(magnitude_scaled(atk.adv_image, scale), mc);

    detail = fmt("PSNR_AC: no-attack baseline %.1f dB, random P=10 attack %.1f dB (drop >= 10)",
                 psnr_baseline, psnr_attacked);
    return psnr_attacked <= psnr_baseline - 10.0;
}

// ---- criterion 11: extraction ---------------------------------------------------

bool c11_extraction(std::string& detail) {
    Rng rng(5);
    const std::size_t n = 256;
    CVec s1(n);
    for (auto& v : s1) v = rng.complex_gaussian(1.0);

    const long long d0 = 5;
    const Complex a0{0.8, 0.3};
    CVec shifted(n, Complex{});
    for (std::size_t i = 0; i < n; ++i) {
        const long long src = static_cast<long long>(i) - d0;
        if (src >= 0 && src < static_cast<long long>(n))
            shifted[i] = s1[static_cast<std::size_t>(src)];
    }
    CVec tone(n);
    for (std::size_t i = 0; i < n; ++i)
        tone[i] = 0.2 * unit_phasor(0.075L * static_cast<long double>(i));
    Complex proj{};
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        proj += std::conj(shifted[i]) * tone[i];
        den += std::norm(shifted[i]);
    }
    for (std::size_t i = 0; i < n; ++i) tone[i] -= (proj / den) * shifted[i];

    CVec s2(n);
    for (std::size_t i = 0; i < n; ++i) s2[i] = a0 * shifted[i] + tone[i];
    const ExtractionResult r = extract_attack(s1, s2, 16);

    double res_err = 0.0, tone_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        res_err += std::norm(r.residual[i] - tone[i]);
        tone_norm += std::norm(tone[i]);
    }
    const double rel_a = std::abs(r.a - a0) / std::abs(a0);
    const double rel_res = std::sqrt(res_err / tone_norm);
    detail = fmt("d %lld (want %lld exact), a rel err %.2e (tol 1e-6), residual %.2e (tol 1e-6)",
                 r.d, d0, rel_a, rel_res);
    return r.d == d0 && rel_a < 1e-6 && rel_res < 1e-6;
}

// ---- criterion 12: determinism ---------------------------------------------------

bool c12_determinism(std::string& detail) {
    std::string text = kDeskConceal;
    const auto pos = text.find("\"iters\": 500");
    text.replace(pos, std::strlen("\"iters\": 500"), "\"iters\": 60");
    const ExperimentConfig cfg = parse_config(text);

    const fs::path base = fs::temp_directory_path() / "mmwsar_acceptance_det";
    fs::remove_all(base);
    run_experiment_to_dir(cfg, base / "run1");
    run_experiment_to_dir(cfg, base / "run2");

    const auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const bool metrics_equal =
        slurp(base / "run1" / "metrics.json") == slurp(base / "run2" / "metrics.json");
    const bool manifest_equal =
        slurp(base / "run1" / "manifest.json") == slurp(base / "run2" / "manifest.json");
    fs::remove_all(base);
    detail = fmt("metrics byte-identical: %s, manifests byte-identical: %s",
                 metrics_equal ? "yes" : "no", manifest_equal ? "yes" : "no");
    return metrics_equal && manifest_equal;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria = {
        {1, "chirp-shift identity", c1_chirp_shift},
        {2, "theorem-1 end-to-end", c2_theorem1},
        {3, "forward/adjoint + materialization", c3_adjoint},
        {4, "time-domain vs discrete-model consistency", c4_consistency},
        {5, "DIA gradient correctness", c5_gradients},
        {6, "closed-form oracle equivalence", c6_oracle},
        {7, "conceal reproduction (BPA desk scale)", c7_conceal},
        {8, "directional finding, all reconstructors", c8_directions},
        {9, "power accounting", c9_power},
        {10, "randomization degradation", c10_random_degradation},
        {11, "attack-waveform extraction", c11_extraction},
        {12, "determinism", c12_determinism},
    };

    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() &&
            std::find(selected.begin(), selected.end(), c.id) == selected.end())
            continue;
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] criterion %2d: %s - %s [%.1fs]\n", ok ? "PASS" : "FAIL", c.id,
                    c.name.c_str(), detail.c_str(), secs);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    if (failures > 0) std::printf("%d criterion(s) FAILED\n", failures);
    return failures == 0 ? 0 : 1;
}
