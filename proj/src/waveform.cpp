#include "mmwsar/waveform.hpp"

#include <algorithm>
#include <cmath>

namespace mmwsar {

CVec synth_chirp(const ChirpSpec& spec) {
    const std::size_t n = spec.cfg.n_samples;
    CVec p(n);
    for (std::size_t m = 0; m < n; ++m) {
        const long double t = static_cast<long double>(m) / spec.cfg.fs;
        p[m] = unit_phasor(spec.phase_cycles(t));
    }
    return p;
}

CVec simulate_echo(const ChirpSpec& spec, const ApertureGrid& grid, const Scene& scene,
                   std::size_t look, Rng* rng, double noise_power) {
    const std::size_t n = spec.cfg.n_samples;
    CVec s(n, Complex{});
    const Vec3 tx = grid.tx_position(look);
    const Vec3 rx = grid.rx_position(look);
    for (const auto& pt : scene_points(scene)) {
        const DelayResult d = bistatic_delay(spec.cfg, tx, rx, pt.position);
        const Complex amp = pt.amplitude / (d.r_t * d.r_r);
        const long double tau = d.tau;
        for (std::size_t m = 0; m < n; ++m) {
            const long double t = static_cast<long double>(m) / spec.cfg.fs;
            s[m] += amp * unit_phasor(spec.phase_cycles(t - tau));
        }
    }
    if (rng != nullptr && noise_power > 0.0) {
        for (std::size_t m = 0; m < n; ++m) s[m] += rng->complex_gaussian(noise_power);
    }
    return s;
}

DechirpedFrame dechirp(const ChirpSpec& spec, std::size_t look, std::span<const Complex> echo) {
    if (echo.size() != spec.cfg.n_samples)
        throw ShapeError("dechirp: echo length does not match n_samples");
    DechirpedFrame frame;
    frame.look = look;
    frame.samples.resize(echo.size());
    for (std::size_t m = 0; m < echo.size(); ++m) {
        const long double t = static_cast<long double>(m) / spec.cfg.fs;
        frame.samples[m] = std::conj(echo[m]) * unit_phasor(spec.phase_cycles(t));
    }
    return frame;
}

double gate_delay(const RadarConfig& cfg, const ApertureGrid& grid, std::size_t look,
                  const Vec3& gate) {
    return bistatic_delay(cfg, grid.tx_position(look), grid.rx_position(look), gate).tau;
}

namespace {

// (1/n) * sum_m e^{j*2*pi*f*m/fs}: response of a unit tone at frequency f when
// read out at DC after mixing; used both for readout and equalization.
Complex tone_average(double f, double fs, std::size_t n) {
    Complex acc{};
    const long double step = static_cast<long double>(f) / fs;
    for (std::size_t m = 0; m < n; ++m) acc += unit_phasor(step * static_cast<long double>(m));
    return acc / static_cast<double>(n);
}

}  // namespace

Complex extract_measurement(DechirpedFrame& frame, const ChirpSpec& spec, double gate_tau,
                            const ExtractOptions& opts) {
    const std::size_t n = spec.cfg.n_samples;
    if (frame.samples.size() != n)
        throw ShapeError("extract_measurement: frame length does not match n_samples");

    const double f_gate = spec.cfg.slope * gate_tau;
    const long long coarse = spec.beat_bin(gate_tau);
    if (coarse < 0 || coarse >= static_cast<long long>(n))
        throw ConfigError("extract_measurement: expected beat bin outside [0, n_samples)");
    if (f_gate > spec.beat_guard * spec.cfg.fs)
        throw ConfigError("extract_measurement: expected beat frequency beyond aliasing guard");

    const std::size_t pad = opts.refine_bins ? 4 : 1;
    const long long sel =
        std::llround(f_gate * static_cast<double>(n * pad) / spec.cfg.fs);
    const double f_sel =
        static_cast<double>(sel) * spec.cfg.fs / static_cast<double>(n * pad);

    Complex y{};
    for (std::size_t m = 0; m < n; ++m) {
        const long double cycles =
            -static_cast<long double>(sel) * static_cast<long double>(m) /
            static_cast<long double>(n * pad);
        y += frame.samples[m] * unit_phasor(cycles);
    }
    y /= static_cast<double>(n);

    if (opts.compensate) {
        // Finite-frame response of the expected gate tone at the selected bin.
        y /= tone_average(f_gate - f_sel, spec.cfg.fs, n);
        // Undo the -j*pi*K*tau^2 term dropped by the data model.
        const long double tau = gate_tau;
        y *= unit_phasor(0.5L * static_cast<long double>(spec.cfg.slope) * tau * tau);
    }

    frame.bin = static_cast<std::size_t>(coarse);
    return y;
}

CVec synth_attack_waveform(const ChirpSpec& spec, const AttackParams& params, std::size_t look) {
    if (look >= params.w.size())
        throw RangeError("synth_attack_waveform: look index out of range");
    const std::size_t n = spec.cfg.n_samples;
    CVec s(n);
    const Complex w = params.w[look];
    const long double delta = params.delta[look];
    for (std::size_t m = 0; m < n; ++m) {
        const long double t = static_cast<long double>(m) / spec.cfg.fs;
        s[m] = w * unit_phasor(spec.phase_cycles(t) - delta * t);
    }
    return s;
}

DelayTriple delay_params(const ChirpSpec& spec, const ApertureGrid& grid, std::size_t look,
                         const Vec3& target, const Vec3& attacker) {
    const double tau = gate_delay(spec.cfg, grid, look, target);
    const double tau_atk = (attacker - grid.rx_position(look)).norm() / spec.cfg.c;
    DelayTriple out;
    out.beta = tau - tau_atk;
    out.delta = spec.cfg.slope * out.beta;
    const long double b = out.beta;
    const long double phi_cycles = -static_cast<long double>(spec.cfg.f0) * b +
                                   0.5L * static_cast<long double>(spec.cfg.slope) * b * b;
    out.phi = kTwoPi * static_cast<double>(phi_cycles - std::nearbyint(phi_cycles));
    return out;
}

AttackParams make_attack_params(const ChirpSpec& spec, const ApertureGrid& grid,
                                const Vec3& target, const Vec3& attacker, CVec w) {
    const std::size_t L = grid.looks();
    if (w.size() != L) throw ShapeError("make_attack_params: gain count does not match looks");
    AttackParams p;
    p.w = std::move(w);
    p.attacker = attacker;
    p.beta.resize(L);
    p.delta.resize(L);
    p.phi.resize(L);
    p.c_gain.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        const DelayTriple t = delay_params(spec, grid, l, target, attacker);
        p.beta[l] = t.beta;
        p.delta[l] = t.delta;
        p.phi[l] = t.phi;
        p.c_gain[l] = p.w[l] * std::conj(Complex{std::cos(t.phi), std::sin(t.phi)});
    }
    return p;
}

AttackParams attack_params_for_measurement_gain(const ChirpSpec& spec, const ApertureGrid& grid,
                                                const Vec3& gate, const Vec3& attacker,
                                                std::span<const Complex> w_meas) {
    const std::size_t L = grid.looks();
    if (w_meas.size() != L)
        throw ShapeError("attack_params_for_measurement_gain: gain count does not match looks");
    CVec w_tx(L);
    for (std::size_t l = 0; l < L; ++l) {
        const DelayTriple t = delay_params(spec, grid, l, gate, attacker);
        const long double b = t.beta;
        const Complex quad =
            unit_phasor(0.5L * static_cast<long double>(spec.cfg.slope) * b * b);
        w_tx[l] = std::conj(w_meas[l]) * quad;
    }
    return make_attack_params(spec, grid, gate, attacker, std::move(w_tx));
}

Complex measurement_gain(const ChirpSpec& spec, const AttackParams& params, std::size_t look) {
    if (look >= params.w.size())
        throw RangeError("measurement_gain: look index out of range");
    const long double b = params.beta[look];
    const Complex quad = unit_phasor(0.5L * static_cast<long double>(spec.cfg.slope) * b * b);
    return std::conj(params.w[look]) * quad;
}

ExtractionResult extract_attack(std::span<const Complex> s1, std::span<const Complex> s2,
                                std::size_t max_shift) {
    if (s1.size() != s2.size())
        throw ShapeError("extract_attack: waveform lengths differ");
    const std::size_t n = s1.size();
    bool all_zero = true;
    for (const auto& v : s1)
        if (v != Complex{}) {
            all_zero = false;
            break;
        }
    if (all_zero) throw DegenerateInputError("extract_attack: reference waveform is all zero");

    const auto shifted = [&](long long d, std::size_t i) -> Complex {
        const long long src = static_cast<long long>(i) - d;
        if (src < 0 || src >= static_cast<long long>(n)) return Complex{};
        return s1[static_cast<std::size_t>(src)];
    };

    double best_score = -1.0;
    long long best_d = 0;
    Complex best_a{};
    const long long span = static_cast<long long>(max_shift);
    for (long long d = -span; d <= span; ++d) {
        Complex num{};
        double den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Complex v = shifted(d, i);
            num += std::conj(v) * s2[i];
            den += std::norm(v);
        }
        if (den == 0.0) continue;
        const double score = std::norm(num) / den;
        if (score > best_score) {
            best_score = score;
            best_d = d;
            best_a = num / den;
        }
    }

    ExtractionResult out;
    out.a = best_a;
    out.d = best_d;
    out.residual.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.residual[i] = s2[i] - best_a * shifted(best_d, i);
    return out;
}

}  // namespace mmwsar
