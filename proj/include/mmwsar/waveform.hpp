#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "mmwsar/core.hpp"

namespace mmwsar {

/// Fast-time sampling view of one FMCW chirp.
///
/// Chirps are simulated at complex baseband: sample values are the analytic
/// waveform evaluated at t_m = m/fs, with all f0-dependent terms carried in
/// the phase. fs is the dechirped/beat-band rate, so beat tones up to
/// beat_guard*fs are representable; anything above trips a ConfigError at
/// extraction time.
struct ChirpSpec {
    RadarConfig cfg;
    double beat_guard = 0.95;

    ChirpSpec() = default;
    explicit ChirpSpec(const RadarConfig& c) : cfg(c) {}

    double duration() const { return static_cast<double>(cfg.n_samples) / cfg.fs; }
    double sample_time(std::size_t m) const { return static_cast<double>(m) / cfg.fs; }

    /// Chirp phase in cycles at time t: f0*t + K*t^2/2, extended precision.
    long double phase_cycles(long double t) const {
        return static_cast<long double>(cfg.f0) * t +
               0.5L * static_cast<long double>(cfg.slope) * t * t;
    }

    /// DFT bin nearest the beat frequency of a reflector at delay tau.
    long long beat_bin(double tau) const {
        const double f = cfg.slope * tau;
        return std::llround(f * static_cast<double>(cfg.n_samples) / cfg.fs);
    }
};

/// Conjugate-mixed frame for one look: samples[m] = conj(s[m]) * p[m].
struct DechirpedFrame {
    std::size_t look = 0;
    CVec samples;
    std::optional<std::size_t> bin;  // set by extract_measurement
};

/// Theorem-1 attack waveform description. w holds the transmitted complex
/// gains; (beta, delta, phi, c_gain) are the per-look alignment parameters,
/// tied together by delta = K*beta, phi = -2*pi*f0*beta + pi*K*beta^2 (mod
/// 2*pi) and w = c_gain * e^{j*phi}.
struct AttackParams {
    CVec w;
    Vec3 attacker;
    std::vector<double> beta;   // [s]
    std::vector<double> delta;  // [Hz]
    std::vector<double> phi;    // [rad], principal value
    CVec c_gain;
};

/// Output of the two-run attack-waveform extraction.
struct ExtractionResult {
    Complex a;                 // optimal complex scale
    long long d = 0;           // optimal integer time shift [samples]
    CVec residual;             // s2 - a * s1(. - d)
};

struct ExtractOptions {
    /// Undo the known -j*pi*K*tau^2 dechirp term and equalize the finite-frame
    /// spectral response of the gate tone.
    bool compensate = true;
    /// Select the gate bin on a 4x zero-padded frequency grid.
    bool refine_bins = false;
};

/// p[m] = e^{j*2*pi*(f0 t_m + K t_m^2 / 2)}, unit modulus by construction.
CVec synth_chirp(const ChirpSpec& spec);

/// Superposition of delayed, spherically-spread chirp echoes for look l,
/// evaluated analytically at the sample times. Optional additive circular
/// complex Gaussian noise with per-sample variance noise_power.
CVec simulate_echo(const ChirpSpec& spec, const ApertureGrid& grid, const Scene& scene,
                   std::size_t look, Rng* rng = nullptr, double noise_power = 0.0);

/// Conjugate mix with the transmitted chirp.
DechirpedFrame dechirp(const ChirpSpec& spec, std::size_t look, std::span<const Complex> echo);

/// Bistatic delay from look l to an arbitrary gate point.
double gate_delay(const RadarConfig& cfg, const ApertureGrid& grid, std::size_t look,
                  const Vec3& gate);

/// Evaluate the frame's DFT at the bin corresponding to the expected beat
/// frequency K*gate_tau, normalized by n_samples. Sets frame.bin. Throws
/// ConfigError when the expected bin falls outside [0, n_samples) or beyond
/// the aliasing guard.
Complex extract_measurement(DechirpedFrame& frame, const ChirpSpec& spec, double gate_tau,
                            const ExtractOptions& opts = {});

/// Theorem-1 transmit waveform for look l: w_l * p(t) * e^{-j*2*pi*delta_l*t}.
CVec synth_attack_waveform(const ChirpSpec& spec, const AttackParams& params, std::size_t look);

struct DelayTriple {
    double beta;   // [s]
    double delta;  // [Hz]
    double phi;    // [rad]
};

/// Alignment parameters for look l: beta = tau_l(r) - tau_l^atk(r_A) with
/// tau^atk = |r_A - rx_l| / c, and the derived (delta, phi).
DelayTriple delay_params(const ChirpSpec& spec, const ApertureGrid& grid, std::size_t look,
                         const Vec3& target, const Vec3& attacker);

/// AttackParams with transmitted gains w aligned on virtual target r.
AttackParams make_attack_params(const ChirpSpec& spec, const ApertureGrid& grid,
                                const Vec3& target, const Vec3& attacker, CVec w);

/// AttackParams whose transmitted gains realize the requested
/// measurement-domain weights: after dechirp and compensated extraction the
/// per-look measurement is w_meas[l] * e^{j*2*k*R(r'_l, r_A)}. The dechirp
/// conjugates transmitted amplitudes, so the transmitted gain is
/// conj(w_meas) * e^{j*pi*K*beta^2}.
AttackParams attack_params_for_measurement_gain(const ChirpSpec& spec, const ApertureGrid& grid,
                                                const Vec3& gate, const Vec3& attacker,
                                                std::span<const Complex> w_meas);

/// Measurement-domain gain predicted by Theorem 1 for the transmitted params:
/// the extracted value equals measurement_gain(...) * e^{j*2*k*R(r'_l, r_A)}.
Complex measurement_gain(const ChirpSpec& spec, const AttackParams& params, std::size_t look);

/// Least-squares (a, d) fit of s2 ~ a * s1(. - d) over integer shifts
/// |d| <= max_shift, plus the residual attack waveform. Throws
/// DegenerateInputError when s1 is identically zero.
ExtractionResult extract_attack(std::span<const Complex> s1, std::span<const Complex> s2,
                                std::size_t max_shift);

}  // namespace mmwsar
