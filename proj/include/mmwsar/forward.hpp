#pragma once

#include <memory>
#include <mutex>
#include <optional>

#include "mmwsar/core.hpp"
#include "mmwsar/waveform.hpp"

namespace mmwsar {

/// Discretized propagation operator H with entries
///   H_{l,n} = exp(j*2*k*R0(r'_l, r_n)) / R0^2(r'_l, r_n),
/// R0 = (R_T + R_R)/2. Matrix-free by default; materialization is gated to
/// instances with at most kMaterializeLimit entries (a dense paper-scale H
/// would need ~31 GB).
class PropagationOperator {
public:
    static constexpr std::size_t kMaterializeLimit = std::size_t{1} << 22;

    PropagationOperator(const RadarConfig& cfg, const ApertureGrid& aperture,
                        const ImageGrid& image, bool materialize_now = false);

    const RadarConfig& config() const { return cfg_; }
    const ApertureGrid& aperture() const { return aperture_; }
    const ImageGrid& image() const { return image_; }
    std::size_t looks() const { return aperture_.looks(); }
    std::size_t voxels() const { return image_.voxels(); }

    /// Single entry, shared by the matrix-free and materialized paths.
    Complex entry(std::size_t look, std::size_t voxel) const;

    bool materialized() const { return !dense_.empty(); }
    void materialize();

    /// y = H * alpha.
    MeasurementVector apply(const ReflectivityImage& alpha) const;
    /// alpha_hat = H^H * y (the back-projection core).
    ReflectivityImage adjoint(const MeasurementVector& y) const;

    /// Largest singular value of H, estimated by power iteration with a fixed
    /// seed (tolerance 1e-3, 100-iteration cap). Cached after the first call.
    double norm_estimate() const;

private:
    RadarConfig cfg_;
    ApertureGrid aperture_;
    ImageGrid image_;
    CVec dense_;  // row-major L x N when materialized

    mutable std::once_flag norm_once_;
    mutable double norm_cache_ = 0.0;
};

/// y = H * rasterize(scene) plus optional circular complex Gaussian noise at
/// the requested SNR (dB, relative to mean |H alpha|^2 per look).
MeasurementVector synthesize_measurements(const PropagationOperator& H, const Scene& scene,
                                          std::optional<double> snr_db, Rng& rng);

struct ConsistencyReport {
    std::vector<double> rel_errors;  // per look, |y_td - y_model| / |y_model|
    double max_rel_error = 0.0;
    double mean_rel_error = 0.0;
};

/// Compare the time-domain pipeline (simulate_echo -> dechirp ->
/// extract_measurement, gated on the image-grid center) against y = H*alpha
/// on small instances (L <= 4096). Scenes are expected to carry real
/// reflectivities: the conjugate-mix dechirp maps complex amplitudes to their
/// conjugates, which the discrete model does not represent.
ConsistencyReport timedomain_consistency(const PropagationOperator& H, const Scene& scene,
                                         const ExtractOptions& opts = {});

}  // namespace mmwsar
