#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mmwsar/core.hpp"

namespace mmwsar {

/// Rectangle in voxel indices, [ix0, ix0+nx) x [iy0, iy0+ny).
struct RoiRect {
    std::size_t ix0 = 0;
    std::size_t iy0 = 0;
    std::size_t nx = 0;
    std::size_t ny = 0;
    friend bool operator==(const RoiRect&, const RoiRect&) = default;
};

struct SsimOptions {
    std::size_t window = 7;
    double sigma = 1.5;
    double c1 = 1e-4;   // (0.01)^2 on the [0, 1] range
    double c2 = 9e-4;   // (0.03)^2
};

/// |values| rescaled so the maximum maps to 1; an all-zero image stays zero.
std::vector<double> to_magnitude(const ReflectivityImage& img);

/// |values| / scale: the shared-reference normalization used by reports,
/// where scale is the clean reconstruction's peak magnitude.
std::vector<double> magnitude_scaled(const ReflectivityImage& img, double scale);

/// 10*log10(1/MSE) with peak 1; +infinity for identical inputs.
double psnr(std::span<const double> a, std::span<const double> b);

/// Mean of Gaussian-windowed local SSIM over all fully-interior windows.
double ssim(std::span<const double> a, std::span<const double> b, std::size_t nx, std::size_t ny,
            const SsimOptions& opts = {});

/// PSNR and SSIM restricted to a crop.
std::pair<double, double> roi_metrics(std::span<const double> a, std::span<const double> b,
                                      std::size_t nx, std::size_t ny, const RoiRect& roi,
                                      const SsimOptions& opts = {});

/// Bounding box of pixels above threshold * max, dilated. Returns the full
/// frame for an all-zero input.
RoiRect auto_roi(std::span<const double> mag, std::size_t nx, std::size_t ny,
                 double threshold = 0.1, std::size_t dilate = 2);

/// AC/AT metric pairs of one attack run. PSNR +infinity is carried as-is
/// here; report serialization converts it to the documented sentinel.
struct MetricsReport {
    double psnr_ac = 0.0;
    double ssim_ac = 0.0;
    double psnr_at = 0.0;
    double ssim_at = 0.0;
    double power_ratio = 0.0;
    std::optional<RoiRect> roi;  // set when ROI-restricted values are present
    double roi_psnr_ac = 0.0;
    double roi_ssim_ac = 0.0;
    double roi_psnr_at = 0.0;
    double roi_ssim_at = 0.0;
};

/// Full report for (clean, adversarial, target) reconstructions. All three
/// are normalized by the clean image's peak magnitude so that near-null
/// adversarial images compare as near-null instead of being rescaled to full
/// scale. ROI metrics (union of the clean and target auto-ROIs) are attached
/// when with_roi is set.
MetricsReport compute_report(const ReflectivityImage& clean, const ReflectivityImage& adv,
                             const ReflectivityImage& target, double power_ratio, bool with_roi,
                             const SsimOptions& opts = {});

}  // namespace mmwsar
