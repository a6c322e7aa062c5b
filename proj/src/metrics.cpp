#include "mmwsar/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mmwsar {

std::vector<double> to_magnitude(const ReflectivityImage& img) {
    std::vector<double> mag(img.values.size());
    double peak = 0.0;
    for (std::size_t i = 0; i < mag.size(); ++i) {
        mag[i] = std::abs(img.values[i]);
        peak = std::max(peak, mag[i]);
    }
    if (peak > 0.0)
        for (auto& m : mag) m /= peak;
    return mag;
}

std::vector<double> magnitude_scaled(const ReflectivityImage& img, double scale) {
    std::vector<double> mag(img.values.size());
    const double s = scale > 0.0 ? 1.0 / scale : 0.0;
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(img.values[i]) * s;
    return mag;
}

double psnr(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("psnr: shape mismatch");
    if (a.empty()) throw ShapeError("psnr: empty input");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

namespace {

std::vector<double> gaussian_window(std::size_t n, double sigma) {
    std::vector<double> w(n * n);
    const double half = 0.5 * static_cast<double>(n - 1);
    double sum = 0.0;
    for (std::size_t iy = 0; iy < n; ++iy)
        for (std::size_t ix = 0; ix < n; ++ix) {
            const double dy = static_cast<double>(iy) - half;
            const double dx = static_cast<double>(ix) - half;
            const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            w[iy * n + ix] = v;
            sum += v;
        }
    for (auto& v : w) v /= sum;
    return w;
}

}  // namespace

double ssim(std::span<const double> a, std::span<const double> b, std::size_t nx, std::size_t ny,
            const SsimOptions& opts) {
    if (a.size() != b.size() || a.size() != nx * ny) throw ShapeError("ssim: shape mismatch");
    const std::size_t win = opts.window;
    if (nx < win || ny < win)
        throw ConfigError("ssim: image smaller than the SSIM window");

    const std::vector<double> w = gaussian_window(win, opts.sigma);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t iy = 0; iy + win <= ny; ++iy) {
        for (std::size_t ix = 0; ix + win <= nx; ++ix) {
            double ma = 0.0, mb = 0.0;
            for (std::size_t wy = 0; wy < win; ++wy)
                for (std::size_t wx = 0; wx < win; ++wx) {
                    const double ww = w[wy * win + wx];
                    ma += ww * a[(iy + wy) * nx + ix + wx];
                    mb += ww * b[(iy + wy) * nx + ix + wx];
                }
            double va = 0.0, vb = 0.0, cov = 0.0;
            for (std::size_t wy = 0; wy < win; ++wy)
                for (std::size_t wx = 0; wx < win; ++wx) {
                    const double ww = w[wy * win + wx];
                    const double da = a[(iy + wy) * nx + ix + wx] - ma;
                    const double db = b[(iy + wy) * nx + ix + wx] - mb;
                    va += ww * da * da;
                    vb += ww * db * db;
                    cov += ww * da * db;
                }
            const double num = (2.0 * ma * mb + opts.c1) * (2.0 * cov + opts.c2);
            const double den = (ma * ma + mb * mb + opts.c1) * (va + vb + opts.c2);
            total += num / den;
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

std::pair<double, double> roi_metrics(std::span<const double> a, std::span<const double> b,
                                      std::size_t nx, std::size_t ny, const RoiRect& roi,
                                      const SsimOptions& opts) {
    if (a.size() != b.size() || a.size() != nx * ny)
        throw ShapeError("roi_metrics: shape mismatch");
    if (roi.nx == 0 || roi.ny == 0) throw RangeError("roi_metrics: empty ROI");
    if (roi.ix0 + roi.nx > nx || roi.iy0 + roi.ny > ny)
        throw RangeError("roi_metrics: ROI outside image bounds");

    std::vector<double> ca(roi.nx * roi.ny), cb(roi.nx * roi.ny);
    for (std::size_t iy = 0; iy < roi.ny; ++iy)
        for (std::size_t ix = 0; ix < roi.nx; ++ix) {
            ca[iy * roi.nx + ix] = a[(roi.iy0 + iy) * nx + roi.ix0 + ix];
            cb[iy * roi.nx + ix] = b[(roi.iy0 + iy) * nx + roi.ix0 + ix];
        }
    return {psnr(ca, cb), ssim(ca, cb, roi.nx, roi.ny, opts)};
}

RoiRect auto_roi(std::span<const double> mag, std::size_t nx, std::size_t ny, double threshold,
                 std::size_t dilate) {
    if (mag.size() != nx * ny) throw ShapeError("auto_roi: shape mismatch");
    double peak = 0.0;
    for (double v : mag) peak = std::max(peak, v);
    if (peak <= 0.0) return RoiRect{0, 0, nx, ny};

    std::size_t x0 = nx, x1 = 0, y0 = ny, y1 = 0;
    for (std::size_t iy = 0; iy < ny; ++iy)
        for (std::size_t ix = 0; ix < nx; ++ix)
            if (mag[iy * nx + ix] > threshold * peak) {
                x0 = std::min(x0, ix);
                x1 = std::max(x1, ix);
                y0 = std::min(y0, iy);
                y1 = std::max(y1, iy);
            }
    if (x0 > x1) return RoiRect{0, 0, nx, ny};
    x0 = x0 > dilate ? x0 - dilate : 0;
    y0 = y0 > dilate ? y0 - dilate : 0;
    x1 = std::min(nx - 1, x1 + dilate);
    y1 = std::min(ny - 1, y1 + dilate);
    return RoiRect{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

namespace {

RoiRect union_roi(const RoiRect& a, const RoiRect& b) {
    const std::size_t x0 = std::min(a.ix0, b.ix0);
    const std::size_t y0 = std::min(a.iy0, b.iy0);
    const std::size_t x1 = std::max(a.ix0 + a.nx, b.ix0 + b.nx);
    const std::size_t y1 = std::max(a.iy0 + a.ny, b.iy0 + b.ny);
    return RoiRect{x0, y0, x1 - x0, y1 - y0};
}

RoiRect grow_to_window(RoiRect r, std::size_t win, std::size_t nx, std::size_t ny) {
    // SSIM needs at least one full window inside the crop.
    while (r.nx < win && (r.ix0 > 0 || r.ix0 + r.nx < nx)) {
        if (r.ix0 > 0) { --r.ix0; ++r.nx; }
        if (r.nx < win && r.ix0 + r.nx < nx) ++r.nx;
    }
    while (r.ny < win && (r.iy0 > 0 || r.iy0 + r.ny < ny)) {
        if (r.iy0 > 0) { --r.iy0; ++r.ny; }
        if (r.ny < win && r.iy0 + r.ny < ny) ++r.ny;
    }
    return r;
}

}  // namespace

MetricsReport compute_report(const ReflectivityImage& clean, const ReflectivityImage& adv,
                             const ReflectivityImage& target, double power_ratio, bool with_roi,
                             const SsimOptions& opts) {
    if (clean.grid != adv.grid || clean.grid != target.grid)
        throw ShapeError("compute_report: image grids differ");
    const std::size_t nx = clean.grid.nx;
    const std::size_t ny = clean.grid.ny;

    double scale = 0.0;
    for (const auto& v : clean.values) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) {
        for (const auto& v : adv.values) scale = std::max(scale, std::abs(v));
        for (const auto& v : target.values) scale = std::max(scale, std::abs(v));
    }
    if (scale == 0.0) scale = 1.0;

    const std::vector<double> mc = magnitude_scaled(clean, scale);
    const std::vector<double> ma = magnitude_scaled(adv, scale);
    const std::vector<double> mt = magnitude_scaled(target, scale);

    MetricsReport rep;
    rep.power_ratio = power_ratio;
    rep.psnr_ac = psnr(ma, mc);
    rep.ssim_ac = ssim(ma, mc, nx, ny, opts);
    rep.psnr_at = psnr(ma, mt);
    rep.ssim_at = ssim(ma, mt, nx, ny, opts);

    if (with_roi) {
        RoiRect roi = union_roi(auto_roi(mc, nx, ny), auto_roi(mt, nx, ny));
        roi = grow_to_window(roi, opts.window, nx, ny);
        rep.roi = roi;
        std::tie(rep.roi_psnr_ac, rep.roi_ssim_ac) = roi_metrics(ma, mc, nx, ny, roi, opts);
        std::tie(rep.roi_psnr_at, rep.roi_ssim_at) = roi_metrics(ma, mt, nx, ny, roi, opts);
    }
    return rep;
}

}  // namespace mmwsar
