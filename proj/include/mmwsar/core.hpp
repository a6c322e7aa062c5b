#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mmwsar/errors.hpp"

namespace mmwsar {

using Complex = std::complex<double>;
using CVec = std::vector<Complex>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Unit-magnitude phasor e^{j*2*pi*cycles}.
///
/// Phase bookkeeping throughout the toolkit is done in cycles (phase / 2pi)
/// and reduced in extended precision before the trig call. Chirp phases reach
/// millions of cycles; reducing in double would cost ~1e-9 rad, reducing in
/// long double keeps the error near 1e-12 rad.
inline Complex unit_phasor(long double cycles) {
    const long double reduced = cycles - std::nearbyint(cycles);  // [-0.5, 0.5]
    const double phase = kTwoPi * static_cast<double>(reduced);
    return {std::cos(phase), std::sin(phase)};
}

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend Vec3 operator-(const Vec3& a, const Vec3& b) {
        return {a.x - b.x, a.y - b.y, a.z - b.z};
    }
    friend Vec3 operator+(const Vec3& a, const Vec3& b) {
        return {a.x + b.x, a.y + b.y, a.z + b.z};
    }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    friend bool operator==(const Vec3&, const Vec3&) = default;
};

/// FMCW chirp and fast-time sampling parameters.
struct RadarConfig {
    double f0 = 77e9;           // start frequency [Hz]
    double slope = 3.18e14;     // chirp slope K [Hz/s]
    double fs = 5e6;            // fast-time sampling rate [Hz]
    std::size_t n_samples = 256;
    double c = 299792458.0;     // propagation speed [m/s]
    double k = 0.0;             // wavenumber 2*pi*f0/c [rad/m], set by validate()

    RadarConfig() { k = kTwoPi * f0 / c; }
    RadarConfig(double f0_, double slope_, double fs_, std::size_t n_samples_,
                double c_ = 299792458.0)
        : f0(f0_), slope(slope_), fs(fs_), n_samples(n_samples_), c(c_) {
        validate();
    }

    void validate() {
        if (!(f0 > 0.0)) throw ConfigError("RadarConfig: f0 must be > 0");
        if (!(slope > 0.0)) throw ConfigError("RadarConfig: slope must be > 0");
        if (!(fs > 0.0)) throw ConfigError("RadarConfig: fs must be > 0");
        if (n_samples < 2) throw ConfigError("RadarConfig: n_samples must be >= 2");
        if (!(c > 0.0)) throw ConfigError("RadarConfig: c must be > 0");
        k = kTwoPi * f0 / c;
    }

    double wavenumber() const { return k; }
    friend bool operator==(const RadarConfig&, const RadarConfig&) = default;
};

/// Planar scan raster at z = 0. Look index l runs row-major over (iy, ix):
/// l = iy*nx + ix.
struct ApertureGrid {
    std::size_t nx = 1;
    std::size_t ny = 1;
    double dx = 1e-3;   // [m]
    double dy = 2e-3;   // [m]
    double origin_x = 0.0;
    double origin_y = 0.0;
    double tx_offset_x = 0.0;  // antenna offsets from the look phase-center
    double tx_offset_y = 0.0;
    double rx_offset_x = 0.0;
    double rx_offset_y = 0.0;

    std::size_t looks() const { return nx * ny; }

    void validate() const {
        if (nx == 0 || ny == 0) throw ConfigError("ApertureGrid: nx, ny must be >= 1");
        if (!(dx > 0.0) || !(dy > 0.0)) throw ConfigError("ApertureGrid: dx, dy must be > 0");
    }

    std::size_t index_of(std::size_t ix, std::size_t iy) const { return iy * nx + ix; }

    Vec3 look_position(std::size_t l) const {
        if (l >= looks()) throw RangeError("ApertureGrid: look index out of range");
        const std::size_t ix = l % nx;
        const std::size_t iy = l / nx;
        return {origin_x + static_cast<double>(ix) * dx,
                origin_y + static_cast<double>(iy) * dy, 0.0};
    }

    Vec3 tx_position(std::size_t l) const {
        Vec3 p = look_position(l);
        return {p.x + tx_offset_x, p.y + tx_offset_y, 0.0};
    }
    Vec3 rx_position(std::size_t l) const {
        Vec3 p = look_position(l);
        return {p.x + rx_offset_x, p.y + rx_offset_y, 0.0};
    }

    friend bool operator==(const ApertureGrid&, const ApertureGrid&) = default;
};

/// Voxel raster on the target plane z = z0. Same row-major convention as the
/// aperture: n = iy*nx + ix.
struct ImageGrid {
    std::size_t nx = 1;
    std::size_t ny = 1;
    double dx = 2e-3;
    double dy = 2e-3;
    double origin_x = 0.0;
    double origin_y = 0.0;
    double z0 = 0.23;

    std::size_t voxels() const { return nx * ny; }

    void validate() const {
        if (nx == 0 || ny == 0) throw ConfigError("ImageGrid: nx, ny must be >= 1");
        if (!(dx > 0.0) || !(dy > 0.0)) throw ConfigError("ImageGrid: dx, dy must be > 0");
        if (!(z0 > 0.0)) throw ConfigError("ImageGrid: z0 must be > 0");
    }

    Vec3 voxel_position(std::size_t n) const {
        if (n >= voxels()) throw RangeError("ImageGrid: voxel index out of range");
        const std::size_t ix = n % nx;
        const std::size_t iy = n / nx;
        return {origin_x + static_cast<double>(ix) * dx,
                origin_y + static_cast<double>(iy) * dy, z0};
    }

    /// Center of the grid extent at depth z0 (the range-gate anchor point).
    Vec3 center() const {
        return {origin_x + 0.5 * static_cast<double>(nx - 1) * dx,
                origin_y + 0.5 * static_cast<double>(ny - 1) * dy, z0};
    }

    /// Nearest voxel index for an in-plane position, or nullopt when the
    /// position falls outside the grid extent (center +- half pitch).
    std::optional<std::size_t> nearest_voxel(double x, double y) const {
        const double fx = (x - origin_x) / dx;
        const double fy = (y - origin_y) / dy;
        const auto ix = static_cast<long long>(std::llround(fx));
        const auto iy = static_cast<long long>(std::llround(fy));
        if (ix < 0 || iy < 0 || ix >= static_cast<long long>(nx) ||
            iy >= static_cast<long long>(ny))
            return std::nullopt;
        if (std::abs(fx - static_cast<double>(ix)) > 0.5 + 1e-9 ||
            std::abs(fy - static_cast<double>(iy)) > 0.5 + 1e-9)
            return std::nullopt;
        return static_cast<std::size_t>(iy) * nx + static_cast<std::size_t>(ix);
    }

    friend bool operator==(const ImageGrid&, const ImageGrid&) = default;
};

/// Complex reflectivity on an ImageGrid, row-major.
struct ReflectivityImage {
    ImageGrid grid;
    CVec values;

    ReflectivityImage() = default;
    explicit ReflectivityImage(const ImageGrid& g) : grid(g), values(g.voxels(), Complex{}) {}
    ReflectivityImage(const ImageGrid& g, CVec v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.voxels())
            throw ShapeError("ReflectivityImage: value count does not match grid");
    }
    friend bool operator==(const ReflectivityImage&, const ReflectivityImage&) = default;
};

/// One complex measurement per aperture look.
struct MeasurementVector {
    ApertureGrid grid;
    CVec values;
    double noise_power = 0.0;  // variance of the circular complex Gaussian term

    MeasurementVector() = default;
    explicit MeasurementVector(const ApertureGrid& g) : grid(g), values(g.looks(), Complex{}) {}
    MeasurementVector(const ApertureGrid& g, CVec v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.looks())
            throw ShapeError("MeasurementVector: value count does not match grid");
    }
};

struct PointReflector {
    double x = 0.0;
    double y = 0.0;
    Complex amplitude{1.0, 0.0};
    friend bool operator==(const PointReflector&, const PointReflector&) = default;
};

/// Target description: point reflectors on the plane z = z0, or a dense
/// reflectivity image. An empty scene is valid and produces zero echoes.
struct Scene {
    double z0 = 0.23;
    std::vector<PointReflector> reflectors;
    std::optional<ReflectivityImage> dense;

    static Scene points(double plane_z0, std::vector<PointReflector> pts) {
        Scene s;
        s.z0 = plane_z0;
        s.reflectors = std::move(pts);
        return s;
    }
    static Scene from_image(ReflectivityImage img) {
        Scene s;
        s.z0 = img.grid.z0;
        s.dense = std::move(img);
        return s;
    }

    bool empty() const {
        if (dense) {
            for (const auto& v : dense->values)
                if (v != Complex{}) return false;
            return true;
        }
        return reflectors.empty();
    }

    friend bool operator==(const Scene&, const Scene&) = default;
};

struct Reflector3 {
    Vec3 position;
    Complex amplitude;
};

/// Flatten a scene to 3-D point reflectors (dense images contribute their
/// nonzero voxels at the voxel centers).
std::vector<Reflector3> scene_points(const Scene& scene);

/// Reflector-list scenes snapped onto a grid; dense scenes must match it.
/// Throws RangeError when a reflector lies outside the grid extent.
ReflectivityImage rasterize(const Scene& scene, const ImageGrid& grid);

/// Two-leg propagation geometry for one look/target pair.
struct DelayResult {
    double tau = 0.0;   // (R_T + R_R)/c [s]
    double r_t = 0.0;   // |r - tx| [m]
    double r_r = 0.0;   // |r - rx| [m]
    double one_way() const { return 0.5 * (r_t + r_r); }  // R0 of the data model
};

DelayResult bistatic_delay(const RadarConfig& cfg, const Vec3& tx, const Vec3& rx,
                           const Vec3& target);

/// Deterministic RNG with explicit Box-Muller normals so draw sequences do not
/// depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in [0, 2*pi).
    double uniform_phase();
    /// Standard normal.
    double normal();
    /// Circular complex Gaussian with total variance `variance`
    /// (variance/2 per real component).
    Complex complex_gaussian(double variance);

private:
    std::uint64_t next_raw();
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline Rng seeded_rng(std::uint64_t seed) { return Rng(seed); }

namespace detail {

/// Run fn(begin, end) over [0, n) split into contiguous chunks, one per worker
/// thread. Writes must target disjoint slots so results stay deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace detail

}  // namespace mmwsar
