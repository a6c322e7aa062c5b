#include "mmwsar/core.hpp"

#include <algorithm>
#include <thread>

namespace mmwsar {

std::vector<Reflector3> scene_points(const Scene& scene) {
    std::vector<Reflector3> pts;
    if (scene.dense) {
        const auto& img = *scene.dense;
        pts.reserve(img.values.size());
        for (std::size_t n = 0; n < img.values.size(); ++n) {
            if (img.values[n] == Complex{}) continue;
            pts.push_back({img.grid.voxel_position(n), img.values[n]});
        }
        return pts;
    }
    pts.reserve(scene.reflectors.size());
    for (const auto& r : scene.reflectors)
        pts.push_back({{r.x, r.y, scene.z0}, r.amplitude});
    return pts;
}

ReflectivityImage rasterize(const Scene& scene, const ImageGrid& grid) {
    if (scene.dense) {
        if (scene.dense->grid != grid)
            throw ShapeError("rasterize: dense scene grid does not match the target grid");
        return *scene.dense;
    }
    if (scene.z0 != grid.z0)
        throw ShapeError("rasterize: scene plane depth does not match the grid");
    ReflectivityImage img(grid);
    for (const auto& r : scene.reflectors) {
        const auto n = grid.nearest_voxel(r.x, r.y);
        if (!n)
            throw RangeError("rasterize: reflector outside the image grid extent");
        img.values[*n] += r.amplitude;
    }
    return img;
}

DelayResult bistatic_delay(const RadarConfig& cfg, const Vec3& tx, const Vec3& rx,
                           const Vec3& target) {
    DelayResult d;
    d.r_t = (target - tx).norm();
    d.r_r = (target - rx).norm();
    d.tau = (d.r_t + d.r_r) / cfg.c;
    return d;
}

std::uint64_t Rng::next_raw() {
    // splitmix64; small, fast, and identical on every platform.
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double Rng::uniform() {
    return static_cast<double>(next_raw() >> 11) * 0x1.0p-53;
}

double Rng::uniform_phase() { return kTwoPi * uniform(); }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = kTwoPi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

Complex Rng::complex_gaussian(double variance) {
    const double s = std::sqrt(0.5 * variance);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
}

namespace detail {

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    const std::size_t workers = std::min<std::size_t>(hw, (n + 63) / 64);
    if (workers <= 1) {
        fn(0, n);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace detail

}  // namespace mmwsar
