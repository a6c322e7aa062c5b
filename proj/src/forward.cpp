#include "mmwsar/forward.hpp"

#include <algorithm>
#include <cmath>

namespace mmwsar {

PropagationOperator::PropagationOperator(const RadarConfig& cfg, const ApertureGrid& aperture,
                                         const ImageGrid& image, bool materialize_now)
    : cfg_(cfg), aperture_(aperture), image_(image) {
    cfg_.validate();
    aperture_.validate();
    image_.validate();
    if (materialize_now) materialize();
}

Complex PropagationOperator::entry(std::size_t look, std::size_t voxel) const {
    const DelayResult d = bistatic_delay(cfg_, aperture_.tx_position(look),
                                         aperture_.rx_position(look), image_.voxel_position(voxel));
    const double r0 = d.one_way();
    // 2*k*R0 in cycles is f0 * tau, the same expression the dechirp chain
    // produces, so the two paths agree to the last few ulps.
    const long double cycles = static_cast<long double>(cfg_.f0) * static_cast<long double>(d.tau);
    return unit_phasor(cycles) / (r0 * r0);
}

void PropagationOperator::materialize() {
    const std::size_t L = looks();
    const std::size_t N = voxels();
    if (L > kMaterializeLimit / N)
        throw ConfigError("PropagationOperator: instance too large to materialize");
    if (!dense_.empty()) return;
    dense_.resize(L * N);
    detail::parallel_for(L, [&](std::size_t begin, std::size_t end) {
        for (std::size_t l = begin; l < end; ++l)
            for (std::size_t n = 0; n < N; ++n) dense_[l * N + n] = entry(l, n);
    });
}

MeasurementVector PropagationOperator::apply(const ReflectivityImage& alpha) const {
    if (alpha.grid != image_)
        throw ShapeError("PropagationOperator::apply: image grid mismatch");
    const std::size_t L = looks();
    const std::size_t N = voxels();
    MeasurementVector y(aperture_);
    if (!dense_.empty()) {
        detail::parallel_for(L, [&](std::size_t begin, std::size_t end) {
            for (std::size_t l = begin; l < end; ++l) {
                Complex acc{};
                const Complex* row = dense_.data() + l * N;
                for (std::size_t n = 0; n < N; ++n) acc += row[n] * alpha.values[n];
                y.values[l] = acc;
            }
        });
    } else {
        detail::parallel_for(L, [&](std::size_t begin, std::size_t end) {
            for (std::size_t l = begin; l < end; ++l) {
                Complex acc{};
                for (std::size_t n = 0; n < N; ++n) acc += entry(l, n) * alpha.values[n];
                y.values[l] = acc;
            }
        });
    }
    return y;
}

ReflectivityImage PropagationOperator::adjoint(const MeasurementVector& y) const {
    if (y.grid != aperture_)
        throw ShapeError("PropagationOperator::adjoint: aperture grid mismatch");
    const std::size_t L = looks();
    const std::size_t N = voxels();
    ReflectivityImage alpha(image_);
    if (!dense_.empty()) {
        detail::parallel_for(N, [&](std::size_t begin, std::size_t end) {
            for (std::size_t n = begin; n < end; ++n) {
                Complex acc{};
                for (std::size_t l = 0; l < L; ++l)
                    acc += std::conj(dense_[l * N + n]) * y.values[l];
                alpha.values[n] = acc;
            }
        });
    } else {
        detail::parallel_for(N, [&](std::size_t begin, std::size_t end) {
            for (std::size_t n = begin; n < end; ++n) {
                Complex acc{};
                for (std::size_t l = 0; l < L; ++l) acc += std::conj(entry(l, n)) * y.values[l];
                alpha.values[n] = acc;
            }
        });
    }
    return alpha;
}

double PropagationOperator::norm_estimate() const {
    std::call_once(norm_once_, [this] {
        Rng rng(0x5EEDull);
        ReflectivityImage x(image_);
        double nx = 0.0;
        for (auto& v : x.values) {
            v = rng.complex_gaussian(1.0);
            nx += std::norm(v);
        }
        nx = std::sqrt(nx);
        for (auto& v : x.values) v /= nx;

        double sigma = 0.0;
        for (int it = 0; it < 100; ++it) {
            MeasurementVector hx = apply(x);
            ReflectivityImage hhx = adjoint(hx);
            double nn = 0.0;
            for (const auto& v : hhx.values) nn += std::norm(v);
            nn = std::sqrt(nn);
            if (nn == 0.0) {
                sigma = 0.0;
                break;
            }
            const double next = std::sqrt(nn);  // ||H^H H x|| -> sigma^2
            for (std::size_t i = 0; i < x.values.size(); ++i) x.values[i] = hhx.values[i] / nn;
            if (sigma > 0.0 && std::abs(next - sigma) <= 1e-3 * sigma) {
                sigma = next;
                break;
            }
            sigma = next;
        }
        norm_cache_ = sigma;
    });
    return norm_cache_;
}

MeasurementVector synthesize_measurements(const PropagationOperator& H, const Scene& scene,
                                          std::optional<double> snr_db, Rng& rng) {
    MeasurementVector y = H.apply(rasterize(scene, H.image()));
    if (!snr_db) return y;
    const std::size_t L = y.values.size();
    double mean_power = 0.0;
    for (const auto& v : y.values) mean_power += std::norm(v);
    mean_power /= static_cast<double>(L);
    const double sigma2 = mean_power * std::pow(10.0, -*snr_db / 10.0);
    for (auto& v : y.values) v += rng.complex_gaussian(sigma2);
    y.noise_power = sigma2;
    return y;
}

ConsistencyReport timedomain_consistency(const PropagationOperator& H, const Scene& scene,
                                         const ExtractOptions& opts) {
    const std::size_t L = H.looks();
    if (L > 4096)
        throw ConfigError("timedomain_consistency: instance too large (L > 4096)");

    const ChirpSpec spec(H.config());
    const Vec3 gate = H.image().center();
    const MeasurementVector y_model = H.apply(rasterize(scene, H.image()));

    ConsistencyReport report;
    report.rel_errors.resize(L, 0.0);
    detail::parallel_for(L, [&](std::size_t begin, std::size_t end) {
        for (std::size_t l = begin; l < end; ++l) {
            const CVec echo = simulate_echo(spec, H.aperture(), scene, l);
            DechirpedFrame frame = dechirp(spec, l, echo);
            const double tau = gate_delay(H.config(), H.aperture(), l, gate);
            const Complex y_td = extract_measurement(frame, spec, tau, opts);
            const double denom = std::abs(y_model.values[l]);
            report.rel_errors[l] =
                denom > 0.0 ? std::abs(y_td - y_model.values[l]) / denom : std::abs(y_td);
        }
    });
    double sum = 0.0;
    for (double e : report.rel_errors) {
        report.max_rel_error = std::max(report.max_rel_error, e);
        sum += e;
    }
    report.mean_rel_error = L > 0 ? sum / static_cast<double>(L) : 0.0;
    return report;
}

}  // namespace mmwsar
