#include "mmwsar/imaging.hpp"

#include <algorithm>
#include <cmath>

#include "mmwsar/fft.hpp"

namespace mmwsar {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::BPA: return "bpa";
        case Variant::RMA: return "rma";
        case Variant::MFA: return "mfa";
        case Variant::CSA: return "csa";
        case Variant::RMIST: return "rmist";
    }
    throw ConfigError("variant_name: unknown variant");
}

Variant variant_from_name(const std::string& name) {
    if (name == "bpa") return Variant::BPA;
    if (name == "rma") return Variant::RMA;
    if (name == "mfa") return Variant::MFA;
    if (name == "csa") return Variant::CSA;
    if (name == "rmist") return Variant::RMIST;
    throw ConfigError("unknown reconstructor variant: " + name);
}

bool grids_coincident(const ApertureGrid& aperture, const ImageGrid& image) {
    return aperture.nx == image.nx && aperture.ny == image.ny && aperture.dx == image.dx &&
           aperture.dy == image.dy && aperture.origin_x == image.origin_x &&
           aperture.origin_y == image.origin_y;
}

void ReconstructorSpec::validate() const {
    if (lambda_reg < 0.0) throw ConfigError("ReconstructorSpec: lambda_reg must be >= 0");
    for (double m : mu)
        if (!(m > 0.0)) throw ConfigError("ReconstructorSpec: mu values must be > 0");
    for (double t : theta)
        if (t < 0.0) throw ConfigError("ReconstructorSpec: theta values must be >= 0");
    if (is_unrolled()) {
        if (iters < 1) throw ConfigError("ReconstructorSpec: iters must be >= 1");
        const auto n = static_cast<std::size_t>(iters);
        if (mu.size() > 1 && mu.size() != n)
            throw ConfigError("ReconstructorSpec: mu schedule length must equal iters");
        if (theta.size() > 1 && theta.size() != n)
            throw ConfigError("ReconstructorSpec: theta schedule length must equal iters");
    }
}

Complex soft_threshold(Complex x, double theta) {
    const double mag = std::abs(x);
    if (mag <= theta) return Complex{};
    return x * ((mag - theta) / mag);
}

namespace {

void require_finite(const MeasurementVector& y) {
    for (const auto& v : y.values)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw NumericError("reconstruct: non-finite measurement input");
}

void require_coincident_grids(const PropagationOperator& H, const char* who) {
    if (!grids_coincident(H.aperture(), H.image()))
        throw ConfigError(std::string(who) +
                          ": aperture and image grids must be regular and coincident");
}

std::vector<double> resolve_mu(const ReconstructorSpec& spec, const PropagationOperator& H) {
    const auto n = static_cast<std::size_t>(spec.iters);
    if (spec.mu.empty()) {
        const double norm = H.norm_estimate();
        if (norm == 0.0) throw NumericError("reconstruct: operator norm estimate is zero");
        return std::vector<double>(n, 0.9 / (norm * norm));
    }
    if (spec.mu.size() == 1) return std::vector<double>(n, spec.mu[0]);
    return spec.mu;
}

std::vector<double> resolve_theta(const ReconstructorSpec& spec,
                                  const std::vector<double>& mu) {
    const auto n = static_cast<std::size_t>(spec.iters);
    if (spec.variant == Variant::CSA) {
        std::vector<double> th(n);
        for (std::size_t k = 0; k < n; ++k) th[k] = mu[k] * spec.lambda_reg;
        return th;
    }
    if (spec.theta.empty()) return std::vector<double>(n, 0.0);
    if (spec.theta.size() == 1) return std::vector<double>(n, spec.theta[0]);
    return spec.theta;
}

double vec_norm2(const CVec& v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return s;
}

double vec_norm1(const CVec& v) {
    double s = 0.0;
    for (const auto& x : v) s += std::abs(x);
    return s;
}

// ---- RMA --------------------------------------------------------------

// Spectral multiplier of the dispersion relation: e^{-j kz z0} on propagating
// components (kz = sqrt(4k^2 - kx^2 - ky^2)); evanescent components are zeroed
// under the cutoff, otherwise matched with the decaying real exponential.
CVec rma_multiplier(const PropagationOperator& H, bool cutoff) {
    const std::size_t nx = H.image().nx;
    const std::size_t ny = H.image().ny;
    const double k = H.config().wavenumber();
    const double z0 = H.image().z0;
    CVec g(nx * ny);
    for (std::size_t iy = 0; iy < ny; ++iy) {
        const double my = iy <= ny / 2 ? static_cast<double>(iy)
                                       : static_cast<double>(iy) - static_cast<double>(ny);
        const double ky = kTwoPi * my / (static_cast<double>(ny) * H.image().dy);
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const double mx = ix <= nx / 2 ? static_cast<double>(ix)
                                           : static_cast<double>(ix) - static_cast<double>(nx);
            const double kx = kTwoPi * mx / (static_cast<double>(nx) * H.image().dx);
            const double arg = 4.0 * k * k - kx * kx - ky * ky;
            Complex m;
            if (arg >= 0.0) {
                const double kz = std::sqrt(arg);
                m = std::polar(1.0, -kz * z0);
            } else {
                m = cutoff ? Complex{} : Complex{std::exp(-std::sqrt(-arg) * z0), 0.0};
            }
            g[iy * nx + ix] = m;
        }
    }
    return g;
}

CVec rma_apply(const PropagationOperator& H, const CVec& y, bool cutoff, bool adjoint_pass) {
    const std::size_t nx = H.image().nx;
    const std::size_t ny = H.image().ny;
    CVec f = y;
    fft::fft2(f, ny, nx, false);
    const CVec g = rma_multiplier(H, cutoff);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] *= adjoint_pass ? std::conj(g[i]) : g[i];
    fft::fft2(f, ny, nx, true);
    return f;
}

// ---- MFA --------------------------------------------------------------

struct MfaPlan {
    std::size_t nx, ny;     // grid size
    std::size_t px, py;     // padded FFT size
    CVec psf_hat;           // FFT of the zero-padded point response
};

MfaPlan mfa_plan(const PropagationOperator& H) {
    MfaPlan plan;
    plan.nx = H.image().nx;
    plan.ny = H.image().ny;
    plan.px = 3 * plan.nx;
    plan.py = 3 * plan.ny;
    const RadarConfig& cfg = H.config();
    const ApertureGrid& a = H.aperture();
    const double z0 = H.image().z0;

    // Point response as a function of the look-to-voxel lateral offset; the
    // antenna offsets keep it shift-invariant across coincident grids.
    CVec buf(plan.px * plan.py, Complex{});
    for (std::size_t jy = 0; jy < 2 * plan.ny - 1; ++jy) {
        const double oy = (static_cast<double>(jy) - static_cast<double>(plan.ny - 1)) * a.dy;
        for (std::size_t jx = 0; jx < 2 * plan.nx - 1; ++jx) {
            const double ox = (static_cast<double>(jx) - static_cast<double>(plan.nx - 1)) * a.dx;
            const Vec3 tx{ox + a.tx_offset_x, oy + a.tx_offset_y, 0.0};
            const Vec3 rx{ox + a.rx_offset_x, oy + a.rx_offset_y, 0.0};
            const DelayResult d = bistatic_delay(cfg, tx, rx, Vec3{0.0, 0.0, z0});
            const double r0 = d.one_way();
            const long double cycles =
                static_cast<long double>(cfg.f0) * static_cast<long double>(d.tau);
            buf[jy * plan.px + jx] = unit_phasor(cycles) / (r0 * r0);
        }
    }
    fft::fft2(buf, plan.py, plan.px, false);
    plan.psf_hat = std::move(buf);
    return plan;
}

CVec mfa_apply(const PropagationOperator& H, const CVec& y) {
    const MfaPlan plan = mfa_plan(H);
    CVec buf(plan.px * plan.py, Complex{});
    for (std::size_t iy = 0; iy < plan.ny; ++iy)
        for (std::size_t ix = 0; ix < plan.nx; ++ix)
            buf[iy * plan.px + ix] = y[iy * plan.nx + ix];
    fft::fft2(buf, plan.py, plan.px, false);
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] *= std::conj(plan.psf_hat[i]);
    fft::fft2(buf, plan.py, plan.px, true);

    CVec out(plan.nx * plan.ny);
    for (std::size_t qy = 0; qy < plan.ny; ++qy) {
        const std::size_t sy = (qy + plan.py - (plan.ny - 1)) % plan.py;
        for (std::size_t qx = 0; qx < plan.nx; ++qx) {
            const std::size_t sx = (qx + plan.px - (plan.nx - 1)) % plan.px;
            out[qy * plan.nx + qx] = buf[sy * plan.px + sx];
        }
    }
    return out;
}

CVec mfa_adjoint(const PropagationOperator& H, const CVec& cot) {
    const MfaPlan plan = mfa_plan(H);
    CVec buf(plan.px * plan.py, Complex{});
    for (std::size_t qy = 0; qy < plan.ny; ++qy) {
        const std::size_t sy = (qy + plan.py - (plan.ny - 1)) % plan.py;
        for (std::size_t qx = 0; qx < plan.nx; ++qx) {
            const std::size_t sx = (qx + plan.px - (plan.nx - 1)) % plan.px;
            buf[sy * plan.px + sx] = cot[qy * plan.nx + qx];
        }
    }
    fft::fft2(buf, plan.py, plan.px, false);
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] *= plan.psf_hat[i];
    fft::fft2(buf, plan.py, plan.px, true);

    CVec out(plan.nx * plan.ny);
    for (std::size_t iy = 0; iy < plan.ny; ++iy)
        for (std::size_t ix = 0; ix < plan.nx; ++ix)
            out[iy * plan.nx + ix] = buf[iy * plan.px + ix];
    return out;
}

// ---- shared unrolled recursion (CSA via ISTA, RMIST) --------------------

struct UnrolledTrace {
    std::vector<CVec> pre_prox;  // u^k for every iteration
    CVec alpha;                  // final iterate
    std::vector<double> objective;
};

UnrolledTrace run_unrolled(const PropagationOperator& H, const MeasurementVector& y,
                           const std::vector<double>& mu, const std::vector<double>& theta,
                           double lambda_reg, bool record_l1) {
    const std::size_t iters = mu.size();
    UnrolledTrace tr;
    tr.pre_prox.reserve(iters);
    tr.alpha.assign(H.voxels(), Complex{});
    tr.objective.reserve(iters + 1);

    ReflectivityImage alpha(H.image());
    MeasurementVector h_alpha(H.aperture());  // H * alpha, zero at alpha = 0

    auto objective = [&](const MeasurementVector& ha, const CVec& a) {
        CVec resid(ha.values.size());
        for (std::size_t i = 0; i < resid.size(); ++i) resid[i] = ha.values[i] - y.values[i];
        double obj = 0.5 * vec_norm2(resid);
        if (record_l1) obj += lambda_reg * vec_norm1(a);
        return obj;
    };
    tr.objective.push_back(objective(h_alpha, alpha.values));

    for (std::size_t k = 0; k < iters; ++k) {
        MeasurementVector resid(H.aperture());
        for (std::size_t i = 0; i < resid.values.size(); ++i)
            resid.values[i] = h_alpha.values[i] - y.values[i];
        const ReflectivityImage grad = H.adjoint(resid);
        CVec u(alpha.values.size());
        for (std::size_t i = 0; i < u.size(); ++i)
            u[i] = alpha.values[i] - mu[k] * grad.values[i];
        for (std::size_t i = 0; i < u.size(); ++i)
            alpha.values[i] = soft_threshold(u[i], theta[k]);
        tr.pre_prox.push_back(std::move(u));
        h_alpha = H.apply(alpha);
        tr.objective.push_back(objective(h_alpha, alpha.values));
    }
    tr.alpha = alpha.values;
    return tr;
}

}  // namespace

Reconstruction reconstruct(const ReconstructorSpec& spec, const PropagationOperator& H,
                           const MeasurementVector& y) {
    spec.validate();
    if (y.grid != H.aperture()) throw ShapeError("reconstruct: measurement grid mismatch");
    require_finite(y);

    Reconstruction rec;
    rec.spec = spec;
    rec.image = ReflectivityImage(H.image());

    switch (spec.variant) {
        case Variant::BPA:
            rec.image = H.adjoint(y);
            break;
        case Variant::RMA: {
            require_coincident_grids(H, "RMA");
            rec.image.values = rma_apply(H, y.values, spec.evanescent_cutoff, false);
            break;
        }
        case Variant::MFA: {
            require_coincident_grids(H, "MFA");
            rec.image.values = mfa_apply(H, y.values);
            break;
        }
        case Variant::CSA:
        case Variant::RMIST: {
            const std::vector<double> mu = resolve_mu(spec, H);
            const std::vector<double> theta = resolve_theta(spec, mu);
            rec.spec.mu = mu;
            rec.spec.theta = theta;
            UnrolledTrace tr = run_unrolled(H, y, mu, theta, spec.lambda_reg,
                                            spec.variant == Variant::CSA);
            rec.image.values = std::move(tr.alpha);
            rec.diagnostics = std::move(tr.objective);
            break;
        }
    }
    return rec;
}

MeasurementVector vjp(const ReconstructorSpec& spec, const PropagationOperator& H,
                      const MeasurementVector& y, const ReflectivityImage& cotangent) {
    spec.validate();
    if (y.grid != H.aperture()) throw ShapeError("vjp: measurement grid mismatch");
    if (cotangent.grid != H.image()) throw ShapeError("vjp: cotangent grid mismatch");

    switch (spec.variant) {
        case Variant::BPA:
            // adjoint of H^H is H
            return H.apply(cotangent);
        case Variant::RMA: {
            require_coincident_grids(H, "RMA");
            return MeasurementVector(H.aperture(),
                                     rma_apply(H, cotangent.values, spec.evanescent_cutoff, true));
        }
        case Variant::MFA: {
            require_coincident_grids(H, "MFA");
            return MeasurementVector(H.aperture(), mfa_adjoint(H, cotangent.values));
        }
        case Variant::CSA:
        case Variant::RMIST:
            break;
    }

    // Unrolled reverse pass.
    const std::vector<double> mu = resolve_mu(spec, H);
    const std::vector<double> theta = resolve_theta(spec, mu);
    UnrolledTrace tr = run_unrolled(H, y, mu, theta, spec.lambda_reg, false);

    CVec g = cotangent.values;  // dL/d(conj(alpha)) at the output
    MeasurementVector g_y(H.aperture());
    for (std::size_t k = mu.size(); k-- > 0;) {
        const CVec& u = tr.pre_prox[k];
        CVec g_u(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double mag = std::abs(u[i]);
            if (mag <= theta[k]) {
                g_u[i] = Complex{};
            } else {
                const double a = 1.0 - theta[k] / (2.0 * mag);
                const Complex b = theta[k] * u[i] * u[i] / (2.0 * mag * mag * mag);
                g_u[i] = a * g[i] + b * std::conj(g[i]);
            }
        }
        // u = (I - mu H^H H) alpha + mu H^H y : both factors self-adjoint in H
        const MeasurementVector t = H.apply(ReflectivityImage(H.image(), g_u));
        const ReflectivityImage hh = H.adjoint(t);
        for (std::size_t i = 0; i < g_u.size(); ++i) g[i] = g_u[i] - mu[k] * hh.values[i];
        for (std::size_t i = 0; i < g_y.values.size(); ++i)
            g_y.values[i] += mu[k] * t.values[i];
    }
    return g_y;
}

}  // namespace mmwsar
