#include "mmwsar/attack.hpp"

#include <algorithm>
#include <cmath>

namespace mmwsar {

InjectionOperator InjectionOperator::make(const RadarConfig& cfg, const ApertureGrid& grid,
                                          const Vec3& attacker) {
    InjectionOperator D;
    D.aperture = grid;
    D.attacker = attacker;
    D.phases.resize(grid.looks());
    for (std::size_t l = 0; l < grid.looks(); ++l) {
        // 2*k*R with R = |r_A - rx_l|/2 reduces to f0 * tau_atk in cycles.
        const double dist = (attacker - grid.rx_position(l)).norm();
        const long double cycles =
            static_cast<long double>(cfg.f0) * static_cast<long double>(dist) / cfg.c;
        D.phases[l] = unit_phasor(cycles);
    }
    return D;
}

MeasurementVector inject(const MeasurementVector& y, const InjectionOperator& D,
                         std::span<const Complex> w) {
    if (y.grid != D.aperture) throw ShapeError("inject: aperture grid mismatch");
    if (w.size() != y.values.size()) throw ShapeError("inject: weight count mismatch");
    MeasurementVector out = y;
    for (std::size_t l = 0; l < w.size(); ++l) out.values[l] += D.phases[l] * w[l];
    return out;
}

void DIAConfig::validate() const {
    if (lambda < 0.0) throw ConfigError("DIAConfig: lambda must be >= 0");
    if (step && !(*step > 0.0)) throw ConfigError("DIAConfig: step must be > 0");
    if (iters < 1) throw ConfigError("DIAConfig: iters must be >= 1");
    if (power_mode != PowerMode::Regularized && !(power_cap >= 0.0))
        throw ConfigError("DIAConfig: power_cap must be >= 0");
    if (tol < 0.0) throw ConfigError("DIAConfig: tol must be >= 0");
}

namespace {

double norm2(std::span<const Complex> v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return s;
}

void project_power(CVec& w, PowerMode mode, double cap) {
    if (mode == PowerMode::TotalCap) {
        const double p = norm2(w);
        if (p > cap) {
            const double scale = std::sqrt(cap / p);
            for (auto& x : w) x *= scale;
        }
    } else if (mode == PowerMode::PerLookCap) {
        const double max_mag = std::sqrt(cap);
        for (auto& x : w) {
            const double m = std::abs(x);
            if (m > max_mag) x *= max_mag / m;
        }
    }
}

struct DiaProblem {
    const ReconstructorSpec& spec;
    const PropagationOperator& H;
    const MeasurementVector& y_clean;
    const InjectionOperator& D;
    const ReflectivityImage& target;
    double lambda;

    // objective and residual cotangent at w
    double objective(const CVec& w, ReflectivityImage* residual_out = nullptr) const {
        const MeasurementVector y = inject(y_clean, D, w);
        const Reconstruction rec = reconstruct(spec, H, y);
        double obj = lambda * norm2(w);
        ReflectivityImage resid(H.image());
        for (std::size_t i = 0; i < resid.values.size(); ++i) {
            resid.values[i] = rec.image.values[i] - target.values[i];
            obj += std::norm(resid.values[i]);
        }
        if (residual_out) *residual_out = std::move(resid);
        return obj;
    }

    // Wirtinger gradient 2*(D^H vjp(residual) + lambda*w)
    CVec gradient(const CVec& w, const ReflectivityImage& residual) const {
        const MeasurementVector y = inject(y_clean, D, w);
        const MeasurementVector g_y = vjp(spec, H, y, residual);
        CVec g(w.size());
        for (std::size_t l = 0; l < w.size(); ++l)
            g[l] = 2.0 * (std::conj(D.phases[l]) * g_y.values[l] + lambda * w[l]);
        return g;
    }
};

// ||G o D|| estimated by power iteration; D is unitary-diagonal so this is
// the Lipschitz driver for the quadratic objective of linear variants.
double attack_channel_norm(const ReconstructorSpec& spec, const PropagationOperator& H,
                           const InjectionOperator& D, std::uint64_t seed) {
    Rng rng(seed ^ 0xA77ACull);
    CVec w(H.looks());
    double nw = 0.0;
    for (auto& x : w) {
        x = rng.complex_gaussian(1.0);
        nw += std::norm(x);
    }
    nw = std::sqrt(nw);
    for (auto& x : w) x /= nw;

    MeasurementVector zero_y(H.aperture());
    double sigma = 0.0;
    for (int it = 0; it < 100; ++it) {
        const MeasurementVector dw = inject(zero_y, D, w);
        const Reconstruction rec = reconstruct(spec, H, dw);
        const MeasurementVector g_y = vjp(spec, H, dw, rec.image);
        CVec next(w.size());
        double nn = 0.0;
        for (std::size_t l = 0; l < w.size(); ++l) {
            next[l] = std::conj(D.phases[l]) * g_y.values[l];
            nn += std::norm(next[l]);
        }
        nn = std::sqrt(nn);
        if (nn == 0.0) return 0.0;
        const double estimate = std::sqrt(nn);
        for (std::size_t l = 0; l < w.size(); ++l) w[l] = next[l] / nn;
        if (sigma > 0.0 && std::abs(estimate - sigma) <= 1e-3 * sigma) return estimate;
        sigma = estimate;
    }
    return sigma;
}

}  // namespace

AttackResult dia_optimize(const DIAConfig& cfg, const ReconstructorSpec& spec,
                          const PropagationOperator& H, const MeasurementVector& y_clean,
                          const InjectionOperator& D) {
    cfg.validate();
    spec.validate();
    if (cfg.target.grid != H.image())
        throw ShapeError("dia_optimize: target image grid mismatch");

    const double lambda = cfg.power_mode == PowerMode::Regularized ? cfg.lambda : 0.0;
    DiaProblem prob{spec, H, y_clean, D, cfg.target, lambda};

    const std::size_t L = H.looks();
    CVec w(L, Complex{});

    double step;
    const bool fixed_step = spec.is_linear();
    if (cfg.step) {
        step = *cfg.step;
    } else if (fixed_step) {
        const double sigma = attack_channel_norm(spec, H, D, cfg.seed);
        const double lipschitz = 2.0 * (sigma * sigma + lambda);
        if (lipschitz <= 0.0) throw NumericError("dia_optimize: zero Lipschitz estimate");
        step = 0.9 / lipschitz;
    } else {
        const double hn = H.norm_estimate();
        step = 0.9 / (2.0 * (hn * hn + lambda + 1.0));
    }

    AttackResult result;
    ReflectivityImage residual(H.image());
    double obj = prob.objective(w, &residual);
    result.objective_trace.push_back(obj);

    int rises = 0;
    for (int it = 0; it < cfg.iters; ++it) {
        const CVec grad = prob.gradient(w, residual);

        double accepted_obj = obj;
        CVec w_next = w;
        if (fixed_step) {
            for (std::size_t l = 0; l < L; ++l) w_next[l] = w[l] - step * grad[l];
            project_power(w_next, cfg.power_mode, cfg.power_cap);
            accepted_obj = prob.objective(w_next, &residual);
            if (accepted_obj > obj) {
                if (++rises >= 10)
                    throw StepSizeError(
                        "dia_optimize: objective rose for 10 consecutive steps (step size " +
                        std::to_string(step) + ")");
            } else {
                rises = 0;
            }
        } else {
            // Line search: backtracking halving with a 20-trial cap to find an
            // Armijo-acceptable step, then greedy doubling while the objective
            // keeps falling. The doubling phase makes the search robust to a
            // far-too-small initial scale (the unrolled channel's gain is not
            // known in advance).
            const auto try_step = [&](double s, CVec& w_out, ReflectivityImage& resid_out,
                                      double& moved2) {
                for (std::size_t l = 0; l < L; ++l) w_out[l] = w[l] - s * grad[l];
                project_power(w_out, cfg.power_mode, cfg.power_cap);
                moved2 = 0.0;
                for (std::size_t l = 0; l < L; ++l) moved2 += std::norm(w_out[l] - w[l]);
                return prob.objective(w_out, &resid_out);
            };

            bool accepted = false;
            double trial_step = 2.0 * step;
            ReflectivityImage trial_resid(H.image());
            double trial_obj = obj;
            for (int trial = 0; trial < 20; ++trial) {
                double moved2 = 0.0;
                trial_obj = try_step(trial_step, w_next, trial_resid, moved2);
                if (moved2 == 0.0) break;
                if (trial_obj < obj - 1e-4 * moved2 / trial_step) {
                    accepted = true;
                    break;
                }
                trial_step *= 0.5;
            }
            if (!accepted) break;  // no descent at machine scale: converged

            CVec w_grow(L);
            ReflectivityImage grow_resid(H.image());
            for (int grow = 0; grow < 60; ++grow) {
                double moved2 = 0.0;
                const double grow_obj = try_step(2.0 * trial_step, w_grow, grow_resid, moved2);
                if (!(grow_obj < trial_obj)) break;
                trial_step *= 2.0;
                trial_obj = grow_obj;
                std::swap(w_next, w_grow);
                std::swap(trial_resid, grow_resid);
            }
            accepted_obj = trial_obj;
            residual = std::move(trial_resid);
            step = trial_step;
        }

        w = std::move(w_next);
        const double prev = obj;
        obj = accepted_obj;
        result.objective_trace.push_back(obj);

        if (obj < 1e-15) break;  // exact-hit tie-break
        if (prev > 0.0 && (prev - obj) >= 0.0 && (prev - obj) < cfg.tol * prev) break;
    }

    result.w = std::move(w);
    result.adv_image = reconstruct(spec, H, inject(y_clean, D, result.w)).image;
    result.power_ratio = norm2(result.w);
    return result;
}

CVec closed_form_oracle(const ReconstructorSpec& spec, const PropagationOperator& H,
                        const MeasurementVector& y_clean, const InjectionOperator& D,
                        const ReflectivityImage& target, double lambda) {
    spec.validate();
    if (!spec.is_linear())
        throw UnsupportedVariantError("closed_form_oracle: only linear reconstructors");
    if (target.grid != H.image()) throw ShapeError("closed_form_oracle: target grid mismatch");

    const std::size_t L = H.looks();
    const MeasurementVector zero_y(H.aperture());

    const auto apply_A = [&](const CVec& w) {
        return reconstruct(spec, H, inject(zero_y, D, w)).image;
    };
    const auto apply_At = [&](const ReflectivityImage& img) {
        const MeasurementVector g_y = vjp(spec, H, zero_y, img);
        CVec out(L);
        for (std::size_t l = 0; l < L; ++l) out[l] = std::conj(D.phases[l]) * g_y.values[l];
        return out;
    };
    const auto apply_normal = [&](const CVec& w) {
        CVec out = apply_At(apply_A(w));
        for (std::size_t l = 0; l < L; ++l) out[l] += lambda * w[l];
        return out;
    };

    // rhs = A^H (target - G y_clean)
    const Reconstruction clean_rec = reconstruct(spec, H, y_clean);
    ReflectivityImage gap(H.image());
    for (std::size_t i = 0; i < gap.values.size(); ++i)
        gap.values[i] = target.values[i] - clean_rec.image.values[i];
    const CVec rhs = apply_At(gap);

    // Conjugate gradient on the Hermitian positive (semi)definite system.
    CVec w(L, Complex{});
    CVec r = rhs;
    CVec p = r;
    double rs = norm2(r);
    const double rhs_norm = std::sqrt(norm2(rhs));
    if (rhs_norm == 0.0) return w;
    const std::size_t max_iter = 10 * L;
    for (std::size_t it = 0; it < max_iter; ++it) {
        if (std::sqrt(rs) <= 1e-10 * rhs_norm) break;
        const CVec ap = apply_normal(p);
        Complex p_ap{};
        for (std::size_t l = 0; l < L; ++l) p_ap += std::conj(p[l]) * ap[l];
        const double denom = p_ap.real();
        if (denom <= 0.0) break;
        const double alpha = rs / denom;
        for (std::size_t l = 0; l < L; ++l) {
            w[l] += alpha * p[l];
            r[l] -= alpha * ap[l];
        }
        const double rs_next = norm2(r);
        const double beta = rs_next / rs;
        for (std::size_t l = 0; l < L; ++l) p[l] = r[l] + beta * p[l];
        rs = rs_next;
    }
    return w;
}

AttackResult strategy_conceal(const DIAConfig& base, const ReconstructorSpec& spec,
                              const PropagationOperator& H, const MeasurementVector& y_clean,
                              const InjectionOperator& D) {
    DIAConfig cfg = base;
    cfg.target = ReflectivityImage(H.image());  // all-zero target
    return dia_optimize(cfg, spec, H, y_clean, D);
}

AttackResult strategy_swap(const DIAConfig& base, const ReconstructorSpec& spec,
                           const PropagationOperator& H, const MeasurementVector& y_clean,
                           const InjectionOperator& D, const Scene& sensed_scene,
                           const Scene& swap_scene) {
    if (sensed_scene == swap_scene)
        throw ConfigError("strategy_swap: swap scene equals the sensed scene");
    Rng rng(base.seed ^ 0x5AAFull);
    const MeasurementVector y_swap = synthesize_measurements(H, swap_scene, std::nullopt, rng);
    DIAConfig cfg = base;
    cfg.target = reconstruct(spec, H, y_swap).image;
    return dia_optimize(cfg, spec, H, y_clean, D);
}

AttackResult strategy_random(double power, const ReconstructorSpec& spec,
                             const PropagationOperator& H, const MeasurementVector& y_clean,
                             const InjectionOperator& D, Rng& rng) {
    if (power < 0.0) throw ConfigError("strategy_random: power must be >= 0");
    const std::size_t L = H.looks();
    CVec w(L);
    const double mag = std::sqrt(power / static_cast<double>(L));
    for (auto& x : w) {
        const double phi = rng.uniform_phase();
        x = Complex{mag * std::cos(phi), mag * std::sin(phi)};
    }
    // Rescale so ||w||^2 lands on the requested power to the last ulp.
    for (int polish = 0; polish < 4; ++polish) {
        const double p = norm2(w);
        if (p == power || p == 0.0) break;
        const double s = std::sqrt(power / p);
        for (auto& x : w) x *= s;
    }

    AttackResult result;
    result.w = std::move(w);
    result.adv_image = reconstruct(spec, H, inject(y_clean, D, result.w)).image;
    result.power_ratio = norm2(result.w);
    return result;
}

}  // namespace mmwsar
