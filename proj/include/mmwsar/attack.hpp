#pragma once

#include <optional>

#include "mmwsar/imaging.hpp"

namespace mmwsar {

/// Diagonal measurement-domain injection map: attack weights w enter the
/// measurements as w_l * e^{j*2*k*R(r'_l, r_A)}, with R the equivalent
/// one-way distance |r_A - rx_l| / 2 of the attacker-to-receiver path.
struct InjectionOperator {
    ApertureGrid aperture;
    Vec3 attacker;
    CVec phases;  // unit modulus, length L

    static InjectionOperator make(const RadarConfig& cfg, const ApertureGrid& grid,
                                  const Vec3& attacker);
};

/// y + diag(phases) * w.
MeasurementVector inject(const MeasurementVector& y, const InjectionOperator& D,
                         std::span<const Complex> w);

enum class PowerMode { Regularized, TotalCap, PerLookCap };

struct DIAConfig {
    ReflectivityImage target;
    double lambda = 1e-6;              // power regularization weight
    std::optional<double> step;        // gradient step; auto when unset
    int iters = 300;
    PowerMode power_mode = PowerMode::Regularized;
    double power_cap = 0.0;            // total or per-look bound for cap modes
    double tol = 1e-9;                 // relative objective-decrease stop
    std::uint64_t seed = 0;

    void validate() const;
};

struct AttackResult {
    CVec w;
    ReflectivityImage adv_image;
    std::vector<double> objective_trace;
    double power_ratio = 0.0;  // P_a / P_s = ||w||^2
};

/// Wirtinger gradient descent on
///   ||reconstruct(y + Dw) - target||^2 + lambda ||w||^2
/// from w = 0. Cap modes drop the lambda term and project onto the power
/// ball after every step. Linear variants use a fixed step
/// (0.9 / Lipschitz, power-iteration estimate); unrolled variants use
/// backtracking halving with a 20-trial cap. Throws StepSizeError when the
/// fixed-step objective rises over 10 consecutive iterations.
AttackResult dia_optimize(const DIAConfig& cfg, const ReconstructorSpec& spec,
                          const PropagationOperator& H, const MeasurementVector& y_clean,
                          const InjectionOperator& D);

/// Closed-form Tikhonov solution of the same problem for linear
/// reconstructors, via conjugate gradient on the normal equations
/// (A^H A + lambda I) w = A^H (target - G y_clean), A = G o D.
/// CG tolerance 1e-10, iteration cap 10*L. Throws UnsupportedVariantError
/// for CSA/RMIST.
CVec closed_form_oracle(const ReconstructorSpec& spec, const PropagationOperator& H,
                        const MeasurementVector& y_clean, const InjectionOperator& D,
                        const ReflectivityImage& target, double lambda);

/// DIA with an all-zero target image.
AttackResult strategy_conceal(const DIAConfig& base, const ReconstructorSpec& spec,
                              const PropagationOperator& H, const MeasurementVector& y_clean,
                              const InjectionOperator& D);

/// DIA with another scene's clean reconstruction as the target. Throws
/// ConfigError when the swap scene equals the sensed scene.
AttackResult strategy_swap(const DIAConfig& base, const ReconstructorSpec& spec,
                           const PropagationOperator& H, const MeasurementVector& y_clean,
                           const InjectionOperator& D, const Scene& sensed_scene,
                           const Scene& swap_scene);

/// Unoptimized weights w_l = sqrt(P/L) e^{j phi_l}, phi ~ U[0, 2pi), rescaled
/// so ||w||^2 = P.
AttackResult strategy_random(double power, const ReconstructorSpec& spec,
                             const PropagationOperator& H, const MeasurementVector& y_clean,
                             const InjectionOperator& D, Rng& rng);

}  // namespace mmwsar
