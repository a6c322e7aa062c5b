#pragma once

#include <string>
#include <vector>

#include "mmwsar/forward.hpp"

namespace mmwsar {

enum class Variant { BPA, RMA, MFA, CSA, RMIST };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

/// RMA/MFA precondition: equal counts and pitches, aligned origins.
bool grids_coincident(const ApertureGrid& aperture, const ImageGrid& image);

/// Reconstructor selection plus the iterative-solver knobs.
///
/// mu and theta are per-iteration schedules: empty mu means "auto"
/// (0.9 / ||H||^2 from power iteration), a single value is held constant,
/// otherwise the schedule length must equal iters. CSA derives its threshold
/// from lambda_reg (theta_k = mu_k * lambda_reg); RMIST takes theta directly.
struct ReconstructorSpec {
    Variant variant = Variant::BPA;
    double lambda_reg = 0.0;
    std::vector<double> mu;
    std::vector<double> theta;
    int iters = 50;
    bool evanescent_cutoff = true;

    bool is_linear() const {
        return variant == Variant::BPA || variant == Variant::RMA || variant == Variant::MFA;
    }
    bool is_unrolled() const { return !is_linear(); }
    void validate() const;
};

struct Reconstruction {
    ReflectivityImage image;
    ReconstructorSpec spec;  // with schedules materialized
    std::vector<double> diagnostics;  // per-iteration objective (iterative variants)
};

/// Complex soft threshold: x * max(|x| - theta, 0) / |x|, 0 at x = 0.
Complex soft_threshold(Complex x, double theta);

Reconstruction reconstruct(const ReconstructorSpec& spec, const PropagationOperator& H,
                           const MeasurementVector& y);

/// Vector-Jacobian product of reconstruct with respect to y, in the Wirtinger
/// sense: returns the measurement-space gradient contribution for an
/// image-space cotangent. Linear variants use their exact adjoints; unrolled
/// variants back-propagate through the stored recursion with the
/// soft-threshold's almost-everywhere derivative (0 inside the dead zone).
MeasurementVector vjp(const ReconstructorSpec& spec, const PropagationOperator& H,
                      const MeasurementVector& y, const ReflectivityImage& cotangent);

}  // namespace mmwsar
