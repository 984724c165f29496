#pragma once

#include "agl/discretization.hpp"

namespace agl {

/**
 * @brief Sampled vortex profile f0 with derivatives.
 *
 * kernel_s, kernel_t hold the discrete translation mode, i.e. the grid
 * functions that play the role of (f0', f0/r) in the mode-one kernel pair
 * (S - T, S + T). They agree with the samples up to O(h^2) but annihilate the
 * discrete A1 operator exactly.
 */
template <typename Scalar>
struct Profile {
    RadialGrid<Scalar> grid;
    Vec<Scalar> f, df, ddf;
    Vec<Scalar> kernel_s, kernel_t;
    Scalar origin_slope{};
    Scalar far_field_value{};  // 1 - 1/(2R^2), imposed at r_max
    Scalar residual_norm{};
    int iterations = 0;
};

struct ProfileOptions {
    int max_iter = 50;
};

// Newton solve of f'' + f'/r - f/r^2 + (1 - f^2) f = 0. The residual is
// measured per node relative to the magnitude of the stencil terms.
template <typename Scalar>
Profile<Scalar> solve_profile(const RadialGrid<Scalar>& grid, Scalar tol, ProfileOptions opts = {});

template <typename Scalar>
struct ValidationReport {
    bool monotone = false;
    bool in_range = false;
    bool ratio_bound = false;        // 0 < r f'/f < 1
    Scalar boundary_defect{};        // |f(R) - 1 + 1/(2R^2)|, zero by construction
    Scalar matching_radius{};        // largest node <= R/2
    Scalar far_field_defect{};       // same defect at the matching radius
    Scalar far_field_scaled{};       // matching_radius^4 * far_field_defect
    bool ok() const { return monotone && in_range && ratio_bound; }
};

template <typename Scalar>
ValidationReport<Scalar> validate_profile(const Profile<Scalar>& p);

// f(r) = f0((1 + delta)^(-1/2) r) on the same grid.
template <typename Scalar>
Profile<Scalar> rescaled_profile(const Profile<Scalar>& p, Scalar delta);

// Monotone cubic (Fritsch-Carlson) interpolation of samples y on x.
template <typename Scalar>
Scalar pchip(const Vec<Scalar>& x, const Vec<Scalar>& y, Scalar at);

// Minimum-norm correction of (s, t) that annihilates the interior rows of the
// discrete A1 operator written in (sigma, tau) variables.
template <typename Scalar>
void discrete_translation_mode(const RadialGrid<Scalar>& grid, const Vec<Scalar>& f,
                               const Vec<Scalar>& s, const Vec<Scalar>& t, Vec<Scalar>& s_out,
                               Vec<Scalar>& t_out);

}  // namespace agl
