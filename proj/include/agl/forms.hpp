#pragma once

#include <Eigen/Sparse>

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <random>
#include <vector>

#include "agl/profile.hpp"

namespace agl {

template <typename Scalar>
struct FormParams {
    Scalar delta{};
    int n = 0;
};

template <typename Scalar>
void check_params(const FormParams<Scalar>& params);

// Real tracks (phi, psi) of a mode n >= 1, or (Re, Im) of a mode-0 function.
template <typename Scalar>
struct ModePair {
    Vec<Scalar> phi, psi;
};

template <typename Scalar>
struct FormBreakdown {
    Scalar total{};
    Scalar gradient_term{};
    Scalar anisotropic_term{};
    Scalar potential_term{};
};

/**
 * @brief Two-track quadratic form in staggered layout.
 *
 *   sum_c omega_c d_c^T G d_c + sum_c h_c abar_c^T C d_c
 *     + sum_i v_i x_i^T R x_i + sum_i w_i x_i^T P_i x_i
 *
 * with d_c the cell difference quotients, abar_c the cell averages, v the
 * 1/r^2 weights and w the plain node weights. P_i is symmetric and given by
 * its three entries per node.
 */
template <typename Scalar>
struct StaggeredForm {
    Eigen::Matrix<Scalar, 2, 2> G = Eigen::Matrix<Scalar, 2, 2>::Zero();
    Eigen::Matrix<Scalar, 2, 2> C = Eigen::Matrix<Scalar, 2, 2>::Zero();
    Eigen::Matrix<Scalar, 2, 2> R = Eigen::Matrix<Scalar, 2, 2>::Zero();
    Vec<Scalar> p00, p01, p11;  // empty means zero
};

template <typename Scalar>
Scalar evaluate(const RadialGrid<Scalar>& grid, const StaggeredForm<Scalar>& form, const Vec<Scalar>& a,
                const Vec<Scalar>& b);

// Symmetric Gram matrix on interleaved unknowns (a_0, b_0, a_1, b_1, ...).
template <typename Scalar>
Eigen::SparseMatrix<Scalar> assemble(const RadialGrid<Scalar>& grid, const StaggeredForm<Scalar>& form);

// The three parts of Q0 (tracks u, v) and Qn (tracks phi, psi).
template <typename Scalar>
struct FormParts {
    StaggeredForm<Scalar> gradient, anisotropic, potential;
};

template <typename Scalar>
FormParts<Scalar> q0_parts(const Profile<Scalar>& p, Scalar delta);

template <typename Scalar>
FormParts<Scalar> qn_parts(const Profile<Scalar>& p, const FormParams<Scalar>& params);

template <typename Scalar>
FormBreakdown<Scalar> eval_Q0(const Profile<Scalar>& p, Scalar delta, const Vec<Scalar>& u, const Vec<Scalar>& v);

template <typename Scalar>
FormBreakdown<Scalar> eval_Qn(const Profile<Scalar>& p, const FormParams<Scalar>& params, const ModePair<Scalar>& pair);

template <typename Scalar>
Scalar eval_A0(const Profile<Scalar>& p, const Vec<Scalar>& u, const Vec<Scalar>& v);

template <typename Scalar>
Scalar eval_A1(const Profile<Scalar>& p, const ModePair<Scalar>& pair);

// (S zeta - T eta, S zeta + T eta) with (S, T) the discrete translation mode.
template <typename Scalar>
ModePair<Scalar> ansatz_pair(const Profile<Scalar>& p, const Vec<Scalar>& zeta, const Vec<Scalar>& eta);

template <typename Scalar>
ModePair<Scalar> kernel_pair(const Profile<Scalar>& p);

template <typename Scalar>
Scalar eval_Bn_direct(const Profile<Scalar>& p, const FormParams<Scalar>& params, const Vec<Scalar>& zeta,
                      const Vec<Scalar>& eta);

template <typename Scalar>
struct BnFormula {
    Scalar total{}, B1{}, B2{};
    Scalar integrals[4]{};
};

template <typename Scalar>
BnFormula<Scalar> eval_Bn_formula(const Profile<Scalar>& p, const FormParams<Scalar>& params,
                                  const Vec<Scalar>& zeta, const Vec<Scalar>& eta);

template <typename Scalar>
struct QnCoeffs {
    Scalar a{}, b{}, c{};
    bool interpolated = false;
};

template <typename Scalar>
QnCoeffs<Scalar> qn_coeffs(Scalar delta, int n, Scalar r, const Profile<Scalar>& p);

enum class Identity { Q0_A0, Q1_A1, Qn_Q1, A0_dec, A1_dec };

const char* identity_name(Identity which);

enum class InputKind { complex_track, pair, ansatz };

// complex_track: (a, b) = (Re, Im); pair: (phi, psi); ansatz: (zeta, eta).
template <typename Scalar>
struct IdentityInput {
    InputKind kind = InputKind::pair;
    Vec<Scalar> a, b;
};

template <typename Scalar>
struct IdentityGap {
    Scalar lhs{}, rhs{}, gap{};
    Scalar norm{};  // squared energy norm of the form argument
    Scalar relative() const { return norm > 0 ? gap / norm : gap; }
};

template <typename Scalar>
IdentityGap<Scalar> identity_gap(const Profile<Scalar>& p, Scalar delta, int n, const IdentityInput<Scalar>& input,
                                 Identity which);

// Smooth random function vanishing at both grid ends: a short sine series in
// log r with normally distributed coefficients.
template <typename Scalar, typename Rng>
Vec<Scalar> random_test_function(const RadialGrid<Scalar>& grid, Rng& rng, int terms = 6) {
    std::normal_distribution<double> nd;
    std::vector<Scalar> c(terms);
    for (auto& x : c) x = Scalar(nd(rng));
    const Scalar span = std::log(grid.r_max / grid.r_min);
    Vec<Scalar> g(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const Scalar t = std::log(grid.nodes(i) / grid.r_min) / span;
        Scalar v = 0;
        for (int k = 0; k < terms; ++k) v += c[k] * std::sin(Scalar(k + 1) * std::numbers::pi_v<Scalar> * t);
        g(i) = v;
    }
    g(0) = 0;
    g(grid.size() - 1) = 0;
    return g;
}

template <typename Scalar>
struct IdentityRecord {
    Identity which{};
    Scalar delta{};
    int n = 0;
    int sample = 0;
    IdentityGap<Scalar> gap;
};

// All five identities over seeded random inputs. Qn_Q1 runs for every n in
// modes; the others use n = 1.
template <typename Scalar>
std::vector<IdentityRecord<Scalar>> identity_suite(const Profile<Scalar>& p, const std::vector<Scalar>& deltas,
                                                   const std::vector<int>& modes, int samples, unsigned seed);

// Squared discrete energy norm  int (a'^2 + b'^2) + (a^2 + b^2)(1/r^2 + 1) r dr.
template <typename Scalar>
Scalar energy_norm2(const RadialGrid<Scalar>& grid, const Vec<Scalar>& a, const Vec<Scalar>& b);

template <typename Scalar>
using CVec = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

// Coefficients w_n (plus) and w_{-n} (minus); minus is ignored for n = 0.
template <typename Scalar>
struct ComplexMode {
    CVec<Scalar> plus, minus;
};

template <typename Scalar>
Scalar eval_full2d(const Profile<Scalar>& p, Scalar delta, const std::map<int, ComplexMode<Scalar>>& modes,
                   int angular_nodes = 0);

// 2*pi times the sum of mode forms for the same input, via the real splitting.
template <typename Scalar>
Scalar mode_sum(const Profile<Scalar>& p, Scalar delta, const std::map<int, ComplexMode<Scalar>>& modes);

template <typename Scalar>
struct CartesianField {
    Scalar x0{}, y0{}, hx{}, hy{};
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> u1, u2;  // rows index y, columns index x
};

template <typename Scalar>
Scalar pointwise_anisotropy_identity(const CartesianField<Scalar>& field);

}  // namespace agl
