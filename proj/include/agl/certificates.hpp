#pragma once

#include <optional>
#include <string>

#include "agl/forms.hpp"

namespace agl {

/**
 * @brief Dilated log-sine test function for the n = 0 mode at delta > 0.
 *
 * chi(r) = sin(sqrt(lambda) ln(r / n_d)) on [n_d, n_d e^{pi/sqrt(lambda)}], zero
 * elsewhere. It lives on its own extended grid, with the profile re-solved there.
 */
template <typename Scalar>
struct PositiveDeltaWitness {
    Scalar delta{};
    Scalar lambda{};  // delta / (1 - delta)
    int dilation = 1;
    Scalar support_lo{}, support_hi{};
    RadialGrid<Scalar> grid;
    Vec<Scalar> chi;
    Scalar form_value{};
    Scalar analytic_limit{};  // -(pi/2) sqrt(delta (1 - delta))
};

struct PositiveDeltaOptions {
    double growth = 1.1;                // grid reaches growth * support end
    long max_nodes = 1L << 22;          // refuse grids larger than this
    double profile_tol = 1e-10;
};

template <typename Scalar>
PositiveDeltaWitness<Scalar> positive_delta_certificate(const Profile<Scalar>& p, Scalar delta, int dilation,
                                                        PositiveDeltaOptions opts = {});

template <typename Scalar>
Vec<Scalar> alpha_samples(const Profile<Scalar>& p, Scalar delta, int n);

template <typename Scalar>
struct HighModeWitness {
    Scalar delta{};
    int n = 0;
    Scalar r0{}, r1{};  // window [r0, r0 + 1]
    Scalar epsilon{};
    Vec<Scalar> zeta;   // sin^2 bump on the window, zero outside
    Scalar form_value{};
};

// Outcome of one certificate attempt; witness is set only when form_value < 0.
template <typename Scalar>
struct HighModeAttempt {
    std::optional<HighModeWitness<Scalar>> witness;
    bool window_found = false;
    Scalar r0{}, epsilon{};
    Scalar form_value{};
    Scalar C1{}, C2{};
    Scalar bound{};  // C1 - (n - 1) epsilon C2
    std::string diagnostic;
};

template <typename Scalar>
HighModeAttempt<Scalar> high_mode_certificate(const Profile<Scalar>& p, Scalar delta, int n);

template <typename Scalar>
struct UnstableMode {
    int n = 0;
    HighModeWitness<Scalar> witness;
};

template <typename Scalar>
std::optional<UnstableMode<Scalar>> find_unstable_mode(const Profile<Scalar>& p, Scalar delta, int n_limit);

}  // namespace agl
