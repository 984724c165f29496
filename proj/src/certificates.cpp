#include "agl/certificates.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace agl {

template <typename Scalar>
PositiveDeltaWitness<Scalar> positive_delta_certificate(const Profile<Scalar>& p, Scalar delta, int dilation,
                                                        PositiveDeltaOptions opts) {
    using std::exp, std::log, std::sin, std::sqrt;
    if (!(delta > 0 && delta < 1)) throw ParameterError("positive_delta_certificate: need 0 < delta < 1");
    if (dilation < 1) throw ParameterError("positive_delta_certificate: dilation must be >= 1");
    const Scalar pi = std::numbers::pi_v<Scalar>;

    PositiveDeltaWitness<Scalar> out;
    out.delta = delta;
    out.dilation = dilation;
    out.lambda = delta / (1 - delta);
    const Scalar sl = sqrt(out.lambda);
    out.support_lo = Scalar(dilation);
    out.support_hi = Scalar(dilation) * exp(pi / sl);
    out.analytic_limit = -pi / 2 * sqrt(delta * (1 - delta));

    const Scalar top = Scalar(opts.growth) * out.support_hi;
    const Scalar per_log = Scalar(p.grid.size() - 1) / log(p.grid.r_max / p.grid.r_min);
    const Scalar need = per_log * log(std::max(top, p.grid.r_max) / p.grid.r_min);
    if (!std::isfinite(need) || need > Scalar(opts.max_nodes))
        throw ParameterError("positive_delta_certificate: support up to r = " + std::to_string(double(out.support_hi)) +
                             " needs too many nodes; use a smaller dilation");

    out.grid = extended_grid(p.grid, top, std::vector<Scalar>{out.support_lo, out.support_hi});
    const Profile<Scalar> pe = solve_profile(out.grid, Scalar(opts.profile_tol));
    out.chi = Vec<Scalar>::Zero(out.grid.size());
    for (Eigen::Index i = 0; i < out.grid.size(); ++i) {
        const Scalar r = out.grid.nodes(i);
        if (r > out.support_lo && r < out.support_hi) out.chi(i) = sin(sl * log(r / out.support_lo));
    }
    const Vec<Scalar> zero = Vec<Scalar>::Zero(out.grid.size());
    out.form_value = eval_Q0(pe, delta, zero, Vec<Scalar>(pe.f.cwiseProduct(out.chi))).total;
    return out;
}

template <typename Scalar>
Vec<Scalar> alpha_samples(const Profile<Scalar>& p, Scalar delta, int n) {
    if (n < 2) throw ParameterError("alpha_samples: need n >= 2");
    const Scalar d = delta, N = Scalar(n);
    const auto f = p.f.array(), df = p.df.array(), ddf = p.ddf.array();
    const auto q = f / p.grid.nodes.array();
    return ((1 - d) * (N + 1) * df.square() + (1 + d) * (N + 1) * q.square() - Scalar(2) * (2 + d) * df * q +
            Scalar(2) * d * df.square() - Scalar(2) * d * f * ddf)
        .matrix();
}

namespace {

template <typename Scalar>
struct WindowStats {
    Scalar r0{}, mean{}, max{};
};

// Unit windows [r0, r0 + 1] with r0 on a 0.05 lattice; node trapezoid mean of alpha.
template <typename Scalar>
std::vector<WindowStats<Scalar>> scan_windows(const RadialGrid<Scalar>& g, const Vec<Scalar>& alpha) {
    std::vector<WindowStats<Scalar>> out;
    const auto& r = g.nodes;
    const Scalar step = Scalar(0.05);
    Eigen::Index lo = 0;
    for (long k = long(std::ceil(g.r_min / step)); k * step + 1 <= g.r_max; ++k) {
        const Scalar r0 = k * step, r1 = r0 + 1;
        while (lo < g.size() && r(lo) < r0) ++lo;
        Eigen::Index hi = lo;
        while (hi + 1 < g.size() && r(hi + 1) <= r1) ++hi;
        if (hi <= lo) continue;
        Scalar integral = 0, mx = alpha(lo);
        for (Eigen::Index i = lo; i < hi; ++i) {
            integral += (r(i + 1) - r(i)) * (alpha(i) + alpha(i + 1)) / 2;
            mx = std::max(mx, alpha(i + 1));
        }
        out.push_back({r0, integral / (r(hi) - r(lo)), mx});
    }
    return out;
}

}  // namespace

template <typename Scalar>
HighModeAttempt<Scalar> high_mode_certificate(const Profile<Scalar>& p, Scalar delta, int n) {
    using std::sin;
    if (n < 2) throw ParameterError("high_mode_certificate: need n >= 2");
    if (!(delta > -1)) throw ParameterError("high_mode_certificate: need delta > -1");
    HighModeAttempt<Scalar> out;
    if (delta > -1 / std::sqrt(Scalar(5))) {
        out.diagnostic = "not attempted: delta above -1/sqrt(5)";
        return out;
    }
    const auto& g = p.grid;
    const Vec<Scalar> alpha = alpha_samples(p, delta, n);
    const auto windows = scan_windows(g, alpha);
    Scalar most_negative = 0;
    for (const auto& w : windows) most_negative = std::min(most_negative, w.mean);
    if (!(most_negative < 0)) {
        out.diagnostic = "no unit window with negative mean of alpha";
        return out;
    }
    out.epsilon = -most_negative / 2;
    const WindowStats<Scalar>* best = nullptr;
    for (const auto& w : windows)
        if (w.max <= -out.epsilon && (!best || w.mean < best->mean)) best = &w;
    if (!best) {
        out.diagnostic = "no unit window with max alpha <= -epsilon";
        return out;
    }
    out.window_found = true;
    out.r0 = best->r0;

    const Scalar pi = std::numbers::pi_v<Scalar>;
    Vec<Scalar> zeta = Vec<Scalar>::Zero(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        const Scalar x = g.nodes(i) - out.r0;
        if (x > 0 && x < 1) zeta(i) = sin(pi * x) * sin(pi * x);
    }
    out.form_value = eval_Bn_direct(p, FormParams<Scalar>{delta, n}, zeta, zeta);

    const Vec<Scalar> dz = differentiate(g, zeta);
    const auto q = p.f.array() / g.nodes.array();
    out.C1 = integrate(g, Vec<Scalar>(((1 - delta) * q.square() + (1 + delta) * p.df.array().square()) *
                                       dz.array().square()));
    out.C2 = g.weights_r2.dot(zeta.cwiseAbs2());
    out.bound = out.C1 - Scalar(n - 1) * out.epsilon * out.C2;

    if (out.form_value < 0) {
        out.witness = HighModeWitness<Scalar>{delta, n, out.r0, out.r0 + 1, out.epsilon, zeta, out.form_value};
        out.diagnostic = "negative";
    } else {
        out.diagnostic = "window found but form value is nonnegative";
    }
    return out;
}

template <typename Scalar>
std::optional<UnstableMode<Scalar>> find_unstable_mode(const Profile<Scalar>& p, Scalar delta, int n_limit) {
    if (!(delta > -1 && delta < 0)) throw ParameterError("find_unstable_mode: need -1 < delta < 0");
    for (int n = 2; n <= n_limit; ++n) {
        auto attempt = high_mode_certificate(p, delta, n);
        if (attempt.witness) return UnstableMode<Scalar>{n, *attempt.witness};
    }
    return std::nullopt;
}

template PositiveDeltaWitness<double> positive_delta_certificate<double>(const Profile<double>&, double, int,
                                                                         PositiveDeltaOptions);
template Vec<double> alpha_samples<double>(const Profile<double>&, double, int);
template HighModeAttempt<double> high_mode_certificate<double>(const Profile<double>&, double, int);
template std::optional<UnstableMode<double>> find_unstable_mode<double>(const Profile<double>&, double, int);

}  // namespace agl
