#include "agl/profile.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace agl {

namespace {

template <typename Scalar>
using Sparse = Eigen::SparseMatrix<Scalar>;

// (K g)_i = sum over adjacent cells of (rho/h)(g_i - g_neighbour); the
// discrete version of -(r g')'.
template <typename Scalar>
Vec<Scalar> apply_k(const RadialGrid<Scalar>& grid, const Vec<Scalar>& g) {
    const Eigen::Index n = grid.size();
    Vec<Scalar> out = Vec<Scalar>::Zero(n);
    for (Eigen::Index c = 0; c + 1 < n; ++c) {
        const Scalar k = grid.rho(c) / grid.h(c);
        const Scalar flux = k * (g(c + 1) - g(c));
        out(c) -= flux;
        out(c + 1) += flux;
    }
    return out;
}

template <typename Scalar>
Vec<Scalar> apply_abs_k(const RadialGrid<Scalar>& grid, const Vec<Scalar>& g) {
    const Eigen::Index n = grid.size();
    Vec<Scalar> out = Vec<Scalar>::Zero(n);
    for (Eigen::Index c = 0; c + 1 < n; ++c) {
        const Scalar k = grid.rho(c) / grid.h(c);
        out(c) += k * (std::abs(g(c)) + std::abs(g(c + 1)));
        out(c + 1) += k * (std::abs(g(c)) + std::abs(g(c + 1)));
    }
    return out;
}

}  // namespace

template <typename Scalar>
Profile<Scalar> solve_profile(const RadialGrid<Scalar>& grid, Scalar tol, ProfileOptions opts) {
    if (!(tol > 0)) throw ParameterError("solve_profile: tol must be positive");
    if (grid.r_max < Scalar(20)) throw ParameterError("solve_profile: need r_max >= 20");
    if (grid.size() < 8) throw ParameterError("solve_profile: grid too small");

    const Eigen::Index n = grid.size();
    const auto& r = grid.nodes;
    const auto& w = grid.weights;
    const auto& v = grid.weights_r2;

    // Regular branch f = a (r - r^3/8) + O(r^5): f_0 is slaved to f_1. Leaving
    // the cubic coefficient free instead excites the singular 1/r solution.
    auto series = [](Scalar x) { return x - x * x * x / Scalar(8); };
    const Scalar kappa = series(r(0)) / series(r(1));

    Profile<Scalar> p;
    p.grid = grid;
    p.far_field_value = Scalar(1) - Scalar(1) / (Scalar(2) * grid.r_max * grid.r_max);
    Vec<Scalar> f = r.array() / (r.array().square() + Scalar(2)).sqrt();
    f(n - 1) = p.far_field_value;

    auto residual = [&](Vec<Scalar>& F) {
        f(0) = kappa * f(1);
        const Vec<Scalar> pot = ((Scalar(1) - f.array().square()) * f.array()).matrix();
        F = apply_k(grid, f) + v.cwiseProduct(f) - w.cwiseProduct(pot);
        // the potential is rounded as f - f^3, so its size counts as w (|f| + |f|^3)
        const Vec<Scalar> scale = apply_abs_k(grid, f) + v.cwiseProduct(f.cwiseAbs()) +
                                  w.cwiseProduct((f.array().abs() + f.array().abs().cube()).matrix());
        Scalar res = 0;
        for (Eigen::Index i = 1; i + 1 < n; ++i) res = std::max(res, std::abs(F(i)) / scale(i));
        return res;
    };

    const Eigen::Index m = n - 2;  // unknowns f_1 .. f_{n-2}
    Vec<Scalar> F;
    Scalar res = residual(F);
    int it = 0;
    // The relative residual can sit at rounding level while f is still off by
    // cond * eps on fine grids, so the stop is decided on the Newton update.
    Scalar prev_step = std::numeric_limits<Scalar>::infinity();
    for (; it < opts.max_iter; ++it) {
        std::vector<Eigen::Triplet<Scalar>> trip;
        trip.reserve(3 * m);
        for (Eigen::Index i = 1; i + 1 < n; ++i) {
            const Scalar kl = grid.rho(i - 1) / grid.h(i - 1);
            const Scalar kr = grid.rho(i) / grid.h(i);
            const Scalar diag = kl + kr + v(i) + w(i) * (Scalar(3) * f(i) * f(i) - Scalar(1));
            const Eigen::Index row = i - 1;
            trip.emplace_back(row, row, diag);
            if (i == 1) {
                trip.emplace_back(row, 0, -kl * kappa);
            } else {
                trip.emplace_back(row, row - 1, -kl);
            }
            if (i + 2 < n) trip.emplace_back(row, row + 1, -kr);
        }
        Sparse<Scalar> J(m, m);
        J.setFromTriplets(trip.begin(), trip.end());
        Eigen::SparseLU<Sparse<Scalar>> lu;
        lu.compute(J);
        if (lu.info() != Eigen::Success) throw ConvergenceError("solve_profile: singular Jacobian", double(res));
        const Vec<Scalar> step = lu.solve(-F.segment(1, m));
        f.segment(1, m) += step;
        res = residual(F);
        const Scalar size = step.cwiseAbs().maxCoeff();
        // converged: the update is at rounding level or has stopped shrinking
        if (res <= tol && (size <= Scalar(64) * std::numeric_limits<Scalar>::epsilon() || size > prev_step / 2)) {
            ++it;
            break;
        }
        prev_step = size;
    }
    if (!(res <= tol))
        throw ConvergenceError("solve_profile: Newton did not reach tolerance", double(res));

    p.f = f;
    p.df = differentiate(grid, f);
    p.ddf = -p.df.cwiseQuotient(r) + f.cwiseQuotient(r.cwiseAbs2()) -
            ((Scalar(1) - f.array().square()) * f.array()).matrix();
    p.origin_slope = f(0) / series(r(0));
    p.residual_norm = res;
    p.iterations = it;
    discrete_translation_mode(grid, p.f, p.df, Vec<Scalar>(f.cwiseQuotient(r)), p.kernel_s, p.kernel_t);
    return p;
}

template <typename Scalar>
void discrete_translation_mode(const RadialGrid<Scalar>& grid, const Vec<Scalar>& f,
                               const Vec<Scalar>& s, const Vec<Scalar>& t, Vec<Scalar>& s_out,
                               Vec<Scalar>& t_out) {
    check_shape(grid, f, "discrete_translation_mode");
    const Eigen::Index n = grid.size();
    const auto& w = grid.weights;
    const auto& v = grid.weights_r2;
    const Eigen::Index nc = 2 * (n - 2);  // constraints
    const Eigen::Index nx = 2 * n;        // unknowns: sigma block then tau block

    // KKT system [[W, M_I^T], [M_I, 0]] [c; y] = [0; -M_I g] for the correction c = x - g.
    // Solving for c rather than x keeps the rounding relative to the small correction.
    std::vector<Eigen::Triplet<Scalar>> trip;
    trip.reserve(nx + 2 * 8 * nc);
    for (Eigen::Index i = 0; i < n; ++i) {
        trip.emplace_back(i, i, w(i));
        trip.emplace_back(n + i, n + i, w(i));
    }
    auto put = [&](Eigen::Index row, Eigen::Index col, Scalar v) {
        trip.emplace_back(nx + row, col, v);
        trip.emplace_back(col, nx + row, v);
    };
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        const Scalar kl = grid.rho(i - 1) / grid.h(i - 1);
        const Scalar kr = grid.rho(i) / grid.h(i);
        const Eigen::Index rs = i - 1, rt = (n - 2) + i - 1;
        put(rs, i - 1, -kl);
        put(rs, i + 1, -kr);
        put(rs, i, kl + kr + Scalar(2) * v(i) + w(i) * (Scalar(3) * f(i) * f(i) - Scalar(1)));
        put(rs, n + i, -Scalar(2) * v(i));
        put(rt, n + i - 1, -kl);
        put(rt, n + i + 1, -kr);
        put(rt, n + i, kl + kr + Scalar(2) * v(i) + w(i) * (f(i) * f(i) - Scalar(1)));
        put(rt, i, -Scalar(2) * v(i));
    }
    Sparse<Scalar> kkt(nx + nc, nx + nc);
    kkt.setFromTriplets(trip.begin(), trip.end());
    Vec<Scalar> g(nx);
    g << s, t;
    const Vec<Scalar> mg = kkt.bottomLeftCorner(nc, nx) * g;
    Vec<Scalar> rhs = Vec<Scalar>::Zero(nx + nc);
    rhs.tail(nc) = -mg;
    Eigen::SparseLU<Sparse<Scalar>> lu;
    lu.compute(kkt);
    if (lu.info() != Eigen::Success) throw ConvergenceError("discrete_translation_mode: factorization failed", 0.0);
    const Vec<Scalar> c = lu.solve(rhs);
    s_out = s + c.head(n);
    t_out = t + c.segment(n, n);
}

template <typename Scalar>
ValidationReport<Scalar> validate_profile(const Profile<Scalar>& p) {
    ValidationReport<Scalar> rep;
    const auto& r = p.grid.nodes;
    const Eigen::Index n = p.grid.size();
    rep.monotone = true;
    for (Eigen::Index i = 1; i < n; ++i)
        if (!(p.f(i) > p.f(i - 1))) rep.monotone = false;
    rep.in_range = true;
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(p.f(i) > 0 && p.f(i) < 1)) rep.in_range = false;
    rep.ratio_bound = true;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar q = r(i) * p.df(i) / p.f(i);
        if (!(q > 0 && q < 1)) rep.ratio_bound = false;
    }
    auto defect = [](Scalar x, Scalar fx) {
        return std::abs(fx - (Scalar(1) - Scalar(1) / (Scalar(2) * x * x)));
    };
    rep.boundary_defect = defect(r(n - 1), p.f(n - 1));
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        if (r(i) <= p.grid.r_max / Scalar(2)) k = i;
    rep.matching_radius = r(k);
    rep.far_field_defect = defect(r(k), p.f(k));
    rep.far_field_scaled = std::pow(r(k), Scalar(4)) * rep.far_field_defect;
    return rep;
}

template <typename Scalar>
Scalar pchip(const Vec<Scalar>& x, const Vec<Scalar>& y, Scalar at) {
    const Eigen::Index n = x.size();
    if (at <= x(0)) return y(0);
    if (at >= x(n - 1)) return y(n - 1);
    const Scalar* b = x.data();
    const Eigen::Index k = std::upper_bound(b, b + n, at) - b - 1;
    auto slope = [&](Eigen::Index i) { return (y(i + 1) - y(i)) / (x(i + 1) - x(i)); };
    // Fritsch-Carlson node derivatives (weighted harmonic mean)
    auto nodeder = [&](Eigen::Index i) -> Scalar {
        if (i == 0) return slope(0);
        if (i == n - 1) return slope(n - 2);
        const Scalar s0 = slope(i - 1), s1 = slope(i);
        if (s0 * s1 <= 0) return Scalar(0);
        const Scalar h0 = x(i) - x(i - 1), h1 = x(i + 1) - x(i);
        const Scalar w1 = Scalar(2) * h1 + h0, w2 = h1 + Scalar(2) * h0;
        return (w1 + w2) / (w1 / s0 + w2 / s1);
    };
    const Scalar h = x(k + 1) - x(k);
    const Scalar t = (at - x(k)) / h;
    const Scalar d0 = nodeder(k), d1 = nodeder(k + 1);
    const Scalar t2 = t * t, t3 = t2 * t;
    return (Scalar(2) * t3 - Scalar(3) * t2 + Scalar(1)) * y(k) + (t3 - Scalar(2) * t2 + t) * h * d0 +
           (-Scalar(2) * t3 + Scalar(3) * t2) * y(k + 1) + (t3 - t2) * h * d1;
}

template <typename Scalar>
Profile<Scalar> rescaled_profile(const Profile<Scalar>& p, Scalar delta) {
    if (!(delta > -1 && delta < 1)) throw ParameterError("rescaled_profile: delta must lie in (-1, 1)");
    const Scalar s = Scalar(1) / std::sqrt(Scalar(1) + delta);
    const auto& x = p.grid.nodes;
    const Scalar lo = x(0), hi = x(x.size() - 1);
    Profile<Scalar> q = p;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const Scalar z = s * x(i);
        Scalar f, df, ddf;
        if (z < lo) {
            f = p.origin_slope * z;
            df = p.origin_slope;
            ddf = 0;
        } else if (z > hi) {
            const Scalar z2 = z * z;
            f = Scalar(1) - Scalar(1) / (Scalar(2) * z2) - Scalar(9) / (Scalar(8) * z2 * z2);
            df = Scalar(1) / (z2 * z) + Scalar(9) / (Scalar(2) * z2 * z2 * z);
            ddf = -Scalar(3) / (z2 * z2) - Scalar(45) / (Scalar(2) * z2 * z2 * z2);
        } else {
            f = pchip(x, p.f, z);
            df = pchip(x, p.df, z);
            ddf = pchip(x, p.ddf, z);
        }
        q.f(i) = f;
        q.df(i) = s * df;
        q.ddf(i) = s * s * ddf;
    }
    q.origin_slope = s * p.origin_slope;
    q.far_field_value = q.f(x.size() - 1);
    q.kernel_s = q.df;
    q.kernel_t = q.f.cwiseQuotient(x);
    return q;
}

template Profile<double> solve_profile<double>(const RadialGrid<double>&, double, ProfileOptions);
template ValidationReport<double> validate_profile<double>(const Profile<double>&);
template Profile<double> rescaled_profile<double>(const Profile<double>&, double);
template double pchip<double>(const Vec<double>&, const Vec<double>&, double);
template void discrete_translation_mode<double>(const RadialGrid<double>&, const Vec<double>&,
                                                const Vec<double>&, const Vec<double>&, Vec<double>&,
                                                Vec<double>&);

}  // namespace agl
