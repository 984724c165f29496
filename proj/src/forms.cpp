#include "agl/forms.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace agl {

namespace {

template <typename Scalar>
Scalar pentry(const Vec<Scalar>& v, Eigen::Index i) {
    return v.size() ? v(i) : Scalar(0);
}

template <typename Scalar>
void check_pair(const Profile<Scalar>& p, const ModePair<Scalar>& pair) {
    check_shape(p.grid, pair.phi, "phi");
    check_shape(p.grid, pair.psi, "psi");
}

template <typename Scalar>
FormBreakdown<Scalar> evaluate_parts(const RadialGrid<Scalar>& g, const FormParts<Scalar>& parts,
                                     const Vec<Scalar>& a, const Vec<Scalar>& b) {
    FormBreakdown<Scalar> out;
    out.gradient_term = evaluate(g, parts.gradient, a, b);
    out.anisotropic_term = evaluate(g, parts.anisotropic, a, b);
    out.potential_term = evaluate(g, parts.potential, a, b);
    out.total = out.gradient_term + out.anisotropic_term + out.potential_term;
    return out;
}

}  // namespace

template <typename Scalar>
void check_params(const FormParams<Scalar>& params) {
    if (!(params.delta > -1 && params.delta < 1)) throw ParameterError("delta must lie in (-1, 1)");
    if (params.n < 0) throw ParameterError("mode index must be non-negative");
}

template <typename Scalar>
Scalar evaluate(const RadialGrid<Scalar>& g, const StaggeredForm<Scalar>& form, const Vec<Scalar>& a,
                const Vec<Scalar>& b) {
    check_shape(g, a, "first track");
    check_shape(g, b, "second track");
    const Eigen::Index n = g.size();
    Scalar cells = 0, cross = 0;
    for (Eigen::Index c = 0; c + 1 < n; ++c) {
        const Scalar da = (a(c + 1) - a(c)) / g.h(c), db = (b(c + 1) - b(c)) / g.h(c);
        const Scalar aa = (a(c + 1) + a(c)) / 2, ab = (b(c + 1) + b(c)) / 2;
        cells += g.omega(c) * (form.G(0, 0) * da * da + (form.G(0, 1) + form.G(1, 0)) * da * db +
                               form.G(1, 1) * db * db);
        cross += g.h(c) * (form.C(0, 0) * aa * da + form.C(0, 1) * aa * db + form.C(1, 0) * ab * da +
                           form.C(1, 1) * ab * db);
    }
    Scalar nodes = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar x = a(i), y = b(i);
        nodes += g.weights_r2(i) * (form.R(0, 0) * x * x + (form.R(0, 1) + form.R(1, 0)) * x * y +
                                    form.R(1, 1) * y * y);
        nodes += g.weights(i) * (pentry(form.p00, i) * x * x + Scalar(2) * pentry(form.p01, i) * x * y +
                                 pentry(form.p11, i) * y * y);
    }
    return cells + cross + nodes;
}

template <typename Scalar>
Eigen::SparseMatrix<Scalar> assemble(const RadialGrid<Scalar>& g, const StaggeredForm<Scalar>& form) {
    const Eigen::Index n = g.size();
    std::vector<Eigen::Triplet<Scalar>> trip;
    trip.reserve(40 * n);
    auto add = [&](Eigen::Index i, Eigen::Index j, Scalar v) {
        if (v == Scalar(0)) return;
        trip.emplace_back(i, j, v / 2);
        trip.emplace_back(j, i, v / 2);
    };
    for (Eigen::Index c = 0; c + 1 < n; ++c) {
        const Scalar k = g.omega(c) / (g.h(c) * g.h(c));
        const Eigen::Index node[2] = {c, c + 1};
        const Scalar dsign[2] = {-1, 1};
        for (int s = 0; s < 2; ++s)
            for (int t = 0; t < 2; ++t)
                for (int u = 0; u < 2; ++u)
                    for (int v = 0; v < 2; ++v) {
                        const Eigen::Index i = 2 * node[u] + s, j = 2 * node[v] + t;
                        // omega d_s G_st d_t
                        add(i, j, k * form.G(s, t) * dsign[u] * dsign[v]);
                        // h abar_s C_st d_t = (C_st / 2)(x_s,c + x_s,c+1)(x_t,c+1 - x_t,c)
                        add(i, j, form.C(s, t) / 2 * dsign[v]);
                    }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar v = g.weights_r2(i), w = g.weights(i);
        add(2 * i, 2 * i, v * form.R(0, 0) + w * pentry(form.p00, i));
        add(2 * i + 1, 2 * i + 1, v * form.R(1, 1) + w * pentry(form.p11, i));
        add(2 * i, 2 * i + 1, v * (form.R(0, 1) + form.R(1, 0)) + w * pentry(form.p01, i) * 2);
    }
    Eigen::SparseMatrix<Scalar> A(2 * n, 2 * n);
    A.setFromTriplets(trip.begin(), trip.end());
    A.prune(Scalar(0));
    return A;
}

template <typename Scalar>
FormParts<Scalar> q0_parts(const Profile<Scalar>& p, Scalar delta) {
    const Scalar d = delta;
    FormParts<Scalar> parts;
    parts.gradient.G.setIdentity();
    parts.gradient.R.setIdentity();
    parts.anisotropic.G << d, 0, 0, -d;
    parts.anisotropic.C << 2 * d, 0, 0, -2 * d;
    parts.anisotropic.R << d, 0, 0, -d;
    const Vec<Scalar> f2 = p.f.cwiseAbs2();
    parts.potential.p00 = (1 + d) * (Scalar(3) * f2.array() - Scalar(1)).matrix();
    parts.potential.p11 = -(1 + d) * (Scalar(1) - f2.array()).matrix();
    return parts;
}

template <typename Scalar>
FormParts<Scalar> qn_parts(const Profile<Scalar>& p, const FormParams<Scalar>& params) {
    const Scalar d = params.delta;
    const Scalar n = Scalar(params.n);
    FormParts<Scalar> parts;
    parts.gradient.G.setIdentity();
    parts.gradient.R << (1 + n) * (1 + n), 0, 0, (1 - n) * (1 - n);
    parts.anisotropic.G << 0, d, d, 0;
    // 2 delta [(1 + n) abar_phi d_psi + (1 - n) abar_psi d_phi]
    parts.anisotropic.C << 0, 2 * d * (1 + n), 2 * d * (1 - n), 0;
    parts.anisotropic.R << 0, d * (1 - n * n), d * (1 - n * n), 0;
    const Vec<Scalar> f2 = p.f.cwiseAbs2();
    parts.potential.p00 = (1 + d) * (Scalar(2) * f2.array() - Scalar(1)).matrix();
    parts.potential.p11 = parts.potential.p00;
    parts.potential.p01 = (1 + d) * f2;
    return parts;
}

template <typename Scalar>
FormBreakdown<Scalar> eval_Q0(const Profile<Scalar>& p, Scalar delta, const Vec<Scalar>& u, const Vec<Scalar>& v) {
    check_params(FormParams<Scalar>{delta, 0});
    return evaluate_parts(p.grid, q0_parts(p, delta), u, v);
}

template <typename Scalar>
FormBreakdown<Scalar> eval_Qn(const Profile<Scalar>& p, const FormParams<Scalar>& params, const ModePair<Scalar>& pair) {
    check_params(params);
    if (params.n == 0) throw ParameterError("eval_Qn: n = 0 is handled by eval_Q0");
    check_pair(p, pair);
    return evaluate_parts(p.grid, qn_parts(p, params), pair.phi, pair.psi);
}

template <typename Scalar>
Scalar eval_A0(const Profile<Scalar>& p, const Vec<Scalar>& u, const Vec<Scalar>& v) {
    return eval_Q0(p, Scalar(0), u, v).total;
}

template <typename Scalar>
Scalar eval_A1(const Profile<Scalar>& p, const ModePair<Scalar>& pair) {
    return eval_Qn(p, FormParams<Scalar>{0, 1}, pair).total;
}

template <typename Scalar>
ModePair<Scalar> ansatz_pair(const Profile<Scalar>& p, const Vec<Scalar>& zeta, const Vec<Scalar>& eta) {
    check_shape(p.grid, zeta, "zeta");
    check_shape(p.grid, eta, "eta");
    const Vec<Scalar> sz = p.kernel_s.cwiseProduct(zeta), te = p.kernel_t.cwiseProduct(eta);
    return {sz - te, sz + te};
}

template <typename Scalar>
ModePair<Scalar> kernel_pair(const Profile<Scalar>& p) {
    return {p.kernel_s - p.kernel_t, p.kernel_s + p.kernel_t};
}

template <typename Scalar>
Scalar eval_Bn_direct(const Profile<Scalar>& p, const FormParams<Scalar>& params, const Vec<Scalar>& zeta,
                      const Vec<Scalar>& eta) {
    if (params.n < 1) throw ParameterError("eval_Bn_direct: need n >= 1");
    return eval_Qn(p, params, ansatz_pair(p, zeta, eta)).total / 2;
}

template <typename Scalar>
BnFormula<Scalar> eval_Bn_formula(const Profile<Scalar>& p, const FormParams<Scalar>& params,
                                  const Vec<Scalar>& zeta, const Vec<Scalar>& eta) {
    check_params(params);
    if (params.n < 1) throw ParameterError("eval_Bn_formula: need n >= 1");
    check_shape(p.grid, zeta, "zeta");
    check_shape(p.grid, eta, "eta");
    const auto& g = p.grid;
    const auto& r = g.nodes;
    const auto& S = p.kernel_s;
    const auto& T = p.kernel_t;
    const Scalar d = params.delta, n = Scalar(params.n);
    const Vec<Scalar> dz = differentiate(g, zeta), de = differentiate(g, eta);

    BnFormula<Scalar> out;
    Scalar B1 = 0, B2 = 0;
    Scalar I[4] = {0, 0, 0, 0};
    const Scalar an = (1 - d) * (n + 1) - 4 * d * d * (n - 1) / (1 + d);
    const Scalar bn = (1 + d) * (n + 1);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        const Scalar w = g.weights(i), ri = r(i);
        const Scalar X = S(i) * zeta(i) / ri;  // f0' zeta / r
        const Scalar Y = T(i) * eta(i) / ri;   // (f0/r) eta / r
        const Scalar diff = eta(i) - zeta(i);
        const Scalar mixed = S(i) * diff / ri + T(i) * de(i);
        const Scalar grad = T(i) * T(i) * de(i) * de(i) + S(i) * S(i) * dz(i) * dz(i);
        const Scalar hardy = Scalar(2) * S(i) * T(i) * diff * diff / (ri * ri);
        I[0] += w * (1 + d) * (grad + hardy);
        I[1] += w * Scalar(-2) * d * mixed * mixed;
        I[2] += w * (n - 1) * ((1 - d) * (n + 1) * X * X + (1 + d) * (n + 1) * Y * Y - Scalar(4) * X * Y);
        // last integral after integration by parts, with (f0/r)' = (f0' - f0/r)/r
        I[3] += w * Scalar(4) * d * (n - 1) * ((S(i) / T(i) - Scalar(1)) * X * Y + T(i) * de(i) * X);

        const Scalar sq = T(i) * de(i) + Scalar(2) * d / (1 + d) * (n - 1) * X;
        B1 += w * ((1 + d) * (sq * sq + S(i) * S(i) * dz(i) * dz(i)) + (1 + d) * hardy - Scalar(2) * d * mixed * mixed);
        const Scalar c = Scalar(-2) - Scalar(2) * d * (Scalar(1) - S(i) / T(i));
        B2 += w * (an * X * X + bn * Y * Y + Scalar(2) * c * X * Y);
    }
    for (int k = 0; k < 4; ++k) out.integrals[k] = I[k];
    out.total = I[0] + I[1] + I[2] + I[3];
    out.B1 = B1;
    out.B2 = B2;
    return out;
}

template <typename Scalar>
QnCoeffs<Scalar> qn_coeffs(Scalar delta, int n, Scalar r, const Profile<Scalar>& p) {
    if (!(delta > -1)) throw ParameterError("qn_coeffs: need delta > -1");
    if (n < 2) throw ParameterError("qn_coeffs: need n >= 2");
    QnCoeffs<Scalar> q;
    const Scalar N = Scalar(n);
    q.a = (1 - delta) * (N + 1) - 4 * delta * delta * (N - 1) / (1 + delta);
    q.b = (1 + delta) * (N + 1);
    const auto& x = p.grid.nodes;
    const Scalar* b = x.data();
    const Scalar* e = b + x.size();
    const Scalar* it = std::lower_bound(b, e, r);
    Scalar ratio;
    if (it != e && *it == r) {
        const auto i = it - b;
        ratio = r * p.df(i) / p.f(i);
    } else {
        const Vec<Scalar> q_samples = x.cwiseProduct(p.df).cwiseQuotient(p.f);
        ratio = pchip(x, q_samples, r);
        q.interpolated = true;
    }
    q.c = Scalar(-2) - Scalar(2) * delta * (Scalar(1) - ratio);
    return q;
}

const char* identity_name(Identity which) {
    switch (which) {
        case Identity::Q0_A0: return "Q0_A0";
        case Identity::Q1_A1: return "Q1_A1";
        case Identity::Qn_Q1: return "Qn_Q1";
        case Identity::A0_dec: return "A0_dec";
        case Identity::A1_dec: return "A1_dec";
    }
    return "?";
}

template <typename Scalar>
Scalar energy_norm2(const RadialGrid<Scalar>& g, const Vec<Scalar>& a, const Vec<Scalar>& b) {
    StaggeredForm<Scalar> h;
    h.G.setIdentity();
    h.R.setIdentity();
    h.p00 = Vec<Scalar>::Ones(g.size());
    h.p11 = h.p00;
    return evaluate(g, h, a, b);
}

template <typename Scalar>
IdentityGap<Scalar> identity_gap(const Profile<Scalar>& p, Scalar delta, int n, const IdentityInput<Scalar>& in,
                                 Identity which) {
    const auto& g = p.grid;
    const InputKind need = (which == Identity::Q0_A0 || which == Identity::A0_dec) ? InputKind::complex_track
                           : which == Identity::A1_dec                              ? InputKind::ansatz
                                                                                    : InputKind::pair;
    if (in.kind != need)
        throw ParameterError(std::string("identity_gap: wrong input kind for ") + identity_name(which));
    check_shape(g, in.a, "identity input");
    check_shape(g, in.b, "identity input");
    check_params(FormParams<Scalar>{delta, n});

    IdentityGap<Scalar> out;
    const Vec<Scalar> zero = Vec<Scalar>::Zero(g.size());
    switch (which) {
        case Identity::Q0_A0: {
            out.lhs = eval_Q0(p, delta, in.a, in.b).total;
            const Vec<Scalar> defect = (Scalar(1) - p.f.array().square()).matrix().cwiseProduct(in.b.cwiseAbs2());
            out.rhs = (1 + delta) * eval_A0(p, in.a, zero) + (1 - delta) * eval_A0(p, zero, in.b) -
                      Scalar(2) * delta * integrate(g, defect);
            out.norm = energy_norm2(g, in.a, in.b);
            break;
        }
        case Identity::Q1_A1: {
            const ModePair<Scalar> pair{in.a, in.b};
            out.lhs = eval_Qn(p, FormParams<Scalar>{delta, 1}, pair).total - (1 + delta) * eval_A1(p, pair);
            // -delta int (phi' + 2 phi / r - psi')^2 r dr, square expanded
            StaggeredForm<Scalar> sq;
            sq.G << 1, -1, -1, 1;
            sq.C << 4, -4, 0, 0;
            sq.R << 4, 0, 0, 0;
            out.rhs = -delta * evaluate(g, sq, in.a, in.b);
            out.norm = energy_norm2(g, in.a, in.b);
            break;
        }
        case Identity::Qn_Q1: {
            if (n < 2) throw ParameterError("identity_gap: Qn_Q1 needs n >= 2");
            const ModePair<Scalar> pair{in.a, in.b};
            out.lhs = eval_Qn(p, FormParams<Scalar>{delta, n}, pair).total -
                      eval_Qn(p, FormParams<Scalar>{delta, 1}, pair).total;
            const Scalar N = Scalar(n);
            StaggeredForm<Scalar> diff;
            diff.R << N + 3, -delta * (N + 1), -delta * (N + 1), N - 1;
            // 2 delta (phi psi' - phi' psi)
            diff.C << 0, 2 * delta, -2 * delta, 0;
            out.rhs = (N - 1) * evaluate(g, diff, in.a, in.b);
            out.norm = energy_norm2(g, in.a, in.b);
            break;
        }
        case Identity::A0_dec: {
            const Vec<Scalar> u = p.f.cwiseProduct(in.a), v = p.f.cwiseProduct(in.b);
            out.lhs = eval_A0(p, u, v);
            Scalar rhs = 0;
            for (Eigen::Index c = 0; c + 1 < g.size(); ++c) {
                const Scalar da = (in.a(c + 1) - in.a(c)) / g.h(c), db = (in.b(c + 1) - in.b(c)) / g.h(c);
                rhs += g.omega(c) * p.f(c) * p.f(c + 1) * (da * da + db * db);
            }
            const Vec<Scalar> f4 = p.f.array().pow(4).matrix();
            rhs += Scalar(2) * integrate(g, Vec<Scalar>(f4.cwiseProduct(in.a.cwiseAbs2())));
            out.rhs = rhs;
            out.norm = energy_norm2(g, u, v);
            break;
        }
        case Identity::A1_dec: {
            const ModePair<Scalar> pair = ansatz_pair(p, in.a, in.b);
            out.lhs = eval_A1(p, pair);
            const auto& S = p.kernel_s;
            const auto& T = p.kernel_t;
            Scalar rhs = 0;
            for (Eigen::Index c = 0; c + 1 < g.size(); ++c) {
                const Scalar dz = (in.a(c + 1) - in.a(c)) / g.h(c), de = (in.b(c + 1) - in.b(c)) / g.h(c);
                rhs += g.omega(c) * (T(c) * T(c + 1) * de * de + S(c) * S(c + 1) * dz * dz);
            }
            for (Eigen::Index i = 0; i < g.size(); ++i) {
                const Scalar diff = in.b(i) - in.a(i);
                rhs += g.weights_r2(i) * Scalar(2) * S(i) * T(i) * diff * diff;
            }
            out.rhs = Scalar(2) * rhs;
            out.norm = energy_norm2(g, pair.phi, pair.psi);
            break;
        }
    }
    out.gap = std::abs(out.lhs - out.rhs);
    return out;
}

template <typename Scalar>
std::vector<IdentityRecord<Scalar>> identity_suite(const Profile<Scalar>& p, const std::vector<Scalar>& deltas,
                                                   const std::vector<int>& modes, int samples, unsigned seed) {
    if (samples < 1) throw ParameterError("identity_suite: need at least one sample");
    std::mt19937_64 rng(seed);
    std::vector<IdentityRecord<Scalar>> out;
    const Identity all[] = {Identity::Q0_A0, Identity::Q1_A1, Identity::Qn_Q1, Identity::A0_dec, Identity::A1_dec};
    for (Scalar d : deltas)
        for (Identity which : all) {
            const InputKind kind = (which == Identity::Q0_A0 || which == Identity::A0_dec) ? InputKind::complex_track
                                   : which == Identity::A1_dec                              ? InputKind::ansatz
                                                                                            : InputKind::pair;
            const std::vector<int> ns = which == Identity::Qn_Q1 ? modes : std::vector<int>{1};
            for (int n : ns)
                for (int s = 0; s < samples; ++s) {
                    IdentityInput<Scalar> in{kind, random_test_function(p.grid, rng), random_test_function(p.grid, rng)};
                    out.push_back({which, d, n, s, identity_gap(p, d, n, in, which)});
                }
        }
    return out;
}

template <typename Scalar>
Scalar mode_sum(const Profile<Scalar>& p, Scalar delta, const std::map<int, ComplexMode<Scalar>>& modes) {
    Scalar sum = 0;
    for (const auto& [n, m] : modes) {
        if (n < 0) throw ParameterError("mode_sum: keys are non-negative mode indices");
        if (n == 0) {
            sum += eval_Q0(p, delta, Vec<Scalar>(m.plus.real()), Vec<Scalar>(m.plus.imag())).total;
        } else {
            const FormParams<Scalar> fp{delta, n};
            sum += eval_Qn(p, fp, {m.plus.real(), m.minus.real()}).total;
            sum += eval_Qn(p, fp, {m.plus.imag(), Vec<Scalar>(-m.minus.imag())}).total;
        }
    }
    return Scalar(2) * std::numbers::pi_v<Scalar> * sum;
}

template <typename Scalar>
Scalar eval_full2d(const Profile<Scalar>& p, Scalar delta, const std::map<int, ComplexMode<Scalar>>& modes,
                   int angular_nodes) {
    using Cx = std::complex<Scalar>;
    const auto& g = p.grid;
    const Eigen::Index nr = g.size();
    int nmax = 0;
    for (const auto& [n, m] : modes) {
        if (n < 0) throw ParameterError("eval_full2d: keys are non-negative mode indices");
        nmax = std::max(nmax, n);
        if (m.plus.size() != nr || (n > 0 && m.minus.size() != nr))
            throw ShapeError("eval_full2d: mode coefficient length does not match grid");
    }
    const int need = 8 * nmax + 16;
    if (angular_nodes == 0) angular_nodes = need;
    if (angular_nodes < need)
        throw ParameterError("eval_full2d: angular resolution below " + std::to_string(need) + " nodes");
    const int M = angular_nodes;
    const Scalar pi = std::numbers::pi_v<Scalar>;

    // v(r_i, theta_k) = e^{i theta} sum_n w_n e^{i n theta}
    Eigen::Matrix<Cx, Eigen::Dynamic, Eigen::Dynamic> V = Eigen::Matrix<Cx, Eigen::Dynamic, Eigen::Dynamic>::Zero(nr, M);
    std::vector<Cx> rot(M);
    for (int k = 0; k < M; ++k) rot[k] = std::polar(Scalar(1), Scalar(2) * pi * k / M);
    for (const auto& [n, m] : modes) {
        for (int k = 0; k < M; ++k) {
            const Cx ep = std::polar(Scalar(1), Scalar(2) * pi * k * (1 + n) / M);
            V.col(k) += m.plus * ep;
            if (n > 0) V.col(k) += m.minus * std::polar(Scalar(1), Scalar(2) * pi * k * (1 - n) / M);
        }
    }

    // spectral theta derivative, row by row
    Eigen::Matrix<Cx, Eigen::Dynamic, Eigen::Dynamic> Vt(nr, M);
    Eigen::FFT<Scalar> fft;
    std::vector<Cx> row(M), spec(M), back(M);
    for (Eigen::Index i = 0; i < nr; ++i) {
        for (int k = 0; k < M; ++k) row[k] = V(i, k);
        fft.fwd(spec, row);
        for (int k = 0; k < M; ++k) {
            const int freq = k <= M / 2 ? k : k - M;
            spec[k] *= (2 * k == M) ? Cx(0) : Cx(0, Scalar(freq));
        }
        fft.inv(back, spec);
        for (int k = 0; k < M; ++k) Vt(i, k) = back[k];
    }

    Scalar total = 0;
    for (int k = 0; k < M; ++k) {
        const Cx e2 = rot[k] * rot[k];
        Scalar acc = 0;
        for (Eigen::Index c = 0; c + 1 < nr; ++c) {
            const Cx dv = (V(c + 1, k) - V(c, k)) / g.h(c);
            const Cx avt = (Vt(c + 1, k) + Vt(c, k)) / Scalar(2);
            acc += g.omega(c) * (std::norm(dv) + delta * std::real(e2 * std::conj(dv) * std::conj(dv)));
            acc += g.h(c) * delta * std::real(Cx(0, 2) * e2 * std::conj(dv) * std::conj(avt));
        }
        for (Eigen::Index i = 0; i < nr; ++i) {
            const Cx vt = Vt(i, k);
            acc += g.weights_r2(i) * (std::norm(vt) - delta * std::real(e2 * std::conj(vt) * std::conj(vt)));
            const Scalar radial = std::real(std::conj(rot[k]) * V(i, k));  // e^{i theta} . v
            const Scalar f2 = p.f(i) * p.f(i);
            acc += g.weights(i) * (1 + delta) * (Scalar(2) * f2 * radial * radial - (1 - f2) * std::norm(V(i, k)));
        }
        total += acc;
    }
    return total * Scalar(2) * pi / Scalar(M);
}

template <typename Scalar>
Scalar pointwise_anisotropy_identity(const CartesianField<Scalar>& fld) {
    const Eigen::Index ny = fld.u1.rows(), nx = fld.u1.cols();
    if (fld.u2.rows() != ny || fld.u2.cols() != nx) throw ShapeError("pointwise_anisotropy_identity: u1, u2 differ");
    Scalar worst = 0;
    for (Eigen::Index j = 1; j + 1 < ny; ++j)
        for (Eigen::Index i = 1; i + 1 < nx; ++i) {
            const Scalar a_x = (fld.u1(j, i + 1) - fld.u1(j, i - 1)) / (2 * fld.hx);
            const Scalar a_y = (fld.u1(j + 1, i) - fld.u1(j - 1, i)) / (2 * fld.hy);
            const Scalar b_x = (fld.u2(j, i + 1) - fld.u2(j, i - 1)) / (2 * fld.hx);
            const Scalar b_y = (fld.u2(j + 1, i) - fld.u2(j - 1, i)) / (2 * fld.hy);
            const Scalar div = a_x + b_y, curl = b_x - a_y, det = a_x * b_y - a_y * b_x;
            // d_eta conj(u) = (d_x + i d_y)(u1 - i u2)
            const std::complex<Scalar> deta(a_x + b_y, a_y - b_x);
            const Scalar lhs1 = std::real(deta * deta);
            const Scalar grad2 = a_x * a_x + a_y * a_y + b_x * b_x + b_y * b_y;
            worst = std::max(worst, std::abs(lhs1 - (div * div - curl * curl)));
            worst = std::max(worst, std::abs(grad2 - (div * div + curl * curl - 2 * det)));
        }
    return worst;
}

template void check_params<double>(const FormParams<double>&);
template double evaluate<double>(const RadialGrid<double>&, const StaggeredForm<double>&, const Vec<double>&,
                                 const Vec<double>&);
template Eigen::SparseMatrix<double> assemble<double>(const RadialGrid<double>&, const StaggeredForm<double>&);
template FormParts<double> q0_parts<double>(const Profile<double>&, double);
template FormParts<double> qn_parts<double>(const Profile<double>&, const FormParams<double>&);
template FormBreakdown<double> eval_Q0<double>(const Profile<double>&, double, const Vec<double>&, const Vec<double>&);
template FormBreakdown<double> eval_Qn<double>(const Profile<double>&, const FormParams<double>&,
                                               const ModePair<double>&);
template double eval_A0<double>(const Profile<double>&, const Vec<double>&, const Vec<double>&);
template double eval_A1<double>(const Profile<double>&, const ModePair<double>&);
template ModePair<double> ansatz_pair<double>(const Profile<double>&, const Vec<double>&, const Vec<double>&);
template ModePair<double> kernel_pair<double>(const Profile<double>&);
template double eval_Bn_direct<double>(const Profile<double>&, const FormParams<double>&, const Vec<double>&,
                                       const Vec<double>&);
template BnFormula<double> eval_Bn_formula<double>(const Profile<double>&, const FormParams<double>&,
                                                   const Vec<double>&, const Vec<double>&);
template QnCoeffs<double> qn_coeffs<double>(double, int, double, const Profile<double>&);
template double energy_norm2<double>(const RadialGrid<double>&, const Vec<double>&, const Vec<double>&);
template IdentityGap<double> identity_gap<double>(const Profile<double>&, double, int, const IdentityInput<double>&,
                                                  Identity);
template std::vector<IdentityRecord<double>> identity_suite<double>(const Profile<double>&,
                                                                   const std::vector<double>&,
                                                                   const std::vector<int>&, int, unsigned);
template double mode_sum<double>(const Profile<double>&, double, const std::map<int, ComplexMode<double>>&);
template double eval_full2d<double>(const Profile<double>&, double, const std::map<int, ComplexMode<double>>&, int);
template double pointwise_anisotropy_identity<double>(const CartesianField<double>&);

}  // namespace agl
