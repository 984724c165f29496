#include "agl/spectrum.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

namespace agl {

namespace {

template <typename Scalar>
using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
Eigen::SparseMatrix<Scalar> restrict_matrix(const Eigen::SparseMatrix<Scalar>& A, const std::vector<Eigen::Index>& dofs,
                                            Eigen::Index full) {
    std::vector<Eigen::Index> map(full, -1);
    for (std::size_t k = 0; k < dofs.size(); ++k) map[dofs[k]] = Eigen::Index(k);
    std::vector<Eigen::Triplet<Scalar>> trip;
    trip.reserve(A.nonZeros());
    for (Eigen::Index c = 0; c < A.outerSize(); ++c)
        for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(A, c); it; ++it)
            if (map[it.row()] >= 0 && map[it.col()] >= 0) trip.emplace_back(map[it.row()], map[it.col()], it.value());
    Eigen::SparseMatrix<Scalar> out(Eigen::Index(dofs.size()), Eigen::Index(dofs.size()));
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

// Deflation in the mass inner product: P x = x - Z C^{-1} Z^T M x.
template <typename Scalar>
struct Deflation {
    Dense<Scalar> Z, MZ;
    Eigen::LDLT<Dense<Scalar>> C;
    bool active = false;

    Deflation(const ModeOperator<Scalar>& op, const std::vector<Vec<Scalar>>& vecs) {
        if (vecs.empty()) return;
        active = true;
        Z.resize(op.size(), Eigen::Index(vecs.size()));
        for (std::size_t j = 0; j < vecs.size(); ++j) {
            if (vecs[j].size() != op.size()) throw ShapeError("min_eigenpairs: deflation vector has wrong length");
            Z.col(Eigen::Index(j)) = vecs[j];
        }
        MZ = op.mass * Z;
        C.compute(Z.transpose() * MZ);
    }
    // Inverse of the shifted pencil restricted to the constraint Z^T M y = 0:
    // y = K^{-1} M x - W D^{-1} Z^T M K^{-1} M x, with W = K^{-1} M Z, D = Z^T M W.
    Dense<Scalar> W;
    Eigen::LDLT<Dense<Scalar>> D;
    template <typename Solver>
    void prepare(const Solver& solver) {
        if (!active) return;
        W = solver.solve(MZ);
        D.compute(MZ.transpose() * W);
    }
    void constrain(Dense<Scalar>& Y) const {
        if (active) Y -= W * D.solve(MZ.transpose() * Y);
    }
    void project(Dense<Scalar>& X) const {
        if (active) X -= Z * C.solve(MZ.transpose() * X);
    }
    // adjoint projection, applied to residuals
    Vec<Scalar> project_dual(const Vec<Scalar>& y) const {
        if (!active) return y;
        return y - MZ * C.solve(Z.transpose() * y);
    }
};

template <typename Scalar>
bool m_orthonormalize(Dense<Scalar>& X, const Vec<Scalar>& mdiag) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index i = 0; i < j; ++i) {
                const Scalar c = X.col(i).dot(mdiag.cwiseProduct(X.col(j)));
                X.col(j) -= c * X.col(i);
            }
        const Scalar nrm = std::sqrt(X.col(j).dot(mdiag.cwiseProduct(X.col(j))));
        if (!(nrm > Scalar(1e-13))) return false;
        X.col(j) /= nrm;
    }
    return true;
}

template <typename Scalar>
Eigen::SparseMatrix<Scalar> shifted(const ModeOperator<Scalar>& op, Scalar sigma) {
    Eigen::SparseMatrix<Scalar> A = op.stiffness - sigma * op.mass;
    A.makeCompressed();
    return A;
}

}  // namespace

template <typename Scalar>
ModeOperator<Scalar> assemble_mode_operator(const Profile<Scalar>& p, Scalar delta, int n) {
    if (n < 0) throw ParameterError("assemble_mode_operator: need n >= 0");
    check_params(FormParams<Scalar>{delta, n});
    const auto& g = p.grid;
    const Eigen::Index N = g.size();
    ModeOperator<Scalar> op;
    op.n = n;
    op.delta = delta;
    op.grid_size = N;

    const FormParts<Scalar> parts = n == 0 ? q0_parts(p, delta) : qn_parts(p, FormParams<Scalar>{delta, n});
    const Eigen::SparseMatrix<Scalar> full =
        assemble(g, parts.gradient) + assemble(g, parts.anisotropic) + assemble(g, parts.potential);

    for (Eigen::Index i = 0; i < N; ++i)
        for (int t = 0; t < 2; ++t) {
            const bool inner = i == 0, outer = i == N - 1;
            const bool free_psi = n == 1 && t == 1 && inner;
            if ((!inner && !outer) || free_psi) op.dofs.push_back(2 * i + t);
        }
    op.stiffness = restrict_matrix(full, op.dofs, 2 * N);

    StaggeredForm<Scalar> h;
    h.G.setIdentity();
    h.R.setIdentity();
    h.p00 = Vec<Scalar>::Ones(N);
    h.p11 = h.p00;
    op.energy = restrict_matrix(assemble(g, h), op.dofs, 2 * N);

    std::vector<Eigen::Triplet<Scalar>> mt;
    for (std::size_t k = 0; k < op.dofs.size(); ++k)
        mt.emplace_back(Eigen::Index(k), Eigen::Index(k), g.weights(op.dofs[k] / 2));
    op.mass.resize(op.size(), op.size());
    op.mass.setFromTriplets(mt.begin(), mt.end());

    if (n == 1) {
        // translation mode times 1 - (r/R)^2. Far out the pair behaves like
        // 1/r, and 1/r - r/R^2 still solves the far-field equation while
        // vanishing at R.
        const Scalar R = g.r_max;
        ModePair<Scalar> k = kernel_pair(p);
        const Vec<Scalar> c = (Scalar(1) - (g.nodes.array() / R).square()).matrix();
        k.phi = k.phi.cwiseProduct(c);
        k.psi = k.psi.cwiseProduct(c);
        op.kernel = restrict_pair(op, k);
    }
    return op;
}

template <typename Scalar>
ModePair<Scalar> expand(const ModeOperator<Scalar>& op, const Vec<Scalar>& x) {
    if (x.size() != op.size()) throw ShapeError("expand: vector length does not match operator");
    ModePair<Scalar> out{Vec<Scalar>::Zero(op.grid_size), Vec<Scalar>::Zero(op.grid_size)};
    for (std::size_t k = 0; k < op.dofs.size(); ++k) {
        const Eigen::Index j = op.dofs[k];
        (j % 2 ? out.psi : out.phi)(j / 2) = x(Eigen::Index(k));
    }
    return out;
}

template <typename Scalar>
Vec<Scalar> restrict_pair(const ModeOperator<Scalar>& op, const ModePair<Scalar>& pair) {
    if (pair.phi.size() != op.grid_size || pair.psi.size() != op.grid_size)
        throw ShapeError("restrict_pair: pair length does not match operator grid");
    Vec<Scalar> x(op.size());
    for (std::size_t k = 0; k < op.dofs.size(); ++k) {
        const Eigen::Index j = op.dofs[k];
        x(Eigen::Index(k)) = (j % 2 ? pair.psi : pair.phi)(j / 2);
    }
    return x;
}

template <typename Scalar>
Eigen::Index count_below(const ModeOperator<Scalar>& op, Scalar sigma) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>> ldlt(shifted(op, sigma));
    if (ldlt.info() != Eigen::Success) return -1;
    const Vec<Scalar> d = ldlt.vectorD();
    if (!d.allFinite() || (d.array() == Scalar(0)).any()) return -1;
    return Eigen::Index((d.array() < 0).count());
}

template <typename Scalar>
ModeSpectrum<Scalar> min_eigenpairs(const ModeOperator<Scalar>& op, int k, Scalar tol,
                                    const std::vector<Vec<Scalar>>& deflate, EigenOptions opts) {
    if (k < 1) throw ParameterError("min_eigenpairs: need k >= 1");
    if (!(tol > 0)) throw ParameterError("min_eigenpairs: need tol > 0");
    const Eigen::Index nd = Eigen::Index(deflate.size());
    if (op.size() - nd < k) throw ParameterError("min_eigenpairs: k exceeds the problem size");

    // robust inertia count: nudge the shift if it hits an eigenvalue
    auto count = [&](Scalar s) {
        for (int attempt = 0; attempt < 8; ++attempt) {
            const Eigen::Index c = count_below(op, s);
            if (c >= 0) return std::pair{c, s};
            s += Scalar(1e-9) * (std::abs(s) + 1) * Scalar(1 + attempt);
        }
        throw ConvergenceError("min_eigenpairs: factorization breaks down near shift", double(s));
    };

    // global bounds: count(floor) = 0 and count(ceil) >= nd + 1
    Scalar floor = -1, ceil = 1;
    for (int it = 0;; ++it) {
        auto [c, s] = count(floor);
        floor = s;
        if (c == 0) break;
        if (it > 60) throw ConvergenceError("min_eigenpairs: no lower bound for the spectrum", double(floor));
        floor *= 2;
    }
    for (int it = 0;; ++it) {
        auto [c, s] = count(ceil);
        ceil = s;
        if (c >= nd + 1) break;
        if (it > 60) throw ConvergenceError("min_eigenpairs: no upper bound for the spectrum", double(ceil));
        ceil *= 4;
    }
    // bracket [a, b] of the j-th eigenvalue: count(a) < j <= count(b)
    auto bracket = [&](Eigen::Index j) {
        Scalar a = floor, b = ceil;
        for (int it = 0; it < 80; ++it) {
            if (b - a <= Scalar(0.05) * std::max(std::abs(a), std::abs(b)) + Scalar(1e-14)) break;
            auto [c, s] = count((a + b) / 2);
            (c < j ? a : b) = s;
        }
        return std::pair{a, b};
    };
    // Shift below the lowest eigenvalue, at a distance comparable to the gap up
    // to the first eigenvalue that survives deflation. Interlacing puts the
    // lowest deflated eigenvalue below that one.
    const auto [a1, b1] = bracket(1);
    const Scalar top = nd > 0 ? bracket(nd + 1).second : b1;
    Scalar sigma = a1 - (top - a1);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>> solver;
    for (int attempt = 0;; ++attempt) {
        solver.compute(shifted(op, sigma));
        if (solver.info() == Eigen::Success) break;
        if (attempt > 8) throw ConvergenceError("min_eigenpairs: shifted factorization failed", double(sigma));
        sigma -= Scalar(1e-6) * (std::abs(sigma) + 1);
    }

    Deflation<Scalar> defl(op, deflate);
    defl.prepare(solver);
    const Vec<Scalar> mdiag = op.mass.diagonal();
    const Eigen::Index p = std::min<Eigen::Index>(k + opts.extra_vectors, op.size() - nd);
    std::mt19937 rng(opts.seed);
    std::normal_distribution<double> nd01;
    Dense<Scalar> X(op.size(), p);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < op.size(); ++i) X(i, j) = Scalar(nd01(rng));
    defl.project(X);
    m_orthonormalize(X, mdiag);

    ModeSpectrum<Scalar> out;
    out.n = op.n;
    out.delta = op.delta;
    out.deflated = defl.active;
    const Eigen::SparseMatrix<Scalar> abs_stiffness = op.stiffness.cwiseAbs();
    Vec<Scalar> lam(p), res(p);
    for (int it = 1; it <= opts.max_iter; ++it) {
        Dense<Scalar> Y = solver.solve(Dense<Scalar>(mdiag.asDiagonal() * X));
        defl.constrain(Y);
        defl.project(Y);
        if (!m_orthonormalize(Y, mdiag))
            throw ConvergenceError("min_eigenpairs: subspace collapsed", 0.0);
        const Dense<Scalar> SY = op.stiffness * Y;
        Dense<Scalar> H = Y.transpose() * SY;
        H = (H + H.transpose()).eval() / 2;
        Eigen::SelfAdjointEigenSolver<Dense<Scalar>> ritz(H);
        X = Y * ritz.eigenvectors();
        const Dense<Scalar> SX = SY * ritz.eigenvectors();
        lam = ritz.eigenvalues();
        for (Eigen::Index j = 0; j < p; ++j) {
            const Vec<Scalar> r = defl.project_dual(Vec<Scalar>(SX.col(j) - lam(j) * mdiag.cwiseProduct(X.col(j))));
            res(j) = std::sqrt(r.cwiseAbs2().cwiseQuotient(mdiag).sum());
        }
        bool done = true;
        for (int j = 0; j < k; ++j) {
            // rounding floor of the residual: eps times the magnitude of the summed terms
            const Vec<Scalar> ax = X.col(j).cwiseAbs();
            const Vec<Scalar> mag = abs_stiffness * ax + std::abs(lam(j)) * mdiag.cwiseProduct(ax);
            const Scalar floor_j = std::numeric_limits<Scalar>::epsilon() *
                                   std::sqrt(mag.cwiseAbs2().cwiseQuotient(mdiag).sum());
            done = done && res(j) <= std::max(tol * std::max(Scalar(1), std::abs(lam(j))), floor_j);
        }
        if (done) {
            out.iterations = it;
            break;
        }
        if (it == opts.max_iter)
            throw ConvergenceError("min_eigenpairs: iteration cap reached", double(res.head(k).maxCoeff()));
    }
    out.eigenvalues = lam.head(k);
    out.eigenvectors = X.leftCols(k);
    out.residuals = res.head(k);

    if (op.kernel.size() == op.size()) {
        const Vec<Scalar> v = out.eigenvectors.col(0);
        const Vec<Scalar> Ek = op.energy * op.kernel;
        const Scalar vv = v.dot(op.energy * v), kk = op.kernel.dot(Ek);
        out.kernel_alignment = std::abs(v.dot(Ek)) / std::sqrt(vv * kk);
    }
    return out;
}

template <typename Scalar>
SufficientCondition<Scalar> sufficient_condition(Scalar delta) {
    if (!(delta > -1 && delta < 1)) throw ParameterError("sufficient_condition: delta must lie in (-1, 1)");
    SufficientCondition<Scalar> s;
    const Scalar d2 = delta * delta;
    s.alpha = 1 - 5 * d2;
    s.beta = 2 * (1 - d2);
    s.gamma = -3 * (1 - d2);
    s.n2_value = 5 - 21 * d2;
    s.holds = delta <= 0 && delta >= -1 / std::sqrt(Scalar(5));
    return s;
}

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::stable: return "stable";
        case Verdict::unstable: return "unstable";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

const char* tail_name(TailCondition t) {
    return t == TailCondition::certified_positive ? "certified_positive" : "not_certified";
}

const char* evidence_name(Evidence e) {
    switch (e) {
        case Evidence::eigen_positive: return "eigen_positive";
        case Evidence::eigen_negative: return "eigen_negative";
        case Evidence::certificate_negative: return "certificate_negative";
        case Evidence::solver_failure: return "solver_failure";
    }
    return "?";
}

int worker_count(int requested) {
    int n = requested > 0 ? requested : int(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("AGL_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) n = std::min(n, cap);
    }
    return n;
}

template <typename Scalar>
StabilityReport<Scalar> stability_verdict(const Profile<Scalar>& p, Scalar delta, const VerdictOptions& opts) {
    if (opts.n_max < 2) throw ParameterError("stability_verdict: need n_max >= 2");
    check_params(FormParams<Scalar>{delta, 0});
    StabilityReport<Scalar> rep;
    rep.delta = delta;
    const auto cond = sufficient_condition(delta);
    rep.tail = cond.holds ? TailCondition::certified_positive : TailCondition::not_certified;
    rep.n_max_scanned = cond.holds ? 1 : opts.n_max;
    const Scalar tol = Scalar(opts.tol);
    const Scalar margin = 100 * tol;  // eigenvalues within this of zero decide nothing

    const int count = rep.n_max_scanned + 1;
    rep.modes.resize(count);
    std::vector<std::optional<HighModeWitness<Scalar>>> high(count);
    auto work = [&](int n) {
        ModeResult<Scalar>& m = rep.modes[n];
        m.n = n;
        try {
            const ModeOperator<Scalar> op = assemble_mode_operator(p, delta, n);
            std::vector<Vec<Scalar>> defl;
            if (n == 1) defl.push_back(op.kernel);
            const ModeSpectrum<Scalar> s = min_eigenpairs(op, opts.k, tol, defl);
            m.lambda_min = s.eigenvalues(0);
            if (m.lambda_min < -margin) {
                m.evidence = Evidence::eigen_negative;
            } else if (m.lambda_min > margin) {
                m.evidence = Evidence::eigen_positive;
            } else {
                m.evidence = Evidence::solver_failure;
                m.note = "eigenvalue within solver margin of zero";
            }
        } catch (const ConvergenceError& e) {
            m.evidence = Evidence::solver_failure;
            m.note = e.what();
        }
        if (n >= 2 && delta <= -1 / std::sqrt(Scalar(5))) {
            auto attempt = high_mode_certificate(p, delta, n);
            if (attempt.witness) {
                high[n] = attempt.witness;
                m.evidence = Evidence::certificate_negative;
                m.note = "bump witness";
            }
        }
    };

    const int workers = std::min(worker_count(opts.threads), count);
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (int n; (n = next++) < count;) work(n);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    if (delta > 0) {
        for (int d : opts.dilations) {
            auto wit = positive_delta_certificate(p, delta, d);
            if (wit.form_value < 0) {
                rep.modes[0].evidence = Evidence::certificate_negative;
                rep.modes[0].note = "dilation " + std::to_string(d);
                rep.positive_witness = std::move(wit);
                break;
            }
        }
    }
    for (auto& h : high)
        if (h && !rep.high_mode_witness) rep.high_mode_witness = h;

    bool negative = false, all_positive = true;
    for (const auto& m : rep.modes) {
        negative = negative || m.evidence == Evidence::eigen_negative || m.evidence == Evidence::certificate_negative;
        all_positive = all_positive && m.evidence == Evidence::eigen_positive;
    }
    if (negative)
        rep.overall = Verdict::unstable;
    else if (all_positive && rep.tail == TailCondition::certified_positive)
        rep.overall = Verdict::stable;
    else
        rep.overall = Verdict::inconclusive;
    return rep;
}

template <typename Scalar>
Delta1Estimate<Scalar> estimate_delta1(const Profile<Scalar>& p, Scalar width, const VerdictOptions& opts) {
    if (!(width >= Scalar(1e-3))) throw ParameterError("estimate_delta1: need width >= 1e-3");
    Delta1Estimate<Scalar> est;
    est.lo = -1;
    est.hi = -1 / std::sqrt(Scalar(5));
    auto probe = [&](Scalar d) {
        est.probes.push_back(stability_verdict(p, d, opts));
        return est.probes.back().overall;
    };
    const Verdict top = probe(est.hi);
    if (top == Verdict::unstable) {
        // the certified endpoint cannot be unstable; report instead of guessing
        est.inconclusive = true;
        est.inconclusive_at.push_back(est.hi);
        return est;
    }
    if (top == Verdict::inconclusive) {
        est.inconclusive = true;
        est.inconclusive_at.push_back(est.hi);
    }
    while (est.hi - est.lo > width) {
        const Scalar mid = (est.lo + est.hi) / 2;
        const Verdict v = probe(mid);
        if (v == Verdict::unstable) {
            est.lo = mid;
            est.lo_witnessed = true;
        } else {
            if (v == Verdict::inconclusive) {
                est.inconclusive = true;
                est.inconclusive_at.push_back(mid);
            }
            est.hi = mid;
        }
    }
    return est;
}

template ModeOperator<double> assemble_mode_operator<double>(const Profile<double>&, double, int);
template ModePair<double> expand<double>(const ModeOperator<double>&, const Vec<double>&);
template Vec<double> restrict_pair<double>(const ModeOperator<double>&, const ModePair<double>&);
template Eigen::Index count_below<double>(const ModeOperator<double>&, double);
template ModeSpectrum<double> min_eigenpairs<double>(const ModeOperator<double>&, int, double,
                                                     const std::vector<Vec<double>>&, EigenOptions);
template SufficientCondition<double> sufficient_condition<double>(double);
template StabilityReport<double> stability_verdict<double>(const Profile<double>&, double, const VerdictOptions&);
template Delta1Estimate<double> estimate_delta1<double>(const Profile<double>&, double, const VerdictOptions&);

}  // namespace agl
