#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "agl/spectrum.hpp"
#include "support.hpp"

using namespace agl;
using agl::test::default_profile;
using agl::test::rel;

namespace {

using P = FormParams<double>;

const Profile<double>& wide_profile() {
    static const Profile<double> p = solve_profile(build_grid(1e-3, 1000.0, 4096, GridKind::geometric), 1e-10);
    return p;
}

double form_of(const Profile<double>& p, double delta, int n, const ModePair<double>& m) {
    return n == 0 ? eval_Q0(p, delta, m.phi, m.psi).total : eval_Qn(p, P{delta, n}, m).total;
}

}  // namespace

TEST_CASE("pencil is symmetric and the mass is positive") {
    const auto& p = default_profile();
    for (int n : {0, 1, 2, 7})
        for (double d : {-0.8, 0.0, 0.6}) {
            const auto op = assemble_mode_operator(p, d, n);
            const Eigen::SparseMatrix<double> S = op.stiffness, St = S.transpose();
            CHECK((S - St).norm() <= 1e-12 * S.norm());
            CHECK(op.mass.diagonal().minCoeff() > 0);
            CHECK(op.mass.nonZeros() == op.size());
        }
    CHECK_THROWS_AS(assemble_mode_operator(p, 1.0, 2), ParameterError);
    CHECK_THROWS_AS(assemble_mode_operator(p, 0.1, -1), ParameterError);
}

TEST_CASE("matrix form reproduces the quadrature form") {
    const auto& p = default_profile();
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    for (int n : {0, 1, 3, 10})
        for (double d : {-0.9, -0.4, 0.2}) {
            const auto op = assemble_mode_operator(p, d, n);
            Vec<double> x(op.size());
            for (auto& v : x) v = nd(rng);
            const double quad = x.dot(op.stiffness * x);
            CHECK(rel(quad, form_of(p, d, n, expand(op, x))) <= 1e-8);
            CHECK((restrict_pair(op, expand(op, x)) - x).cwiseAbs().maxCoeff() == 0.0);
        }
}

TEST_CASE("mode one kernel") {
    const auto& p = wide_profile();
    const auto op = assemble_mode_operator(p, -0.3, 1);
    REQUIRE(op.kernel.size() == op.size());
    const double rq = op.kernel.dot(op.stiffness * op.kernel) / op.kernel.dot(op.energy * op.kernel);
    CHECK(std::abs(rq) <= 1e-6);

    const auto s = min_eigenpairs(op, 2, 1e-8);
    CHECK(std::abs(s.eigenvalues(0)) <= 1e-4);
    CHECK(s.kernel_alignment >= 0.999);
    CHECK(s.eigenvalues(1) > 0);

    const auto sd = min_eigenpairs(op, 1, 1e-8, {op.kernel});
    CHECK(sd.deflated);
    CHECK(sd.eigenvalues(0) > 0);
    const Vec<double> v = sd.eigenvectors.col(0);
    CHECK(std::abs(v.dot(op.mass * op.kernel)) <= 1e-10 * std::sqrt(op.kernel.dot(op.mass * op.kernel)));
    CHECK_THROWS_AS(min_eigenpairs(op, 1, 1e-8, {Vec<double>::Ones(3)}), ShapeError);
}

TEST_CASE("eigenvalue signs") {
    const auto& p = default_profile();
    CHECK(min_eigenpairs(assemble_mode_operator(p, -0.3, 2), 1, 1e-8).eigenvalues(0) > 0);
    CHECK(min_eigenpairs(assemble_mode_operator(p, 0.0, 0), 1, 1e-8).eigenvalues(0) > 0);
    CHECK(min_eigenpairs(assemble_mode_operator(p, 0.5, 0), 1, 1e-8).eigenvalues(0) < 0);
}

TEST_CASE("eigenpairs satisfy their residual bound and Rayleigh quotient") {
    const auto& p = default_profile();
    for (int n : {0, 2, 5})
        for (double d : {-0.6, 0.3}) {
            const auto op = assemble_mode_operator(p, d, n);
            const auto s = min_eigenpairs(op, 3, 1e-8);
            for (int j = 0; j < 3; ++j) {
                if (j) CHECK(s.eigenvalues(j) >= s.eigenvalues(j - 1));
                const Vec<double> x = s.eigenvectors.col(j);
                const double rq = x.dot(op.stiffness * x) / x.dot(op.mass * x);
                CHECK(std::abs(rq - s.eigenvalues(j)) <= 1e-8 * std::max(1.0, std::abs(s.eigenvalues(j))));
                // residual in the dual mass norm
                const Vec<double> r = op.stiffness * x - s.eigenvalues(j) * (op.mass * x);
                const double rn = std::sqrt(r.cwiseAbs2().cwiseQuotient(op.mass.diagonal()).sum());
                CHECK(rn <= std::max(1e-8 * std::max(1.0, std::abs(s.eigenvalues(j))), 1e-7));
            }
            CHECK(count_below(op, s.eigenvalues(0) - 1e-6) == 0);
            CHECK(count_below(op, s.eigenvalues(2) + 1e-6) >= 3);
        }
}

TEST_CASE("negative certificate implies a negative eigenvalue on its domain") {
    const auto& p = default_profile();
    const auto w = positive_delta_certificate(p, 0.5, 8);
    REQUIRE(w.form_value < 0);
    const auto pw = solve_profile(w.grid, 1e-10);
    CHECK(w.grid.r_max >= w.support_hi);
    CHECK(min_eigenpairs(assemble_mode_operator(pw, 0.5, 0), 1, 1e-8).eigenvalues(0) < 0);
}

TEST_CASE("sufficient condition") {
    const auto a = sufficient_condition(-0.3);
    CHECK(a.holds);
    CHECK_FALSE(sufficient_condition(-0.5).holds);
    const auto z = sufficient_condition(0.0);
    CHECK(z.holds);
    CHECK(z.alpha == 1.0);
    CHECK(z.beta == 2.0);
    CHECK(z.gamma == -3.0);
    CHECK(z.n2_value == 5.0);
    CHECK(sufficient_condition(-1 / std::sqrt(5.0)).holds);
    CHECK_FALSE(sufficient_condition(0.01).holds);
    CHECK_THROWS_AS(sufficient_condition(1.0), ParameterError);
}

TEST_CASE("verdicts") {
    const auto& p = default_profile();
    SUBCASE("delta = -0.3 is stable with a certified tail") {
        const auto rep = stability_verdict(p, -0.3);
        CHECK(rep.overall == Verdict::stable);
        CHECK(rep.tail == TailCondition::certified_positive);
        CHECK(rep.n_max_scanned == 1);
        REQUIRE(rep.modes.size() == 2);
        CHECK(rep.modes[0].lambda_min > 0);
        CHECK(rep.modes[1].lambda_min > 0);
    }
    SUBCASE("delta = 0.2 is unstable through mode zero") {
        const auto rep = stability_verdict(p, 0.2, {.n_max = 2});
        CHECK(rep.overall == Verdict::unstable);
        CHECK(rep.modes[0].evidence == Evidence::certificate_negative);
        REQUIRE(rep.positive_witness);
        CHECK(rep.positive_witness->form_value < 0);
    }
    SUBCASE("uncertified tail is never stable") {
        const auto rep = stability_verdict(p, -0.6, {.n_max = 4});
        CHECK(rep.tail == TailCondition::not_certified);
        CHECK(rep.overall != Verdict::stable);
        CHECK(rep.n_max_scanned == 4);
    }
    CHECK_THROWS_AS(stability_verdict(p, -0.3, {.n_max = 1}), ParameterError);
}

TEST_CASE("stored positive-delta witness stays negative for larger delta") {
    const auto& p = default_profile();
    const auto w = positive_delta_certificate(p, 0.5, 16);
    REQUIRE(w.form_value < 0);
    const auto pw = solve_profile(w.grid, 1e-10);
    const Vec<double> zero = Vec<double>::Zero(w.grid.size());
    const Vec<double> v = pw.f.cwiseProduct(w.chi);
    // Q0 is affine in delta and nonnegative at delta = 0
    CHECK(eval_Q0(pw, 0.0, zero, v).total >= 0);
    for (double d = 0.5; d < 0.99; d += 0.05) CHECK(eval_Q0(pw, d, zero, v).total < 0);
}

TEST_CASE("delta1 estimator preconditions") {
    const auto& p = default_profile();
    CHECK_THROWS_AS(estimate_delta1(p, 1e-4), ParameterError);
}

TEST_CASE("worker cap from the environment") {
    setenv("AGL_THREADS", "2", 1);
    CHECK(worker_count(0) <= 2);
    CHECK(worker_count(8) == 2);
    CHECK(worker_count(1) == 1);
    unsetenv("AGL_THREADS");
    CHECK(worker_count(3) == 3);
}
