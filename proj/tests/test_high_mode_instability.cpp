// Instability near delta = -1 through high Fourier modes. These checks are
// kept as stated even though the bump construction does not produce a
// negative value on this discretization; see the project notes.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "agl/spectrum.hpp"
#include "support.hpp"

using namespace agl;
using agl::test::default_profile;

TEST_CASE("bump on the alpha-negative window at delta = -0.95, n = 40") {
    const auto& p = default_profile();
    const auto a = high_mode_certificate(p, -0.95, 40);
    MESSAGE("window found: " << a.window_found << ", " << a.diagnostic);
    REQUIRE(a.window_found);
    const Vec<double> zeta = test::bump(p.grid, a.r0, a.r0 + 1);
    CHECK(eval_Bn_formula(p, FormParams<double>{-0.95, 40}, zeta, zeta).total < 0);
}

TEST_CASE("some finite mode is unstable at delta = -0.95") {
    const auto& p = default_profile();
    const auto m = find_unstable_mode(p, -0.95, 256);
    REQUIRE(m);
    CHECK(m->witness.form_value < 0);
}

TEST_CASE("some mode n <= 256 is unstable at delta = -0.98") {
    const auto& p = default_profile();
    const auto m = find_unstable_mode(p, -0.98, 256);
    REQUIRE(m);
    SUBCASE("witness round trip through the full pair substitution") {
        const auto pair = ansatz_pair(p, m->witness.zeta, m->witness.zeta);
        const double q = eval_Qn(p, FormParams<double>{-0.98, m->n}, pair).total / 2;
        CHECK(q < 0);
        CHECK(std::abs(q - m->witness.form_value) <= 1e-8 * std::abs(q));
    }
    SUBCASE("eigensolver agrees on the same domain") {
        CHECK(min_eigenpairs(assemble_mode_operator(p, -0.98, m->n), 1, 1e-8).eigenvalues(0) < 0);
    }
}

TEST_CASE("verdict at delta = -0.97 is unstable at some n >= 2") {
    const auto rep = stability_verdict(default_profile(), -0.97);
    CHECK(rep.overall == Verdict::unstable);
    bool high = false;
    for (const auto& m : rep.modes)
        high = high || (m.n >= 2 && (m.evidence == Evidence::eigen_negative ||
                                     m.evidence == Evidence::certificate_negative));
    CHECK(high);
}
