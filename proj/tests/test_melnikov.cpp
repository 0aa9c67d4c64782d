#include <catch2/catch_amalgamated.hpp>

#include "magrod/analytic.hpp"
#include "magrod/melnikov.hpp"

using namespace magrod;

namespace {
const Params small_mu = Params::scaled(0.5, 1e-3, 1e-4, 0.01, 0.0);
}

TEST_CASE("splitting integrand vanishes for self and commuting perturbations") {
    // Perturbing by the energy itself, or by the first integral of the
    // unperturbed flow, cannot split the manifolds: the integrand is zero
    // pointwise, not merely on average.
    MelnikovProblem pr = rod_problem(small_mu);
    MelnikovProblem self = pr;
    self.grad_H1 = pr.grad_H0;
    MelnikovProblem commuting = pr;
    commuting.grad_H1 = pr.grad_K;
    for (double t : {-6.0, -1.0, 0.0, 2.5, 9.0})
        for (double kappa : {0.3, 1.2, 2.8, 4.4}) {
            CHECK(std::abs(melnikov_integrand(self, t, kappa)) < 1e-14);
            CHECK(std::abs(melnikov_integrand(commuting, t, kappa)) < 1e-14);
        }
}

TEST_CASE("splitting function is antisymmetric over half a period") {
    for (double gh : {0.0, 1.0}) {
        const Params p = Params::scaled(0.5, 1e-3, 1e-4, 0.01, gh);
        const MelnikovProblem pr = rod_problem(p);
        for (double kappa : {0.2, 0.9, 2.5}) {
            const double a = melnikov(pr, kappa, {});
            const double b = melnikov(pr, kappa + pi, {});
            CHECK(a == Catch::Approx(-b).margin(1e-12));
        }
    }
}

TEST_CASE("quadrature reproduces the closed-form leading order") {
    const MelnikovProblem pr = rod_problem(small_mu);
    for (double kappa : {0.5, 1.6, 3.9}) {
        const double quad = melnikov(pr, kappa, {});
        const double lead = melnikov_leading(kappa, 0.5, 1e-3, 1e-4);
        CHECK(quad == Catch::Approx(lead).margin(2e-3 * std::sqrt(1e-3)));
    }
}

TEST_CASE("the two sign branches produce opposite splitting functions") {
    const MelnikovProblem plus = rod_problem(small_mu, +1);
    const MelnikovProblem minus = rod_problem(small_mu, -1);
    for (double kappa : {0.7, 2.1})
        CHECK(melnikov(plus, kappa, {}) ==
              Catch::Approx(-melnikov(minus, kappa, {})).margin(1e-12));
}

TEST_CASE("family accessor matches the closed forms") {
    const MelnikovProblem pr = rod_problem(small_mu);
    const HomoclinicFamily f(0.5, +1, 1.3);
    const Vec4 a = pr.family(0.8, 1.3);
    const Vec4 b = f.state(0.8).vec();
    CHECK((a - b).norm() < 1e-13);
}

TEST_CASE("simple zeros sit at the half-period points") {
    for (double gh : {0.0, 1.0}) {
        const Params p = Params::scaled(0.5, 1e-3, 1e-4, 0.01, gh);
        const auto res = find_simple_zeros(rod_problem(p), 64, {});
        REQUIRE(res.kappa_grid.size() == 64);
        REQUIRE(res.M_values.size() == 64);
        REQUIRE(res.zeros.size() == 2);
        CHECK(std::abs(res.zeros[0].kappa - 0.0) < 1e-2);
        CHECK(std::abs(res.zeros[1].kappa - pi) < 1e-2);
        CHECK(res.zeros[0].simple);
        CHECK(res.zeros[1].simple);
        // slopes at consecutive simple zeros alternate in sign
        CHECK(res.zeros[0].dM * res.zeros[1].dM < 0.0);
    }
}

TEST_CASE("rod problem validates its parameter regime") {
    // nu >= mu/4: too close to the equilibrium-existence boundary for the
    // leading-order family to be meaningful
    const Params bad = Params::direct(0.5, 1e-3, 6e-4, 0.01, 0.0);
    CHECK_THROWS_AS(rod_problem(bad), RegimeViolation);
    CHECK_THROWS_AS(rod_problem(Params::direct(0.2, 1e-3, 0.0, 0.01, 0.0)),
                    NotSaddleFocus);
}

TEST_CASE("a truncated window is covered by the reported error bound") {
    const MelnikovProblem pr = rod_problem(small_mu);
    auto at = [&](double W) {
        QuadratureConfig q;
        q.half_width = W;
        return quad_realline(
            [&](double t) { return melnikov_integrand(pr, t, 0.9); }, q);
    };
    const auto narrow = at(4.0);
    const auto wide = at(50.0);
    CHECK(std::abs(narrow.value - wide.value) <= narrow.error_bound);
    CHECK(wide.error_bound < 1e-9);
    CHECK(std::abs(narrow.value - wide.value) > 1e-3);
}
