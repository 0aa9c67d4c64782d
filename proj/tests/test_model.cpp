#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "magrod/model.hpp"

using namespace magrod;

namespace {

// Central-difference gradient of a scalar function of the state.
template <class F>
Vec4 fd_gradient(F&& f, const State& s, double h = 1e-6) {
    Vec4 g;
    const Vec4 x = s.vec();
    for (int i = 0; i < 4; ++i) {
        Vec4 lo = x, hi = x;
        lo[i] -= h;
        hi[i] += h;
        g[i] = (f(State::from_vec(hi)) - f(State::from_vec(lo))) / (2.0 * h);
    }
    return g;
}

State random_state(std::mt19937& rng) {
    std::uniform_real_distribution<double> th(0.2, 2.9), ps(-3.0, 3.0),
        pt(-1.0, 1.0), pp(0.0, 0.95);
    return {th(rng), ps(rng), pt(rng), pp(rng)};
}

const Params figure = Params::direct(0.5, 0.1, 0.01, 0.01, 0.0);

} // namespace

TEST_CASE("energy and first integral at a spot-checked state") {
    // Hand-expanded term by term, written differently from the library.
    const State s{0.3, 0.1, 0.0, 0.9};
    const Params p = Params::direct(0.5, 0.1, 0.0, 0.0, 0.0);
    const double c = std::cos(0.3), sn = std::sin(0.3);
    const double kinetic = 0.5 * sq((0.9 - c) / sn);
    const double well = p.alpha * c * (1.0 + 0.5 * p.gamma * c);
    const double rad = p.mu - 2.0 * p.nu * 0.9;
    const double coupling = (1.0 + p.gamma * c) * sn * std::cos(0.1) *
                            std::sqrt(rad);
    const double quad_term =
        (p.gamma / (2.0 * p.alpha)) * sq(sn) * sq(std::cos(0.1)) * rad;
    const double expected =
        kinetic + well + coupling + quad_term - p.eps * 0.9;
    CHECK(hamiltonian(s, p) == Catch::Approx(expected).epsilon(1e-14));
    CHECK(hamiltonian(s, p) == Catch::Approx(0.5881845607259826).epsilon(1e-13));
    CHECK(first_integral(s, p) ==
          Catch::Approx(1.1985430243901618).epsilon(1e-13));
}

TEST_CASE("equations of motion are the symplectic gradient of the energy") {
    std::mt19937 rng(71);
    const Mat4 J = symplectic_j();
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const State s = random_state(rng);
        const Vec4 g = fd_gradient(
            [&](const State& x) { return hamiltonian(x, figure); }, s);
        const Vec4 f = vector_field(s, figure).vec();
        worst = std::max(worst, (f - J * g).norm() / std::max(1.0, f.norm()));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("jacobian matches finite differences of the field") {
    std::mt19937 rng(72);
    for (int k = 0; k < 50; ++k) {
        const State s = random_state(rng);
        const Mat4 a = jacobian(s, figure);
        Mat4 fd;
        const double h = 1e-6;
        for (int j = 0; j < 4; ++j) {
            Vec4 lo = s.vec(), hi = s.vec();
            lo[j] -= h;
            hi[j] += h;
            fd.col(j) = (vector_field(State::from_vec(hi), figure).vec() -
                         vector_field(State::from_vec(lo), figure).vec()) /
                        (2.0 * h);
        }
        REQUIRE((a - fd).norm() < 1e-5 * std::max(1.0, a.norm()));
    }
}

TEST_CASE("reversing psi and p_theta reverses time for all parameters") {
    // R(theta, psi, p_theta, p_psi) = (theta, -psi, -p_theta, p_psi)
    // conjugates the flow with t -> -t, so f(Rx) = -R f(x) exactly, even
    // with the magnetic and extensibility terms switched on.
    std::mt19937 rng(73);
    const Params p = Params::direct(0.7, 0.2, 0.03, 0.05, 0.08);
    for (int k = 0; k < 100; ++k) {
        const State s = random_state(rng);
        const State rs{s.theta, -s.psi, -s.p_theta, s.p_psi};
        const State f = vector_field(s, p);
        const State fr = vector_field(rs, p);
        CHECK(fr.theta == Catch::Approx(-f.theta).margin(1e-13));
        CHECK(fr.psi == Catch::Approx(f.psi).margin(1e-13));
        CHECK(fr.p_theta == Catch::Approx(f.p_theta).margin(1e-13));
        CHECK(fr.p_psi == Catch::Approx(-f.p_psi).margin(1e-13));
    }
}

TEST_CASE("first integral commutes with the unperturbed flow") {
    std::mt19937 rng(74);
    const Params p = Params::direct(0.5, 0.1, 0.01, 0.0, 0.0);
    for (int k = 0; k < 100; ++k) {
        const State s = random_state(rng);
        const Vec4 gH = fd_gradient(
            [&](const State& x) { return hamiltonian(x, p); }, s);
        const Vec4 gF = fd_gradient(
            [&](const State& x) { return first_integral(x, p); }, s);
        const double bracket = gF.dot(symplectic_j() * gH);
        CHECK(std::abs(bracket) < 1e-6);
    }
}

TEST_CASE("axial momentum is frozen when both magnetic terms vanish") {
    std::mt19937 rng(75);
    const Params p = Params::direct(0.5, 0.0, 0.0, 0.02, 0.05);
    for (int k = 0; k < 100; ++k) {
        const State s = random_state(rng);
        CHECK(std::abs(vector_field(s, p).p_psi) < 1e-15);
    }
}

TEST_CASE("domain restrictions raise named errors") {
    const Params p = figure;
    CHECK_THROWS_AS(hamiltonian({0.0, 0.1, 0.2, 0.5}, p), SingularState);
    CHECK_THROWS_AS(vector_field({pi, 0.1, 0.2, 0.5}, p), SingularState);
    CHECK_THROWS_AS(hamiltonian({1e-11, 0.1, 0.2, 0.5}, p), SingularState);

    // mu - 2 nu p_psi < 0 makes the coupling term imaginary.
    const Params bad = Params::direct(0.5, 0.1, 0.2, 0.01, 0.0);
    CHECK_THROWS_AS(hamiltonian({1.0, 0.0, 0.0, 0.9}, bad), NegativeRadicand);
    CHECK_THROWS_AS(vector_field({1.0, 0.0, 0.0, 0.9}, bad),
                    NegativeRadicand);

    // Error names are part of the diagnostic interface.
    try {
        hamiltonian({0.0, 0.0, 0.0, 0.5}, p);
        FAIL("expected SingularState");
    } catch (const Error& e) {
        CHECK(std::string(e.name()) == "SingularState");
    }
}

TEST_CASE("parameter factories agree on the shear scaling convention") {
    const Params a = Params::direct(0.5, 0.1, 0.01, 0.02, 0.004);
    CHECK(a.gamma_hat == Catch::Approx(0.2));
    const Params b = Params::scaled(0.5, 0.1, 0.01, 0.02, 0.2);
    CHECK(b.gamma == Catch::Approx(0.004));
    CHECK(hamiltonian({1.0, 0.5, 0.2, 0.7}, a) ==
          Catch::Approx(hamiltonian({1.0, 0.5, 0.2, 0.7}, b)).epsilon(1e-15));
    const Params u = Params::unperturbed(0.5, 0.1, 0.01);
    CHECK(u.eps == 0.0);
    CHECK(u.gamma == 0.0);
}

TEST_CASE("first integral reduces to the axial momentum without magnetism") {
    std::mt19937 rng(76);
    // With the magnetic terms on, the integral picks up theta/psi parts.
    const Params p = Params::direct(0.5, 0.1, 0.01, 0.0, 0.0);
    const State probe{0.3, 0.1, 0.0, 0.9};
    CHECK(std::abs(first_integral(probe, p) - probe.p_psi) > 1e-3);
    // mu = nu = 0: the integral is p_psi itself.
    const Params q = Params::direct(0.5, 0.0, 0.0, 0.02, 0.05);
    for (int k = 0; k < 20; ++k) {
        const State s = random_state(rng);
        CHECK(std::abs(first_integral(s, q) - s.p_psi) < 1e-14);
    }
}

TEST_CASE("dimensional constants map onto the dimensionless groups") {
    PhysicalParams ph;
    ph.B = 2.0;
    ph.Jshear = 8.0;
    ph.Kaxial = 4.0;
    ph.lambda = 0.05;
    ph.C1 = 1.3;
    ph.C2 = 1.1;
    ph.p_phi = 2.0;
    const Nondim n = nondimensionalize(ph);
    CHECK(n.params.alpha == Catch::Approx(2.0 * 1.1 / 4.0));
    CHECK(n.params.mu ==
          Catch::Approx(4.0 * (2.0 * 1.3 - 1.21) / 16.0));
    CHECK(n.params.nu == Catch::Approx(0.05 * 4.0 / 8.0));
    CHECK(n.params.eps == Catch::Approx(0.05 * 2.0 / 16.0));
    CHECK(n.params.gamma == Catch::Approx(1.1 * (0.25 - 0.125)));
    CHECK(n.scales.momentum == Catch::Approx(2.0));
    CHECK(n.scales.energy == Catch::Approx(2.0));

    ph.p_phi = 0.0;
    CHECK_THROWS_AS(nondimensionalize(ph), ZeroScale);
    ph.p_phi = 2.0;
    ph.B = -1.0;
    CHECK_THROWS_AS(nondimensionalize(ph), ZeroScale);
}

TEST_CASE("angle wrapping stays in the principal interval") {
    CHECK(wrap_angle(0.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(wrap_angle(3.0 * pi) == Catch::Approx(-pi).margin(1e-12));
    CHECK(wrap_angle(-3.0 * pi) == Catch::Approx(-pi).margin(1e-12));
    for (double x : {-15.0, -2.0, 0.4, 7.7, 123.0})
        CHECK(std::abs(wrap_angle(x)) <= pi + 1e-12);
}
