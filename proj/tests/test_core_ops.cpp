#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "qfb/core_ops.hpp"

using namespace qfb;

namespace {

Operator2 random_hermitian(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Operator2 a;
    a << complex(n(rng), n(rng)), complex(n(rng), n(rng)),
         complex(n(rng), n(rng)), complex(n(rng), n(rng));
    return hermitize(a);
}

Operator2 random_operator(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Operator2 a;
    a << complex(n(rng), n(rng)), complex(n(rng), n(rng)),
         complex(n(rng), n(rng)), complex(n(rng), n(rng));
    return a;
}

double op_dist(const Operator2& a, const Operator2& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("vectorize / unvectorize round-trip (column stacking)") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 20; ++i) {
        Operator2 a = random_operator(rng);
        CHECK(op_dist(unvectorize(vectorize(a)), a) == 0.0);
    }
    // Column-stacking order: (a00, a10, a01, a11).
    Operator2 a;
    a << 1.0, 3.0, 2.0, 4.0;
    OpVec v = vectorize(a);
    CHECK(v(0) == complex(1));
    CHECK(v(1) == complex(2));
    CHECK(v(2) == complex(3));
    CHECK(v(3) == complex(4));
}

TEST_CASE("liouvillian_apply: pure Hamiltonian commutator") {
    // H = sz/2, tau = sx: -i[H, sx] = sy.
    Operator2 h = 0.5 * pauli::sz;
    Operator2 out = liouvillian_apply(h, {}, pauli::sx);
    CHECK(op_dist(out, pauli::sy) < 1e-14);
}

TEST_CASE("liouvillian_apply: decay channel on the excited projector") {
    // Single channel sm: L[P+] = -P+ + P- (pure decay).
    std::vector<Operator2> ch{pauli::sm};
    Operator2 p_minus = pauli::ground * pauli::ground.adjoint();
    Operator2 out = liouvillian_apply(Operator2::Zero(), ch, pauli::p_plus);
    CHECK(op_dist(out, p_minus - pauli::p_plus) < 1e-14);
    // Ground state is stationary for pure decay.
    Operator2 out2 = liouvillian_apply(Operator2::Zero(), ch, p_minus);
    CHECK(out2.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("liouvillian_apply preserves the trace") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 100; ++i) {
        Operator2 h = random_hermitian(rng);
        std::vector<Operator2> ch{random_operator(rng), random_operator(rng)};
        Operator2 tau = random_operator(rng);
        Operator2 out = liouvillian_apply(h, ch, tau);
        CHECK(std::abs(out.trace()) < 1e-12);
    }
}

TEST_CASE("liouvillian_apply rejects a non-Hermitian Hamiltonian") {
    CHECK_THROWS_AS(liouvillian_apply(pauli::sm, {}, pauli::sx), std::invalid_argument);
    CHECK_THROWS_AS(superop_matrix(pauli::sp, {}), std::invalid_argument);
}

TEST_CASE("superop_matrix agrees with liouvillian_apply on a basis") {
    std::mt19937_64 rng(3);
    Operator2 h = random_hermitian(rng);
    std::vector<Operator2> ch{random_operator(rng), random_operator(rng),
                              random_operator(rng)};
    SuperOp2 g = superop_matrix(h, ch);
    for (int i = 0; i < 4; ++i) {
        OpVec e = OpVec::Zero();
        e(i) = 1.0;
        Operator2 basis = unvectorize(e);
        Operator2 direct = liouvillian_apply(h, ch, basis);
        CHECK(op_dist(unvectorize(g * e), direct) < 1e-12);
    }
    // Trace preservation in matrix form: tr-row of G vanishes,
    // i.e. vec(id)^dagger G = 0.
    OpVec tr_row = g.adjoint() * vectorize(pauli::id);
    CHECK(tr_row.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sandwich and diffusive superoperators") {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 20; ++i) {
        Operator2 a = random_operator(rng), b = random_operator(rng),
                  tau = random_operator(rng);
        Operator2 via = unvectorize(sandwich_superop(a, b) * vectorize(tau));
        CHECK(op_dist(via, a * tau * b) < 1e-12);
        Operator2 diff = unvectorize(diffusive_superop(a) * vectorize(tau));
        CHECK(op_dist(diff, a * tau + tau * a.adjoint()) < 1e-12);
    }
}

TEST_CASE("superop_exp basics") {
    SuperOp2 zero = SuperOp2::Zero();
    CHECK((superop_exp(zero, 3.0) - SuperOp2::Identity()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK_THROWS_AS(superop_exp(zero, -0.5), std::invalid_argument);

    std::mt19937_64 rng(5);
    Operator2 h = random_hermitian(rng);
    std::vector<Operator2> ch{random_operator(rng)};
    SuperOp2 g = superop_matrix(h, ch);
    // Semigroup property.
    SuperOp2 lhs = superop_exp(g, 0.7) * superop_exp(g, 0.5);
    SuperOp2 rhs = superop_exp(g, 1.2);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
    // Euler-product oracle.
    SuperOp2 euler = SuperOp2::Identity();
    const int n = 200000;
    double h_step = 0.5 / n;
    SuperOp2 one_step = SuperOp2::Identity() + h_step * g;
    for (int i = 0; i < n; ++i) euler = one_step * euler;
    CHECK((euler - superop_exp(g, 0.5)).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("superop_exp maps density operators to density operators") {
    std::mt19937_64 rng(6);
    Operator2 h = random_hermitian(rng);
    std::vector<Operator2> ch{random_operator(rng), random_operator(rng)};
    SuperOp2 g = superop_matrix(h, ch);
    Operator2 rho = maximally_mixed();
    for (double t : {0.1, 1.0, 10.0}) {
        Operator2 out = unvectorize(superop_exp(g, t) * vectorize(rho));
        CHECK(is_density_operator(out, 1e-8, 1e-8, 1e-8));
    }
}

TEST_CASE("choi_min_eigenvalue separates CP from non-CP maps") {
    // Identity map: Choi = |Omega><Omega| (unnormalized), min eigenvalue 0.
    SuperOp2 id = SuperOp2::Identity();
    CHECK(choi_min_eigenvalue(id) == doctest::Approx(0.0).epsilon(1e-12));
    // Transpose map is positive but not CP: min Choi eigenvalue -1.
    SuperOp2 transpose = SuperOp2::Zero();
    transpose(0, 0) = transpose(3, 3) = 1.0;
    transpose(1, 2) = transpose(2, 1) = 1.0;
    CHECK(choi_min_eigenvalue(transpose) == doctest::Approx(-1.0).epsilon(1e-12));
    // e^{Gt} is CP for Lindblad G on a grid of times.
    std::mt19937_64 rng(7);
    Operator2 h = random_hermitian(rng);
    std::vector<Operator2> ch{random_operator(rng)};
    SuperOp2 g = superop_matrix(h, ch);
    for (int i = 0; i <= 10; ++i)
        CHECK(choi_min_eigenvalue(superop_exp(g, 0.5 * i)) > -1e-9);
}

TEST_CASE("stationary_state of a pure-decay generator") {
    std::vector<Operator2> ch{pauli::sm};
    SuperOp2 g = superop_matrix(Operator2::Zero(), ch);
    Operator2 rho = stationary_state(g);
    Operator2 p_minus = pauli::ground * pauli::ground.adjoint();
    CHECK(op_dist(rho, p_minus) < 1e-10);
    // Driven-damped atom: stationary state satisfies L[rho] = 0, unit trace.
    Operator2 h = 0.8 * pauli::sx + 0.3 * pauli::sz;
    SuperOp2 g2 = superop_matrix(h, ch);
    Operator2 rho2 = stationary_state(g2);
    CHECK(std::abs(rho2.trace() - complex(1)) < 1e-12);
    CHECK(liouvillian_apply(h, ch, rho2).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(is_density_operator(rho2, 1e-9, 1e-9, 1e-9));
}

TEST_CASE("is_density_operator") {
    CHECK(is_density_operator(maximally_mixed()));
    CHECK(is_density_operator(pauli::p_plus));
    CHECK_FALSE(is_density_operator(2.0 * maximally_mixed()));   // trace 2
    CHECK_FALSE(is_density_operator(pauli::sz));                 // negative eigenvalue
    CHECK_FALSE(is_density_operator(pauli::sm + pauli::p_plus)); // non-Hermitian
}
