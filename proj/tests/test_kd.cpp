#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "kdc/kd.hpp"
#include "kdc/rng.hpp"

using namespace kdc;

namespace {
const double kSqrt2 = std::sqrt(2.0);
}

TEST_CASE("the exact table for the imaginary qubit state") {
    // a = computational, b = Hadamard, psi = (|0> + i|1>)/sqrt 2:
    //   Q = [[ (1-i)/4, (1+i)/4 ], [ (1+i)/4, (1-i)/4 ]]
    const BasisPair basis = BasisPair::mub_qubit();
    const KDDistribution q = kd_distribution(DensityMatrix::pure(kdct::plus_i()), basis);
    CHECK(std::abs(q.q(0, 0) - Cx(0.25, -0.25)) < 1e-14);
    CHECK(std::abs(q.q(0, 1) - Cx(0.25, 0.25)) < 1e-14);
    CHECK(std::abs(q.q(1, 0) - Cx(0.25, 0.25)) < 1e-14);
    CHECK(std::abs(q.q(1, 1) - Cx(0.25, -0.25)) < 1e-14);
    CHECK(q.nonpositivity() == doctest::Approx(kSqrt2 - 1.0).epsilon(1e-13));
    // columns and rows sum to the outcome probabilities (all 1/2 here)
    for (int i = 0; i < 2; ++i) {
        CHECK(q.b_marginals()[i] == doctest::Approx(0.5).epsilon(1e-13));
        CHECK(q.a_marginals()[i] == doctest::Approx(0.5).epsilon(1e-13));
    }
}

TEST_CASE("basis states have zero nonpositivity, entries real") {
    for (int d : {2, 3, 4}) {
        const BasisPair basis = BasisPair::fourier_pair(d);
        for (int i = 0; i < d; ++i) {
            const KDDistribution qa =
                kd_distribution(DensityMatrix::pure(kdct::basis_state(d, i)), basis);
            CHECK(qa.nonpositivity() >= 0.0);  // small negatives clamp to exactly zero
            CHECK(qa.nonpositivity() < 1e-12);
            const KDDistribution qb = kd_distribution(
                DensityMatrix::pure(PureState(basis.b(i))), basis);
            CHECK(qb.nonpositivity() >= 0.0);
            CHECK(qb.nonpositivity() < 1e-12);
        }
        // the maximally mixed state is positive for any pair
        const KDDistribution qm =
            kd_distribution(DensityMatrix::maximally_mixed(d), BasisPair::random_pair(d, 17));
        CHECK(qm.nonpositivity() == 0.0);
    }
}

TEST_CASE("KD is linear in the state; nonpositivity is convex") {
    const BasisPair basis = BasisPair::random_pair(3, 501);
    const DensityMatrix r1 = kdct::random_state(3, 1);
    const DensityMatrix r2 = kdct::random_state(3, 2);
    for (double t : {0.1, 0.5, 0.77}) {
        const DensityMatrix mix =
            DensityMatrix((1 - t) * r1.matrix() + t * r2.matrix());
        const CMatrix want =
            (1 - t) * kd_distribution(r1, basis).q() + t * kd_distribution(r2, basis).q();
        CHECK((kd_distribution(mix, basis).q() - want).cwiseAbs().maxCoeff() < 1e-13);
        CHECK(kd_distribution(mix, basis).nonpositivity() <=
              (1 - t) * kd_distribution(r1, basis).nonpositivity() +
                  t * kd_distribution(r2, basis).nonpositivity() + 1e-12);
    }
}

TEST_CASE("mixing toward the maximally mixed state bleeds the negativity out") {
    const BasisPair basis = BasisPair::mub_qubit();
    const DensityMatrix psi = DensityMatrix::pure(kdct::plus_i());
    const double n0 = kd_distribution(psi, basis).nonpositivity();
    double prev = n0;
    for (double t : {0.25, 0.5, 0.9, 0.999}) {
        const DensityMatrix mix = DensityMatrix(
            (1 - t) * psi.matrix() + t * DensityMatrix::maximally_mixed(2).matrix());
        const double n = kd_distribution(mix, basis).nonpositivity();
        CHECK(n <= (1 - t) * n0 + 1e-12);  // convexity against N(I/2) = 0
        CHECK(n <= prev + 1e-12);
        prev = n;
    }
    CHECK(prev < 1e-2);
}

TEST_CASE("state -> table -> state round-trips") {
    for (int d : {2, 3, 4}) {
        for (uint64_t s = 0; s < 8; ++s) {
            const BasisPair basis = BasisPair::random_pair(d, 9000 + s);
            const DensityMatrix rho = kdct::random_state(d, 100 * s + 3);
            const KDDistribution q = kd_distribution(rho, basis);
            const DensityMatrix back = reconstruct_state(q, basis);
            CHECK((back.matrix() - rho.matrix()).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("reconstruction refuses near-vanishing overlaps") {
    // in d = 2 a vanishing overlap forces its row partner onto a shared
    // projector, so a legal near-singular pair needs d = 3: push b0 almost
    // orthogonal to a0 and let the lost weight spread over a1 and a2
    const double s = 5e-9;
    std::vector<CVector> a{kdct::basis_state(3, 0).vec(), kdct::basis_state(3, 1).vec(),
                           kdct::basis_state(3, 2).vec()};
    CVector b0(3), r1(3), r2(3);
    b0 << s, 1.0, 1.0;
    b0.normalize();
    r1 << 1.0, 1.0, 0.0;
    r2 << 0.0, 1.0, -1.0;
    CVector b1 = r1 - b0.dot(r1) * b0;
    b1.normalize();
    CVector b2 = r2 - b0.dot(r2) * b0 - b1.dot(r2) * b1;
    b2.normalize();
    const BasisPair skew(a, {b0, b1, b2});
    REQUIRE(skew.min_abs_overlap() < kOverlapFloor);
    const CMatrix q = CMatrix::Constant(3, 3, Cx(1.0 / 9, 0));
    CHECK_THROWS_AS(reconstruct_operator(q, skew), IllConditionedOverlap);
    // a generous custom floor accepts it
    CHECK_NOTHROW(reconstruct_operator(q, skew, 1e-10));
}

TEST_CASE("weak values divide by the reference-outcome probability") {
    const BasisPair basis = BasisPair::mub_qubit();
    const KDDistribution q = kd_distribution(DensityMatrix::pure(kdct::plus_i()), basis);
    CHECK(q.weak_defined(0));
    CHECK(std::abs(q.weak_value(0, 0) - Cx(0.5, -0.5)) < 1e-13);
    CHECK(std::abs(q.weak_value(1, 0) - Cx(0.5, 0.5)) < 1e-13);
    // z = +1 conditioning reproduces the plain weak value
    CHECK(std::abs(q.conditional_weak_value(0, 0, +1) - q.weak_value(0, 0)) == 0.0);
    // z = -1 averages the remaining columns
    CHECK(std::abs(q.conditional_weak_value(0, 0, -1) - Cx(0.5, 0.5)) < 1e-13);

    // a state orthogonal to |b_0>: outcome 0 never fires
    const KDDistribution q2 =
        kd_distribution(DensityMatrix::pure(PureState(basis.b(1))), basis);
    CHECK_FALSE(q2.weak_defined(0));
    CHECK_THROWS_AS(q2.weak_value(0, 0), UndefinedWeakValue);
    CHECK_THROWS_AS(q2.conditional_weak_value(0, 0, +1), UndefinedWeakValue);
    // and conditioning on z = -1 at k = 1 (probability 0) is undefined too
    CHECK_FALSE(q2.conditional_weak_defined(1, -1));
    CHECK_THROWS_AS(q2.conditional_weak_value(0, 1, -1), UndefinedWeakValue);
}

TEST_CASE("weak values at three dimensions agree with direct formulas") {
    const BasisPair basis = BasisPair::random_pair(3, 77);
    const DensityMatrix rho = kdct::random_state(3, 78);
    const KDDistribution q = kd_distribution(rho, basis);
    for (int k = 0; k < 3; ++k) {
        const double pk = basis.b(k).dot(rho.matrix() * basis.b(k)).real();
        CHECK(q.b_marginals()[k] == doctest::Approx(pk).epsilon(1e-12));
        for (int j = 0; j < 3; ++j) {
            CHECK(std::abs(q.weak_value(j, k) - q.q(j, k) / pk) < 1e-12);
            // z = -1: weighted average of the other columns
            const Cx num = q.q(j, (k + 1) % 3) + q.q(j, (k + 2) % 3);
            CHECK(std::abs(q.conditional_weak_value(j, k, -1) - num / (1 - pk)) < 1e-12);
        }
    }
}

TEST_CASE("a corrupted table is rejected by the nonpositivity guard") {
    CMatrix q = CMatrix::Constant(2, 2, Cx(0.2, 0));  // |sum| = 0.8 < 1
    CHECK_THROWS_AS(KDDistribution(q).nonpositivity(), InternalInconsistency);
}
