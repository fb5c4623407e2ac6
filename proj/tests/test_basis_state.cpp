#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "kdc/basis.hpp"
#include "kdc/state.hpp"

using namespace kdc;

TEST_CASE("fourier pair is orthonormal with flat overlaps") {
    for (int d : {2, 3, 4, 7}) {
        const BasisPair basis = BasisPair::fourier_pair(d);
        CHECK(basis.dim() == d);
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) {
                const Cx aa = basis.a(j).dot(basis.a(k));
                const Cx bb = basis.b(j).dot(basis.b(k));
                const double want = j == k ? 1.0 : 0.0;
                CHECK(std::abs(aa - want) < 1e-12);
                CHECK(std::abs(bb - want) < 1e-12);
                CHECK(std::abs(basis.overlap(j, k)) ==
                      doctest::Approx(1.0 / std::sqrt(double(d))).epsilon(1e-12));
            }
    }
}

TEST_CASE("overlap convention is <b_k|a_j>") {
    // d = 2: a = computational, b = Hadamard; <b_1|a_1> = -1/sqrt 2
    const BasisPair basis = BasisPair::mub_qubit();
    CHECK(basis.overlap(1, 1).real() == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(basis.overlap(0, 1).real() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("constructor rejects non-orthonormal and projector-sharing pairs") {
    std::vector<CVector> a{kdct::basis_state(2, 0).vec(), kdct::basis_state(2, 1).vec()};
    // not normalized
    std::vector<CVector> bad = a;
    bad[0] *= 2.0;
    CHECK_THROWS_AS(BasisPair(bad, a), PreconditionError);
    // identical bases share every projector
    CHECK_THROWS_AS(BasisPair(a, a), PreconditionError);
    // sharing a single projector (basis vector up to phase) is also rejected
    std::vector<CVector> c{Cx(0, 1) * a[0], a[1]};
    CHECK_THROWS_AS(BasisPair(a, c), PreconditionError);
    // dimension mismatch between the lists
    std::vector<CVector> short_b{BasisPair::mub_qubit().b(0)};
    CHECK_THROWS_AS(BasisPair(a, short_b), PreconditionError);
}

TEST_CASE("random pairs are valid and respect the overlap floor") {
    for (int d : {2, 3, 4}) {
        const BasisPair basis = BasisPair::random_pair(d, 1234 + static_cast<uint64_t>(d));
        CHECK(basis.dim() == d);
        CHECK(basis.min_abs_overlap() >= 0.05);
        double min_ov = 1e9;
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) min_ov = std::min(min_ov, std::abs(basis.overlap(j, k)));
        CHECK(basis.min_abs_overlap() == doctest::Approx(min_ov).epsilon(1e-15));
    }
}

TEST_CASE("pure states validate their norm") {
    CVector v(2);
    v << Cx(1, 0), Cx(1, 0);
    CHECK_THROWS_AS(PureState{v}, PreconditionError);
    const PureState psi = PureState::normalized(v);
    CHECK(std::abs(psi.vec().norm() - 1.0) < 1e-15);
    CHECK((psi.projector() * psi.projector() - psi.projector()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK_THROWS_AS(PureState::normalized(CVector::Zero(3)), PreconditionError);
}

TEST_CASE("density matrices validate hermiticity, trace, and positivity") {
    CMatrix m = CMatrix::Identity(2, 2);
    CHECK_THROWS_AS(DensityMatrix{m}, PreconditionError);  // trace 2
    m(0, 1) = Cx(0, 0.3);                                  // not hermitian
    CHECK_THROWS_AS(DensityMatrix(m / 2.0), PreconditionError);
    CMatrix neg(2, 2);
    neg << 1.2, 0, 0, -0.2;  // negative eigenvalue
    CHECK_THROWS_AS(DensityMatrix{neg}, PreconditionError);

    const DensityMatrix mixed = DensityMatrix::maximally_mixed(3);
    CHECK(mixed.matrix().trace().real() == doctest::Approx(1.0).epsilon(1e-15));

    const DensityMatrix rho = DensityMatrix::mixture(
        {0.25, 0.75}, {kdct::plus_i(), kdct::minus_i()});
    CHECK(std::abs(rho.matrix()(0, 0).real() - 0.5) < 1e-12);
    CHECK(rho.matrix()(0, 1).imag() == doctest::Approx(0.5 * 0.75 - 0.5 * 0.25).epsilon(1e-12));
    CHECK_THROWS_AS(DensityMatrix::mixture({0.5, 0.4}, {kdct::plus_i(), kdct::minus_i()}),
                    PreconditionError);
    CHECK_THROWS_AS(DensityMatrix::mixture({0.5, 0.5}, {kdct::plus_i()}), PreconditionError);
}

TEST_CASE("psd projection repairs small violations and rejects garbage") {
    // slightly negative eigenvalue, slightly off trace: repaired
    CMatrix m(2, 2);
    m << 1.02, 0.1, 0.1, -0.004;
    const DensityMatrix repaired = psd_project(m);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(repaired.matrix());
    CHECK(es.eigenvalues().minCoeff() > -1e-14);
    CHECK(std::abs(repaired.matrix().trace().real() - 1.0) < 1e-14);
    // projection of a valid state is (numerically) the identity
    const DensityMatrix rho = kdct::random_state(3, 99);
    CHECK((psd_project(rho.matrix()).matrix() - rho.matrix()).cwiseAbs().maxCoeff() < 1e-12);
    // nothing positive to keep
    CHECK_THROWS_AS(psd_project(-CMatrix::Identity(2, 2)), PreconditionError);
}
