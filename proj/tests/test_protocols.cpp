#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "kdc/protocols.hpp"

using namespace kdc;

namespace {

constexpr double kPi = std::numbers::pi;

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace

TEST_CASE("strength parameters and their validation") {
    const WeakMeasurement w(0.2);
    CHECK(w.p_m() == doctest::Approx(std::sin(0.4)).epsilon(1e-15));
    CHECK(w.p_d() == doctest::Approx(std::sin(0.2) * std::sin(0.2)).epsilon(1e-15));
    // p_m^2 = 4 p_d (1 - p_d)
    CHECK(w.p_m() * w.p_m() ==
          doctest::Approx(4 * w.p_d() * (1 - w.p_d())).epsilon(1e-14));
    CHECK_THROWS_AS(WeakMeasurement(0.0), PreconditionError);
    CHECK_THROWS_AS(WeakMeasurement(-0.1), PreconditionError);
    CHECK_THROWS_AS(WeakMeasurement(kPi / 2 + 1e-6), PreconditionError);
    CHECK_NOTHROW(WeakMeasurement(kPi / 2));
}

TEST_CASE("kraus operators are complete and built from the stated formula") {
    for (int d : {2, 3}) {
        const BasisPair basis = BasisPair::random_pair(d, 31 + static_cast<uint64_t>(d));
        for (double eps : {0.05, 0.3, kPi / 4, 1.2, kPi / 2}) {
            for (int j = 0; j < d; ++j) {
                const KrausPair kp = kraus_operators(basis, j, eps);
                const CMatrix d_j = 2.0 * basis.proj_a(j) - CMatrix::Identity(d, d);
                CHECK((kp.d - d_j).cwiseAbs().maxCoeff() < 1e-14);
                CMatrix sum_x = CMatrix::Zero(d, d), sum_y = CMatrix::Zero(d, d);
                for (int si = 0; si < 2; ++si) {
                    sum_x += kp.x[si].adjoint() * kp.x[si];
                    sum_y += kp.y[si].adjoint() * kp.y[si];
                }
                CHECK((sum_x - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-13);
                CHECK((sum_y - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-13);
                const CMatrix want_xp =
                    (std::cos(eps) * CMatrix::Identity(d, d) + std::sin(eps) * d_j) /
                    std::sqrt(2.0);
                CHECK((kp.x[0] - want_xp).cwiseAbs().maxCoeff() < 1e-14);
                const CMatrix want_ym =
                    (std::cos(eps) * CMatrix::Identity(d, d) +
                     Cx(0, 1) * std::sin(eps) * d_j) /
                    std::sqrt(2.0);
                CHECK((kp.y[1] - want_ym).cwiseAbs().maxCoeff() < 1e-14);
            }
        }
    }
}

TEST_CASE("conjugation route and closed forms agree everywhere") {
    for (int d : {2, 3, 4}) {
        for (uint64_t inst = 0; inst < 6; ++inst) {
            const BasisPair basis = BasisPair::random_pair(d, 100 * inst + static_cast<uint64_t>(d));
            const DensityMatrix rho = kdct::random_state(d, 55 * inst + 7);
            for (double eps : {0.02, 0.2, 0.44, kPi / 4, 1.1, kPi / 2}) {
                for (int j = 0; j < d; ++j)
                    for (int k = 0; k < d; ++k) {
                        const ProtocolDistributions p =
                            exact_distributions(rho, basis, j, k, eps);
                        CHECK(p.route_deviation <= kTolAlgebraic);
                        const MarginalizationReport m = marginalization_check(p);
                        CHECK(m.pass);
                        CHECK(m.max_deviation <= kTolAlgebraic);
                    }
            }
        }
    }
}

TEST_CASE("frozen spot values for the imaginary qubit state") {
    // psi = (|0> + i|1>)/sqrt 2, computational/Hadamard pair, strength 0.2
    const BasisPair basis = BasisPair::mub_qubit();
    const DensityMatrix rho = DensityMatrix::pure(kdct::plus_i());
    const ProtocolDistributions p = exact_distributions(rho, basis, 0, 0, 0.2);
    CHECK(std::abs(p.f3v(+1, +1) - 0.15264541442283733) < 1e-14);
    CHECK(std::abs(p.f3v(-1, +1) - 0.34735458557716253) < 1e-14);
    CHECK(std::abs(p.f3v(+1, -1) - 0.34735458557716253) < 1e-14);
    CHECK(std::abs(p.f2v(+1, +1) - 0.25) < 1e-14);
    CHECK(std::abs(p.f2v(-1, +1) - 0.25) < 1e-14);
    for (int s : kSigns) {
        CHECK(std::abs(p.f1v(s) - 0.5) < 1e-14);
        CHECK(std::abs(p.f4v(s) - 0.5) < 1e-14);
        CHECK(std::abs(p.f5v(s) - 0.5) < 1e-14);
        CHECK(std::abs(p.f6v(s) - 0.5) < 1e-14);
    }
    // the neighbouring cell carries the opposite imaginary part
    const ProtocolDistributions p01 = exact_distributions(rho, basis, 0, 1, 0.2);
    CHECK(std::abs(p01.f3v(+1, +1) - 0.34735458557716253) < 1e-14);
}

TEST_CASE("at strength pi/4 the readout is a projective A measurement") {
    const BasisPair basis = BasisPair::random_pair(3, 900);
    const DensityMatrix rho = kdct::random_state(3, 901);
    const ProtocolDistributions p = exact_distributions(rho, basis, 1, 2, kPi / 4);
    CHECK(p.p_m == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p.f4v(+1) == doctest::Approx(p.a_marginal).epsilon(1e-12));
    // f2(x, z) = Tr(Pi_z Pi_x rho Pi_x) with Pi_{+1} = Pi^A_j
    const CMatrix pi_a = basis.proj_a(1);
    const CMatrix pi_b = basis.proj_b(2);
    const CMatrix rp = pi_a * rho.matrix() * pi_a;
    CHECK(p.f2v(+1, +1) == doctest::Approx((pi_b * rp).trace().real()).epsilon(1e-12));
    const CMatrix pi_ac = CMatrix::Identity(3, 3) - pi_a;
    const CMatrix rm = pi_ac * rho.matrix() * pi_ac;
    CHECK(p.f2v(-1, -1) ==
          doctest::Approx(((CMatrix::Identity(3, 3) - pi_b) * rm).trace().real())
              .epsilon(1e-12));
}

TEST_CASE("a joint-unitary pointer dilation reproduces every table at d = 2") {
    // pointer |psi_e> = cos e |0> + sin e |1>, coupling U = Pi_+ (x) I + Pi_- (x) Z,
    // X/Y pointer readout; this is an independent route to all six tables
    const BasisPair basis = BasisPair::random_pair(2, 4242);
    const DensityMatrix rho = kdct::random_state(2, 4243);
    const CMatrix eye = CMatrix::Identity(2, 2);
    CMatrix pauli_z(2, 2), pointer_plus(2, 2), pointer_minus(2, 2);
    pauli_z << 1, 0, 0, -1;
    pointer_plus << 0.5, 0.5, 0.5, 0.5;    // |+><+|
    pointer_minus << 0.5, -0.5, -0.5, 0.5;  // |-><-|
    CMatrix py_plus(2, 2), py_minus(2, 2);
    py_plus << Cx(0.5, 0), Cx(0, -0.5), Cx(0, 0.5), Cx(0.5, 0);   // |+i><+i|
    py_minus << Cx(0.5, 0), Cx(0, 0.5), Cx(0, -0.5), Cx(0.5, 0);  // |-i><-i|

    for (double eps : {0.15, 0.7}) {
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) {
                const CMatrix pi_a = basis.proj_a(j);
                const CMatrix u = kron(pi_a, eye) + kron(eye - pi_a, pauli_z);
                CHECK((u.adjoint() * u - CMatrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-14);
                CVector pointer(2);
                pointer << std::cos(eps), std::sin(eps);
                const CMatrix joint =
                    u * kron(rho.matrix(), pointer * pointer.adjoint()) * u.adjoint();

                const ProtocolDistributions p = exact_distributions(rho, basis, j, k, eps);
                const CMatrix pi_b = basis.proj_b(k);
                const auto prob = [&](const CMatrix& sys, const CMatrix& ptr) {
                    return (kron(sys, ptr) * joint).trace().real();
                };
                CHECK(std::abs(p.f2v(+1, +1) - prob(pi_b, pointer_plus)) < 1e-13);
                CHECK(std::abs(p.f2v(-1, +1) - prob(pi_b, pointer_minus)) < 1e-13);
                CHECK(std::abs(p.f2v(+1, -1) - prob(eye - pi_b, pointer_plus)) < 1e-13);
                CHECK(std::abs(p.f3v(+1, +1) - prob(pi_b, py_plus)) < 1e-13);
                CHECK(std::abs(p.f3v(-1, +1) - prob(pi_b, py_minus)) < 1e-13);
                CHECK(std::abs(p.f3v(-1, -1) - prob(eye - pi_b, py_minus)) < 1e-13);
                CHECK(std::abs(p.f4v(+1) - prob(eye, pointer_plus)) < 1e-13);
                CHECK(std::abs(p.f5v(+1) - prob(eye, py_plus)) < 1e-13);
                CHECK(std::abs(p.f6v(+1) - prob(pi_b, eye)) < 1e-13);
            }
    }
}

TEST_CASE("protocol 5 is pure noise and protocol 1 ignores the coupling") {
    const BasisPair basis = BasisPair::random_pair(3, 11);
    const DensityMatrix rho = kdct::random_state(3, 12);
    const ProtocolDistributions p = exact_distributions(rho, basis, 0, 1, 0.3);
    CHECK(std::abs(p.f5v(+1) - 0.5) < 1e-13);
    const double pk = basis.b(1).dot(rho.matrix() * basis.b(1)).real();
    CHECK(p.f1v(+1) == doctest::Approx(pk).epsilon(1e-13));
    CHECK(p.p_z[0] == doctest::Approx(pk).epsilon(1e-13));
}

TEST_CASE("canonical outcome order round-trips through signs and slots") {
    for (int protocol = 1; protocol <= 6; ++protocol) {
        OutcomeCounts counts(2);
        for (int idx = 0; idx < outcome_count(protocol); ++idx) {
            OutcomeRecord rec;
            rec.protocol = protocol;
            rec.j = 1;
            rec.k = 1;
            outcome_signs(protocol, idx, rec.x, rec.y, rec.z);
            counts.add(rec, 2.5);
            CHECK(counts.outcome_weight(protocol, 1, 1, idx) == 2.5);
        }
        CHECK(counts.cell_total(protocol, 1, 1) ==
              doctest::Approx(2.5 * outcome_count(protocol)));
    }
    CHECK(outcome_count(1) == 2);
    CHECK(outcome_count(2) == 4);
    CHECK(outcome_count(3) == 4);
    int x = 9, y = 9, z = 9;
    outcome_signs(2, 2, x, y, z);
    CHECK(x == -1);
    CHECK(y == 0);
    CHECK(z == +1);
    outcome_signs(3, 1, x, y, z);
    CHECK(x == 0);
    CHECK(y == +1);
    CHECK(z == -1);
    outcome_signs(4, 1, x, y, z);
    CHECK(x == -1);
    CHECK(y == 0);
    CHECK(z == 0);
}

TEST_CASE("pooling: protocol 1 ignores j, protocols 4/5 ignore k") {
    OutcomeCounts counts(2);
    OutcomeRecord rec;
    rec.protocol = 1;
    rec.z = +1;
    rec.j = 0;
    rec.k = 1;
    counts.add(rec);
    rec.j = 1;  // same physical cell
    counts.add(rec);
    CHECK(counts.cell_total(1, 0, 1) == 2.0);
    CHECK(counts.cell_total(1, 1, 1) == 2.0);

    rec = OutcomeRecord{};
    rec.protocol = 4;
    rec.x = -1;
    rec.j = 1;
    rec.k = 0;
    counts.add(rec);
    rec.k = 1;
    counts.add(rec);
    CHECK(counts.cell_total(4, 1, 0) == 2.0);
    CHECK(counts.outcome_weight(4, 1, 1, 1) == 2.0);
}

TEST_CASE("inverse-CDF draw respects the canonical order and absorbs residue") {
    const std::array<double, 4> table{0.1, 0.2, 0.3, 0.4};
    CHECK(draw_outcome(table, 4, 0.05) == 0);
    CHECK(draw_outcome(table, 4, 0.1) == 1);  // boundary goes right
    CHECK(draw_outcome(table, 4, 0.25) == 1);
    CHECK(draw_outcome(table, 4, 0.55) == 2);
    CHECK(draw_outcome(table, 4, 0.999999) == 3);
    const std::array<double, 4> two{0.5, 0.5, 0, 0};
    CHECK(draw_outcome(two, 2, 0.4999) == 0);
    CHECK(draw_outcome(two, 2, 0.5001) == 1);
}

TEST_CASE("sampling is deterministic in the seed and converges") {
    const BasisPair basis = BasisPair::mub_qubit();
    const DensityMatrix rho = DensityMatrix::pure(kdct::plus_i());
    const ProtocolDistributions p = exact_distributions(rho, basis, 0, 0, 0.2);
    SplitMix64 r1(99), r2(99), r3(100);
    bool all_same = true, any_diff = false;
    for (int i = 0; i < 200; ++i) {
        const OutcomeRecord a = sample_protocol(p, 3, r1);
        const OutcomeRecord b = sample_protocol(p, 3, r2);
        const OutcomeRecord c = sample_protocol(p, 3, r3);
        all_same = all_same && a.y == b.y && a.z == b.z;
        any_diff = any_diff || a.y != c.y || a.z != c.z;
        CHECK(a.protocol == 3);
        CHECK(a.x == 0);
        CHECK((a.y == 1 || a.y == -1));
    }
    CHECK(all_same);
    CHECK(any_diff);

    // frequencies approach the table
    SplitMix64 rng(1234);
    OutcomeCounts counts(2);
    const int n = 200000;
    for (int i = 0; i < n; ++i) counts.add(sample_protocol(p, 3, rng));
    for (int idx = 0; idx < 4; ++idx)
        CHECK(counts.frequency(3, 0, 0, idx) ==
              doctest::Approx(p.table(3)[static_cast<size_t>(idx)]).epsilon(0.02));
}

TEST_CASE("bulk cell sampling merges in task order, deterministically") {
    const BasisPair basis = BasisPair::random_pair(2, 801);
    const DensityMatrix rho = kdct::random_state(2, 802);
    std::vector<CellTask> tasks;
    int t = 0;
    for (int protocol : {1, 2, 3, 4, 5, 6})
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                tasks.push_back(make_cell_task(exact_distributions(rho, basis, j, k, 0.25),
                                               protocol, 5000, derive_stream(7777, t++)));
    const OutcomeCounts a = sample_cells(tasks, 2, ExecMode::serial);
    const OutcomeCounts b = sample_cells(tasks, 2, ExecMode::serial);
    for (int protocol = 1; protocol <= 6; ++protocol)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int idx = 0; idx < outcome_count(protocol); ++idx)
                    CHECK(a.outcome_weight(protocol, j, k, idx) ==
                          b.outcome_weight(protocol, j, k, idx));
    // protocol 1 pooled both j-cells: totals double up
    CHECK(a.cell_total(1, 0, 0) == 10000.0);
    CHECK(a.cell_total(2, 0, 1) == 5000.0);
}

TEST_CASE("the estimator inverts exact frequencies to the exact table") {
    for (int d : {2, 3}) {
        const BasisPair basis = BasisPair::random_pair(d, 4000 + static_cast<uint64_t>(d));
        const DensityMatrix rho = kdct::random_state(d, 4100 + static_cast<uint64_t>(d));
        for (double eps : {0.05, 0.2, kPi / 4}) {
            const KDDistribution q = kd_distribution(rho, basis);
            OutcomeCounts counts(d);
            const double w = 1e6;
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k) {
                    const ProtocolDistributions p = exact_distributions(rho, basis, j, k, eps);
                    for (int protocol = 1; protocol <= 6; ++protocol)
                        counts.add_table(protocol, j, k, p.table(protocol), w);
                }
            const KDEstimate est = estimate_kd(counts, eps, 0.99);
            CHECK((est.q_hat - q.q()).cwiseAbs().maxCoeff() < 1e-12);
            CHECK(est.min_cell_count == doctest::Approx(w).epsilon(1e-12));
            CHECK(est.epsilon == eps);
        }
    }
}

TEST_CASE("half-widths shrink like one over root n") {
    const BasisPair basis = BasisPair::mub_qubit();
    const DensityMatrix rho = DensityMatrix::pure(kdct::plus_i());
    auto fill = [&](double w) {
        OutcomeCounts counts(2);
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) {
                const ProtocolDistributions p = exact_distributions(rho, basis, j, k, 0.2);
                for (int protocol = 1; protocol <= 3; ++protocol)
                    counts.add_table(protocol, j, k, p.table(protocol), w);
            }
        return estimate_kd(counts, 0.2, 0.99);
    };
    const KDEstimate e1 = fill(10000), e4 = fill(40000);
    CHECK(e1.hw_re(0, 0) == doctest::Approx(2 * e4.hw_re(0, 0)).epsilon(1e-12));
    CHECK(e1.hw_im(1, 1) == doctest::Approx(2 * e4.hw_im(1, 1)).epsilon(1e-12));
    CHECK(e1.nonpositivity_halfwidth ==
          doctest::Approx(2 * e4.nonpositivity_halfwidth).epsilon(1e-12));
    // higher confidence widens the interval
    OutcomeCounts counts(2);
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
            const ProtocolDistributions p = exact_distributions(rho, basis, j, k, 0.2);
            for (int protocol = 1; protocol <= 3; ++protocol)
                counts.add_table(protocol, j, k, p.table(protocol), 10000);
        }
    CHECK(estimate_kd(counts, 0.2, 0.999).hw_re(0, 0) >
          estimate_kd(counts, 0.2, 0.9).hw_re(0, 0));
}

TEST_CASE("empty estimation cells raise the sampling error") {
    OutcomeCounts counts(2);
    CHECK_THROWS_AS(counts.frequency(2, 0, 0, 0), InsufficientSamples);
    // protocol 2 present, protocols 1/3 missing
    const BasisPair basis = BasisPair::mub_qubit();
    const DensityMatrix rho = DensityMatrix::maximally_mixed(2);
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
            counts.add_table(2, j, k, exact_distributions(rho, basis, j, k, 0.2).table(2), 100);
    CHECK(counts.min_estimation_cell() == 0.0);
    CHECK_THROWS_AS(estimate_kd(counts, 0.2, 0.99), InsufficientSamples);
}

TEST_CASE("cell and dimension guards") {
    const BasisPair basis = BasisPair::mub_qubit();
    const DensityMatrix rho = DensityMatrix::maximally_mixed(2);
    CHECK_THROWS_AS(exact_distributions(rho, basis, 2, 0, 0.2), PreconditionError);
    CHECK_THROWS_AS(exact_distributions(rho, basis, 0, -1, 0.2), PreconditionError);
    CHECK_THROWS_AS(exact_distributions(DensityMatrix::maximally_mixed(3), basis, 0, 0, 0.2),
                    DimensionMismatch);
    CHECK_THROWS_AS(outcome_count(7), PreconditionError);
    OutcomeCounts counts(2);
    CHECK_THROWS_AS(counts.cell_total(0, 0, 0), PreconditionError);
}
