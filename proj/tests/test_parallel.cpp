#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sstream>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "kdc/experiment.hpp"
#include "kdc/geometry.hpp"
#include "kdc/protocols.hpp"
#include "kdc/serialize.hpp"

using namespace kdc;
using kdct::plus_i;

// The OpenMP path must reproduce the serial path bit for bit: all kernels
// draw from per-task substreams and merge in task order, so scheduling
// cannot leak into the results.

TEST_CASE("cell sampling is identical across execution modes") {
    const BasisPair basis = BasisPair::random_pair(3, 42);
    const DensityMatrix rho = DensityMatrix::maximally_mixed(3);
    std::vector<CellTask> tasks;
    uint64_t seed = 1000;
    for (int p = 1; p <= 6; ++p)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                tasks.push_back(make_cell_task(exact_distributions(rho, basis, j, k, 0.3), p,
                                               20000, seed++));
    const OutcomeCounts serial = sample_cells(tasks, 3, ExecMode::serial);
    const OutcomeCounts openmp = sample_cells(tasks, 3, ExecMode::openmp);
    for (const auto& t : tasks)
        for (int i = 0; i < t.n_outcomes; ++i)
            CHECK(serial.outcome_weight(t.protocol, t.j, t.k, i) ==
                  openmp.outcome_weight(t.protocol, t.j, t.k, i));
}

TEST_CASE("pure-positive search is identical across execution modes") {
    const BasisPair basis = BasisPair::random_pair(2, 17);
    const PurePositiveSet s = pure_positive_search(basis, 24, 1e-9, 3, ExecMode::serial);
    const PurePositiveSet p = pure_positive_search(basis, 24, 1e-9, 3, ExecMode::openmp);
    REQUIRE(s.states.size() == p.states.size());
    for (size_t i = 0; i < s.states.size(); ++i) {
        CHECK((s.states[i].vec() - p.states[i].vec()).norm() == 0.0);
        CHECK(s.provenance[i] == p.provenance[i]);
    }
}

TEST_CASE("negativity floor is identical across execution modes") {
    const BasisPair basis = BasisPair::fourier_pair(2);
    PurePositiveSet set;
    set.d = 2;
    set.tol = 1e-9;
    for (int j = 0; j < 2; ++j) set.states.push_back(PureState::normalized(basis.a(j)));
    for (int k = 0; k < 2; ++k) set.states.push_back(PureState::normalized(basis.b(k)));
    set.provenance.assign(4, Provenance::basis_state);
    const SeparatingWitness w = find_witness(DensityMatrix::pure(plus_i()), set);

    const FloorEstimate s = negativity_floor(w, basis, FloorConfig{}, 5, ExecMode::serial);
    const FloorEstimate p = negativity_floor(w, basis, FloorConfig{}, 5, ExecMode::openmp);
    CHECK(s.delta == p.delta);
    CHECK(s.constraint_value == p.constraint_value);
    CHECK(s.winning_restart == p.winning_restart);
    CHECK((s.argmin.vec() - p.argmin.vec()).norm() == 0.0);
}

TEST_CASE("batch negativity is identical across execution modes") {
    SplitMix64 rng(9);
    const BasisPair basis = BasisPair::random_pair(3, 77);
    std::vector<PureState> states;
    for (int i = 0; i < 40; ++i) states.push_back(PureState(random_unit_vector(3, rng)));
    const std::vector<double> s = batch_negativity(states, basis, ExecMode::serial);
    const std::vector<double> p = batch_negativity(states, basis, ExecMode::openmp);
    REQUIRE(s.size() == p.size());
    for (size_t i = 0; i < s.size(); ++i) CHECK(s[i] == p[i]);
}

TEST_CASE("experiment records are identical across execution modes") {
    const BasisPair basis = BasisPair::fourier_pair(2);
    AliceConfig alice;
    alice.states = {plus_i(), kdct::minus_i(), kdct::basis_state(2, 0)};
    alice.rounds = 4000;
    alice.permutation_seed = 12;
    alice.epsilon = 0.25;
    const BobPolicy bob = BobPolicy::uniform_grid(2);

    const ExperimentResult s = run_experiment(alice, basis, bob, 999, ExecMode::serial);
    const ExperimentResult p = run_experiment(alice, basis, bob, 999, ExecMode::openmp);

    std::ostringstream ss, ps;
    write_record(ss, s.record);
    write_record(ps, p.record);
    CHECK(ss.str() == ps.str());
    CHECK(s.ledger.psi_index == p.ledger.psi_index);
}
