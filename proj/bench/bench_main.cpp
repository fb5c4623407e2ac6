// Timing harness: serial reference kernels vs the OpenMP paths.
//
// Each section runs the same workload both ways, checks the results are
// bit-identical (the parallel kernels must not change any answer), and
// prints wall times plus speedup.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "kdc/experiment.hpp"
#include "kdc/geometry.hpp"
#include "kdc/protocols.hpp"
#include "kdc/rng.hpp"
#include "kdc/serialize.hpp"

using namespace kdc;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(const char* name, double t_serial, double t_parallel, bool identical) {
    std::printf("%-28s serial %8.3fs   openmp %8.3fs   speedup %5.2fx   %s\n", name, t_serial,
                t_parallel, t_serial / t_parallel, identical ? "identical" : "MISMATCH");
    if (!identical) std::exit(1);
}

bool same_counts(const OutcomeCounts& a, const OutcomeCounts& b, int d,
                 const std::vector<CellTask>& tasks) {
    for (const auto& t : tasks) {
        (void)d;
        for (int i = 0; i < t.n_outcomes; ++i)
            if (a.outcome_weight(t.protocol, t.j, t.k, i) !=
                b.outcome_weight(t.protocol, t.j, t.k, i))
                return false;
    }
    return true;
}

std::string record_bytes(const PublicRecord& r) {
    std::ostringstream os;
    write_record(os, r);
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    // scale factor: ./bench_kernels [scale]; default sized for a few seconds
    const double scale = argc > 1 ? std::atof(argv[1]) : 1.0;
#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::puts("built without openmp: both paths run serially");
#endif

    // ── cell sampling ─────────────────────────────────────────────────────
    {
        const BasisPair basis = BasisPair::random_pair(3, 42);
        SplitMix64 rng(7);
        const DensityMatrix rho(random_density_matrix(3, rng));
        const long long shots = static_cast<long long>(400000 * scale);

        std::vector<CellTask> tasks;
        uint64_t stream = 0;
        for (int p = 1; p <= 6; ++p)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k)
                    tasks.push_back(make_cell_task(exact_distributions(rho, basis, j, k, 0.2),
                                                   p, shots, derive_stream(11, stream++)));

        auto t0 = Clock::now();
        const OutcomeCounts serial = sample_cells(tasks, 3, ExecMode::serial);
        const double ts = seconds_since(t0);
        t0 = Clock::now();
        const OutcomeCounts par = sample_cells(tasks, 3, ExecMode::openmp);
        const double tp = seconds_since(t0);
        report("cell sampling", ts, tp, same_counts(serial, par, 3, tasks));
    }

    // ── pure KD-positive search ───────────────────────────────────────────
    {
        const BasisPair basis = BasisPair::random_pair(2, 17);
        const int budget = static_cast<int>(192 * scale);

        auto t0 = Clock::now();
        const PurePositiveSet serial =
            pure_positive_search(basis, budget, 1e-9, 5, ExecMode::serial);
        const double ts = seconds_since(t0);
        t0 = Clock::now();
        const PurePositiveSet par =
            pure_positive_search(basis, budget, 1e-9, 5, ExecMode::openmp);
        const double tp = seconds_since(t0);

        bool same = serial.states.size() == par.states.size();
        for (size_t i = 0; same && i < serial.states.size(); ++i)
            same = serial.states[i].vec() == par.states[i].vec() &&
                   serial.provenance[i] == par.provenance[i];
        report("pure positive search", ts, tp, same);
    }

    // ── batch negativity ──────────────────────────────────────────────────
    {
        const BasisPair basis = BasisPair::random_pair(4, 23);
        SplitMix64 rng(99);
        std::vector<PureState> states;
        const int n = static_cast<int>(20000 * scale);
        states.reserve(n);
        for (int i = 0; i < n; ++i) states.emplace_back(random_unit_vector(4, rng));

        auto t0 = Clock::now();
        const std::vector<double> serial = batch_negativity(states, basis, ExecMode::serial);
        const double ts = seconds_since(t0);
        t0 = Clock::now();
        const std::vector<double> par = batch_negativity(states, basis, ExecMode::openmp);
        const double tp = seconds_since(t0);
        report("batch negativity", ts, tp, serial == par);
    }

    // ── experiment run ────────────────────────────────────────────────────
    {
        AliceConfig alice;
        alice.states = {PureState::normalized((CVector(2) << 1.0, Cx(0, 1)).finished()),
                        PureState::normalized((CVector(2) << 1.0, Cx(0, -1)).finished())};
        alice.rounds = static_cast<long long>(60000 * scale);
        alice.permutation_seed = 99;
        alice.epsilon = 0.2;
        const BasisPair basis = BasisPair::fourier_pair(2);
        const BobPolicy bob = BobPolicy::uniform_grid(2);

        auto t0 = Clock::now();
        const ExperimentResult serial = run_experiment(alice, basis, bob, 31337,
                                                       ExecMode::serial);
        const double ts = seconds_since(t0);
        t0 = Clock::now();
        const ExperimentResult par = run_experiment(alice, basis, bob, 31337,
                                                    ExecMode::openmp);
        const double tp = seconds_since(t0);
        report("experiment run", ts, tp,
               record_bytes(serial.record) == record_bytes(par.record) &&
                   serial.ledger.psi_index == par.ledger.psi_index);
    }

    std::puts("all parallel kernels match their serial reference");
    return 0;
}
