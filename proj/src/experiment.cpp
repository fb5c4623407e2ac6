#include "kdc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

namespace kdc {

// ── Bob's measurement policy ──────────────────────────────────────────────

BobPolicy BobPolicy::uniform_grid(int d) {
    if (d < 2) throw PreconditionError("dimension must be at least 2");
    BobPolicy policy;
    auto push = [&](int p, int j, int k) {
        CellTask t;
        t.protocol = p;
        t.j = j;
        t.k = k;
        t.n_outcomes = outcome_count(p);
        policy.cells.push_back(t);
    };
    // one cell per label the tally actually distinguishes: protocol 1 pools
    // over j, protocols 4/5 pool over k
    for (int k = 0; k < d; ++k) push(1, 0, k);
    for (int p : {2, 3})
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) push(p, j, k);
    for (int j = 0; j < d; ++j) push(4, j, 0);
    for (int j = 0; j < d; ++j) push(5, j, 0);
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) push(6, j, k);
    const auto n = static_cast<Eigen::Index>(policy.cells.size());
    policy.weights = RVector::Constant(n, 1.0 / static_cast<double>(n));
    return policy;
}

namespace {

// inverse-CDF cell pick; the last cell absorbs fp residue
int draw_cell(const RVector& w, double u) {
    double cum = 0;
    for (Eigen::Index i = 0; i + 1 < w.size(); ++i) {
        cum += w[i];
        if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(w.size() - 1);
}

}  // namespace

// ── the run itself ────────────────────────────────────────────────────────

ExperimentResult run_experiment(const AliceConfig& alice, const BasisPair& basis,
                                const BobPolicy& bob, uint64_t master_seed, ExecMode mode) {
    const int d = basis.dim();
    const int n_states = static_cast<int>(alice.states.size());
    if (n_states == 0) throw PreconditionError("alice prepares at least one state");
    if (alice.rounds <= 0) throw PreconditionError("rounds must be positive");
    for (const auto& psi : alice.states)
        if (psi.dim() != d) throw DimensionMismatch("prepared state does not fit the bases");
    WeakMeasurement strength(alice.epsilon);  // validates the range
    (void)strength;

    const int n_cells = static_cast<int>(bob.cells.size());
    if (n_cells == 0) throw PreconditionError("bob's policy has no cells");
    if (bob.weights.size() != n_cells)
        throw PreconditionError("policy weights do not match the cell list");
    if ((bob.weights.array() < -kTolAlgebraic).any() ||
        std::abs(bob.weights.sum() - 1.0) > 1e-9)
        throw PreconditionError("policy weights must form a probability vector");
    for (const auto& c : bob.cells)
        if (c.protocol < 1 || c.protocol > 6 || c.j < 0 || c.j >= d || c.k < 0 || c.k >= d)
            throw PreconditionError("policy cell outside the (protocol, j, k) grid");

    // per-(state, cell) outcome tables, computed once up front
    std::vector<std::array<double, 4>> tables(static_cast<size_t>(n_states) *
                                              static_cast<size_t>(n_cells));
    std::vector<int> n_out(static_cast<size_t>(n_cells));
    for (int c = 0; c < n_cells; ++c)
        n_out[static_cast<size_t>(c)] = outcome_count(bob.cells[static_cast<size_t>(c)].protocol);
    for (int s = 0; s < n_states; ++s) {
        const DensityMatrix rho = DensityMatrix::pure(alice.states[static_cast<size_t>(s)]);
        for (int c = 0; c < n_cells; ++c) {
            const auto& cell = bob.cells[static_cast<size_t>(c)];
            tables[static_cast<size_t>(s) * static_cast<size_t>(n_cells) +
                   static_cast<size_t>(c)] =
                exact_distributions(rho, basis, cell.j, cell.k, alice.epsilon)
                    .table(cell.protocol);
        }
    }

    ExperimentResult result;
    result.record.d = d;
    result.record.epsilon = alice.epsilon;
    result.record.states_per_round = n_states;
    result.record.rounds = alice.rounds;
    for (int j = 0; j < d; ++j) result.record.basis_a.push_back(basis.a(j));
    for (int k = 0; k < d; ++k) result.record.basis_b.push_back(basis.b(k));
    result.ledger.permutation_seed = alice.permutation_seed;

    const size_t total = static_cast<size_t>(alice.rounds) * static_cast<size_t>(n_states);
    result.record.entries.resize(total);
    result.ledger.psi_index.resize(total);
    auto& entries = result.record.entries;
    auto& psi_index = result.ledger.psi_index;

    // Deliveries are independent given their global index g: Alice's order
    // comes from the round stream, Bob's cell pick from stream 2g, the
    // outcome from stream 2g+1. Thread order therefore cannot matter.
    parallel_for(static_cast<size_t>(alice.rounds), mode, [&](size_t r) {
        std::vector<int> perm(static_cast<size_t>(n_states));
        std::iota(perm.begin(), perm.end(), 0);
        SplitMix64 shuffle(derive_stream(alice.permutation_seed, static_cast<uint64_t>(r)));
        for (int i = n_states - 1; i > 0; --i) {
            const auto pick = static_cast<size_t>(shuffle.next_u64() %
                                                  static_cast<uint64_t>(i + 1));
            std::swap(perm[static_cast<size_t>(i)], perm[pick]);
        }

        for (int slot = 0; slot < n_states; ++slot) {
            const size_t g = r * static_cast<size_t>(n_states) + static_cast<size_t>(slot);
            const int s = perm[static_cast<size_t>(slot)];

            SplitMix64 chooser(derive_stream(master_seed, 2 * static_cast<uint64_t>(g)));
            const int c = draw_cell(bob.weights, chooser.next_double());
            const auto& cell = bob.cells[static_cast<size_t>(c)];

            const uint64_t outcome_seed = derive_stream(master_seed, 2 * static_cast<uint64_t>(g) + 1);
            SplitMix64 rng(outcome_seed);
            const auto& table = tables[static_cast<size_t>(s) * static_cast<size_t>(n_cells) +
                                       static_cast<size_t>(c)];
            const int idx = draw_outcome(table, n_out[static_cast<size_t>(c)], rng.next_double());

            OutcomeRecord rec;
            rec.round = static_cast<long long>(r);
            rec.protocol = cell.protocol;
            rec.j = cell.j;
            rec.k = cell.k;
            outcome_signs(cell.protocol, idx, rec.x, rec.y, rec.z);
            rec.seed_cell = outcome_seed;
            entries[g] = rec;
            psi_index[g] = s;
        }
    });
    return result;
}

// ── verdict logic ─────────────────────────────────────────────────────────

std::string to_string(Conclusion c) {
    switch (c) {
        case Conclusion::alice_verified: return "alice_verified";
        case Conclusion::cannot_verify: return "cannot_verify";
        case Conclusion::data_contextual: return "data_contextual";
        default: return "indeterminate";
    }
}

Conclusion decide_conclusion(double n_hat, double noise_band, double threshold_3d2eps,
                             bool cert_contextual, const ExoticAnalysis* exotic) {
    if (n_hat > noise_band)
        return cert_contextual ? Conclusion::data_contextual : Conclusion::indeterminate;
    if (exotic != nullptr && exotic->exotic && exotic->floor &&
        exotic->floor->delta > threshold_3d2eps)
        return Conclusion::alice_verified;
    return Conclusion::cannot_verify;
}

// ── model-vs-data fit ─────────────────────────────────────────────────────

namespace {

// the cell labels the tally distinguishes (pooled labels for 1/4/5)
template <class F>
void for_each_tally_cell(int d, F&& f) {
    for (int k = 0; k < d; ++k) f(1, 0, k);
    for (int p : {2, 3, 6})
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) f(p, j, k);
    for (int p : {4, 5})
        for (int j = 0; j < d; ++j) f(p, j, 0);
}

struct FitDeviation {
    double max_dev = 0;
    double worst_slack = -std::numeric_limits<double>::infinity();
};

FitDeviation fit_deviation(const HiddenVariableModel& model, const OutcomeCounts& counts,
                           double confidence) {
    const double big_l = std::log(2.0 / (1.0 - confidence));
    FitDeviation out;
    for_each_tally_cell(model.d, [&](int p, int j, int k) {
        const double n = counts.cell_total(p, j, k);
        if (n <= 0) return;
        const auto pred = hvm_predict(model, p, j, k);
        double dev = 0;
        for (int i = 0; i < outcome_count(p); ++i)
            dev = std::max(dev, std::abs(counts.frequency(p, j, k, i) -
                                         pred[static_cast<size_t>(i)]));
        const double hw = std::sqrt(big_l / (2.0 * n));
        out.max_dev = std::max(out.max_dev, dev);
        out.worst_slack = std::max(out.worst_slack, dev - 3.0 * hw);
    });
    if (!std::isfinite(out.worst_slack)) out.worst_slack = 0;
    return out;
}

}  // namespace

double hvm_empirical_deviation(const HiddenVariableModel& model, const OutcomeCounts& counts) {
    return fit_deviation(model, counts, 0.99).max_dev;
}

// ── Bob's blind analysis ──────────────────────────────────────────────────

AnalysisReport bob_analyze(const PublicRecord& record, const AnalysisConfig& cfg) {
    if (record.d < 2) throw PreconditionError("record dimension must be at least 2");
    BasisPair basis(record.basis_a, record.basis_b);
    const double eps_cert =
        cfg.certification_epsilon < 0 ? record.epsilon : cfg.certification_epsilon;

    AnalysisReport rep;
    rep.deliveries = static_cast<long long>(record.entries.size());
    rep.epsilon_record = record.epsilon;
    rep.epsilon_cert = eps_cert;
    rep.counts = OutcomeCounts(record.d);
    for (const auto& e : record.entries) rep.counts.add(e);

    const double min_cell = rep.counts.min_estimation_cell();
    if (min_cell < static_cast<double>(cfg.min_samples)) {
        std::ostringstream msg;
        msg << "smallest estimation cell holds " << min_cell << " samples, need "
            << cfg.min_samples;
        throw InsufficientSamples(msg.str());
    }

    rep.estimate = estimate_kd(rep.counts, record.epsilon, cfg.confidence);
    const DensityMatrix rho_hat = psd_project(reconstruct_operator(rep.estimate.q_hat, basis));
    rep.rho_hat = rho_hat.matrix();
    rep.n_hat = rep.estimate.q_hat.cwiseAbs().sum() - 1.0;
    rep.noise_band = 3.0 * rep.estimate.nonpositivity_halfwidth;
    rep.kd_positive_within_noise = rep.n_hat <= rep.noise_band;

    rep.certification = certify(rho_hat, basis, eps_cert);

    if (rep.kd_positive_within_noise) {
        // the data looks classical: fit the explicit model at the recorded
        // strength, admitting the sampling-noise band, and check whether the
        // state could still be exotic (positive yet outside the pure hull)
        HvmFit fit;
        try {
            const HiddenVariableModel model = build_hvm(
                rho_hat, basis, record.epsilon, std::max(rep.noise_band, kTolComposed));
            fit.built = true;
            fit.noncontextuality = verify_noncontextuality(model);
            const FitDeviation dev = fit_deviation(model, rep.counts, cfg.confidence);
            fit.empirical_deviation = dev.max_dev;
            fit.worst_relative_slack = dev.worst_slack;
            fit.consistent = fit.noncontextuality.pass && dev.worst_slack <= 0;
        } catch (const PreconditionError& e) {
            fit.failure = e.what();
        }
        rep.hvm_fit = std::move(fit);

        const PurePositiveSet set = pure_positive_search(basis, cfg.geometry_budget,
                                                         cfg.positive_tol, cfg.geometry_seed,
                                                         cfg.mode);
        rep.exotic = analyze_exotic_candidate(rho_hat, basis, set, cfg.floor, cfg.geometry_seed,
                                              std::max(cfg.positive_tol, rep.noise_band),
                                              cfg.hull_tol, cfg.mode);
    }

    const bool cert_contextual = rep.certification->verdict == Verdict::contextual;
    rep.conclusion =
        decide_conclusion(rep.n_hat, rep.noise_band, rep.certification->threshold_3d2eps,
                          cert_contextual, rep.exotic ? &*rep.exotic : nullptr);

    std::ostringstream sum;
    sum << rep.deliveries << " deliveries at strength " << record.epsilon
        << ": N_hat = " << rep.n_hat << " (noise band " << rep.noise_band << "), certified "
        << to_string(rep.certification->verdict) << " at strength " << eps_cert << " -> "
        << to_string(rep.conclusion);
    rep.summary = sum.str();
    return rep;
}

// ── Alice's postselection ─────────────────────────────────────────────────

PostselectionReport alice_postselect(const PublicRecord& record, const SecretLedger& ledger,
                                     const AnalysisConfig& cfg) {
    if (ledger.psi_index.size() != record.entries.size())
        throw LedgerMismatch("ledger length does not match the public record");
    const int n_states = record.states_per_round;
    if (n_states <= 0) throw LedgerMismatch("record announces no states per round");
    for (int s : ledger.psi_index)
        if (s < 0 || s >= n_states)
            throw LedgerMismatch("ledger names a state outside the announced set");
    // every complete round must use each state exactly once
    std::vector<int> seen(static_cast<size_t>(n_states));
    const size_t full_rounds = ledger.psi_index.size() / static_cast<size_t>(n_states);
    for (size_t r = 0; r < full_rounds; ++r) {
        std::fill(seen.begin(), seen.end(), 0);
        for (int slot = 0; slot < n_states; ++slot)
            ++seen[static_cast<size_t>(
                ledger.psi_index[r * static_cast<size_t>(n_states) + static_cast<size_t>(slot)])];
        if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; }))
            throw LedgerMismatch("a round does not deliver each state exactly once");
    }

    BasisPair basis(record.basis_a, record.basis_b);
    const double eps_cert =
        cfg.certification_epsilon < 0 ? record.epsilon : cfg.certification_epsilon;

    PostselectionReport rep;
    rep.per_state.reserve(static_cast<size_t>(n_states));
    for (int s = 0; s < n_states; ++s) {
        StateAnalysis sa;
        sa.psi_index = s;
        sa.counts = OutcomeCounts(record.d);
        for (size_t g = 0; g < record.entries.size(); ++g) {
            if (ledger.psi_index[g] != s) continue;
            sa.counts.add(record.entries[g]);
            ++sa.deliveries;
        }
        if (sa.counts.min_estimation_cell() < static_cast<double>(cfg.min_samples)) {
            std::ostringstream msg;
            msg << "state " << s << ": smallest estimation cell below " << cfg.min_samples
                << " samples";
            throw InsufficientSamples(msg.str());
        }
        sa.estimate = estimate_kd(sa.counts, record.epsilon, cfg.confidence);
        const DensityMatrix rho = psd_project(reconstruct_operator(sa.estimate.q_hat, basis));
        sa.rho_hat = rho.matrix();
        sa.n_hat = sa.estimate.q_hat.cwiseAbs().sum() - 1.0;
        sa.noise_band = 3.0 * sa.estimate.nonpositivity_halfwidth;
        sa.certification = certify(rho, basis, eps_cert);
        sa.flagged_nonpositive = sa.certification.verdict == Verdict::contextual;
        rep.per_state.push_back(std::move(sa));
    }
    rep.argmax_negativity = 0;
    for (int s = 1; s < n_states; ++s)
        if (rep.per_state[static_cast<size_t>(s)].n_hat >
            rep.per_state[static_cast<size_t>(rep.argmax_negativity)].n_hat)
            rep.argmax_negativity = s;
    return rep;
}

}  // namespace kdc
