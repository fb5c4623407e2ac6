#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kdc/basis.hpp"
#include "kdc/certify.hpp"
#include "kdc/geometry.hpp"
#include "kdc/hvm.hpp"
#include "kdc/protocols.hpp"
#include "kdc/state.hpp"
#include "kdc/types.hpp"

namespace kdc {

// Alice prepares her list of pure states once per round in a secret random
// order; Bob measures each delivery with a protocol cell drawn from his
// policy. Everything is deterministic in (master_seed, permutation_seed).
struct AliceConfig {
    std::vector<PureState> states;
    long long rounds = 0;
    uint64_t permutation_seed = 0;
    double epsilon = 0;
};

struct BobPolicy {
    std::vector<CellTask> cells;  // shots/seed unused here; (protocol, j, k) grid
    RVector weights;              // normalized draw probabilities
    static BobPolicy uniform_grid(int d);
};

struct PublicRecord {
    int d = 0;
    double epsilon = 0;
    int states_per_round = 0;
    long long rounds = 0;
    std::vector<CVector> basis_a, basis_b;
    std::vector<OutcomeRecord> entries;  // one per delivery, outcome channel only
};

struct SecretLedger {
    uint64_t permutation_seed = 0;
    std::vector<int> psi_index;  // true identity per delivery
};

struct ExperimentResult {
    PublicRecord record;
    SecretLedger ledger;
};
ExperimentResult run_experiment(const AliceConfig& alice, const BasisPair& basis,
                                const BobPolicy& bob, uint64_t master_seed,
                                ExecMode mode = ExecMode::serial);

// ── analysis ──────────────────────────────────────────────────────────────

struct AnalysisConfig {
    double certification_epsilon = -1;  // < 0: use the record's epsilon
    long long min_samples = 1000;
    double confidence = 0.99;
    int geometry_budget = 48;
    double positive_tol = kStrictMargin;
    double hull_tol = kHullTol;
    FloorConfig floor;
    uint64_t geometry_seed = 7;
    ExecMode mode = ExecMode::serial;
};

enum class Conclusion {
    alice_verified,   // KD-positive data, hull-external, floor above threshold
    cannot_verify,    // KD-positive data without a certified floor
    data_contextual,  // pooled data itself nonpositive beyond noise and above threshold
    indeterminate
};
std::string to_string(Conclusion c);
Conclusion decide_conclusion(double n_hat, double noise_band, double threshold_3d2eps,
                             bool cert_contextual, const ExoticAnalysis* exotic);

// model-vs-data: max outcome-frequency deviation over populated cells, and
// the worst deviation relative to 3x the per-cell Hoeffding half-width
struct HvmFit {
    bool built = false;
    std::string failure;
    NoncontextualityReport noncontextuality;
    double empirical_deviation = 0;
    double worst_relative_slack = 0;  // max over cells of dev - 3*hw (<= 0: consistent)
    bool consistent = false;
};

struct AnalysisReport {
    long long deliveries = 0;
    double epsilon_record = 0, epsilon_cert = 0;
    OutcomeCounts counts;
    KDEstimate estimate;
    CMatrix rho_hat;
    double n_hat = 0;
    double noise_band = 0;  // 3x propagated Hoeffding half-width on N
    bool kd_positive_within_noise = false;
    std::optional<HvmFit> hvm_fit;
    std::optional<ExoticAnalysis> exotic;
    std::optional<CertificationVerdict> certification;
    Conclusion conclusion = Conclusion::indeterminate;
    std::string summary;
};
AnalysisReport bob_analyze(const PublicRecord& record, const AnalysisConfig& cfg);

struct StateAnalysis {
    int psi_index = 0;
    long long deliveries = 0;
    OutcomeCounts counts;
    KDEstimate estimate;
    CMatrix rho_hat;
    double n_hat = 0;
    double noise_band = 0;
    CertificationVerdict certification;
    bool flagged_nonpositive = false;
};
struct PostselectionReport {
    std::vector<StateAnalysis> per_state;
    int argmax_negativity = 0;
};
// LedgerMismatch when the ledger does not line up with the record.
PostselectionReport alice_postselect(const PublicRecord& record, const SecretLedger& ledger,
                                     const AnalysisConfig& cfg);

double hvm_empirical_deviation(const HiddenVariableModel& model, const OutcomeCounts& counts);

}  // namespace kdc
