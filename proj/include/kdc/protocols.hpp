#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "kdc/basis.hpp"
#include "kdc/kd.hpp"
#include "kdc/parallel.hpp"
#include "kdc/rng.hpp"
#include "kdc/state.hpp"
#include "kdc/types.hpp"

namespace kdc {

// sign-to-slot convention used by every outcome table: +1 -> 0, -1 -> 1
inline int sidx(int sign) { return sign > 0 ? 0 : 1; }
inline constexpr std::array<int, 2> kSigns{+1, -1};

// Weak-measurement strength. p_m = sin 2e is the signal weight of the
// measured observable, p_d = sin^2 e the induced dephasing weight;
// p_m^2 = 4 p_d (1 - p_d).
struct WeakMeasurement {
    double epsilon;
    explicit WeakMeasurement(double eps);  // requires 0 < eps <= pi/2
    double p_m() const;
    double p_d() const;
};

// Kraus operators of the strength-e pointer coupling to D_j = 2 Pi^A_j - I:
//   X readout: A^X_{x,j} = (cos e I + x sin e D_j) / sqrt(2)
//   Y readout: A^Y_{y,j} = (cos e I - i y sin e D_j) / sqrt(2)
struct KrausPair {
    std::array<CMatrix, 2> x;  // slot sidx(+-1)
    std::array<CMatrix, 2> y;
    CMatrix d;
};
KrausPair kraus_operators(const BasisPair& basis, int j, double epsilon);

// Exact outcome distributions of the six measurement protocols for a fixed
// cell (j, k):
//   1  projective B measurement                      -> z
//   2  X-weak measurement of D_j, then B             -> (x, z)
//   3  Y-weak measurement of D_j, then B             -> (y, z)
//   4  X-weak measurement alone                      -> x
//   5  Y-weak measurement alone                      -> y
//   6  weak measurement with readout discarded, B    -> z
// Tables are computed twice: by Kraus conjugation (stored) and by the
// closed forms in the weak values; the routes must agree (route_deviation,
// InternalInconsistency beyond 1e-10).
struct ProtocolDistributions {
    int j = 0, k = 0;
    double epsilon = 0, p_m = 0, p_d = 0;
    std::array<double, 2> f1{}, f4{}, f5{}, f6{};
    std::array<std::array<double, 2>, 2> f2{}, f3{};  // [sidx(x|y)][sidx(z)]
    std::array<double, 2> p_z{}, q_z{};               // Tr(Pi^{B,z}_k rho), Tr(Pi^{B,z}_k D rho D)
    double a_marginal = 0;                            // Tr(Pi^A_j rho)
    double route_deviation = 0;

    double f1v(int z) const { return f1[sidx(z)]; }
    double f2v(int x, int z) const { return f2[sidx(x)][sidx(z)]; }
    double f3v(int y, int z) const { return f3[sidx(y)][sidx(z)]; }
    double f4v(int x) const { return f4[sidx(x)]; }
    double f5v(int y) const { return f5[sidx(y)]; }
    double f6v(int z) const { return f6[sidx(z)]; }

    // flattened table in the canonical outcome order of `protocol`
    std::array<double, 4> table(int protocol) const;
};
ProtocolDistributions exact_distributions(const DensityMatrix& rho, const BasisPair& basis,
                                          int j, int k, double epsilon);

// canonical outcome order: two-sign protocols [(+1), (-1)]; protocols 2/3
// [( +1,+1), (+1,-1), (-1,+1), (-1,-1)] as (x|y, z)
int outcome_count(int protocol);
void outcome_signs(int protocol, int index, int& x, int& y, int& z);

struct MarginalizationReport {
    double f4_from_f2 = 0;  // max_x |f4(x) - sum_z f2(x,z)|
    double f5_from_f3 = 0;
    double f6_from_f2 = 0;
    double f6_from_f3 = 0;
    double normalization = 0;  // max over the six tables of |sum - 1|
    double max_deviation = 0;
    bool pass = false;
};
MarginalizationReport marginalization_check(const ProtocolDistributions& dists,
                                            double tol = kTolAlgebraic);

// ── sampling ──────────────────────────────────────────────────────────────

struct OutcomeRecord {
    long long round = 0;
    int protocol = 0, j = 0, k = 0;
    int x = 0, y = 0, z = 0;  // +-1; 0 marks "not part of this protocol"
    uint64_t seed_cell = 0;
};

// inverse-CDF walk over the canonical order (last slot absorbs fp residue)
int draw_outcome(const std::array<double, 4>& table, int n_outcomes, double u);

// one outcome by inverse CDF over the canonical order
OutcomeRecord sample_protocol(const ProtocolDistributions& dists, int protocol, SplitMix64& rng);

// Weighted outcome tallies. Protocol 1 pools over the j label (its physics
// has no j); protocols 4/5 pool over k. Weights are doubles so tests can
// inject exact probabilities as infinite-sample frequencies.
class OutcomeCounts {
  public:
    OutcomeCounts() = default;  // empty placeholder; reports overwrite it
    explicit OutcomeCounts(int d);

    int dim() const { return d_; }
    void add(const OutcomeRecord& rec, double weight = 1.0);
    void add_outcome(int protocol, int j, int k, int index, double weight);
    // add a whole cell's table with the given total weight
    void add_table(int protocol, int j, int k, const std::array<double, 4>& probs,
                   double total_weight);

    double cell_total(int protocol, int j, int k) const;
    double outcome_weight(int protocol, int j, int k, int index) const;
    double frequency(int protocol, int j, int k, int index) const;  // InsufficientSamples on empty
    // smallest cell total among the cells the estimator uses (protocols 1-3)
    double min_estimation_cell(void) const;

  private:
    double* slot(int protocol, int j, int k, int index);
    const double* slot(int protocol, int j, int k, int index) const;
    int d_ = 0;
    std::vector<double> t1_, t2_, t3_, t4_, t5_, t6_;
};

// Closed-form inversion of the protocol tables (exact at any strength):
//   Re Q = ( (f2(+1,+1) - f2(-1,+1)) / p_m + p^k ) / 2
//   Im Q = ( f3(+1,+1) - f3(-1,+1) ) / (2 p_m)
// with p^k from protocol-1 frequencies. Half-widths are two-sided Hoeffding
// bounds at the given confidence.
struct KDEstimate {
    CMatrix q_hat;
    RMatrix hw_re, hw_im;
    double confidence = 0;
    double epsilon = 0;
    double min_cell_count = 0;
    double nonpositivity_halfwidth = 0;  // sum_{jk} (hw_re + hw_im)
};
KDEstimate estimate_kd(const OutcomeCounts& counts, double epsilon, double confidence = 0.99);

// ── bulk sampling kernel (serial reference + OpenMP) ─────────────────────

struct CellTask {
    int protocol = 0, j = 0, k = 0;
    long long shots = 0;
    uint64_t seed = 0;
    std::array<double, 4> table{};
    int n_outcomes = 0;
};
CellTask make_cell_task(const ProtocolDistributions& dists, int protocol, long long shots,
                        uint64_t seed);

// tallies all tasks; parallel over tasks, merged in task order
OutcomeCounts sample_cells(const std::vector<CellTask>& tasks, int d, ExecMode mode);

}  // namespace kdc
