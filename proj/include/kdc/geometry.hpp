#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "kdc/basis.hpp"
#include "kdc/kd.hpp"
#include "kdc/parallel.hpp"
#include "kdc/state.hpp"
#include "kdc/types.hpp"

namespace kdc {

// ── Hermitian <-> real isometric vectorization ────────────────────────────
// diag entries, then sqrt(2)*Re / sqrt(2)*Im of the upper triangle; Euclidean
// norm equals the Frobenius norm.
RVector hermitian_to_real(const CMatrix& h);
CMatrix real_to_hermitian(const RVector& v, int d);

// Wolfe's minimum-norm-point algorithm over conv{points}: finite active-set
// method, returns the norm-minimizing convex combination.
struct WolfeResult {
    RVector point;
    RVector weights;
    double norm = 0;
    int major_cycles = 0;
};
WolfeResult minimum_norm_point(const std::vector<RVector>& points, double tol = 1e-12);

// ── pure KD-positive states ───────────────────────────────────────────────
enum class Provenance { basis_state, numerical_search };

struct PurePositiveSet {
    int d = 0;
    double tol = 0;
    std::vector<PureState> states;
    std::vector<Provenance> provenance;
};

// All a/b basis states plus `budget` restarts of pattern-search negativity
// minimization; keeps only N <= tol minima, deduplicated by projector
// distance (1e-6). Deterministic in `seed`; restarts run under `mode` and
// merge in restart order.
PurePositiveSet pure_positive_search(const BasisPair& basis, int budget, double tol,
                                     uint64_t seed, ExecMode mode = ExecMode::serial);

// ── convex-hull queries over the set ──────────────────────────────────────
struct HullResult {
    bool feasible = false;
    RVector weights;
    double residual = 0;  // Frobenius distance to the hull
};
HullResult hull_membership(const DensityMatrix& rho, const PurePositiveSet& set,
                           double tol = kHullTol);

// Max-margin separating hyperplane from the same minimum-norm point:
// H = (rho* - sigma*) / gap with ||H||_F = 1, c_star = Tr(H rho*),
// c_hull = max_i Tr(H psi_i), gap = c_star - c_hull.
// NoSeparation when rho* is within no_sep_tol of the hull.
struct SeparatingWitness {
    CMatrix h;
    double c_hull = 0, c_star = 0, gap = 0;
};
SeparatingWitness find_witness(const DensityMatrix& rho_star, const PurePositiveSet& set,
                               double no_sep_tol = kStrictMargin);

// ── negativity floor over the witness-feasible cap ───────────────────────
// min N(psi) over pure psi with Tr(H psi psi†) >= c_star (slack 1e-9),
// multi-start pattern search with feasibility projection toward the top
// eigenvector of H. EmptyFeasibleSet when even that eigenvector is below
// c_star.
struct FloorConfig {
    int restarts = 32;
    double constraint_slack = kStrictMargin;
    double init_step = 0.3;
    double min_step = 1e-7;
    int max_iters = 6000;
};
struct FloorEstimate {
    double delta = 0;
    PureState argmin;
    double constraint_value = 0;
    int winning_restart = 0;
};
FloorEstimate negativity_floor(const SeparatingWitness& witness, const BasisPair& basis,
                               const FloorConfig& cfg, uint64_t seed,
                               ExecMode mode = ExecMode::serial);

// ── pure-state decompositions ─────────────────────────────────────────────
// Validates sum p_i = 1, p_i >= 0, sum p_i psi_i psi_i† = rho* (Frobenius
// 1e-8; otherwise NotADecomposition) and reports component negativities;
// with a witness, also which components lie in the cap {Tr(H psi) >= c_star}.
struct DecompositionReport {
    std::vector<double> component_negativity;
    double max_negativity = 0;
    int argmax = 0;
    bool exceeds_delta = false;
    double delta = 0;
    double reconstruction_error = 0;
    std::vector<bool> in_cap;
    int n_in_cap = 0;
};
DecompositionReport check_decomposition(const DensityMatrix& rho_star,
                                        const std::vector<double>& weights,
                                        const std::vector<PureState>& components,
                                        const BasisPair& basis, double delta,
                                        const SeparatingWitness* witness = nullptr);

// ── end-to-end exotic-candidate analysis ──────────────────────────────────
// exotic := KD-positive (N <= positive_tol), outside the pure-positive hull,
// with a strictly positive witness gap.
struct ExoticAnalysis {
    double nonpositivity = 0;
    HullResult hull;
    std::optional<SeparatingWitness> witness;
    std::optional<FloorEstimate> floor;
    bool exotic = false;
};
ExoticAnalysis analyze_exotic_candidate(const DensityMatrix& rho_star, const BasisPair& basis,
                                        const PurePositiveSet& set, const FloorConfig& floor_cfg,
                                        uint64_t seed, double positive_tol = kStrictMargin,
                                        double hull_tol = kHullTol,
                                        ExecMode mode = ExecMode::serial);

// batch negativity over many pure states (bench/bulk kernel)
std::vector<double> batch_negativity(const std::vector<PureState>& states, const BasisPair& basis,
                                     ExecMode mode);

}  // namespace kdc
