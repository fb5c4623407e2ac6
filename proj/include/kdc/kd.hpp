#pragma once

#include "kdc/basis.hpp"
#include "kdc/state.hpp"
#include "kdc/types.hpp"

namespace kdc {

// Kirkwood-Dirac quasiprobability distribution
//   Q_{jk} = Tr(|b_k><b_k| |a_j><a_j| rho) = <b_k|a_j><a_j|rho|b_k>.
// Rows marginalize to Tr(Pi^A_j rho), columns to Tr(Pi^B_k rho), the total
// sum is 1. The class holds Q plus derived quantities; it is also the
// carrier for estimated (noisy) distributions, which satisfy the identities
// only approximately.
class KDDistribution {
  public:
    explicit KDDistribution(CMatrix q);

    int dim() const { return static_cast<int>(q_.rows()); }
    const CMatrix& q() const { return q_; }
    Cx q(int j, int k) const { return q_(j, k); }

    // -1 + sum |Q_{jk}|; raw values in [-1e-12, 0] clamp to 0, anything
    // below that range signals a corrupted distribution
    double nonpositivity() const;

    // p^k_{+1} = Re sum_j Q_{jk} and row counterpart
    RVector b_marginals() const;
    RVector a_marginals() const;

    // weak value w_{jk} = Q_{jk} / p^k; undefined when p^k <= 1e-12
    bool weak_defined(int k) const;
    Cx weak_value(int j, int k) const;
    // conditional weak value: z=+1 gives w_{jk}; z=-1 averages the other
    // columns, (sum_{m != k} Q_{jm}) / (1 - p^k); undefined when the
    // conditioning probability is <= 1e-12
    bool conditional_weak_defined(int k, int z) const;
    Cx conditional_weak_value(int j, int k, int z) const;

  private:
    CMatrix q_;
    RVector col_p_, row_p_;
};

KDDistribution kd_distribution(const DensityMatrix& rho, const BasisPair& basis);

// sum_{jk} Q_{jk} |a_j><b_k| / <b_k|a_j>, Hermitized; the raw operator for
// estimated inputs (no density validation). IllConditionedOverlap when any
// |<b_k|a_j>| <= overlap_floor.
CMatrix reconstruct_operator(const CMatrix& q, const BasisPair& basis,
                             double overlap_floor = kOverlapFloor);

// Reconstruction validated as a density matrix; for exact Q of a state this
// inverts kd_distribution on both sides.
DensityMatrix reconstruct_state(const KDDistribution& q, const BasisPair& basis,
                                double overlap_floor = kOverlapFloor);

}  // namespace kdc
