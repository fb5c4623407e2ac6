#pragma once

#include <cstdint>
#include <vector>

#include "kdc/types.hpp"

namespace kdc {

// An ordered pair of orthonormal bases {|a_j>}, {|b_k>} of C^d. The two
// bases must not share any projector (|a_j><a_j| != |b_k><b_k| for all j,k):
// every construction validates this.
class BasisPair {
  public:
    BasisPair(std::vector<CVector> a, std::vector<CVector> b);

    // computational basis vs. discrete-Fourier basis; at d = 2 this is the
    // computational/Hadamard mutually unbiased pair
    static BasisPair fourier_pair(int d);
    static BasisPair mub_qubit() { return fourier_pair(2); }
    // two independent Haar-random bases (redrawn until overlaps are
    // comfortably conditioned; intended for tests)
    static BasisPair random_pair(int d, uint64_t seed, double min_overlap = 0.05);

    int dim() const { return d_; }
    const CVector& a(int j) const { return a_[static_cast<size_t>(j)]; }
    const CVector& b(int k) const { return b_[static_cast<size_t>(k)]; }
    CMatrix proj_a(int j) const { return a(j) * a(j).adjoint(); }
    CMatrix proj_b(int k) const { return b(k) * b(k).adjoint(); }

    // <b_k|a_j>
    Cx overlap(int j, int k) const { return b(k).dot(a(j)); }
    double min_abs_overlap() const;

  private:
    int d_;
    std::vector<CVector> a_, b_;
};

}  // namespace kdc
