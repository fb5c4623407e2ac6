#include "kdc/kd.hpp"

#include <cmath>

namespace kdc {

KDDistribution::KDDistribution(CMatrix q) : q_(std::move(q)) {
    if (q_.rows() != q_.cols() || q_.rows() < 2)
        throw DimensionMismatch("KD distribution must be square, dimension >= 2");
    const int d = dim();
    col_p_ = RVector(d);
    row_p_ = RVector(d);
    for (int k = 0; k < d; ++k) col_p_[k] = q_.col(k).sum().real();
    for (int j = 0; j < d; ++j) row_p_[j] = q_.row(j).sum().real();
}

double KDDistribution::nonpositivity() const {
    const double raw = q_.cwiseAbs().sum() - 1.0;
    if (raw < -kTolAlgebraic)
        throw InternalInconsistency("KD absolute sum below 1: corrupted distribution");
    return std::max(raw, 0.0);
}

RVector KDDistribution::b_marginals() const { return col_p_; }
RVector KDDistribution::a_marginals() const { return row_p_; }

bool KDDistribution::weak_defined(int k) const { return col_p_[k] > kTolAlgebraic; }

Cx KDDistribution::weak_value(int j, int k) const {
    if (!weak_defined(k))
        throw UndefinedWeakValue("weak value undefined: reference outcome has zero probability");
    return q_(j, k) / col_p_[k];
}

bool KDDistribution::conditional_weak_defined(int k, int z) const {
    return z > 0 ? weak_defined(k) : (1.0 - col_p_[k]) > kTolAlgebraic;
}

Cx KDDistribution::conditional_weak_value(int j, int k, int z) const {
    if (z > 0) return weak_value(j, k);
    if (!conditional_weak_defined(k, z))
        throw UndefinedWeakValue("conditional weak value undefined at z = -1");
    // sum_{m != k} w_{jm} p^m / sum_{m != k} p^m, written division-free on top
    return (q_.row(j).sum() - q_(j, k)) / (1.0 - col_p_[k]);
}

KDDistribution kd_distribution(const DensityMatrix& rho, const BasisPair& basis) {
    if (rho.dim() != basis.dim()) throw DimensionMismatch("state and basis dimensions differ");
    const int d = basis.dim();
    CMatrix q(d, d);
    for (int k = 0; k < d; ++k) {
        const CVector rho_bk = rho.matrix() * basis.b(k);
        for (int j = 0; j < d; ++j)
            q(j, k) = basis.overlap(j, k) * basis.a(j).dot(rho_bk);  // <b_k|a_j><a_j|rho|b_k>
    }
    return KDDistribution(std::move(q));
}

CMatrix reconstruct_operator(const CMatrix& q, const BasisPair& basis, double overlap_floor) {
    const int d = basis.dim();
    if (q.rows() != d || q.cols() != d)
        throw DimensionMismatch("KD matrix and basis dimensions differ");
    CMatrix r = CMatrix::Zero(d, d);
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
            const Cx ov = basis.overlap(j, k);
            if (std::abs(ov) <= overlap_floor)
                throw IllConditionedOverlap("reconstruction overlap below floor");
            r += (q(j, k) / ov) * (basis.a(j) * basis.b(k).adjoint());
        }
    return (r + r.adjoint()) / 2.0;
}

DensityMatrix reconstruct_state(const KDDistribution& q, const BasisPair& basis,
                                double overlap_floor) {
    return DensityMatrix(reconstruct_operator(q.q(), basis, overlap_floor));
}

}  // namespace kdc
