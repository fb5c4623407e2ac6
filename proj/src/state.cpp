#include "kdc/state.hpp"

#include <cmath>

namespace kdc {

PureState::PureState(CVector v) : v_(std::move(v)) {
    if (v_.size() < 2) throw DimensionMismatch("need dimension >= 2");
    if (std::abs(v_.norm() - 1.0) > kTolAlgebraic)
        throw PreconditionError("pure state is not normalized");
}

PureState PureState::normalized(CVector v) {
    const double n = v.norm();
    if (n < 1e-12) throw PreconditionError("cannot normalize a (near-)zero vector");
    return PureState(v / n);
}

DensityMatrix::DensityMatrix(CMatrix rho) : rho_(std::move(rho)) {
    if (rho_.rows() != rho_.cols() || rho_.rows() < 2)
        throw DimensionMismatch("density matrix must be square, dimension >= 2");
    if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > kTolAlgebraic)
        throw PreconditionError("density matrix is not Hermitian");
    if (std::abs(rho_.trace() - Cx(1, 0)) > kTolAlgebraic)
        throw PreconditionError("density matrix trace is not 1");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(rho_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kTolComposed)
        throw PreconditionError("density matrix has a negative eigenvalue");
}

DensityMatrix DensityMatrix::pure(const PureState& psi) { return DensityMatrix(psi.projector()); }

DensityMatrix DensityMatrix::maximally_mixed(int d) {
    return DensityMatrix(CMatrix::Identity(d, d) / static_cast<double>(d));
}

DensityMatrix DensityMatrix::mixture(const std::vector<double>& weights,
                                     const std::vector<PureState>& states) {
    if (weights.size() != states.size() || states.empty())
        throw DimensionMismatch("mixture needs matching weights and states");
    const int d = states.front().dim();
    CMatrix rho = CMatrix::Zero(d, d);
    double total = 0;
    for (size_t i = 0; i < states.size(); ++i) {
        if (weights[i] < -kTolAlgebraic) throw PreconditionError("negative mixture weight");
        rho += weights[i] * states[i].projector();
        total += weights[i];
    }
    if (std::abs(total - 1.0) > kTolAlgebraic)
        throw PreconditionError("mixture weights do not sum to 1");
    return DensityMatrix((rho + rho.adjoint()) / 2.0);
}

DensityMatrix psd_project(const CMatrix& candidate) {
    if (candidate.rows() != candidate.cols())
        throw DimensionMismatch("psd_project needs a square matrix");
    const CMatrix herm = (candidate + candidate.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(herm);
    RVector ev = es.eigenvalues().cwiseMax(0.0);
    const double total = ev.sum();
    if (total <= 0) throw PreconditionError("psd_project: no positive spectral weight");
    ev /= total;
    CMatrix rho = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
    return DensityMatrix((rho + rho.adjoint()) / 2.0);
}

}  // namespace kdc
