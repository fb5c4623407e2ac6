#pragma once

#include <vector>

#include "kdc/types.hpp"

namespace kdc {

// Unit vector in C^d (norm 1 within 1e-12).
class PureState {
  public:
    explicit PureState(CVector v);
    static PureState normalized(CVector v);

    int dim() const { return static_cast<int>(v_.size()); }
    const CVector& vec() const { return v_; }
    CMatrix projector() const { return v_ * v_.adjoint(); }

  private:
    CVector v_;
};

// Density matrix: Hermitian within 1e-12, unit trace within 1e-12,
// eigenvalues >= -1e-10.
class DensityMatrix {
  public:
    explicit DensityMatrix(CMatrix rho);
    static DensityMatrix pure(const PureState& psi);
    static DensityMatrix maximally_mixed(int d);
    static DensityMatrix mixture(const std::vector<double>& weights,
                                 const std::vector<PureState>& states);

    int dim() const { return static_cast<int>(rho_.rows()); }
    const CMatrix& matrix() const { return rho_; }

  private:
    CMatrix rho_;
};

// Nearest-density repair for estimated operators: Hermitize, clip negative
// eigenvalues to zero, renormalize the trace.
DensityMatrix psd_project(const CMatrix& candidate);

}  // namespace kdc
