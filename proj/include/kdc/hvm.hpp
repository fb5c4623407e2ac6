#pragma once

#include <array>
#include <vector>

#include "kdc/basis.hpp"
#include "kdc/protocols.hpp"
#include "kdc/state.hpp"
#include "kdc/types.hpp"

namespace kdc {

// Largest strength for which the constructive model below is guaranteed:
// sqrt(5)/5.
inline const double kEpsilonHvmMax = 0.4472135954999579;

// Noncontextual hidden-variable model over Lambda = {0..d-1} for a
// KD-positive state:
//   mu(l)            = Tr(rho Pi^B_l)
//   xi_B deterministic: protocol-1 outcome z = +1 iff l == k  (implicit)
//   xi_A_j(+1|l)     = Re w_{j,l}               (the weak value, in [0,1])
//   m_j(l'|l)        = Tr(Pi^B_{l'} D_j rho D_j)  (constant in l)
//   GammaX_j(x,l'|l) = delta_{ll'} [ (1-p_d)/2 + x p_m (2 Re w_{j,l'} - 1)/2 ]
//                      + p_d m_j(l'|l)/2
//   GammaY_j(y,l'|l) = delta_{ll'} (1-p_d)/2 + p_d m_j(l'|l)/2
//   Gamma_D_j        = m_j
// Kernels are stored densely; the response-function constraints hold exactly
// by construction, correctness w.r.t. the quantum tables to ~p_m * N(rho).
struct HiddenVariableModel {
    int d = 0;
    double epsilon = 0, p_m = 0, p_d = 0;
    RVector mu;
    RMatrix xi_a_plus;                            // (j, l)
    std::vector<RMatrix> m;                       // per j: (l, l') rows stochastic
    std::vector<std::array<RMatrix, 2>> gamma_x;  // per j, slot sidx(x): (l, l')
    std::vector<std::array<RMatrix, 2>> gamma_y;
};

// Requires N(rho) <= kd_positive_tol (NotKDPositive) and
// epsilon < sqrt(5)/5 (EpsilonTooLarge). Re w is clamped into [0,1], which
// is a no-op for exactly KD-positive states and keeps the kernels
// probabilistic for states inside the tolerance.
HiddenVariableModel build_hvm(const DensityMatrix& rho, const BasisPair& basis, double epsilon,
                              double kd_positive_tol = kTolComposed);

// model outcome table for a protocol at cell (j, k), canonical outcome order
std::array<double, 4> hvm_predict(const HiddenVariableModel& model, int protocol, int j, int k);

// max |model - quantum| per protocol over all cells
struct CorrectnessReport {
    std::array<double, 6> dev{};  // index p-1 for protocol p
    double max_deviation = 0;
    double tol = 0;
    bool pass = false;
};
CorrectnessReport verify_correctness(const HiddenVariableModel& model, const DensityMatrix& rho,
                                     const BasisPair& basis, double tol = kTolComposed);

// The four operational-equivalence constraints on the response functions:
//   y_marginal_half : sum_l' GammaY(y,l'|l) = 1/2
//   x_marginal_povm : sum_l' GammaX(x,l'|l) = (1-p_m)/2 + p_m xi_A(x|l)
//   x_sum_dephasing : sum_x GammaX(x,l'|l) = (1-p_d) delta + p_d GammaD
//   y_sum_dephasing : sum_y GammaY(y,l'|l) = (1-p_d) delta + p_d GammaD
struct NoncontextualityReport {
    double y_marginal_half = 0, x_marginal_povm = 0;
    double x_sum_dephasing = 0, y_sum_dephasing = 0;
    double max_deviation = 0;
    double tol = 0;
    bool pass = false;
};
NoncontextualityReport verify_noncontextuality(const HiddenVariableModel& model,
                                               double tol = kTolAlgebraic);

}  // namespace kdc
