#pragma once

#include <string>

#include "kdc/basis.hpp"
#include "kdc/kd.hpp"
#include "kdc/state.hpp"
#include "kdc/types.hpp"

namespace kdc {

enum class Verdict { contextual, noncontextual_model_exists, indeterminate };
std::string to_string(Verdict v);

// Caps obeyed by every noncontextual model of the protocol family, and the
// exact quantum values' margins above them at cell (j, k):
//   f3(+-1, z=+1) <= p^k/2 + p_d          (margin fields f3_plus / f3_minus)
//   f2(-1,  z=+1) <= (1+p_m) p^k/2 + p_d  (margin field  f2_minus)
// A positive margin rules out any noncontextual model at this strength.
struct WitnessMargins {
    double f3_plus = 0, f3_minus = 0, f2_minus = 0;
    double best() const;
};
WitnessMargins hvm_cap_violation(const DensityMatrix& rho, const BasisPair& basis, int j, int k,
                                 double epsilon);

// Per-entry strength thresholds below which the caps are provably violated:
// min(|Im Q|, pi/4) for imaginary entries, min(-Re Q, pi/4) for negative
// real parts; zero where the entry gives no handle.
struct LemmaThresholds {
    RMatrix from_imag, from_real;
    double best = 0;
};
LemmaThresholds lemma_thresholds(const KDDistribution& q);

// Decision rule: with delta = min(N(rho), pi/4),
//   N(rho) > 0 and 3 d^2 epsilon < delta (strict by 1e-9)  -> contextual
//   N(rho) <= 1e-10 and epsilon < sqrt(5)/5                -> noncontextual
//     model exists (established constructively via build_hvm + verifiers)
//   otherwise                                              -> indeterminate
struct CertificationVerdict {
    Verdict verdict = Verdict::indeterminate;
    double nonpositivity = 0;
    double epsilon = 0;
    double delta_used = 0;
    double threshold_3d2eps = 0;
    WitnessMargins max_margins;  // entrywise maxima over all cells
    int margin_j = 0, margin_k = 0;
    std::string justification;
};
CertificationVerdict certify(const DensityMatrix& rho, const BasisPair& basis, double epsilon);

}  // namespace kdc
