#include "kdc/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kdc/hvm.hpp"
#include "kdc/protocols.hpp"

namespace kdc {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::contextual: return "Contextual";
        case Verdict::noncontextual_model_exists: return "NoncontextualModelExists";
        default: return "Indeterminate";
    }
}

double WitnessMargins::best() const { return std::max({f3_plus, f3_minus, f2_minus}); }

WitnessMargins hvm_cap_violation(const DensityMatrix& rho, const BasisPair& basis, int j, int k,
                                 double epsilon) {
    const ProtocolDistributions d = exact_distributions(rho, basis, j, k, epsilon);
    const double p = d.p_z[0];
    const double cap_f3 = 0.5 * p + d.p_d;
    const double cap_f2 = 0.5 * (1.0 + d.p_m) * p + d.p_d;
    WitnessMargins m;
    m.f3_plus = d.f3v(+1, +1) - cap_f3;
    m.f3_minus = d.f3v(-1, +1) - cap_f3;
    m.f2_minus = d.f2v(-1, +1) - cap_f2;
    return m;
}

LemmaThresholds lemma_thresholds(const KDDistribution& q) {
    const int d = q.dim();
    LemmaThresholds t;
    t.from_imag = RMatrix::Zero(d, d);
    t.from_real = RMatrix::Zero(d, d);
    const double quarter_pi = M_PI / 4.0;
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
            const Cx v = q.q(j, k);
            if (std::abs(v.imag()) > kTolAlgebraic)
                t.from_imag(j, k) = std::min(std::abs(v.imag()), quarter_pi);
            if (v.real() < -kTolAlgebraic)
                t.from_real(j, k) = std::min(-v.real(), quarter_pi);
            t.best = std::max({t.best, t.from_imag(j, k), t.from_real(j, k)});
        }
    return t;
}

CertificationVerdict certify(const DensityMatrix& rho, const BasisPair& basis, double epsilon) {
    if (!(epsilon > 0.0) || epsilon > M_PI / 2.0 + 1e-15)
        throw PreconditionError("certification strength must lie in (0, pi/2]");
    const int d = basis.dim();
    if (rho.dim() != d) throw DimensionMismatch("state and basis dimensions differ");

    const KDDistribution q = kd_distribution(rho, basis);

    CertificationVerdict v;
    v.nonpositivity = q.nonpositivity();
    v.epsilon = epsilon;
    v.delta_used = std::min(v.nonpositivity, M_PI / 4.0);
    v.threshold_3d2eps = 3.0 * d * d * epsilon;

    double best = -std::numeric_limits<double>::infinity();
    v.max_margins.f3_plus = best;
    v.max_margins.f3_minus = best;
    v.max_margins.f2_minus = best;
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
            const WitnessMargins m = hvm_cap_violation(rho, basis, j, k, epsilon);
            v.max_margins.f3_plus = std::max(v.max_margins.f3_plus, m.f3_plus);
            v.max_margins.f3_minus = std::max(v.max_margins.f3_minus, m.f3_minus);
            v.max_margins.f2_minus = std::max(v.max_margins.f2_minus, m.f2_minus);
            if (m.best() > best) {
                best = m.best();
                v.margin_j = j;
                v.margin_k = k;
            }
        }

    std::ostringstream why;
    if (v.nonpositivity > 0.0 && v.threshold_3d2eps < v.delta_used - kStrictMargin) {
        v.verdict = Verdict::contextual;
        why << "nonpositivity " << v.nonpositivity << " exceeds the exclusion threshold 3d^2*eps = "
            << v.threshold_3d2eps << ": no noncontextual model at this strength";
    } else if (v.nonpositivity <= kTolComposed && epsilon < kEpsilonHvmMax) {
        const HiddenVariableModel model = build_hvm(rho, basis, epsilon);
        const CorrectnessReport corr = verify_correctness(model, rho, basis);
        const NoncontextualityReport nc = verify_noncontextuality(model);
        if (corr.pass && nc.pass) {
            v.verdict = Verdict::noncontextual_model_exists;
            why << "KD-positive state: explicit noncontextual model built and verified "
                << "(max correctness deviation " << corr.max_deviation << ")";
        } else {
            v.verdict = Verdict::indeterminate;
            why << "model construction verified poorly (correctness " << corr.max_deviation
                << ", constraints " << nc.max_deviation << ")";
        }
    } else {
        v.verdict = Verdict::indeterminate;
        why << "nonpositivity " << v.nonpositivity << " does not clear the threshold "
            << v.threshold_3d2eps << " and the constructive branch needs N <= 1e-10 with eps < "
            << kEpsilonHvmMax;
    }
    v.justification = why.str();
    return v;
}

}  // namespace kdc
