#include "kdc/rng.hpp"

#include <cmath>

namespace kdc {

double SplitMix64::next_normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller; u1 nudged away from 0
    double u1 = next_double(), u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

CVector random_unit_vector(int d, SplitMix64& rng) {
    CVector v(d);
    for (int i = 0; i < d; ++i) {
        const double re = rng.next_normal();
        const double im = rng.next_normal();
        v[i] = Cx(re, im);
    }
    const double n = v.norm();
    if (n < 1e-12) return random_unit_vector(d, rng);
    return v / n;
}

CMatrix random_unitary(int d, SplitMix64& rng) {
    CMatrix g(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) g(r, c) = Cx(rng.next_normal(), rng.next_normal());
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ();
    CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    // fix phases so the distribution is Haar
    for (int c = 0; c < d; ++c) {
        const Cx rc = r(c, c);
        const double a = std::abs(rc);
        q.col(c) *= (a > 0) ? rc / a : Cx(1, 0);
    }
    return q;
}

CMatrix random_density_matrix(int d, SplitMix64& rng) {
    CMatrix g(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) g(r, c) = Cx(rng.next_normal(), rng.next_normal());
    CMatrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    // exact Hermitian symmetrization against fp drift
    return (rho + rho.adjoint()) / 2.0;
}

}  // namespace kdc
