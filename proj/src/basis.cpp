#include "kdc/basis.hpp"

#include <cmath>

#include "kdc/rng.hpp"

namespace kdc {

namespace {

void check_orthonormal(const std::vector<CVector>& vs, int d, const char* which) {
    for (size_t i = 0; i < vs.size(); ++i) {
        if (vs[i].size() != d) throw DimensionMismatch("basis vector has wrong dimension");
        for (size_t l = i; l < vs.size(); ++l) {
            const Cx g = vs[i].dot(vs[l]);
            const double expect = (i == l) ? 1.0 : 0.0;
            if (std::abs(g - expect) > kTolAlgebraic)
                throw PreconditionError(std::string(which) + " family is not orthonormal");
        }
    }
}

}  // namespace

BasisPair::BasisPair(std::vector<CVector> a, std::vector<CVector> b)
    : d_(static_cast<int>(a.size())), a_(std::move(a)), b_(std::move(b)) {
    if (d_ < 2) throw DimensionMismatch("need dimension >= 2");
    if (static_cast<int>(b_.size()) != d_)
        throw DimensionMismatch("the two bases have different sizes");
    check_orthonormal(a_, d_, "a");
    check_orthonormal(b_, d_, "b");
    // the references must differ as projector sets
    for (int j = 0; j < d_; ++j)
        for (int k = 0; k < d_; ++k) {
            const double fidelity = std::abs(b_[static_cast<size_t>(k)].dot(a_[static_cast<size_t>(j)]));
            // ||aa† - bb†||_F = sqrt(2 (1 - fidelity^2))
            if (std::sqrt(std::max(0.0, 2.0 * (1.0 - fidelity * fidelity))) <= 1e-9)
                throw PreconditionError("bases share a projector");
        }
}

BasisPair BasisPair::fourier_pair(int d) {
    std::vector<CVector> a(static_cast<size_t>(d)), b(static_cast<size_t>(d));
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    for (int j = 0; j < d; ++j) {
        CVector e = CVector::Zero(d);
        e[j] = 1.0;
        a[static_cast<size_t>(j)] = e;
        CVector f(d);
        for (int n = 0; n < d; ++n) {
            const double phase = 2.0 * M_PI * n * j / d;
            f[n] = s * Cx(std::cos(phase), std::sin(phase));
        }
        b[static_cast<size_t>(j)] = f;
    }
    return BasisPair(std::move(a), std::move(b));
}

BasisPair BasisPair::random_pair(int d, uint64_t seed, double min_overlap) {
    SplitMix64 rng(seed);
    for (int attempt = 0; attempt < 256; ++attempt) {
        const CMatrix ua = random_unitary(d, rng);
        const CMatrix ub = random_unitary(d, rng);
        std::vector<CVector> a(static_cast<size_t>(d)), b(static_cast<size_t>(d));
        double worst = 1.0;
        for (int j = 0; j < d; ++j) {
            a[static_cast<size_t>(j)] = ua.col(j);
            b[static_cast<size_t>(j)] = ub.col(j);
        }
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k)
                worst = std::min(worst, std::abs(b[static_cast<size_t>(k)].dot(a[static_cast<size_t>(j)])));
        if (worst >= min_overlap) return BasisPair(std::move(a), std::move(b));
    }
    throw PreconditionError("could not draw a well-conditioned basis pair");
}

double BasisPair::min_abs_overlap() const {
    double worst = 1.0;
    for (int j = 0; j < d_; ++j)
        for (int k = 0; k < d_; ++k) worst = std::min(worst, std::abs(overlap(j, k)));
    return worst;
}

}  // namespace kdc
