#pragma once

// shared fixtures for the test suites

#include <cmath>
#include <complex>

#include "kdc/basis.hpp"
#include "kdc/rng.hpp"
#include "kdc/state.hpp"
#include "kdc/types.hpp"

namespace kdct {

inline kdc::PureState plus_i() {
    kdc::CVector v(2);
    v << kdc::Cx(1, 0), kdc::Cx(0, 1);
    return kdc::PureState::normalized(v);
}

inline kdc::PureState minus_i() {
    kdc::CVector v(2);
    v << kdc::Cx(1, 0), kdc::Cx(0, -1);
    return kdc::PureState::normalized(v);
}

inline kdc::PureState basis_state(int d, int i) {
    kdc::CVector v = kdc::CVector::Zero(d);
    v[i] = 1.0;
    return kdc::PureState(v);
}

// a random mixed state: Ginibre, full rank almost surely
inline kdc::DensityMatrix random_state(int d, uint64_t seed) {
    kdc::SplitMix64 rng(seed);
    return kdc::DensityMatrix(kdc::random_density_matrix(d, rng));
}

inline kdc::PureState random_pure(int d, uint64_t seed) {
    kdc::SplitMix64 rng(seed);
    return kdc::PureState(kdc::random_unit_vector(d, rng));
}

}  // namespace kdct
