#include "kdc/hvm.hpp"

#include <algorithm>
#include <cmath>

#include "kdc/kd.hpp"

namespace kdc {

HiddenVariableModel build_hvm(const DensityMatrix& rho, const BasisPair& basis, double epsilon,
                              double kd_positive_tol) {
    const int d = basis.dim();
    if (rho.dim() != d) throw DimensionMismatch("state and basis dimensions differ");
    const WeakMeasurement w(epsilon);
    if (epsilon >= kEpsilonHvmMax)
        throw EpsilonTooLarge("model construction requires strength below sqrt(5)/5");

    const KDDistribution q = kd_distribution(rho, basis);
    const double n = q.nonpositivity();
    if (n > kd_positive_tol) throw NotKDPositive("state is not KD-positive within tolerance");

    HiddenVariableModel model;
    model.d = d;
    model.epsilon = epsilon;
    model.p_m = w.p_m();
    model.p_d = w.p_d();
    model.mu = q.b_marginals().cwiseMax(0.0);

    model.xi_a_plus = RMatrix(d, d);
    for (int j = 0; j < d; ++j)
        for (int l = 0; l < d; ++l) {
            // Re w_{jl}, clamped into [0,1]; unreachable l gets the neutral 1/2
            const double c = q.weak_defined(l) ? std::clamp(q.weak_value(j, l).real(), 0.0, 1.0) : 0.5;
            model.xi_a_plus(j, l) = c;
        }

    const CMatrix& r = rho.matrix();
    model.m.reserve(static_cast<size_t>(d));
    model.gamma_x.resize(static_cast<size_t>(d));
    model.gamma_y.resize(static_cast<size_t>(d));
    for (int j = 0; j < d; ++j) {
        const CMatrix dj = 2.0 * basis.proj_a(j) - CMatrix::Identity(d, d);
        const CMatrix drd = dj * r * dj.adjoint();
        RMatrix mj(d, d);
        for (int lp = 0; lp < d; ++lp) {
            const double col = std::max(0.0, (basis.proj_b(lp) * drd).trace().real());
            for (int l = 0; l < d; ++l) mj(l, lp) = col;  // constant rows
        }
        model.m.push_back(mj);

        for (int xi = 0; xi < 2; ++xi) {
            const double x = kSigns[static_cast<size_t>(xi)];
            RMatrix g = 0.5 * model.p_d * mj;
            for (int l = 0; l < d; ++l)
                g(l, l) += 0.5 * (1.0 - model.p_d) +
                           0.5 * x * model.p_m * (2.0 * model.xi_a_plus(j, l) - 1.0);
            model.gamma_x[static_cast<size_t>(j)][static_cast<size_t>(xi)] = std::move(g);
        }
        for (int yi = 0; yi < 2; ++yi) {
            RMatrix g = 0.5 * model.p_d * mj;
            for (int l = 0; l < d; ++l) g(l, l) += 0.5 * (1.0 - model.p_d);
            model.gamma_y[static_cast<size_t>(j)][static_cast<size_t>(yi)] = std::move(g);
        }
    }

    // structural sanity: probability kernels up to fp noise
    double worst = 0.0;
    worst = std::max(worst, std::abs(model.mu.sum() - 1.0));
    for (int j = 0; j < d; ++j) {
        for (int l = 0; l < d; ++l) {
            worst = std::max(worst, std::abs(model.m[static_cast<size_t>(j)].row(l).sum() - 1.0));
            double sx = 0, sy = 0;
            for (int si = 0; si < 2; ++si) {
                const RMatrix& gx = model.gamma_x[static_cast<size_t>(j)][static_cast<size_t>(si)];
                const RMatrix& gy = model.gamma_y[static_cast<size_t>(j)][static_cast<size_t>(si)];
                if (gx.minCoeff() < -kTolAlgebraic || gy.minCoeff() < -kTolAlgebraic)
                    throw InternalInconsistency("negative response-kernel entry");
                sx += gx.row(l).sum();
                sy += gy.row(l).sum();
            }
            worst = std::max({worst, std::abs(sx - 1.0), std::abs(sy - 1.0)});
        }
    }
    if (worst > 10 * kTolAlgebraic)
        throw InternalInconsistency("response kernels are not normalized");
    return model;
}

std::array<double, 4> hvm_predict(const HiddenVariableModel& model, int protocol, int j, int k) {
    const int d = model.d;
    if (j < 0 || j >= d || k < 0 || k >= d) throw DimensionMismatch("cell index out of range");
    const RVector& mu = model.mu;
    std::array<double, 4> t{};
    switch (protocol) {
        case 1:
            t[0] = mu[k];
            t[1] = 1.0 - mu[k];
            return t;
        case 2:
        case 3: {
            const auto& gpair = protocol == 2 ? model.gamma_x[static_cast<size_t>(j)]
                                              : model.gamma_y[static_cast<size_t>(j)];
            for (int si = 0; si < 2; ++si) {
                const RMatrix& g = gpair[static_cast<size_t>(si)];
                double pz = 0, ptot = 0;
                for (int l = 0; l < d; ++l) {
                    pz += mu[l] * g(l, k);
                    ptot += mu[l] * g.row(l).sum();
                }
                t[static_cast<size_t>(si * 2 + 0)] = pz;
                t[static_cast<size_t>(si * 2 + 1)] = ptot - pz;
            }
            return t;
        }
        case 4:
        case 5: {
            const auto& gpair = protocol == 4 ? model.gamma_x[static_cast<size_t>(j)]
                                              : model.gamma_y[static_cast<size_t>(j)];
            for (int si = 0; si < 2; ++si) {
                double p = 0;
                for (int l = 0; l < d; ++l)
                    p += mu[l] * gpair[static_cast<size_t>(si)].row(l).sum();
                t[static_cast<size_t>(si)] = p;
            }
            return t;
        }
        case 6: {
            // dephasing channel on the hidden variable, then the reference test
            const RMatrix& mj = model.m[static_cast<size_t>(j)];
            double pz = 0;
            for (int l = 0; l < d; ++l)
                pz += mu[l] * ((1.0 - model.p_d) * (l == k ? 1.0 : 0.0) + model.p_d * mj(l, k));
            t[0] = pz;
            t[1] = 1.0 - pz;
            return t;
        }
        default: throw PreconditionError("protocol must be 1..6");
    }
}

CorrectnessReport verify_correctness(const HiddenVariableModel& model, const DensityMatrix& rho,
                                     const BasisPair& basis, double tol) {
    CorrectnessReport rep;
    rep.tol = tol;
    for (int j = 0; j < model.d; ++j)
        for (int k = 0; k < model.d; ++k) {
            const ProtocolDistributions exact =
                exact_distributions(rho, basis, j, k, model.epsilon);
            for (int p = 1; p <= 6; ++p) {
                const auto predicted = hvm_predict(model, p, j, k);
                const auto reference = exact.table(p);
                for (int oi = 0; oi < outcome_count(p); ++oi)
                    rep.dev[static_cast<size_t>(p - 1)] =
                        std::max(rep.dev[static_cast<size_t>(p - 1)],
                                 std::abs(predicted[static_cast<size_t>(oi)] -
                                          reference[static_cast<size_t>(oi)]));
            }
        }
    rep.max_deviation = *std::max_element(rep.dev.begin(), rep.dev.end());
    rep.pass = rep.max_deviation <= tol;
    return rep;
}

NoncontextualityReport verify_noncontextuality(const HiddenVariableModel& model, double tol) {
    NoncontextualityReport rep;
    rep.tol = tol;
    const int d = model.d;
    for (int j = 0; j < d; ++j) {
        const RMatrix& mj = model.m[static_cast<size_t>(j)];
        for (int si = 0; si < 2; ++si) {
            const double x = kSigns[static_cast<size_t>(si)];
            const RMatrix& gx = model.gamma_x[static_cast<size_t>(j)][static_cast<size_t>(si)];
            const RMatrix& gy = model.gamma_y[static_cast<size_t>(j)][static_cast<size_t>(si)];
            for (int l = 0; l < d; ++l) {
                rep.y_marginal_half =
                    std::max(rep.y_marginal_half, std::abs(gy.row(l).sum() - 0.5));
                const double xi_a = x > 0 ? model.xi_a_plus(j, l) : 1.0 - model.xi_a_plus(j, l);
                rep.x_marginal_povm =
                    std::max(rep.x_marginal_povm,
                             std::abs(gx.row(l).sum() - (0.5 * (1.0 - model.p_m) + model.p_m * xi_a)));
            }
        }
        const RMatrix sum_x = model.gamma_x[static_cast<size_t>(j)][0] + model.gamma_x[static_cast<size_t>(j)][1];
        const RMatrix sum_y = model.gamma_y[static_cast<size_t>(j)][0] + model.gamma_y[static_cast<size_t>(j)][1];
        RMatrix target = model.p_d * mj;
        for (int l = 0; l < d; ++l) target(l, l) += 1.0 - model.p_d;
        rep.x_sum_dephasing = std::max(rep.x_sum_dephasing, (sum_x - target).cwiseAbs().maxCoeff());
        rep.y_sum_dephasing = std::max(rep.y_sum_dephasing, (sum_y - target).cwiseAbs().maxCoeff());
    }
    rep.max_deviation = std::max({rep.y_marginal_half, rep.x_marginal_povm, rep.x_sum_dephasing,
                                  rep.y_sum_dephasing});
    rep.pass = rep.max_deviation <= tol;
    return rep;
}

}  // namespace kdc
