#include "kdc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kdc/rng.hpp"

namespace kdc {

// ── vectorization ─────────────────────────────────────────────────────────

RVector hermitian_to_real(const CMatrix& h) {
    const int d = static_cast<int>(h.rows());
    if (h.cols() != d) throw DimensionMismatch("vectorization needs a square matrix");
    RVector v(d * d);
    int pos = 0;
    const double r2 = std::sqrt(2.0);
    for (int i = 0; i < d; ++i) v[pos++] = h(i, i).real();
    for (int i = 0; i < d; ++i)
        for (int l = i + 1; l < d; ++l) {
            v[pos++] = r2 * h(i, l).real();
            v[pos++] = r2 * h(i, l).imag();
        }
    return v;
}

CMatrix real_to_hermitian(const RVector& v, int d) {
    if (v.size() != d * d) throw DimensionMismatch("vector length does not match dimension");
    CMatrix h(d, d);
    int pos = 0;
    const double r2 = std::sqrt(2.0);
    for (int i = 0; i < d; ++i) h(i, i) = v[pos++];
    for (int i = 0; i < d; ++i)
        for (int l = i + 1; l < d; ++l) {
            const double re = v[pos++] / r2;
            const double im = v[pos++] / r2;
            h(i, l) = Cx(re, im);
            h(l, i) = Cx(re, -im);
        }
    return h;
}

// ── Wolfe minimum-norm point ─────────────────────────────────────────────

namespace {

// min-norm point of the affine hull of the corral columns:
// KKT system [0 1^T; 1 G][theta; beta] = [1; 0] with G the Gram matrix
RVector affine_min_norm_weights(const std::vector<RVector>& pts, const std::vector<int>& corral) {
    const int s = static_cast<int>(corral.size());
    RMatrix sys(s + 1, s + 1);
    sys(0, 0) = 0;
    for (int i = 0; i < s; ++i) {
        sys(0, i + 1) = 1;
        sys(i + 1, 0) = 1;
        for (int l = 0; l < s; ++l)
            sys(i + 1, l + 1) = pts[static_cast<size_t>(corral[static_cast<size_t>(i)])].dot(
                pts[static_cast<size_t>(corral[static_cast<size_t>(l)])]);
    }
    RVector rhs = RVector::Zero(s + 1);
    rhs[0] = 1;
    const RVector sol = sys.completeOrthogonalDecomposition().solve(rhs);
    return sol.tail(s);
}

}  // namespace

WolfeResult minimum_norm_point(const std::vector<RVector>& points, double tol) {
    if (points.empty()) throw SetEmpty("minimum_norm_point needs a nonempty set");
    const int m = static_cast<int>(points[0].size());
    double scale = 1.0;
    for (const auto& p : points) {
        if (p.size() != m) throw DimensionMismatch("points have mixed dimensions");
        scale = std::max(scale, p.squaredNorm());
    }

    int first = 0;
    for (size_t i = 1; i < points.size(); ++i)
        if (points[i].squaredNorm() < points[static_cast<size_t>(first)].squaredNorm())
            first = static_cast<int>(i);

    std::vector<int> corral{first};
    std::vector<double> alpha{1.0};
    RVector x = points[static_cast<size_t>(first)];

    WolfeResult res;
    const int major_limit = 50 * static_cast<int>(points.size()) + 200;
    for (int major = 0; major < major_limit; ++major) {
        res.major_cycles = major + 1;
        int best = 0;
        double best_dot = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < points.size(); ++i) {
            const double dot = x.dot(points[i]);
            if (dot < best_dot) {
                best_dot = dot;
                best = static_cast<int>(i);
            }
        }
        if (x.squaredNorm() - best_dot <= tol * scale) break;  // optimality
        if (std::find(corral.begin(), corral.end(), best) != corral.end()) break;
        corral.push_back(best);
        alpha.push_back(0.0);

        for (int minor = 0; minor < 4 * m + 64; ++minor) {
            const RVector beta = affine_min_norm_weights(points, corral);
            double min_beta = beta.minCoeff();
            if (min_beta >= -1e-12) {
                for (size_t i = 0; i < corral.size(); ++i) alpha[i] = std::max(beta[static_cast<Eigen::Index>(i)], 0.0);
                break;
            }
            // step back onto the simplex boundary and drop vanishing vertices
            double theta = 1.0;
            for (size_t i = 0; i < corral.size(); ++i)
                if (beta[static_cast<Eigen::Index>(i)] <= 1e-14) {
                    const double den = alpha[i] - beta[static_cast<Eigen::Index>(i)];
                    if (den > 0) theta = std::min(theta, alpha[i] / den);
                }
            for (size_t i = 0; i < corral.size(); ++i)
                alpha[i] = (1.0 - theta) * alpha[i] + theta * beta[static_cast<Eigen::Index>(i)];
            std::vector<int> next_corral;
            std::vector<double> next_alpha;
            for (size_t i = 0; i < corral.size(); ++i)
                if (alpha[i] > 1e-12) {
                    next_corral.push_back(corral[i]);
                    next_alpha.push_back(alpha[i]);
                }
            if (next_corral.empty()) {
                next_corral.push_back(corral[0]);
                next_alpha.push_back(1.0);
            }
            corral = std::move(next_corral);
            alpha = std::move(next_alpha);
        }

        double total = 0;
        for (double a : alpha) total += a;
        for (double& a : alpha) a /= total;
        x = RVector::Zero(m);
        for (size_t i = 0; i < corral.size(); ++i)
            x += alpha[i] * points[static_cast<size_t>(corral[i])];
    }

    res.weights = RVector::Zero(static_cast<Eigen::Index>(points.size()));
    for (size_t i = 0; i < corral.size(); ++i)
        res.weights[corral[i]] += alpha[i];
    res.point = RVector::Zero(m);
    for (size_t i = 0; i < points.size(); ++i)
        res.point += res.weights[static_cast<Eigen::Index>(i)] * points[i];
    res.norm = res.point.norm();
    return res;
}

// ── pure-state negativity and pattern search ─────────────────────────────

namespace {

struct NegativityEvaluator {
    CMatrix a_adj, b_adj;  // rows <a_j|, <b_k|
    CMatrix ov;            // ov(j,k) = <b_k|a_j>

    explicit NegativityEvaluator(const BasisPair& basis) {
        const int d = basis.dim();
        a_adj = CMatrix(d, d);
        b_adj = CMatrix(d, d);
        ov = CMatrix(d, d);
        for (int j = 0; j < d; ++j) a_adj.row(j) = basis.a(j).adjoint();
        for (int k = 0; k < d; ++k) b_adj.row(k) = basis.b(k).adjoint();
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) ov(j, k) = basis.overlap(j, k);
    }

    // N(psi psi†) = -1 + sum_jk |<b_k|a_j><a_j|psi><psi|b_k>|
    double operator()(const CVector& psi) const {
        const CVector alpha = a_adj * psi;             // <a_j|psi>
        const CVector beta = (b_adj * psi).conjugate();  // <psi|b_k>
        double sum = 0;
        const int d = static_cast<int>(ov.rows());
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) sum += std::abs(ov(j, k) * alpha[j] * beta[k]);
        return std::max(sum - 1.0, 0.0);
    }
};

CVector real_to_state(const RVector& u, int d) {
    CVector psi(d);
    for (int i = 0; i < d; ++i) psi[i] = Cx(u[i], u[d + i]);
    const double n = psi.norm();
    return psi / n;
}

RVector state_to_real(const CVector& psi) {
    const int d = static_cast<int>(psi.size());
    RVector u(2 * d);
    for (int i = 0; i < d; ++i) {
        u[i] = psi[i].real();
        u[d + i] = psi[i].imag();
    }
    return u;
}

struct SearchOutcome {
    CVector psi;
    double value = 0;
};

// Greedy compass search over the unit sphere of C^d; `project` pulls trial
// points back into the feasible region before evaluation.
template <class Obj, class Proj>
SearchOutcome pattern_search(CVector start, const Obj& objective, const Proj& project,
                             double init_step, double min_step, int max_sweeps) {
    CVector cur_psi = project(std::move(start));
    RVector u = state_to_real(cur_psi);
    const int d = static_cast<int>(cur_psi.size());
    double cur = objective(cur_psi);
    double step = init_step;
    for (int sweep = 0; sweep < max_sweeps && step > min_step; ++sweep) {
        bool improved = false;
        for (int dim = 0; dim < 2 * d && !improved; ++dim)
            for (int sgn = 0; sgn < 2 && !improved; ++sgn) {
                RVector trial = u;
                trial[dim] += (sgn == 0 ? step : -step);
                if (trial.norm() < 1e-9) continue;
                const CVector psi = project(real_to_state(trial, d));
                const double val = objective(psi);
                if (val < cur - 1e-16) {
                    cur = val;
                    cur_psi = psi;
                    u = state_to_real(psi);
                    improved = true;
                }
            }
        if (!improved) step *= 0.5;
    }
    return {cur_psi, cur};
}

bool same_projector(const CVector& p1, const CVector& p2, double tol) {
    // ||p1 p1† - p2 p2†||_F = sqrt(2 (1 - |<p1|p2>|^2))
    const double f = std::abs(p1.dot(p2));
    return std::sqrt(std::max(0.0, 2.0 * (1.0 - f * f))) <= tol;
}

}  // namespace

PurePositiveSet pure_positive_search(const BasisPair& basis, int budget, double tol,
                                     uint64_t seed, ExecMode mode) {
    if (budget < 0) throw PreconditionError("search budget must be >= 0");
    const int d = basis.dim();
    const NegativityEvaluator neg(basis);

    PurePositiveSet set;
    set.d = d;
    set.tol = tol;
    for (int j = 0; j < d; ++j) {
        set.states.emplace_back(basis.a(j));
        set.provenance.push_back(Provenance::basis_state);
    }
    for (int k = 0; k < d; ++k) {
        set.states.emplace_back(basis.b(k));
        set.provenance.push_back(Provenance::basis_state);
    }

    auto identity = [](CVector v) { return v; };
    std::vector<SearchOutcome> found(static_cast<size_t>(budget));
    parallel_for(static_cast<size_t>(budget), mode, [&](size_t r) {
        SplitMix64 rng(derive_stream(seed, r));
        found[r] = pattern_search(random_unit_vector(d, rng), neg, identity, 0.5, 1e-10, 20000);
    });

    for (const auto& cand : found) {  // restart order: deterministic merge
        if (cand.value > tol) continue;
        bool duplicate = false;
        for (const auto& existing : set.states)
            if (same_projector(existing.vec(), cand.psi, kDedupTol)) {
                duplicate = true;
                break;
            }
        if (!duplicate) {
            set.states.push_back(PureState::normalized(cand.psi));
            set.provenance.push_back(Provenance::numerical_search);
        }
    }
    return set;
}

// ── hull queries ──────────────────────────────────────────────────────────

namespace {

std::vector<RVector> shifted_generators(const DensityMatrix& rho, const PurePositiveSet& set) {
    if (set.states.empty()) throw SetEmpty("the pure-positive set is empty");
    if (set.d != rho.dim()) throw DimensionMismatch("state and set dimensions differ");
    const RVector target = hermitian_to_real(rho.matrix());
    std::vector<RVector> pts;
    pts.reserve(set.states.size());
    for (const auto& s : set.states) pts.push_back(hermitian_to_real(s.projector()) - target);
    return pts;
}

}  // namespace

HullResult hull_membership(const DensityMatrix& rho, const PurePositiveSet& set, double tol) {
    const WolfeResult w = minimum_norm_point(shifted_generators(rho, set));
    HullResult res;
    res.weights = w.weights;
    res.residual = w.norm;
    res.feasible = w.norm <= tol;
    return res;
}

SeparatingWitness find_witness(const DensityMatrix& rho_star, const PurePositiveSet& set,
                               double no_sep_tol) {
    const WolfeResult w = minimum_norm_point(shifted_generators(rho_star, set));
    if (w.norm <= no_sep_tol)
        throw NoSeparation("state is inside (or on) the hull: no separating witness");
    SeparatingWitness sw;
    // x = vec(sigma* - rho*), so the outward normal is -x
    sw.h = real_to_hermitian(RVector(-w.point / w.norm), rho_star.dim());
    sw.h = (sw.h + sw.h.adjoint()) / 2.0;
    sw.c_star = (sw.h * rho_star.matrix()).trace().real();
    double c_hull = -std::numeric_limits<double>::infinity();
    for (const auto& s : set.states)
        c_hull = std::max(c_hull, (sw.h * s.projector()).trace().real());
    sw.c_hull = c_hull;
    sw.gap = sw.c_star - sw.c_hull;
    if (std::abs(sw.gap - w.norm) > 1e-8)
        throw InternalInconsistency("witness gap and minimum-norm distance disagree");
    return sw;
}

// ── negativity floor ──────────────────────────────────────────────────────

FloorEstimate negativity_floor(const SeparatingWitness& witness, const BasisPair& basis,
                               const FloorConfig& cfg, uint64_t seed, ExecMode mode) {
    const int d = basis.dim();
    if (witness.h.rows() != d) throw DimensionMismatch("witness and basis dimensions differ");
    const CMatrix h = (witness.h + witness.h.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    const double lam_max = es.eigenvalues().maxCoeff();
    const double c = witness.c_star;
    if (lam_max < c - cfg.constraint_slack)
        throw EmptyFeasibleSet("no pure state reaches the witness value");
    int top = 0;
    es.eigenvalues().maxCoeff(&top);
    const CVector vmax = es.eigenvectors().col(top);

    const NegativityEvaluator neg(basis);
    auto expectation = [&h](const CVector& psi) { return (psi.dot(h * psi)).real(); };

    auto project = [&](CVector psi) -> CVector {
        if (expectation(psi) >= c - cfg.constraint_slack) return psi;
        // pull toward the top eigenvector until the constraint holds
        const Cx phase = vmax.dot(psi);
        if (std::abs(phase) > 1e-14) psi *= std::conj(phase) / std::abs(phase);
        double lo = 0.0, hi = 1.0;
        // find a feasible blend, then bisect to the boundary
        auto blend = [&](double t) {
            CVector v = (1.0 - t) * psi + t * vmax;
            const double nn = v.norm();
            return CVector(v / nn);
        };
        double t_feasible = 1.0;
        for (int i = 1; i <= 16; ++i) {
            const double t = i / 16.0;
            if (expectation(blend(t)) >= c - 0.5 * cfg.constraint_slack) {
                t_feasible = t;
                break;
            }
        }
        lo = std::max(0.0, t_feasible - 1.0 / 16.0);
        hi = t_feasible;
        for (int i = 0; i < 50; ++i) {
            const double mid = (lo + hi) / 2.0;
            if (expectation(blend(mid)) >= c - 0.5 * cfg.constraint_slack)
                hi = mid;
            else
                lo = mid;
        }
        return blend(hi);
    };

    std::vector<SearchOutcome> found(static_cast<size_t>(cfg.restarts));
    parallel_for(static_cast<size_t>(cfg.restarts), mode, [&](size_t r) {
        SplitMix64 rng(derive_stream(seed, r));
        CVector start;
        if (r == 0) {
            start = vmax;
        } else {
            const double sigma = (r % 3 == 1) ? 0.25 : (r % 3 == 2 ? 0.6 : 1.2);
            CVector v = vmax + sigma * random_unit_vector(d, rng);
            start = v / v.norm();
        }
        found[r] = pattern_search(start, neg, project, cfg.init_step, cfg.min_step, cfg.max_iters);
    });

    FloorEstimate best{std::numeric_limits<double>::infinity(), PureState(found[0].psi / found[0].psi.norm()), 0, 0};
    for (size_t r = 0; r < found.size(); ++r)
        if (found[r].value < best.delta) {  // strict: first index wins ties
            best.delta = found[r].value;
            best.argmin = PureState::normalized(found[r].psi);
            best.winning_restart = static_cast<int>(r);
        }
    best.constraint_value = expectation(best.argmin.vec());
    return best;
}

// ── decompositions ────────────────────────────────────────────────────────

DecompositionReport check_decomposition(const DensityMatrix& rho_star,
                                        const std::vector<double>& weights,
                                        const std::vector<PureState>& components,
                                        const BasisPair& basis, double delta,
                                        const SeparatingWitness* witness) {
    if (weights.size() != components.size() || components.empty())
        throw NotADecomposition("weights and components do not match");
    const int d = rho_star.dim();
    double total = 0;
    CMatrix recon = CMatrix::Zero(d, d);
    for (size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] < -kTolAlgebraic) throw NotADecomposition("negative weight");
        if (components[i].dim() != d) throw DimensionMismatch("component dimension mismatch");
        total += weights[i];
        recon += weights[i] * components[i].projector();
    }
    if (std::abs(total - 1.0) > kHullTol) throw NotADecomposition("weights do not sum to 1");

    DecompositionReport rep;
    rep.delta = delta;
    rep.reconstruction_error = (recon - rho_star.matrix()).norm();
    if (rep.reconstruction_error > kHullTol)
        throw NotADecomposition("components do not average to the target state");

    const NegativityEvaluator neg(basis);
    for (size_t i = 0; i < components.size(); ++i) {
        const double n = neg(components[i].vec());
        rep.component_negativity.push_back(n);
        if (n > rep.max_negativity) {
            rep.max_negativity = n;
            rep.argmax = static_cast<int>(i);
        }
        if (witness != nullptr) {
            const double val = (witness->h * components[i].projector()).trace().real();
            const bool in = val >= witness->c_star - kStrictMargin;
            rep.in_cap.push_back(in);
            if (in) ++rep.n_in_cap;
        }
    }
    rep.exceeds_delta = rep.max_negativity > delta;
    return rep;
}

// ── exotic candidates ─────────────────────────────────────────────────────

ExoticAnalysis analyze_exotic_candidate(const DensityMatrix& rho_star, const BasisPair& basis,
                                        const PurePositiveSet& set, const FloorConfig& floor_cfg,
                                        uint64_t seed, double positive_tol, double hull_tol,
                                        ExecMode mode) {
    ExoticAnalysis a;
    a.nonpositivity = kd_distribution(rho_star, basis).nonpositivity();
    a.hull = hull_membership(rho_star, set, hull_tol);
    if (!a.hull.feasible) {
        a.witness = find_witness(rho_star, set, kStrictMargin);
        a.floor = negativity_floor(*a.witness, basis, floor_cfg, seed, mode);
    }
    a.exotic = (a.nonpositivity <= positive_tol) && !a.hull.feasible && a.witness.has_value() &&
               a.witness->gap > kStrictMargin;
    return a;
}

std::vector<double> batch_negativity(const std::vector<PureState>& states, const BasisPair& basis,
                                     ExecMode mode) {
    const NegativityEvaluator neg(basis);
    std::vector<double> out(states.size());
    parallel_for(states.size(), mode, [&](size_t i) { out[i] = neg(states[i].vec()); });
    return out;
}

}  // namespace kdc
