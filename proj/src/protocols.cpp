#include "kdc/protocols.hpp"

#include <cmath>
#include <limits>

namespace kdc {

WeakMeasurement::WeakMeasurement(double eps) : epsilon(eps) {
    if (!(eps > 0.0) || eps > M_PI / 2.0 + 1e-15)
        throw PreconditionError("measurement strength must lie in (0, pi/2]");
}
double WeakMeasurement::p_m() const { return std::sin(2.0 * epsilon); }
double WeakMeasurement::p_d() const {
    const double s = std::sin(epsilon);
    return s * s;
}

KrausPair kraus_operators(const BasisPair& basis, int j, double epsilon) {
    WeakMeasurement w(epsilon);
    const int d = basis.dim();
    if (j < 0 || j >= d) throw DimensionMismatch("projector index out of range");
    const CMatrix id = CMatrix::Identity(d, d);
    const CMatrix dj = 2.0 * basis.proj_a(j) - id;
    const double c = std::cos(epsilon), s = std::sin(epsilon);
    const double r = 1.0 / std::sqrt(2.0);
    KrausPair kp;
    kp.d = dj;
    for (int sign : kSigns) {
        kp.x[sidx(sign)] = r * (c * id + static_cast<double>(sign) * s * dj);
        kp.y[sidx(sign)] = r * (c * id - Cx(0, 1) * static_cast<double>(sign) * s * dj);
    }
    return kp;
}

std::array<double, 4> ProtocolDistributions::table(int protocol) const {
    switch (protocol) {
        case 1: return {f1[0], f1[1], 0, 0};
        case 2: return {f2[0][0], f2[0][1], f2[1][0], f2[1][1]};
        case 3: return {f3[0][0], f3[0][1], f3[1][0], f3[1][1]};
        case 4: return {f4[0], f4[1], 0, 0};
        case 5: return {f5[0], f5[1], 0, 0};
        case 6: return {f6[0], f6[1], 0, 0};
        default: throw PreconditionError("protocol must be 1..6");
    }
}

int outcome_count(int protocol) {
    if (protocol == 2 || protocol == 3) return 4;
    if (protocol >= 1 && protocol <= 6) return 2;
    throw PreconditionError("protocol must be 1..6");
}

void outcome_signs(int protocol, int index, int& x, int& y, int& z) {
    x = y = z = 0;
    switch (protocol) {
        case 1: z = kSigns[static_cast<size_t>(index)]; break;
        case 2:
            x = kSigns[static_cast<size_t>(index / 2)];
            z = kSigns[static_cast<size_t>(index % 2)];
            break;
        case 3:
            y = kSigns[static_cast<size_t>(index / 2)];
            z = kSigns[static_cast<size_t>(index % 2)];
            break;
        case 4: x = kSigns[static_cast<size_t>(index)]; break;
        case 5: y = kSigns[static_cast<size_t>(index)]; break;
        case 6: z = kSigns[static_cast<size_t>(index)]; break;
        default: throw PreconditionError("protocol must be 1..6");
    }
}

ProtocolDistributions exact_distributions(const DensityMatrix& rho, const BasisPair& basis,
                                          int j, int k, double epsilon) {
    const int d = basis.dim();
    if (rho.dim() != d) throw DimensionMismatch("state and basis dimensions differ");
    if (k < 0 || k >= d) throw DimensionMismatch("reference index out of range");
    const WeakMeasurement w(epsilon);

    ProtocolDistributions out;
    out.j = j;
    out.k = k;
    out.epsilon = epsilon;
    out.p_m = w.p_m();
    out.p_d = w.p_d();

    const CMatrix& r = rho.matrix();
    const KrausPair kp = kraus_operators(basis, j, epsilon);
    const CMatrix id = CMatrix::Identity(d, d);
    const std::array<CMatrix, 2> pbz{basis.proj_b(k), id - basis.proj_b(k)};

    auto tr = [](const CMatrix& m) { return m.trace().real(); };

    // route 1: Kraus/projector algebra (stored as the canonical tables)
    for (int zi = 0; zi < 2; ++zi) out.f1[static_cast<size_t>(zi)] = tr(pbz[static_cast<size_t>(zi)] * r);
    CMatrix dephased = CMatrix::Zero(d, d);
    for (int xi = 0; xi < 2; ++xi) {
        const CMatrix m = kp.x[static_cast<size_t>(xi)] * r * kp.x[static_cast<size_t>(xi)].adjoint();
        dephased += m;
        out.f4[static_cast<size_t>(xi)] = tr(m);
        for (int zi = 0; zi < 2; ++zi)
            out.f2[static_cast<size_t>(xi)][static_cast<size_t>(zi)] = tr(pbz[static_cast<size_t>(zi)] * m);
    }
    for (int yi = 0; yi < 2; ++yi) {
        const CMatrix m = kp.y[static_cast<size_t>(yi)] * r * kp.y[static_cast<size_t>(yi)].adjoint();
        out.f5[static_cast<size_t>(yi)] = tr(m);
        for (int zi = 0; zi < 2; ++zi)
            out.f3[static_cast<size_t>(yi)][static_cast<size_t>(zi)] = tr(pbz[static_cast<size_t>(zi)] * m);
    }
    for (int zi = 0; zi < 2; ++zi) out.f6[static_cast<size_t>(zi)] = tr(pbz[static_cast<size_t>(zi)] * dephased);

    // route 2: closed forms in the (conditional) weak values, written via the
    // products p^k_z w^z which stay exact when p^k_z = 0
    const double p = tr(basis.proj_b(k) * r);
    const CMatrix drd = kp.d * r * kp.d.adjoint();
    const double q_plus = tr(basis.proj_b(k) * drd);
    out.p_z = {p, 1.0 - p};
    out.q_z = {q_plus, 1.0 - q_plus};
    out.a_marginal = tr(basis.proj_a(j) * r);
    const Cx s_plus = basis.overlap(j, k) * basis.a(j).dot(r * basis.b(k));  // Q_{jk}
    const std::array<Cx, 2> s_z{s_plus, Cx(out.a_marginal, 0) - s_plus};

    const double pm = out.p_m, pd = out.p_d;
    double dev = 0.0;
    auto track = [&dev](double a, double b) { dev = std::max(dev, std::abs(a - b)); };

    for (int zi = 0; zi < 2; ++zi) {
        const double pz = out.p_z[static_cast<size_t>(zi)], qz = out.q_z[static_cast<size_t>(zi)];
        const Cx sz = s_z[static_cast<size_t>(zi)];
        track(out.f1[static_cast<size_t>(zi)], pz);
        track(out.f6[static_cast<size_t>(zi)], (1.0 - pd) * pz + pd * qz);
        for (int xi = 0; xi < 2; ++xi) {
            const double x = kSigns[static_cast<size_t>(xi)];
            track(out.f2[static_cast<size_t>(xi)][static_cast<size_t>(zi)],
                  0.5 * (1.0 - pd) * pz + 0.5 * x * pm * (2.0 * sz.real() - pz) + 0.5 * pd * qz);
        }
        for (int yi = 0; yi < 2; ++yi) {
            const double y = kSigns[static_cast<size_t>(yi)];
            track(out.f3[static_cast<size_t>(yi)][static_cast<size_t>(zi)],
                  0.5 * (1.0 - pd) * pz + y * pm * sz.imag() + 0.5 * pd * qz);
        }
    }
    for (int xi = 0; xi < 2; ++xi) {
        const double pa = xi == 0 ? out.a_marginal : 1.0 - out.a_marginal;
        track(out.f4[static_cast<size_t>(xi)], 0.5 * (1.0 - pm) + pm * pa);
    }
    for (int yi = 0; yi < 2; ++yi) track(out.f5[static_cast<size_t>(yi)], 0.5);

    out.route_deviation = dev;
    if (dev > kTolComposed)
        throw InternalInconsistency("Kraus and closed-form protocol tables disagree");
    return out;
}

MarginalizationReport marginalization_check(const ProtocolDistributions& d, double tol) {
    MarginalizationReport rep;
    for (int xi = 0; xi < 2; ++xi)
        rep.f4_from_f2 = std::max(rep.f4_from_f2,
                                  std::abs(d.f4[static_cast<size_t>(xi)] -
                                           (d.f2[static_cast<size_t>(xi)][0] + d.f2[static_cast<size_t>(xi)][1])));
    for (int yi = 0; yi < 2; ++yi)
        rep.f5_from_f3 = std::max(rep.f5_from_f3,
                                  std::abs(d.f5[static_cast<size_t>(yi)] -
                                           (d.f3[static_cast<size_t>(yi)][0] + d.f3[static_cast<size_t>(yi)][1])));
    for (int zi = 0; zi < 2; ++zi) {
        rep.f6_from_f2 = std::max(rep.f6_from_f2,
                                  std::abs(d.f6[static_cast<size_t>(zi)] -
                                           (d.f2[0][static_cast<size_t>(zi)] + d.f2[1][static_cast<size_t>(zi)])));
        rep.f6_from_f3 = std::max(rep.f6_from_f3,
                                  std::abs(d.f6[static_cast<size_t>(zi)] -
                                           (d.f3[0][static_cast<size_t>(zi)] + d.f3[1][static_cast<size_t>(zi)])));
    }
    for (int p = 1; p <= 6; ++p) {
        const auto t = d.table(p);
        double sum = 0;
        for (int i = 0; i < outcome_count(p); ++i) sum += t[static_cast<size_t>(i)];
        rep.normalization = std::max(rep.normalization, std::abs(sum - 1.0));
    }
    rep.max_deviation = std::max({rep.f4_from_f2, rep.f5_from_f3, rep.f6_from_f2, rep.f6_from_f3,
                                  rep.normalization});
    rep.pass = rep.max_deviation <= tol;
    return rep;
}

// ── sampling ──────────────────────────────────────────────────────────────

int draw_outcome(const std::array<double, 4>& table, int n_outcomes, double u) {
    double cum = 0;
    for (int i = 0; i < n_outcomes - 1; ++i) {
        cum += table[static_cast<size_t>(i)];
        if (u < cum) return i;
    }
    return n_outcomes - 1;
}

OutcomeRecord sample_protocol(const ProtocolDistributions& dists, int protocol, SplitMix64& rng) {
    const auto t = dists.table(protocol);
    const int n = outcome_count(protocol);
    const int idx = draw_outcome(t, n, rng.next_double());
    OutcomeRecord rec;
    rec.protocol = protocol;
    rec.j = dists.j;
    rec.k = dists.k;
    outcome_signs(protocol, idx, rec.x, rec.y, rec.z);
    return rec;
}

OutcomeCounts::OutcomeCounts(int d) : d_(d) {
    if (d < 2) throw DimensionMismatch("need dimension >= 2");
    const size_t dd = static_cast<size_t>(d) * static_cast<size_t>(d);
    t1_.assign(static_cast<size_t>(d) * 2, 0.0);
    t2_.assign(dd * 4, 0.0);
    t3_.assign(dd * 4, 0.0);
    t4_.assign(static_cast<size_t>(d) * 2, 0.0);
    t5_.assign(static_cast<size_t>(d) * 2, 0.0);
    t6_.assign(dd * 2, 0.0);
}

double* OutcomeCounts::slot(int protocol, int j, int k, int index) {
    return const_cast<double*>(static_cast<const OutcomeCounts*>(this)->slot(protocol, j, k, index));
}

const double* OutcomeCounts::slot(int protocol, int j, int k, int index) const {
    if (index < 0 || index >= outcome_count(protocol))
        throw PreconditionError("outcome index out of range");
    const auto jj = static_cast<size_t>(j), kk = static_cast<size_t>(k),
               oi = static_cast<size_t>(index), dd = static_cast<size_t>(d_);
    auto check_j = [&] {
        if (j < 0 || j >= d_) throw DimensionMismatch("j out of range");
    };
    auto check_k = [&] {
        if (k < 0 || k >= d_) throw DimensionMismatch("k out of range");
    };
    switch (protocol) {
        case 1: check_k(); return &t1_[kk * 2 + oi];
        case 2: check_j(); check_k(); return &t2_[(jj * dd + kk) * 4 + oi];
        case 3: check_j(); check_k(); return &t3_[(jj * dd + kk) * 4 + oi];
        case 4: check_j(); return &t4_[jj * 2 + oi];
        case 5: check_j(); return &t5_[jj * 2 + oi];
        case 6: check_j(); check_k(); return &t6_[(jj * dd + kk) * 2 + oi];
        default: throw PreconditionError("protocol must be 1..6");
    }
}

void OutcomeCounts::add(const OutcomeRecord& rec, double weight) {
    int idx = 0;
    switch (rec.protocol) {
        case 1: idx = sidx(rec.z); break;
        case 2: idx = sidx(rec.x) * 2 + sidx(rec.z); break;
        case 3: idx = sidx(rec.y) * 2 + sidx(rec.z); break;
        case 4: idx = sidx(rec.x); break;
        case 5: idx = sidx(rec.y); break;
        case 6: idx = sidx(rec.z); break;
        default: throw PreconditionError("protocol must be 1..6");
    }
    *slot(rec.protocol, rec.j, rec.k, idx) += weight;
}

void OutcomeCounts::add_outcome(int protocol, int j, int k, int index, double weight) {
    *slot(protocol, j, k, index) += weight;
}

void OutcomeCounts::add_table(int protocol, int j, int k, const std::array<double, 4>& probs,
                              double total_weight) {
    for (int i = 0; i < outcome_count(protocol); ++i)
        *slot(protocol, j, k, i) += probs[static_cast<size_t>(i)] * total_weight;
}

double OutcomeCounts::cell_total(int protocol, int j, int k) const {
    double total = 0;
    for (int i = 0; i < outcome_count(protocol); ++i) total += *slot(protocol, j, k, i);
    return total;
}

double OutcomeCounts::outcome_weight(int protocol, int j, int k, int index) const {
    return *slot(protocol, j, k, index);
}

double OutcomeCounts::frequency(int protocol, int j, int k, int index) const {
    const double total = cell_total(protocol, j, k);
    if (total <= 0) throw InsufficientSamples("empty tally cell");
    return *slot(protocol, j, k, index) / total;
}

double OutcomeCounts::min_estimation_cell() const {
    double lo = std::numeric_limits<double>::infinity();
    for (int k = 0; k < d_; ++k) lo = std::min(lo, cell_total(1, 0, k));
    for (int j = 0; j < d_; ++j)
        for (int k = 0; k < d_; ++k)
            lo = std::min({lo, cell_total(2, j, k), cell_total(3, j, k)});
    return lo;
}

KDEstimate estimate_kd(const OutcomeCounts& counts, double epsilon, double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0))
        throw PreconditionError("confidence must lie in (0, 1)");
    const WeakMeasurement w(epsilon);
    const double pm = w.p_m();
    const int d = counts.dim();
    const double big_l = std::log(2.0 / (1.0 - confidence));

    KDEstimate est;
    est.q_hat = CMatrix(d, d);
    est.hw_re = RMatrix(d, d);
    est.hw_im = RMatrix(d, d);
    est.confidence = confidence;
    est.epsilon = epsilon;
    est.min_cell_count = std::numeric_limits<double>::infinity();

    RVector p_hat(d), hw_p(d);
    for (int k = 0; k < d; ++k) {
        const double n1 = counts.cell_total(1, 0, k);
        if (n1 < 1.0) throw InsufficientSamples("projective-reference cell has no samples");
        p_hat[k] = counts.outcome_weight(1, 0, k, 0) / n1;
        hw_p[k] = std::sqrt(big_l / (2.0 * n1));
        est.min_cell_count = std::min(est.min_cell_count, n1);
    }
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
            const double n2 = counts.cell_total(2, j, k);
            const double n3 = counts.cell_total(3, j, k);
            if (n2 < 1.0 || n3 < 1.0) throw InsufficientSamples("weak-measurement cell has no samples");
            est.min_cell_count = std::min({est.min_cell_count, n2, n3});
            // canonical order: index 0 = (+1,+1), index 2 = (-1,+1)
            const double df2 = (counts.outcome_weight(2, j, k, 0) - counts.outcome_weight(2, j, k, 2)) / n2;
            const double df3 = (counts.outcome_weight(3, j, k, 0) - counts.outcome_weight(3, j, k, 2)) / n3;
            est.q_hat(j, k) = Cx(0.5 * (df2 / pm + p_hat[k]), df3 / (2.0 * pm));
            est.hw_re(j, k) = 0.5 * (std::sqrt(2.0 * big_l / n2) / pm + hw_p[k]);
            est.hw_im(j, k) = std::sqrt(2.0 * big_l / n3) / (2.0 * pm);
        }
    est.nonpositivity_halfwidth = est.hw_re.sum() + est.hw_im.sum();
    return est;
}

CellTask make_cell_task(const ProtocolDistributions& dists, int protocol, long long shots,
                        uint64_t seed) {
    CellTask t;
    t.protocol = protocol;
    t.j = dists.j;
    t.k = dists.k;
    t.shots = shots;
    t.seed = seed;
    t.table = dists.table(protocol);
    t.n_outcomes = outcome_count(protocol);
    return t;
}

OutcomeCounts sample_cells(const std::vector<CellTask>& tasks, int d, ExecMode mode) {
    std::vector<std::array<double, 4>> local(tasks.size(), std::array<double, 4>{});
    parallel_for(tasks.size(), mode, [&](size_t i) {
        const CellTask& t = tasks[i];
        SplitMix64 rng(t.seed);
        std::array<double, 4> tally{};
        for (long long s = 0; s < t.shots; ++s)
            tally[static_cast<size_t>(draw_outcome(t.table, t.n_outcomes, rng.next_double()))] += 1.0;
        local[i] = tally;
    });
    OutcomeCounts counts(d);  // merged in task order: independent of thread schedule
    for (size_t i = 0; i < tasks.size(); ++i)
        for (int oi = 0; oi < tasks[i].n_outcomes; ++oi)
            if (local[i][static_cast<size_t>(oi)] != 0.0)
                counts.add_outcome(tasks[i].protocol, tasks[i].j, tasks[i].k, oi,
                                   local[i][static_cast<size_t>(oi)]);
    return counts;
}

}  // namespace kdc
