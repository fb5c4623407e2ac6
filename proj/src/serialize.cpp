#include "kdc/serialize.hpp"

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace kdc {

// ── scalars, vectors, matrices ────────────────────────────────────────────

json complex_to_json(const Cx& z) { return json::array({z.real(), z.imag()}); }

Cx complex_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2)
        throw PreconditionError("complex number must be a [re, im] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

json cmatrix_to_json(const CMatrix& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(complex_to_json(m(r, c)));
    return out;
}

CMatrix cmatrix_from_json(const json& j, int rows, int cols) {
    if (!j.is_array() || j.size() != static_cast<size_t>(rows) * static_cast<size_t>(cols))
        throw PreconditionError("matrix payload has the wrong length");
    CMatrix m(rows, cols);
    size_t i = 0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = complex_from_json(j[i++]);
    return m;
}

json cvector_to_json(const CVector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v[i]));
    return out;
}

CVector cvector_from_json(const json& j) {
    if (!j.is_array()) throw PreconditionError("vector payload must be a list");
    CVector v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = complex_from_json(j[static_cast<size_t>(i)]);
    return v;
}

namespace {

json rvector_to_json(const RVector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

json rmatrix_to_json(const RMatrix& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
    return out;
}

// outcome channels use 0 for "not part of this protocol" -> null on the wire
json sign_to_json(int s) { return s == 0 ? json(nullptr) : json(s); }
int sign_from_json(const json& v) { return v.is_null() ? 0 : v.get<int>(); }

}  // namespace

// ── domain objects ────────────────────────────────────────────────────────

json basis_to_json(const BasisPair& basis) {
    json a = json::array(), b = json::array();
    for (int j = 0; j < basis.dim(); ++j) a.push_back(cvector_to_json(basis.a(j)));
    for (int k = 0; k < basis.dim(); ++k) b.push_back(cvector_to_json(basis.b(k)));
    return {{"d", basis.dim()}, {"a_vectors", a}, {"b_vectors", b}};
}

BasisPair basis_from_json(const json& j) {
    const int d = j.at("d").get<int>();
    std::vector<CVector> a, b;
    for (const auto& v : j.at("a_vectors")) a.push_back(cvector_from_json(v));
    for (const auto& v : j.at("b_vectors")) b.push_back(cvector_from_json(v));
    if (static_cast<int>(a.size()) != d || static_cast<int>(b.size()) != d)
        throw PreconditionError("basis payload does not match its dimension");
    return {std::move(a), std::move(b)};
}

json state_to_json(const DensityMatrix& rho) {
    return {{"d", rho.dim()}, {"rho", cmatrix_to_json(rho.matrix())}};
}

DensityMatrix state_from_json(const json& j) {
    const int d = j.at("d").get<int>();
    return DensityMatrix(cmatrix_from_json(j.at("rho"), d, d));
}

json kd_to_json(const KDDistribution& q) {
    return {{"d", q.dim()},
            {"q", cmatrix_to_json(q.q())},
            {"nonpositivity", q.nonpositivity()}};
}

KDDistribution kd_from_json(const json& j) {
    const int d = j.at("d").get<int>();
    return KDDistribution(cmatrix_from_json(j.at("q"), d, d));
}

json outcome_to_json(const OutcomeRecord& rec) {
    return {{"round", rec.round},   {"protocol", rec.protocol},
            {"j", rec.j},           {"k", rec.k},
            {"x", sign_to_json(rec.x)}, {"y", sign_to_json(rec.y)},
            {"z", sign_to_json(rec.z)}, {"seed_cell", rec.seed_cell}};
}

OutcomeRecord outcome_from_json(const json& j) {
    OutcomeRecord rec;
    rec.round = j.at("round").get<long long>();
    rec.protocol = j.at("protocol").get<int>();
    rec.j = j.at("j").get<int>();
    rec.k = j.at("k").get<int>();
    rec.x = sign_from_json(j.at("x"));
    rec.y = sign_from_json(j.at("y"));
    rec.z = sign_from_json(j.at("z"));
    rec.seed_cell = j.at("seed_cell").get<uint64_t>();
    return rec;
}

json hvm_to_json(const HiddenVariableModel& model) {
    json m = json::array(), gx = json::array(), gy = json::array();
    for (int j = 0; j < model.d; ++j) {
        m.push_back(rmatrix_to_json(model.m[static_cast<size_t>(j)]));
        gx.push_back({{"plus", rmatrix_to_json(model.gamma_x[static_cast<size_t>(j)][0])},
                      {"minus", rmatrix_to_json(model.gamma_x[static_cast<size_t>(j)][1])}});
        gy.push_back({{"plus", rmatrix_to_json(model.gamma_y[static_cast<size_t>(j)][0])},
                      {"minus", rmatrix_to_json(model.gamma_y[static_cast<size_t>(j)][1])}});
    }
    return {{"d", model.d},
            {"epsilon", model.epsilon},
            {"p_m", model.p_m},
            {"p_d", model.p_d},
            {"mu", rvector_to_json(model.mu)},
            {"xi_a_plus", rmatrix_to_json(model.xi_a_plus)},
            {"m", m},
            {"gamma_x", gx},
            {"gamma_y", gy}};
}

json verdict_to_json(const CertificationVerdict& v) {
    return {{"verdict", to_string(v.verdict)},
            {"nonpositivity", v.nonpositivity},
            {"epsilon", v.epsilon},
            {"delta_used", v.delta_used},
            {"threshold_3d2eps", v.threshold_3d2eps},
            {"max_margins",
             {{"f3_plus", v.max_margins.f3_plus},
              {"f3_minus", v.max_margins.f3_minus},
              {"f2_minus", v.max_margins.f2_minus}}},
            {"margin_j", v.margin_j},
            {"margin_k", v.margin_k},
            {"justification", v.justification}};
}

json set_to_json(const PurePositiveSet& set) {
    json states = json::array(), prov = json::array();
    for (const auto& psi : set.states) states.push_back(cvector_to_json(psi.vec()));
    for (const auto p : set.provenance)
        prov.push_back(p == Provenance::basis_state ? "basis_state" : "numerical_search");
    return {{"d", set.d}, {"tol", set.tol}, {"states", states}, {"provenance", prov}};
}

PurePositiveSet set_from_json(const json& j) {
    PurePositiveSet set;
    set.d = j.at("d").get<int>();
    set.tol = j.at("tol").get<double>();
    for (const auto& v : j.at("states")) set.states.emplace_back(cvector_from_json(v));
    for (const auto& p : j.at("provenance"))
        set.provenance.push_back(p.get<std::string>() == "basis_state"
                                     ? Provenance::basis_state
                                     : Provenance::numerical_search);
    if (set.states.size() != set.provenance.size())
        throw PreconditionError("set payload: states and provenance differ in length");
    return set;
}

json witness_to_json(const SeparatingWitness& w) {
    return {{"d", static_cast<int>(w.h.rows())},
            {"h", cmatrix_to_json(w.h)},
            {"c_hull", w.c_hull},
            {"c_star", w.c_star},
            {"gap", w.gap}};
}

SeparatingWitness witness_from_json(const json& j) {
    const int d = j.at("d").get<int>();
    SeparatingWitness w;
    w.h = cmatrix_from_json(j.at("h"), d, d);
    w.c_hull = j.at("c_hull").get<double>();
    w.c_star = j.at("c_star").get<double>();
    w.gap = j.at("gap").get<double>();
    return w;
}

json floor_to_json(const FloorEstimate& f) {
    return {{"delta", f.delta},
            {"argmin", cvector_to_json(f.argmin.vec())},
            {"constraint_value", f.constraint_value},
            {"winning_restart", f.winning_restart}};
}

// ── experiment record / ledger ────────────────────────────────────────────

void write_record(std::ostream& os, const PublicRecord& record) {
    json meta = {{"d", record.d},
                 {"epsilon", record.epsilon},
                 {"states_per_round", record.states_per_round},
                 {"rounds", record.rounds},
                 {"basis", {{"a_vectors", json::array()}, {"b_vectors", json::array()}}}};
    for (const auto& v : record.basis_a) meta["basis"]["a_vectors"].push_back(cvector_to_json(v));
    for (const auto& v : record.basis_b) meta["basis"]["b_vectors"].push_back(cvector_to_json(v));
    os << meta.dump() << '\n';
    for (const auto& e : record.entries) os << outcome_to_json(e).dump() << '\n';
}

PublicRecord read_record(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw PreconditionError("record stream is empty");
    const json meta = json::parse(line);
    PublicRecord record;
    record.d = meta.at("d").get<int>();
    record.epsilon = meta.at("epsilon").get<double>();
    record.states_per_round = meta.at("states_per_round").get<int>();
    record.rounds = meta.at("rounds").get<long long>();
    for (const auto& v : meta.at("basis").at("a_vectors"))
        record.basis_a.push_back(cvector_from_json(v));
    for (const auto& v : meta.at("basis").at("b_vectors"))
        record.basis_b.push_back(cvector_from_json(v));
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        record.entries.push_back(outcome_from_json(json::parse(line)));
    }
    return record;
}

json ledger_to_json(const SecretLedger& ledger) {
    return {{"permutation_seed", ledger.permutation_seed}, {"psi_index", ledger.psi_index}};
}

SecretLedger ledger_from_json(const json& j) {
    SecretLedger ledger;
    ledger.permutation_seed = j.at("permutation_seed").get<uint64_t>();
    ledger.psi_index = j.at("psi_index").get<std::vector<int>>();
    return ledger;
}

// ── analysis reports ──────────────────────────────────────────────────────

namespace {

json estimate_to_json(const KDEstimate& e) {
    return {{"q_hat", cmatrix_to_json(e.q_hat)},
            {"hw_re", rmatrix_to_json(e.hw_re)},
            {"hw_im", rmatrix_to_json(e.hw_im)},
            {"confidence", e.confidence},
            {"epsilon", e.epsilon},
            {"min_cell_count", e.min_cell_count},
            {"nonpositivity_halfwidth", e.nonpositivity_halfwidth}};
}

json exotic_to_json(const ExoticAnalysis& ex) {
    json out = {{"nonpositivity", ex.nonpositivity},
                {"hull",
                 {{"feasible", ex.hull.feasible},
                  {"weights", rvector_to_json(ex.hull.weights)},
                  {"residual", ex.hull.residual}}},
                {"witness", nullptr},
                {"floor", nullptr},
                {"exotic", ex.exotic}};
    if (ex.witness) out["witness"] = witness_to_json(*ex.witness);
    if (ex.floor) out["floor"] = floor_to_json(*ex.floor);
    return out;
}

}  // namespace

json analysis_to_json(const AnalysisReport& report) {
    const int d = static_cast<int>(report.rho_hat.rows());
    json out = {{"deliveries", report.deliveries},
                {"epsilon_record", report.epsilon_record},
                {"epsilon_cert", report.epsilon_cert},
                {"estimate", estimate_to_json(report.estimate)},
                {"d", d},
                {"rho_hat", cmatrix_to_json(report.rho_hat)},
                {"n_hat", report.n_hat},
                {"noise_band", report.noise_band},
                {"kd_positive_within_noise", report.kd_positive_within_noise},
                {"hvm_fit", nullptr},
                {"exotic", nullptr},
                {"certification", nullptr},
                {"conclusion", to_string(report.conclusion)},
                {"summary", report.summary}};
    if (report.hvm_fit) {
        const auto& fit = *report.hvm_fit;
        out["hvm_fit"] = {{"built", fit.built},
                          {"failure", fit.failure},
                          {"noncontextuality",
                           {{"y_marginal_half", fit.noncontextuality.y_marginal_half},
                            {"x_marginal_povm", fit.noncontextuality.x_marginal_povm},
                            {"x_sum_dephasing", fit.noncontextuality.x_sum_dephasing},
                            {"y_sum_dephasing", fit.noncontextuality.y_sum_dephasing},
                            {"max_deviation", fit.noncontextuality.max_deviation},
                            {"pass", fit.noncontextuality.pass}}},
                          {"empirical_deviation", fit.empirical_deviation},
                          {"worst_relative_slack", fit.worst_relative_slack},
                          {"consistent", fit.consistent}};
    }
    if (report.exotic) out["exotic"] = exotic_to_json(*report.exotic);
    if (report.certification) out["certification"] = verdict_to_json(*report.certification);
    return out;
}

json postselection_to_json(const PostselectionReport& report) {
    json per_state = json::array();
    for (const auto& sa : report.per_state) {
        per_state.push_back({{"psi_index", sa.psi_index},
                             {"deliveries", sa.deliveries},
                             {"estimate", estimate_to_json(sa.estimate)},
                             {"rho_hat", cmatrix_to_json(sa.rho_hat)},
                             {"n_hat", sa.n_hat},
                             {"noise_band", sa.noise_band},
                             {"certification", verdict_to_json(sa.certification)},
                             {"flagged_nonpositive", sa.flagged_nonpositive}});
    }
    return {{"per_state", per_state}, {"argmax_negativity", report.argmax_negativity}};
}

}  // namespace kdc
