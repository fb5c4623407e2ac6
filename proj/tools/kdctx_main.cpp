// kdctx: command-line driver for the KD quasiprobability toolkit.
//
// Subcommands mirror the library modules: kd compute, protocols exact|sample,
// hvm build|verify, certify, geometry search|witness|floor, experiment
// run|analyze|postselect. Every subcommand takes --config (JSON), --seed and
// --out; results go to --out as JSON (experiment run writes the ndjson
// record). Exit codes: 0 ok, 2 precondition violated, 3 not enough data.
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kdc/certify.hpp"
#include "kdc/experiment.hpp"
#include "kdc/geometry.hpp"
#include "kdc/hvm.hpp"
#include "kdc/kd.hpp"
#include "kdc/protocols.hpp"
#include "kdc/serialize.hpp"
#include "kdc/state.hpp"

using namespace kdc;

namespace {

struct Common {
    std::string config;
    std::string out;
    uint64_t seed = 0;
    bool parallel = false;

    ExecMode mode() const { return parallel ? ExecMode::openmp : ExecMode::serial; }
};

void add_common(CLI::App* sub, Common& c, bool config_required = true) {
    auto* opt = sub->add_option("--config", c.config, "JSON configuration file");
    if (config_required) opt->required();
    sub->add_option("--seed", c.seed, "master seed (default 0)");
    sub->add_option("--out", c.out, "output path (default: stdout)");
    sub->add_flag("--parallel", c.parallel, "run the parallel kernels");
}

json load_config(const Common& c) {
    if (c.config.empty()) return json::object();
    std::ifstream f(c.config);
    if (!f) throw PreconditionError("cannot open config file: " + c.config);
    json j;
    f >> j;
    return j;
}

void write_output(const Common& c, const json& j) {
    if (c.out.empty()) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream f(c.out);
    if (!f) throw PreconditionError("cannot open output file: " + c.out);
    f << j.dump(2) << "\n";
}

BasisPair parse_basis(const json& cfg) {
    if (!cfg.contains("basis")) throw PreconditionError("config needs a \"basis\" object");
    const json& b = cfg.at("basis");
    if (b.contains("a_vectors")) return basis_from_json(b);
    const std::string kind = b.value("kind", "");
    const int d = b.value("d", 0);
    if (kind == "fourier") return BasisPair::fourier_pair(d);
    if (kind == "random") return BasisPair::random_pair(d, b.value("seed", uint64_t{0}));
    throw PreconditionError(
        "basis needs explicit \"a_vectors\"/\"b_vectors\" or kind fourier|random with \"d\"");
}

DensityMatrix parse_state(const json& cfg, const BasisPair& basis) {
    if (!cfg.contains("state")) throw PreconditionError("config needs a \"state\" object");
    const json& s = cfg.at("state");
    if (s.contains("rho")) return state_from_json(s);
    if (s.contains("vector"))
        return DensityMatrix::pure(PureState::normalized(cvector_from_json(s.at("vector"))));
    if (s.value("kind", "") == "maximally_mixed")
        return DensityMatrix::maximally_mixed(basis.dim());
    throw PreconditionError(
        "state needs \"rho\", a pure \"vector\", or kind \"maximally_mixed\"");
}

double parse_epsilon(const json& cfg) {
    if (!cfg.contains("epsilon")) throw PreconditionError("config needs \"epsilon\"");
    return cfg.at("epsilon").get<double>();
}

json rmatrix_to_json(const RMatrix& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json estimate_to_json(const KDEstimate& est) {
    return json{{"q_hat", cmatrix_to_json(est.q_hat)},
                {"hw_re", rmatrix_to_json(est.hw_re)},
                {"hw_im", rmatrix_to_json(est.hw_im)},
                {"confidence", est.confidence},
                {"epsilon", est.epsilon},
                {"min_cell_count", est.min_cell_count},
                {"nonpositivity_halfwidth", est.nonpositivity_halfwidth}};
}

json correctness_to_json(const CorrectnessReport& r) {
    return json{{"per_protocol", r.dev},
                {"max_deviation", r.max_deviation},
                {"tol", r.tol},
                {"pass", r.pass}};
}

json noncontextuality_to_json(const NoncontextualityReport& r) {
    return json{{"y_marginal_half", r.y_marginal_half},
                {"x_marginal_povm", r.x_marginal_povm},
                {"x_sum_dephasing", r.x_sum_dephasing},
                {"y_sum_dephasing", r.y_sum_dephasing},
                {"max_deviation", r.max_deviation},
                {"tol", r.tol},
                {"pass", r.pass}};
}

AnalysisConfig parse_analysis_config(const json& cfg, ExecMode mode) {
    AnalysisConfig out;
    out.certification_epsilon = cfg.value("certification_epsilon", out.certification_epsilon);
    out.min_samples = cfg.value("min_samples", out.min_samples);
    out.confidence = cfg.value("confidence", out.confidence);
    out.geometry_budget = cfg.value("geometry_budget", out.geometry_budget);
    out.positive_tol = cfg.value("positive_tol", out.positive_tol);
    out.hull_tol = cfg.value("hull_tol", out.hull_tol);
    out.geometry_seed = cfg.value("geometry_seed", out.geometry_seed);
    if (cfg.contains("floor")) {
        const json& f = cfg.at("floor");
        out.floor.restarts = f.value("restarts", out.floor.restarts);
        out.floor.constraint_slack = f.value("constraint_slack", out.floor.constraint_slack);
        out.floor.init_step = f.value("init_step", out.floor.init_step);
        out.floor.min_step = f.value("min_step", out.floor.min_step);
        out.floor.max_iters = f.value("max_iters", out.floor.max_iters);
    }
    out.mode = mode;
    return out;
}

PublicRecord load_record(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw PreconditionError("cannot open record file: " + path);
    return read_record(f);
}

// ── subcommand bodies ─────────────────────────────────────────────────────

void run_kd_compute(const Common& c) {
    const json cfg = load_config(c);
    const BasisPair basis = parse_basis(cfg);
    const DensityMatrix rho = parse_state(cfg, basis);
    const KDDistribution q = kd_distribution(rho, basis);

    json weak = json::array();
    for (int j = 0; j < q.dim(); ++j) {
        json row = json::array();
        for (int k = 0; k < q.dim(); ++k)
            row.push_back(q.weak_defined(k) ? complex_to_json(q.weak_value(j, k))
                                            : json(nullptr));
        weak.push_back(std::move(row));
    }
    json out = kd_to_json(q);
    const RVector am = q.a_marginals(), bm = q.b_marginals();
    out["a_marginals"] = std::vector<double>(am.begin(), am.end());
    out["b_marginals"] = std::vector<double>(bm.begin(), bm.end());
    out["weak_values"] = std::move(weak);
    write_output(c, out);
}

void run_protocols_exact(const Common& c) {
    const json cfg = load_config(c);
    const BasisPair basis = parse_basis(cfg);
    const DensityMatrix rho = parse_state(cfg, basis);
    const double eps = parse_epsilon(cfg);
    const int j = cfg.value("j", 0), k = cfg.value("k", 0);
    const ProtocolDistributions f = exact_distributions(rho, basis, j, k, eps);

    json tables;
    for (int p = 1; p <= 6; ++p) {
        const auto t = f.table(p);
        tables[std::to_string(p)] =
            std::vector<double>(t.begin(), t.begin() + outcome_count(p));
    }
    write_output(c, json{{"j", j},
                         {"k", k},
                         {"epsilon", eps},
                         {"p_m", f.p_m},
                         {"p_d", f.p_d},
                         {"a_marginal", f.a_marginal},
                         {"route_deviation", f.route_deviation},
                         {"tables", tables}});
}

void run_protocols_sample(const Common& c) {
    const json cfg = load_config(c);
    const BasisPair basis = parse_basis(cfg);
    const DensityMatrix rho = parse_state(cfg, basis);
    const double eps = parse_epsilon(cfg);
    const double confidence = cfg.value("confidence", 0.99);
    if (!cfg.contains("cells")) throw PreconditionError("config needs a \"cells\" array");

    std::vector<CellTask> tasks;
    uint64_t stream = 0;
    for (const json& cell : cfg.at("cells")) {
        const int protocol = cell.at("protocol").get<int>();
        const int j = cell.value("j", 0), k = cell.value("k", 0);
        const long long shots = cell.at("shots").get<long long>();
        tasks.push_back(make_cell_task(exact_distributions(rho, basis, j, k, eps), protocol,
                                       shots, derive_stream(c.seed, stream++)));
    }
    const OutcomeCounts counts = sample_cells(tasks, basis.dim(), c.mode());

    json cells = json::array();
    for (const auto& t : tasks) {
        json weights = json::array();
        for (int i = 0; i < t.n_outcomes; ++i)
            weights.push_back(counts.outcome_weight(t.protocol, t.j, t.k, i));
        cells.push_back(json{{"protocol", t.protocol},
                             {"j", t.j},
                             {"k", t.k},
                             {"total", counts.cell_total(t.protocol, t.j, t.k)},
                             {"weights", std::move(weights)}});
    }
    json out{{"epsilon", eps}, {"confidence", confidence}, {"cells", std::move(cells)}};
    out["estimate"] = counts.min_estimation_cell() > 0
                          ? estimate_to_json(estimate_kd(counts, eps, confidence))
                          : json(nullptr);
    write_output(c, out);
}

void run_hvm(const Common& c, bool include_model) {
    const json cfg = load_config(c);
    const BasisPair basis = parse_basis(cfg);
    const DensityMatrix rho = parse_state(cfg, basis);
    const double eps = parse_epsilon(cfg);
    const double tol = cfg.value("kd_positive_tol", kTolComposed);

    const HiddenVariableModel model = build_hvm(rho, basis, eps, tol);
    json out{{"correctness", correctness_to_json(verify_correctness(model, rho, basis))},
             {"noncontextuality", noncontextuality_to_json(verify_noncontextuality(model))}};
    if (include_model) out["model"] = hvm_to_json(model);
    write_output(c, out);
}

void run_certify(const Common& c) {
    const json cfg = load_config(c);
    const BasisPair basis = parse_basis(cfg);
    const DensityMatrix rho = parse_state(cfg, basis);
    write_output(c, verdict_to_json(certify(rho, basis, parse_epsilon(cfg))));
}

void run_geometry_search(const Common& c) {
    const json cfg = load_config(c);
    const BasisPair basis = parse_basis(cfg);
    const PurePositiveSet set = pure_positive_search(
        basis, cfg.value("budget", 48), cfg.value("tol", 1e-9), c.seed, c.mode());
    write_output(c, set_to_json(set));
}

void run_geometry_witness(const Common& c) {
    const json cfg = load_config(c);
    const BasisPair basis = parse_basis(cfg);
    const DensityMatrix rho = parse_state(cfg, basis);
    const PurePositiveSet set = pure_positive_search(
        basis, cfg.value("budget", 48), cfg.value("tol", 1e-9), c.seed, c.mode());
    const HullResult hull = hull_membership(rho, set, cfg.value("hull_tol", kHullTol));
    json out{{"set_size", set.states.size()},
             {"hull", json{{"feasible", hull.feasible}, {"residual", hull.residual}}}};
    out["witness"] = witness_to_json(find_witness(rho, set));  // NoSeparation -> exit 2
    write_output(c, out);
}

void run_geometry_floor(const Common& c) {
    const json cfg = load_config(c);
    const BasisPair basis = parse_basis(cfg);

    SeparatingWitness w;
    if (cfg.contains("witness")) {
        w = witness_from_json(cfg.at("witness"));
    } else {
        const DensityMatrix rho = parse_state(cfg, basis);
        const PurePositiveSet set = pure_positive_search(
            basis, cfg.value("budget", 48), cfg.value("tol", 1e-9), c.seed, c.mode());
        w = find_witness(rho, set);
    }
    FloorConfig fc;
    if (cfg.contains("floor")) {
        const json& f = cfg.at("floor");
        fc.restarts = f.value("restarts", fc.restarts);
        fc.constraint_slack = f.value("constraint_slack", fc.constraint_slack);
        fc.init_step = f.value("init_step", fc.init_step);
        fc.min_step = f.value("min_step", fc.min_step);
        fc.max_iters = f.value("max_iters", fc.max_iters);
    }
    const FloorEstimate floor = negativity_floor(w, basis, fc, c.seed, c.mode());
    json out = floor_to_json(floor);
    out["witness"] = witness_to_json(w);
    write_output(c, out);
}

void run_experiment_run(const Common& c, const std::string& ledger_path) {
    const json cfg = load_config(c);
    const BasisPair basis = parse_basis(cfg);

    AliceConfig alice;
    if (!cfg.contains("states")) throw PreconditionError("config needs a \"states\" array");
    for (const json& s : cfg.at("states"))
        alice.states.push_back(PureState::normalized(cvector_from_json(s)));
    alice.rounds = cfg.value("rounds", 0LL);
    alice.permutation_seed = cfg.value("permutation_seed", uint64_t{0});
    alice.epsilon = parse_epsilon(cfg);

    BobPolicy bob;
    if (cfg.contains("cells")) {
        for (const json& cell : cfg.at("cells")) {
            CellTask t;
            t.protocol = cell.at("protocol").get<int>();
            t.j = cell.value("j", 0);
            t.k = cell.value("k", 0);
            bob.cells.push_back(t);
        }
        bob.weights = RVector::Constant(static_cast<int>(bob.cells.size()),
                                        1.0 / static_cast<double>(bob.cells.size()));
        if (cfg.contains("weights")) {
            const auto w = cfg.at("weights").get<std::vector<double>>();
            bob.weights = Eigen::Map<const RVector>(w.data(), static_cast<int>(w.size()));
        }
    } else {
        bob = BobPolicy::uniform_grid(basis.dim());
    }

    const ExperimentResult res = run_experiment(alice, basis, bob, c.seed, c.mode());

    if (c.out.empty()) throw PreconditionError("experiment run needs --out for the record");
    std::ofstream rf(c.out);
    if (!rf) throw PreconditionError("cannot open output file: " + c.out);
    write_record(rf, res.record);

    const std::string lpath = ledger_path.empty() ? c.out + ".ledger.json" : ledger_path;
    std::ofstream lf(lpath);
    if (!lf) throw PreconditionError("cannot open ledger file: " + lpath);
    lf << ledger_to_json(res.ledger).dump(2) << "\n";
    std::cout << "record: " << c.out << " (" << res.record.entries.size()
              << " deliveries)\nledger: " << lpath << "\n";
}

void run_experiment_analyze(const Common& c, const std::string& record_path) {
    const AnalysisReport rep =
        bob_analyze(load_record(record_path), parse_analysis_config(load_config(c), c.mode()));
    write_output(c, analysis_to_json(rep));
}

void run_experiment_postselect(const Common& c, const std::string& record_path,
                               const std::string& ledger_path) {
    std::ifstream lf(ledger_path);
    if (!lf) throw PreconditionError("cannot open ledger file: " + ledger_path);
    json lj;
    lf >> lj;
    const PostselectionReport rep =
        alice_postselect(load_record(record_path), ledger_from_json(lj),
                         parse_analysis_config(load_config(c), c.mode()));
    write_output(c, postselection_to_json(rep));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kirkwood-Dirac quasiprobability toolkit"};
    app.require_subcommand(1);

    Common c_kd, c_pe, c_ps, c_hb, c_hv, c_ce, c_gs, c_gw, c_gf, c_er, c_ea, c_ep;
    std::string record_path, ledger_path;

    CLI::App* kd = app.add_subcommand("kd", "KD distributions");
    kd->require_subcommand(1);
    add_common(kd->add_subcommand("compute", "Q table, marginals, weak values"), c_kd);

    CLI::App* protocols = app.add_subcommand("protocols", "weak-measurement protocols");
    protocols->require_subcommand(1);
    add_common(protocols->add_subcommand("exact", "exact outcome tables at a cell"), c_pe);
    add_common(protocols->add_subcommand("sample", "Monte Carlo sampling and estimation"),
               c_ps);

    CLI::App* hvm = app.add_subcommand("hvm", "noncontextual hidden-variable models");
    hvm->require_subcommand(1);
    add_common(hvm->add_subcommand("build", "construct and verify a model"), c_hb);
    add_common(hvm->add_subcommand("verify", "construct a model, report only checks"), c_hv);

    add_common(app.add_subcommand("certify", "contextuality certification"), c_ce);

    CLI::App* geometry = app.add_subcommand("geometry", "convex geometry of KD positivity");
    geometry->require_subcommand(1);
    add_common(geometry->add_subcommand("search", "enumerate pure KD-positive states"), c_gs);
    add_common(geometry->add_subcommand("witness", "hull membership and separation"), c_gw);
    add_common(geometry->add_subcommand("floor", "negativity floor over a witness cap"), c_gf);

    CLI::App* experiment = app.add_subcommand("experiment", "two-party experiment");
    experiment->require_subcommand(1);
    CLI::App* erun = experiment->add_subcommand("run", "simulate and write record + ledger");
    add_common(erun, c_er);
    erun->add_option("--ledger-out", ledger_path, "ledger path (default: <out>.ledger.json)");
    CLI::App* eana = experiment->add_subcommand("analyze", "Bob-side analysis of a record");
    add_common(eana, c_ea, /*config_required=*/false);
    eana->add_option("--record", record_path, "ndjson record file")->required();
    CLI::App* epost = experiment->add_subcommand("postselect", "Alice-side postselection");
    add_common(epost, c_ep, /*config_required=*/false);
    epost->add_option("--record", record_path, "ndjson record file")->required();
    epost->add_option("--ledger", ledger_path, "ledger JSON file")->required();

    try {
        app.parse(argc, argv);

        if (kd->get_subcommand("compute")->parsed()) run_kd_compute(c_kd);
        if (protocols->get_subcommand("exact")->parsed()) run_protocols_exact(c_pe);
        if (protocols->get_subcommand("sample")->parsed()) run_protocols_sample(c_ps);
        if (hvm->get_subcommand("build")->parsed()) run_hvm(c_hb, true);
        if (hvm->get_subcommand("verify")->parsed()) run_hvm(c_hv, false);
        if (app.get_subcommand("certify")->parsed()) run_certify(c_ce);
        if (geometry->get_subcommand("search")->parsed()) run_geometry_search(c_gs);
        if (geometry->get_subcommand("witness")->parsed()) run_geometry_witness(c_gw);
        if (geometry->get_subcommand("floor")->parsed()) run_geometry_floor(c_gf);
        if (erun->parsed()) run_experiment_run(c_er, ledger_path);
        if (eana->parsed()) run_experiment_analyze(c_ea, record_path);
        if (epost->parsed()) run_experiment_postselect(c_ep, record_path, ledger_path);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage errors are precondition errors
    } catch (const InsufficientSamples& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "error: invalid JSON input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
