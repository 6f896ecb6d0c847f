// htrm: command-line front end for the heavy-tailed random matrix simulator.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "htrm/config_io.hpp"
#include "htrm/errors.hpp"
#include "htrm/estimators.hpp"
#include "htrm/experiments.hpp"
#include "htrm/field_models.hpp"
#include "htrm/limit_process.hpp"
#include "htrm/matrix_assembly.hpp"
#include "htrm/spectra.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace htrm;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string out;
    std::string format = "csv";
};

void add_common(CLI::App* app, Common& c, bool needs_config) {
    auto* opt = app->add_option("--config", c.config, "JSON config document");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "Master seed (overrides the config)");
    app->add_option("--threads", c.threads, "Worker threads (results do not depend on it)")
        ->check(CLI::Range(1u, 1024u));
    app->add_option("--out", c.out, "Output file or directory");
    app->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "bin"}));
}

ExperimentConfig load_with_overrides(const Common& c) {
    ExperimentConfig cfg = load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (c.threads) cfg.threads = *c.threads;
    if (!c.out.empty()) cfg.out_dir = c.out;
    cfg.validate();
    return cfg;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os) throw ConfigError("cannot write '" + path + "'");
    os << std::setprecision(17);
    return os;
}

std::string prefixed(const ExperimentConfig& cfg, const std::string& suffix) {
    return (fs::path(cfg.out_dir) / (cfg.prefix + suffix)).string();
}

bool is_binary_path(const std::string& path) { return fs::path(path).extension() == ".bin"; }

// Fingerprint of the run that produced a matrix file, from its sidecar or stamp line.
std::string source_fingerprint(const std::string& path) {
    if (std::ifstream meta(path + ".meta.json"); meta) {
        try {
            return json::parse(meta).value("fingerprint", "unknown");
        } catch (const json::exception&) {
            return "unknown";
        }
    }
    if (is_binary_path(path)) return "unknown";
    std::ifstream is(path);
    std::string line;
    if (std::getline(is, line) && line.rfind('#', 0) == 0) {
        const auto at = line.find("fingerprint=");
        if (at != std::string::npos) {
            const auto start = at + 12;
            return line.substr(start, line.find(' ', start) - start);
        }
    }
    return "unknown";
}

// ---- gen ----

struct GenArgs {
    Common c;
    std::optional<std::uint64_t> p, n;
    std::string kind = "field";
};

int cmd_gen(const GenArgs& a) {
    ExperimentConfig cfg = load_with_overrides(a.c);
    if (a.n) cfg.n = *a.n;
    if (a.p) cfg.p = *a.p;
    else if (a.kind != "data") cfg.p = cfg.n;
    if (a.kind == "wigner" && cfg.p != cfg.n) throw ConfigError("gen: a Wigner matrix needs p == n");
    if (a.c.out.empty()) throw ConfigError("gen: --out is required");
    const std::string fingerprint = config_fingerprint(cfg);

    const FieldSample field = generate_field(cfg.model, static_cast<Eigen::Index>(cfg.p),
                                             static_cast<Eigen::Index>(cfg.n), cfg.seed);
    const NormalizationSeq seq = cfg.model.normalization();
    Eigen::MatrixXd m;
    MatrixKind kind = MatrixKind::Field;
    double normalization = 1.0;
    if (a.kind == "wigner") {
        SymMatrix s = build_wigner(field, seq);
        normalization = s.normalization;
        m = std::move(s.a);
        kind = MatrixKind::Symmetric;
    } else if (a.kind == "data") {
        RectMatrix r = build_data(field, seq);
        normalization = r.normalization;
        m = std::move(r.a);
        kind = MatrixKind::Rectangular;
    } else {
        m = field.values;
    }

    if (a.c.format == "bin") {
        auto os = open_out(a.c.out, true);
        write_matrix_bin(os, m, kind);
        json meta = {{"tool", kToolName},
                     {"version", kToolVersion},
                     {"fingerprint", fingerprint},
                     {"kind", a.kind},
                     {"rows", m.rows()},
                     {"cols", m.cols()},
                     {"seed", cfg.seed},
                     {"normalization", normalization},
                     {"model", cfg.model.describe()}};
        auto ms = open_out(a.c.out + ".meta.json");
        ms << meta.dump(2) << "\n";
    } else {
        auto os = open_out(a.c.out);
        write_matrix_csv(os, m, output_stamp(fingerprint) + " kind=" + a.kind + " seed=" + std::to_string(cfg.seed));
    }
    return 0;
}

// ---- eig ----

struct EigArgs {
    Common c;
    std::string input;
    std::size_t k = 5;
    std::string solver = "dense";
    double eps = 0.5;
    Eigen::Index block = 0;
};

int cmd_eig(const EigArgs& a) {
    Eigen::MatrixXd m;
    MatrixKind kind = MatrixKind::Field;
    if (is_binary_path(a.input)) {
        std::ifstream is(a.input, std::ios::binary);
        if (!is) throw ConfigError("cannot open '" + a.input + "'");
        m = read_matrix_bin(is, &kind);
    } else {
        std::ifstream is(a.input);
        if (!is) throw ConfigError("cannot open '" + a.input + "'");
        m = read_matrix_csv(is);
    }
    const bool symmetric = kind == MatrixKind::Symmetric ||
                           (kind == MatrixKind::Field && m.rows() == m.cols() && m.isApprox(m.transpose(), 0.0));
    if (kind == MatrixKind::Symmetric && !m.isApprox(m.transpose(), 0.0))
        throw ConfigError("eig: matrix tagged symmetric is not symmetric");

    std::vector<double> values;  // descending; eigenvalues, or eigenvalues of M M'
    std::string path = "dense";
    if (a.solver == "sparse") {
        const Eigen::Index side = std::min(m.rows(), m.cols());
        const Eigen::Index r = a.block > 0 ? a.block : default_block_side(static_cast<std::uint64_t>(side));
        if (m.rows() % r != 0 || m.cols() % r != 0)
            throw ConfigError("eig: block side " + std::to_string(r) + " must divide both dimensions");
        const TruncatedPair t = truncate(m, a.eps);
        const BlockDecomposition blocks = block_decompose(t.above, r);
        std::string reason;
        if (symmetric) {
            const SparseSpectrum s = sparse_truncated_spectrum(t.above, blocks);
            if (s.event_s) values = s.values();
            reason = s.fallback_reason;
        } else {
            const SparseSingularValues s = sparse_truncated_singular_values(t.above, blocks);
            if (s.event_s)
                for (double v : s.values) values.push_back(v * v);
            reason = s.fallback_reason;
        }
        if (values.empty() && !reason.empty()) {
            path = "dense-fallback";
            m = t.above.to_dense();
        } else {
            path = "sparse";
        }
    }
    if (path != "sparse") {
        if (symmetric) {
            const auto e = sym_eig(m);
            values.assign(e.values.data(), e.values.data() + e.values.size());
        } else {
            for (double s : nonzero_singular_values(m)) values.push_back(s * s);
        }
    }

    std::ofstream file;
    if (!a.c.out.empty()) file = open_out(a.c.out);
    std::ostream& os = a.c.out.empty() ? std::cout : file;
    os << std::setprecision(17);
    os << "# " << output_stamp(source_fingerprint(a.input)) << " input=" << fs::path(a.input).filename().string()
       << " path=" << path << (symmetric ? " spectrum=eigenvalues" : " spectrum=gram-eigenvalues") << "\n";
    os << "rank,value\n";
    for (std::size_t i = 0; i < std::min(a.k, values.size()); ++i) os << i + 1 << "," << values[i] << "\n";
    if (symmetric) {
        // Bottom of the spectrum, most negative first.
        const std::size_t kb = std::min(a.k, values.size());
        for (std::size_t i = 0; i < kb; ++i) os << -static_cast<long>(i + 1) << "," << values[values.size() - 1 - i] << "\n";
    }
    return 0;
}

// ---- simulate ----

json comparisons_json(const std::vector<Comparison>& cmp) {
    json arr = json::array();
    for (std::size_t i = 0; i < cmp.size(); ++i)
        arr.push_back({{"rank", i + 1},
                       {"ks", cmp[i].ks},
                       {"ks_scale", cmp[i].ks_scale},
                       {"n_empirical", cmp[i].n_empirical},
                       {"n_reference", cmp[i].n_reference}});
    return arr;
}

int cmd_simulate(const Common& c) {
    const ExperimentConfig cfg = load_with_overrides(c);
    const std::string fingerprint = config_fingerprint(cfg);
    const auto trials = run_trials(cfg);

    {
        auto os = open_out(prefixed(cfg, "_trials.csv"));
        write_trials_csv(os, trials, cfg.k, output_stamp(fingerprint));
    }

    std::size_t dense = 0, sparse = 0, fallback = 0, s_hits = 0;
    for (const auto& t : trials) {
        if (t.path == SolverUsed::Dense) ++dense;
        if (t.path == SolverUsed::Sparse) ++sparse;
        if (t.path == SolverUsed::DenseFallback) ++fallback;
        if (t.event_s) ++s_hits;
    }
    json summary = {{"schema", kSummarySchema},
                    {"tool", kToolName},
                    {"version", kToolVersion},
                    {"fingerprint", fingerprint},
                    {"config", config_to_json(cfg)},
                    {"trials", trials.size()},
                    {"paths", {{"dense", dense}, {"sparse", sparse}, {"dense-fallback", fallback}}},
                    {"event_s_rate", cfg.solver == SolverPath::Sparse
                                         ? json(static_cast<double>(s_hits) / static_cast<double>(trials.size()))
                                         : json(nullptr)},
                    {"reference_intensity", cfg.reference_intensity()}};
    summary["ks_vs_limit"] = comparisons_json(compare_to_limit(cfg, trials));
    auto os = open_out(prefixed(cfg, "_summary.json"));
    os << summary.dump(2) << "\n";
    return 0;
}

// ---- limit ----

int cmd_limit(const Common& c, std::optional<std::uint64_t> draws_flag) {
    const ExperimentConfig cfg = load_with_overrides(c);
    const std::string fingerprint = config_fingerprint(cfg);
    const std::uint64_t draws = draws_flag.value_or(cfg.reference_multiplier * cfg.reps);
    if (draws == 0) throw ConfigError("limit: draws must be >= 1");
    const ClusterShapeSpec cluster = theoretical_cluster(cfg.model);
    LimitOptions opt;
    opt.intensity_scale = cfg.reference_intensity();
    // Same streams as the reference used by simulate.
    const std::uint64_t base = derive_seed(cfg.seed, "reference", 0);

    auto points = open_out(prefixed(cfg, "_limit_points.csv"));
    auto topk = open_out(prefixed(cfg, "_limit_topk.csv"));
    points << "# " << output_stamp(fingerprint) << "\n";
    topk << "# " << output_stamp(fingerprint) << "\n";
    write_limit_csv_header(points);
    topk << "draw,certified";
    for (std::size_t i = 1; i <= cfg.k; ++i) topk << ",top" << i;
    topk << "\n";
    for (std::uint64_t d = 0; d < draws; ++d) {
        RngStream rng(derive_seed(base, "limit-reference", d));
        const LimitSample s = sample_limit_spectrum(cluster, cfg.model.alpha(), cfg.k, rng, opt);
        write_limit_csv_rows(points, d, s);
        const auto& vals = cfg.ensemble == EnsembleKind::Wigner ? s.wigner : s.cov;
        topk << d << "," << (s.certified ? 1 : 0);
        for (double v : vals) topk << "," << v;
        topk << "\n";
    }
    return 0;
}

// ---- theta ----

int cmd_theta(const Common& c) {
    const ExperimentConfig cfg = load_with_overrides(c);
    const std::uint64_t n = cfg.theta.n > 0 ? cfg.theta.n : cfg.n;
    const Eigen::Index r = cfg.theta.r > 0 ? cfg.theta.r : default_theta_block_side(n);
    const ThetaEstimate est = estimate_extremal_index(cfg.model, n, r, cfg.theta.u, cfg.theta.reps, cfg.seed);
    std::ostringstream line;
    line << std::setprecision(6) << "theta_hat=" << est.theta_hat << " stderr=" << est.std_error
         << " accepted=" << est.accepted << " blocks=" << est.blocks << " n=" << n << " r=" << r
         << " u=" << cfg.theta.u;
    try {
        line << " closed_form=" << theoretical_cluster(cfg.model).theta;
    } catch (const ConfigError&) {
        line << " closed_form=none";
    }
    std::ofstream file;
    if (!c.out.empty()) file = open_out(c.out);
    (c.out.empty() ? std::cout : file) << "# " << output_stamp(config_fingerprint(cfg)) << "\n" << line.str() << "\n";
    return 0;
}

// ---- compare ----

struct CompareArgs {
    std::string empirical;
    std::string reference;
    std::vector<double> frechet;
    std::string column = "top1";
    std::string ref_column;
    std::string out;
    std::size_t qq_points = 19;
};

int cmd_compare(const CompareArgs& a) {
    const std::vector<double> emp = read_csv(a.empirical).column(a.column);
    if (emp.empty()) throw ConfigError("compare: empirical column is empty");
    Comparison cmp;
    std::string ref_name;
    if (!a.frechet.empty()) {
        if (a.frechet.size() != 2 || !(a.frechet[0] > 0.0) || !(a.frechet[1] > 0.0))
            throw ConfigError("compare: --frechet needs positive THETA and ALPHA");
        cmp = compare_distributions(emp, frechet(a.frechet[0], a.frechet[1]), a.qq_points);
        std::ostringstream s;
        s << "frechet(theta=" << a.frechet[0] << ",alpha=" << a.frechet[1] << ")";
        ref_name = s.str();
    } else {
        if (a.reference.empty()) throw ConfigError("compare: need a reference CSV or --frechet");
        const std::vector<double> ref =
            read_csv(a.reference).column(a.ref_column.empty() ? a.column : a.ref_column);
        if (ref.empty()) throw ConfigError("compare: reference column is empty");
        cmp = compare_distributions(emp, ref, a.qq_points);
        ref_name = fs::path(a.reference).filename().string();
    }
    std::cout << std::setprecision(6) << "ks=" << cmp.ks << " ks_scale=" << cmp.ks_scale
              << " n_empirical=" << cmp.n_empirical << " n_reference=" << cmp.n_reference
              << " reference=" << ref_name << "\n";
    if (!a.out.empty()) {
        auto os = open_out(a.out);
        os << "# " << kToolName << " " << kToolVersion << " empirical=" << fs::path(a.empirical).filename().string()
           << ":" << a.column << " reference=" << ref_name << " ks=" << cmp.ks << "\n";
        write_qq_table(os, cmp);
    }
    return 0;
}

// ---- report ----

int cmd_report(const std::string& dir, const std::string& out) {
    if (!fs::is_directory(dir)) throw ConfigError("report: '" + dir + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (e.is_regular_file() && name.size() > 13 && name.ends_with("_summary.json")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::ofstream file;
    if (!out.empty()) file = open_out(out);
    std::ostream& os = out.empty() ? std::cout : file;
    os << std::setprecision(6);
    os << "# " << kToolName << " " << kToolVersion << " report of " << files.size() << " summaries\n";
    os << "prefix,fingerprint,family,ensemble,n,reps,solver,event_s_rate,ks_top1,ks_scale_top1\n";
    for (const auto& f : files) {
        std::ifstream is(f);
        json s;
        try {
            s = json::parse(is);
        } catch (const json::parse_error& e) {
            throw ConfigError("report: " + f.string() + ": " + e.what());
        }
        if (s.value("schema", 0) != kSummarySchema) throw ConfigError("report: " + f.string() + ": unknown schema");
        const json& cfg = s.at("config");
        const std::string name = f.filename().string();
        os << name.substr(0, name.size() - 13) << "," << s.at("fingerprint").get<std::string>() << ","
           << cfg.at("model").at("family").get<std::string>() << ","
           << cfg.at("ensemble").at("kind").get<std::string>() << "," << cfg.at("ensemble").at("n") << ","
           << cfg.at("trials").at("reps") << "," << cfg.at("trials").at("solver").get<std::string>() << ",";
        if (s.at("event_s_rate").is_null()) os << "";
        else os << s.at("event_s_rate").get<double>();
        const json& ks = s.at("ks_vs_limit");
        if (!ks.empty()) os << "," << ks.at(0).at("ks").get<double>() << "," << ks.at(0).at("ks_scale").get<double>();
        else os << ",,";
        os << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heavy-tailed random matrix simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Write a field sample, Wigner matrix or data matrix");
    add_common(g, gen.c, true);
    g->add_option("--p", gen.p, "Rows (default: config ensemble p, or n)");
    g->add_option("--n", gen.n, "Columns (default: config ensemble n)");
    g->add_option("--kind", gen.kind, "What to write")->check(CLI::IsMember({"field", "wigner", "data"}));

    EigArgs eig;
    auto* e = app.add_subcommand("eig", "Top-K spectrum of a stored matrix");
    add_common(e, eig.c, false);
    e->add_option("matrix", eig.input, "Matrix file (.bin or CSV)")->required()->check(CLI::ExistingFile);
    e->add_option("--k", eig.k, "Number of eigenvalues to print")->check(CLI::PositiveNumber);
    e->add_option("--solver", eig.solver)->check(CLI::IsMember({"dense", "sparse"}));
    e->add_option("--eps", eig.eps, "Truncation level for the sparse solver")->check(CLI::NonNegativeNumber);
    e->add_option("--block", eig.block, "Block side for the sparse solver (default ceil(n^0.1))");

    Common sim;
    auto* s = app.add_subcommand("simulate", "Run the configured trials; write trial CSV and summary JSON");
    add_common(s, sim, true);

    Common lim;
    std::optional<std::uint64_t> draws;
    auto* l = app.add_subcommand("limit", "Sample the limiting edge spectrum");
    add_common(l, lim, true);
    l->add_option("--draws", draws, "Number of draws (default reference_multiplier * reps)");

    Common th;
    auto* t = app.add_subcommand("theta", "Estimate the extremal index");
    add_common(t, th, true);

    CompareArgs cmp;
    auto* c = app.add_subcommand("compare", "KS distance and QQ table of two samples or a sample and a Frechet law");
    c->add_option("empirical", cmp.empirical, "Empirical CSV")->required()->check(CLI::ExistingFile);
    c->add_option("reference", cmp.reference, "Reference CSV")->check(CLI::ExistingFile);
    c->add_option("--frechet", cmp.frechet, "THETA ALPHA of an analytic reference")->expected(2);
    c->add_option("--column", cmp.column, "Empirical column");
    c->add_option("--ref-column", cmp.ref_column, "Reference column (default: same as --column)");
    c->add_option("--qq-points", cmp.qq_points)->check(CLI::PositiveNumber);
    c->add_option("--out", cmp.out, "QQ table output");
    c->get_option("--frechet")->excludes(c->get_option("reference"));

    std::string report_dir, report_out;
    auto* r = app.add_subcommand("report", "Aggregate summary JSON files of a directory");
    r->add_option("dir", report_dir)->required();
    r->add_option("--out", report_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (g->parsed()) return cmd_gen(gen);
        if (e->parsed()) return cmd_eig(eig);
        if (s->parsed()) return cmd_simulate(sim);
        if (l->parsed()) return cmd_limit(lim, draws);
        if (t->parsed()) return cmd_theta(th);
        if (c->parsed()) return cmd_compare(cmp);
        if (r->parsed()) return cmd_report(report_dir, report_out);
    } catch (const ConfigError& err) {
        std::cerr << "htrm: config error: " << err.what() << "\n";
        return 2;
    } catch (const NumericError& err) {
        std::cerr << "htrm: numeric failure: " << err.what() << "\n";
        return 3;
    } catch (const nlohmann::json::exception& err) {
        std::cerr << "htrm: config error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "htrm: error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
