#include "htrm/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "htrm/errors.hpp"
#include "htrm/limit_process.hpp"
#include "htrm/spectra.hpp"
#include "parallel.hpp"

namespace htrm {

std::string to_string(EnsembleKind k) { return k == EnsembleKind::Wigner ? "wigner" : "covariance"; }
std::string to_string(SolverPath s) { return s == SolverPath::Dense ? "dense" : "sparse"; }
std::string to_string(SolverUsed s) {
    switch (s) {
        case SolverUsed::Dense: return "dense";
        case SolverUsed::Sparse: return "sparse";
        case SolverUsed::DenseFallback: return "dense-fallback";
    }
    return "?";
}

EnsembleKind ensemble_kind_from_string(const std::string& s) {
    if (s == "wigner") return EnsembleKind::Wigner;
    if (s == "covariance") return EnsembleKind::Covariance;
    throw ConfigError("unknown ensemble kind '" + s + "'");
}

SolverPath solver_path_from_string(const std::string& s) {
    if (s == "dense") return SolverPath::Dense;
    if (s == "sparse") return SolverPath::Sparse;
    throw ConfigError("unknown solver path '" + s + "'");
}

double ExperimentConfig::reference_intensity() const {
    if (intensity_scale) return *intensity_scale;
    return ensemble == EnsembleKind::Wigner ? 0.5 : 1.0;
}

Eigen::Index ExperimentConfig::effective_block_side() const {
    if (block_side > 0) return block_side;
    const std::uint64_t order = ensemble == EnsembleKind::Wigner ? n : std::min(n, p);
    return truncation.block_side(order);
}

std::uint64_t ExperimentConfig::effective_n() const {
    if (solver == SolverPath::Dense) return n;
    return trimmed_order(n, static_cast<std::uint64_t>(effective_block_side()));
}

std::uint64_t ExperimentConfig::effective_p() const {
    if (solver == SolverPath::Dense) return p;
    return trimmed_order(p, static_cast<std::uint64_t>(effective_block_side()));
}

void ExperimentConfig::validate() const {
    if (reps < 1) throw ConfigError("reps must be >= 1");
    if (n < 1) throw ConfigError("n must be >= 1");
    if (ensemble == EnsembleKind::Covariance && p < 1) throw ConfigError("p must be >= 1");
    if (k < 1) throw ConfigError("K must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (reference_multiplier < 1) throw ConfigError("reference multiplier must be >= 1");
    if (!(reference_intensity() > 0.0)) throw ConfigError("intensity scale must be positive");
    const std::uint64_t order = ensemble == EnsembleKind::Wigner ? n : std::min(n, p);
    if (block_side < 0 || static_cast<std::uint64_t>(block_side) > order)
        throw ConfigError("block side must lie in [0, n]");
    validate_truncation(truncation, model.alpha(), n);
    const std::uint64_t limit = ensemble == EnsembleKind::Wigner ? effective_n() : std::min(effective_n(), effective_p());
    if (k > limit) throw ConfigError("K exceeds the matrix order");
}

std::uint64_t trial_seed(const ExperimentConfig& cfg, std::uint64_t trial) {
    return derive_seed(cfg.seed, "trial", trial);
}

namespace {

using Clock = std::chrono::steady_clock;

std::vector<double> head(const Eigen::VectorXd& v, std::size_t k) {
    std::vector<double> out(k, 0.0);
    for (std::size_t i = 0; i < k && static_cast<Eigen::Index>(i) < v.size(); ++i) out[i] = v(static_cast<Eigen::Index>(i));
    return out;
}

std::vector<double> tail_ascending(const Eigen::VectorXd& v, std::size_t k) {
    std::vector<double> out(k, 0.0);
    for (std::size_t i = 0; i < k && static_cast<Eigen::Index>(i) < v.size(); ++i)
        out[i] = v(v.size() - 1 - static_cast<Eigen::Index>(i));
    return out;
}

SparseMatrix normalized_symmetric(const SparseMatrix& upper, double b) {
    SparseMatrix out;
    out.rows = upper.rows;
    out.cols = upper.cols;
    for (const auto& e : upper.entries) {
        const double x = e.value / b;
        out.entries.push_back({e.i, e.j, x});
        if (e.i != e.j) out.entries.push_back({e.j, e.i, x});
    }
    std::sort(out.entries.begin(), out.entries.end(),
              [](const SparseEntry& a, const SparseEntry& c) { return a.i != c.i ? a.i < c.i : a.j < c.j; });
    return out;
}

}  // namespace

TrialResult wigner_trial(const ExperimentConfig& cfg, std::uint64_t trial) {
    const auto start = Clock::now();
    TrialResult res;
    res.trial = trial;
    const auto n = static_cast<Eigen::Index>(cfg.effective_n());
    const auto nn = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n);
    const auto seq = cfg.model.normalization();
    const std::uint64_t seed = trial_seed(cfg, trial);

    if (cfg.solver == SolverPath::Dense) {
        const SymMatrix a = build_wigner(generate_field(cfg.model, n, n, seed), seq);
        const Eigen::VectorXd ev = sym_eig(a).values;
        res.top = head(ev, cfg.k);
        res.bottom = tail_ascending(ev, cfg.k);
        res.path = SolverUsed::Dense;
    } else {
        const double b = seq(nn);
        const double eps = cfg.truncation.sparse_threshold(static_cast<std::uint64_t>(n), b);
        const SparseMatrix above =
            normalized_symmetric(field_exceedances(cfg.model, n, n, seed, eps * b, true), b);
        const auto blocks = block_decompose(above, cfg.effective_block_side());
        const auto spec = sparse_truncated_spectrum(above, blocks);
        res.event_s = spec.event_s;
        if (spec.event_s) {
            const auto sets = spectrum_point_sets(spec.values());
            res.top.assign(cfg.k, 0.0);
            res.bottom.assign(cfg.k, 0.0);
            for (std::size_t i = 0; i < cfg.k && i < sets.plus.size(); ++i) res.top[i] = sets.plus[i];
            for (std::size_t i = 0; i < cfg.k && i < sets.minus.size(); ++i) res.bottom[i] = sets.minus[i];
            res.path = SolverUsed::Sparse;
        } else {
            const Eigen::VectorXd ev = sym_eig(above.to_dense()).values;
            res.top = head(ev, cfg.k);
            res.bottom = tail_ascending(ev, cfg.k);
            res.path = SolverUsed::DenseFallback;
        }
    }
    res.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return res;
}

TrialResult cov_trial(const ExperimentConfig& cfg, std::uint64_t trial) {
    const auto start = Clock::now();
    TrialResult res;
    res.trial = trial;
    const auto n = static_cast<Eigen::Index>(cfg.effective_n());
    const auto p = static_cast<Eigen::Index>(cfg.effective_p());
    const auto seq = cfg.model.normalization();
    const std::uint64_t seed = trial_seed(cfg, trial);
    res.top.assign(cfg.k, 0.0);

    auto fill_squares = [&](const Eigen::VectorXd& sv) {
        for (std::size_t i = 0; i < cfg.k && static_cast<Eigen::Index>(i) < sv.size(); ++i)
            res.top[i] = sv(static_cast<Eigen::Index>(i)) * sv(static_cast<Eigen::Index>(i));
    };

    if (cfg.solver == SolverPath::Dense) {
        const RectMatrix a = build_data(generate_field(cfg.model, p, n, seed), seq);
        fill_squares(singular_values(a.a));
        res.path = SolverUsed::Dense;
    } else {
        const double b = seq(static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(p));
        const double eps = cfg.truncation.sparse_threshold(static_cast<std::uint64_t>(n), b);
        SparseMatrix above = field_exceedances(cfg.model, p, n, seed, eps * b, false);
        for (auto& e : above.entries) e.value /= b;
        const auto blocks = block_decompose(above, cfg.effective_block_side());
        const auto sv = sparse_truncated_singular_values(above, blocks);
        res.event_s = sv.event_s;
        if (sv.event_s) {
            for (std::size_t i = 0; i < cfg.k && i < sv.values.size(); ++i) res.top[i] = sv.values[i] * sv.values[i];
            res.path = SolverUsed::Sparse;
        } else {
            fill_squares(singular_values(above.to_dense()));
            res.path = SolverUsed::DenseFallback;
        }
    }
    res.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return res;
}

namespace {

std::vector<TrialResult> run_all(const ExperimentConfig& cfg, TrialResult (*one)(const ExperimentConfig&, std::uint64_t)) {
    cfg.validate();
    std::vector<TrialResult> out(cfg.reps);
    detail::parallel_for(cfg.reps, cfg.threads, [&](std::uint64_t t) { out[t] = one(cfg, t); });
    return out;
}

}  // namespace

std::vector<TrialResult> run_wigner_trials(const ExperimentConfig& cfg) {
    if (cfg.ensemble != EnsembleKind::Wigner) throw ConfigError("run_wigner_trials: config is not a Wigner ensemble");
    return run_all(cfg, &wigner_trial);
}

std::vector<TrialResult> run_cov_trials(const ExperimentConfig& cfg) {
    if (cfg.ensemble != EnsembleKind::Covariance)
        throw ConfigError("run_cov_trials: config is not a covariance ensemble");
    return run_all(cfg, &cov_trial);
}

std::vector<TrialResult> run_trials(const ExperimentConfig& cfg) {
    return cfg.ensemble == EnsembleKind::Wigner ? run_wigner_trials(cfg) : run_cov_trials(cfg);
}

void write_trials_csv(std::ostream& os, const std::vector<TrialResult>& trials, std::size_t k,
                      const std::string& comment) {
    if (!comment.empty()) os << "# " << comment << "\n";
    const bool has_bottom = !trials.empty() && !trials.front().bottom.empty();
    os << "trial,path,event_s";
    for (std::size_t i = 1; i <= k; ++i) os << ",top" << i;
    if (has_bottom)
        for (std::size_t i = 1; i <= k; ++i) os << ",bottom" << i;
    os << "\n";
    char buf[32];
    for (const auto& t : trials) {
        os << t.trial << "," << to_string(t.path) << "," << (t.event_s ? 1 : 0);
        for (double x : t.top) {
            std::snprintf(buf, sizeof buf, "%.17g", x);
            os << "," << buf;
        }
        if (has_bottom)
            for (double x : t.bottom) {
                std::snprintf(buf, sizeof buf, "%.17g", x);
                os << "," << buf;
            }
        os << "\n";
    }
}

AnalyticDistribution frechet(double theta, double alpha) {
    if (!(theta > 0.0) || !(alpha > 0.0)) throw ConfigError("frechet: theta and alpha must be positive");
    AnalyticDistribution d;
    char buf[64];
    std::snprintf(buf, sizeof buf, "frechet(theta=%.6g, alpha=%.6g)", theta, alpha);
    d.name = buf;
    d.cdf = [theta, alpha](double x) { return x <= 0.0 ? 0.0 : std::exp(-theta * std::pow(x, -alpha)); };
    d.quantile = [theta, alpha](double q) { return std::pow(-std::log(q) / theta, -1.0 / alpha); };
    return d;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ConfigError("KS: empty sample");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    return d;
}

double ks_one_sample(std::span<const double> a, const std::function<double(double)>& cdf) {
    if (a.empty()) throw ConfigError("KS: empty sample");
    std::vector<double> x(a.begin(), a.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double empirical_quantile(std::vector<double> xs, double prob) {
    if (xs.empty()) throw ConfigError("quantile of an empty sample");
    std::sort(xs.begin(), xs.end());
    const double h = (static_cast<double>(xs.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

namespace {

std::vector<double> qq_probs(std::size_t points) {
    std::vector<double> p;
    for (std::size_t i = 1; i <= points; ++i) p.push_back(static_cast<double>(i) / static_cast<double>(points + 1));
    return p;
}

}  // namespace

Comparison compare_distributions(std::span<const double> empirical, std::span<const double> reference,
                                 std::size_t qq_points) {
    Comparison c;
    c.ks = ks_two_sample(empirical, reference);
    c.n_empirical = empirical.size();
    c.n_reference = reference.size();
    c.ks_scale = std::sqrt(1.0 / static_cast<double>(c.n_empirical) + 1.0 / static_cast<double>(c.n_reference));
    const std::vector<double> e(empirical.begin(), empirical.end()), r(reference.begin(), reference.end());
    for (double p : qq_probs(qq_points)) c.qq.push_back({p, empirical_quantile(e, p), empirical_quantile(r, p)});
    return c;
}

Comparison compare_distributions(std::span<const double> empirical, const AnalyticDistribution& reference,
                                 std::size_t qq_points) {
    Comparison c;
    c.ks = ks_one_sample(empirical, reference.cdf);
    c.n_empirical = empirical.size();
    c.ks_scale = std::sqrt(1.0 / static_cast<double>(c.n_empirical));
    const std::vector<double> e(empirical.begin(), empirical.end());
    for (double p : qq_probs(qq_points))
        c.qq.push_back({p, empirical_quantile(e, p), reference.quantile ? reference.quantile(p) : NAN});
    return c;
}

void write_qq_table(std::ostream& os, const Comparison& c) {
    char head[160];
    std::snprintf(head, sizeof head, "# ks=%.6g ks_scale=%.6g n_empirical=%zu n_reference=%zu\n", c.ks, c.ks_scale,
                  c.n_empirical, c.n_reference);
    os << head << "prob,empirical,reference\n";
    char buf[96];
    for (const auto& row : c.qq) {
        std::snprintf(buf, sizeof buf, "%.6f,%.10g,%.10g\n", row.prob, row.empirical, row.reference);
        os << buf;
    }
}

std::vector<std::vector<double>> reference_topk(const ExperimentConfig& cfg, std::uint64_t draws,
                                                std::uint64_t seed) {
    const ClusterShapeSpec cluster = theoretical_cluster(cfg.model);
    LimitOptions opt;
    opt.intensity_scale = cfg.reference_intensity();
    std::vector<std::vector<double>> out(draws);
    detail::parallel_for(draws, cfg.threads, [&](std::uint64_t d) {
        RngStream rng(derive_seed(seed, "limit-reference", d));
        const auto s = sample_limit_spectrum(cluster, cfg.model.alpha(), cfg.k, rng, opt);
        out[d] = cfg.ensemble == EnsembleKind::Wigner ? s.wigner : s.cov;
    });
    return out;
}

std::vector<Comparison> compare_to_limit(const ExperimentConfig& cfg, const std::vector<TrialResult>& trials) {
    const auto ref = reference_topk(cfg, cfg.reference_multiplier * cfg.reps, derive_seed(cfg.seed, "reference", 0));
    std::vector<Comparison> out;
    for (std::size_t rank = 0; rank < cfg.k; ++rank) {
        std::vector<double> emp, rf;
        for (const auto& t : trials) emp.push_back(t.top[rank]);
        for (const auto& r : ref) rf.push_back(r[rank]);
        out.push_back(compare_distributions(emp, rf));
    }
    return out;
}

std::vector<SweepRow> convergence_sweep(const ExperimentConfig& cfg, std::span<const std::uint64_t> n_list) {
    if (cfg.reps < 1) throw ConfigError("convergence sweep: reps must be >= 1");
    if (n_list.empty()) throw ConfigError("convergence sweep: empty n list");
    std::vector<SweepRow> rows;
    for (std::uint64_t n : n_list) {
        ExperimentConfig c = cfg;
        c.n = n;
        if (c.ensemble == EnsembleKind::Covariance) c.p = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(
                                                               std::llround(static_cast<double>(cfg.p) / cfg.n * n)));
        c.k = 1;
        const auto trials = run_trials(c);
        std::vector<double> top1;
        for (const auto& t : trials) top1.push_back(t.top[0]);
        SweepRow row;
        row.n = n;
        row.reps = c.reps;
        if (c.model.family() == FieldFamily::Iid) {
            const double theta = c.reference_intensity();
            const double idx = c.ensemble == EnsembleKind::Wigner ? c.model.alpha() : c.model.alpha() / 2.0;
            const auto law = frechet(theta, idx);
            const auto cmp = compare_distributions(top1, law);
            row.ks = cmp.ks;
            row.ks_scale = cmp.ks_scale;
            row.reference = law.name;
        } else {
            const auto ref = reference_topk(c, c.reference_multiplier * c.reps, derive_seed(c.seed, "reference", n));
            std::vector<double> rf;
            for (const auto& r : ref) rf.push_back(r[0]);
            const auto cmp = compare_distributions(top1, rf);
            row.ks = cmp.ks;
            row.ks_scale = cmp.ks_scale;
            row.reference = "limit-draws";
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace htrm
