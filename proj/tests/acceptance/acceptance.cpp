// Acceptance run: one [PASS]/[FAIL] line per criterion, with supporting [info] lines.
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "htrm/estimators.hpp"
#include "htrm/experiments.hpp"
#include "htrm/field_models.hpp"
#include "htrm/limit_process.hpp"
#include "htrm/spectra.hpp"

using namespace htrm;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void verdict(int id, bool ok, const std::string& what, Clock::time_point start) {
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    std::printf("[%s] C%d %s (%.1fs)\n", ok ? "PASS" : "FAIL", id, what.c_str(), secs);
    std::fflush(stdout);
    if (!ok) ++failures;
}

void info(const std::string& s) {
    std::printf("       [info] %s\n", s.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

Eigen::MatrixXd example_filter() {
    Eigen::MatrixXd h(2, 2);
    h << 1, 1, -2, 2;
    return h;
}

// ---------------------------------------------------------------------------------------------

void criterion1() {
    const auto start = Clock::now();
    bool ok = true;
    const Eigen::MatrixXd h = example_filter();
    const Eigen::VectorXd sv = singular_values(h * h.transpose());
    ok = ok && sv.size() == 2 && std::abs(sv(0) - 8.0) <= 1e-9 && std::abs(sv(1) - 2.0) <= 1e-9;
    info("singular values of HH' = " + fmt("%.15g", sv(0)) + ", " + fmt("%.15g", sv(1)));

    // Formulas evaluated term by term here, against the library's closed forms.
    auto close = [](double a, double b) { return std::abs(a - b) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(b); };
    int checked = 0, bad = 0;
    for (double alpha : {0.5, 1.0, 1.5, 2.5, 3.5}) {
        const TailModel sym = alpha > 2.0 ? TailModel::centered_pareto(alpha) : TailModel::exact_pareto(alpha);
        const TailModel pos = TailModel::exact_pareto(alpha, 1.0);
        if (theoretical_cluster(FieldModel::iid(sym)).theta != 1.0) ++bad;
        const double s = 1.0 + 1.0 + std::pow(2.0, alpha) + std::pow(2.0, alpha);
        if (!close(theoretical_cluster(FieldModel::linear_ma(h, sym)).theta, std::pow(2.0, alpha) / s)) ++bad;
        if (alpha < 2.0) {
            Eigen::MatrixXd hp(2, 2);
            hp << 1.0, 0.5, 0.25, 1.0;
            const double sp = 1.0 + std::pow(0.5, alpha) + std::pow(0.25, alpha) + 1.0;
            if (!close(theoretical_cluster(FieldModel::max_linear(hp, pos)).theta, 1.0 / sp)) ++bad;
            ++checked;
        }
        for (double q : {0.1, 0.5, 0.9}) {
            const double want = std::pow(4.0, alpha) / (std::pow(4.0, alpha) + q + std::pow(3.0, alpha));
            if (!close(theoretical_cluster(FieldModel::random_coeff_bernoulli(q, sym)).theta, want)) ++bad;
            ++checked;
        }
        checked += 2;
    }
    info(std::to_string(checked) + " closed-form theta values checked, " + std::to_string(bad) + " mismatches");
    verdict(1, ok && bad == 0, "exact constants: HH' spectrum {8, 2}, closed-form theta", start);
}

// ---------------------------------------------------------------------------------------------

struct SparseRun {
    std::vector<std::vector<double>> plus, minus;  // per S-trial point sets
    std::vector<double> localization;
};

// Criterion 2 also feeds criteria 8 (sign symmetry) and 10 (localization).
SparseRun criterion2_and_10() {
    const auto start = Clock::now();
    const auto model = FieldModel::iid(TailModel::exact_pareto(1.0));
    const Eigen::Index n = 400;
    const double eps = 0.5;
    const auto trunc = fixed_truncation(eps);
    const Eigen::Index r = trunc.block_side(n);
    const auto seq = model.normalization();

    SparseRun out;
    int s_count = 0, mismatched = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const SymMatrix a = build_wigner(generate_field(model, n, n, derive_seed(2024, "c2", seed)), seq);
        const auto parts = truncate(a.a, eps);
        const auto blocks = block_decompose(parts.above, r);
        const auto spec = sparse_truncated_spectrum(parts.above, blocks);
        if (!spec.event_s) continue;
        ++s_count;

        std::vector<double> dense;
        const Eigen::VectorXd ev = sym_eig(parts.above.to_dense()).values;
        for (Eigen::Index i = 0; i < ev.size(); ++i)
            if (std::abs(ev(i)) > 1e-9) dense.push_back(ev(i));
        std::vector<double> sparse = spec.values();
        std::sort(dense.begin(), dense.end(), std::greater<>());
        std::sort(sparse.begin(), sparse.end(), std::greater<>());
        if (dense.size() != sparse.size()) {
            ++mismatched;
        } else {
            for (std::size_t i = 0; i < dense.size(); ++i) worst = std::max(worst, std::abs(dense[i] - sparse[i]));
            if (worst > 1e-9) ++mismatched;
        }

        const auto sets = spectrum_point_sets(spec.values());
        out.plus.push_back(sets.plus);
        out.minus.push_back(sets.minus);

        const auto full = sym_eig(a.a, true);
        out.localization.push_back(localization_score(full.vectors.col(0), blocks));
    }
    const double rate = s_count / 50.0;
    info("n=400 alpha=1 eps=0.5 r=" + std::to_string(r) + ": event S on " + std::to_string(s_count) +
         "/50 seeds (rate " + fmt("%.2f", rate) + "), max |sparse - dense| = " + fmt("%.3g", worst));
    verdict(2, s_count > 0 && mismatched == 0 && rate >= 0.8,
            "sparse shortcut equals dense spectrum on event S to 1e-9, S rate >= 0.8", start);

    const auto start10 = Clock::now();
    const double lo = out.localization.empty() ? 0.0 : *std::min_element(out.localization.begin(), out.localization.end());
    const auto good = std::count_if(out.localization.begin(), out.localization.end(), [](double x) { return x >= 0.99; });
    info("top eigenvector of the full matrix: min score " + fmt("%.5f", lo) + ", " + std::to_string(good) + "/" +
         std::to_string(out.localization.size()) + " trials >= 0.99");
    verdict(10, !out.localization.empty() && lo >= 0.99, "localization score >= 0.99 on every event-S trial", start10);
    return out;
}

// ---------------------------------------------------------------------------------------------

void criterion3() {
    const auto start = Clock::now();
    RngStream rng(derive_seed(2024, "c3", 0));
    const auto tail = TailModel::exact_pareto(1.0);
    int violations = 0;
    double worst_slack = std::numeric_limits<double>::infinity(), worst_power = 0.0;
    int converged = 0;
    for (int pair = 0; pair < 100; ++pair) {
        Eigen::MatrixXd m(50, 50), e(50, 50);
        const double scale = std::pow(10.0, -3.0 + 3.0 * rng.uniform());
        for (Eigen::Index i = 0; i < 50; ++i)
            for (Eigen::Index j = i; j < 50; ++j) {
                m(i, j) = m(j, i) = sample_entry(tail, rng) / 2500.0;
                e(i, j) = e(j, i) = scale * (2.0 * rng.uniform() - 1.0);
            }
        const auto w = weyl_gap(m, e);
        const double norm_e = sym_eig(e).values.cwiseAbs().maxCoeff();
        if (!(w.gap <= norm_e + 1e-12)) ++violations;
        worst_slack = std::min(worst_slack, (norm_e - w.gap) / norm_e);
        if (w.norm_e.converged) {
            ++converged;
            worst_power = std::max(worst_power, std::abs(w.norm_e.value - norm_e) / norm_e);
        }
    }
    info("smallest relative slack (|E| - gap)/|E| = " + fmt("%.3g", worst_slack) +
         "; power iteration converged on " + std::to_string(converged) +
         "/100 with relative error <= " + fmt("%.2g", worst_power));
    verdict(3, violations == 0, "Weyl: gap <= |E| + 1e-12 on 100 pairs (" + std::to_string(violations) + " violations)",
            start);
}

// ---------------------------------------------------------------------------------------------

std::vector<TrialResult> criterion4() {
    const auto start = Clock::now();
    ExperimentConfig cfg(FieldModel::iid(TailModel::exact_pareto(1.0)));
    cfg.n = 1000;
    cfg.reps = 400;
    cfg.k = 1;
    cfg.truncation = fixed_truncation(0.5);
    cfg.seed = derive_seed(2024, "c4", 0);

    // The sparse path sees only entries above eps, so its lambda_1 is 0 whenever none exceeds
    // 0.5; the verdict uses the dense lambda_1 of the same matrices.
    cfg.solver = SolverPath::Sparse;
    const auto sparse_trials = run_trials(cfg);
    cfg.solver = SolverPath::Dense;
    const auto dense_trials = run_trials(cfg);

    std::vector<double> top, top_sparse;
    int sparse = 0, zero = 0;
    for (const auto& t : sparse_trials) {
        top_sparse.push_back(t.top[0]);
        sparse += t.path == SolverUsed::Sparse;
        zero += t.top[0] == 0.0;
    }
    for (const auto& t : dense_trials) top.push_back(t.top[0]);
    const double ks = compare_distributions(top, frechet(1.0, 1.0)).ks;
    const double ks_half = compare_distributions(top, frechet(0.5, 1.0)).ks;
    info("n=1000, 400 trials; sparse path (eps=0.5): " + std::to_string(sparse) + " on event S, " +
         std::to_string(zero) + " with no entry above eps, KS vs exp(-1/x) = " +
         fmt("%.4f", compare_distributions(top_sparse, frechet(1.0, 1.0)).ks));
    info("dense lambda_1: KS against exp(-1/(2x)), the intensity of the n^2/2 independent entries = " +
         fmt("%.4f", ks_half));
    verdict(4, ks <= 0.08, "iid Wigner edge: KS of lambda_1 vs exp(-1/x) = " + fmt("%.4f", ks) + " (<= 0.08)", start);
    return sparse_trials;
}

// ---------------------------------------------------------------------------------------------

void criterion5() {
    const auto start = Clock::now();
    const auto model = FieldModel::linear_ma(example_filter(), TailModel::exact_pareto(1.0));
    const std::uint64_t n = 2000;
    const Eigen::Index r = default_theta_block_side(n);
    // Reps fixed in advance for about 5000 exceedances at theta = 1/3: 10 batches of 1500.
    const int batches = 10;
    const std::uint64_t reps = 1500;
    std::vector<double> est;
    double var_sum = 0.0;
    std::uint64_t accepted = 0;
    for (int b = 0; b < batches; ++b) {
        const auto e = estimate_extremal_index(model, n, r, 1.0, reps, derive_seed(2024, "c5", b));
        est.push_back(e.theta_hat);
        var_sum += e.std_error * e.std_error;
        accepted += e.accepted;
    }
    double mean = 0.0;
    for (double x : est) mean += x;
    mean /= batches;
    double ss = 0.0;
    for (double x : est) ss += (x - mean) * (x - mean);
    const double se_reported = std::sqrt(var_sum) / batches;
    const double se_batches = std::sqrt(ss / (batches - 1) / batches);
    const double ratio = se_batches / se_reported;
    const double finite_r = (r + 1.0) * (2.0 * r + 1.0) / (6.0 * r * r);
    info("r=" + std::to_string(r) + ", " + std::to_string(accepted) + " exceedances; stderr reported " +
         fmt("%.4f", se_reported) + ", from batch spread " + fmt("%.4f", se_batches));
    info("single-jump value at this r, (r+1)(2r+1)/(6r^2) = " + fmt("%.4f", finite_r) + ", z = " +
         fmt("%.2f", (mean - finite_r) / se_reported));
    const bool ok = std::abs(mean - 1.0 / 3.0) <= 0.05 && ratio >= 0.5 && ratio <= 2.0;
    verdict(5, ok, "extremal index: theta_hat = " + fmt("%.4f", mean) + " vs 1/3 +- 0.05, stderr ratio " + fmt("%.2f", ratio),
            start);
}

// ---------------------------------------------------------------------------------------------

void criterion6() {
    const auto start = Clock::now();
    ExperimentConfig cfg(FieldModel::linear_ma(example_filter(), TailModel::exact_pareto(1.0)));
    cfg.ensemble = EnsembleKind::Covariance;
    cfg.n = 800;
    cfg.p = 800;
    cfg.reps = 300;
    cfg.k = 2;
    cfg.solver = SolverPath::Dense;
    cfg.seed = derive_seed(2024, "c6", 0);
    const auto trials = run_trials(cfg);

    // (2 P_1^2, max(P_1^2 / 2, 2 P_2^2)) with P from the Poisson process of intensity 1/3.
    const double theta = theoretical_cluster(cfg.model).theta;
    RngStream rng(derive_seed(2024, "c6-reference", 0));
    std::vector<double> r1, r2;
    for (int d = 0; d < 3000; ++d) {
        const auto p = sample_ppp_points(theta, 1.0, 2, rng);
        r1.push_back(2.0 * p[0] * p[0]);
        r2.push_back(std::max(p[0] * p[0] / 2.0, 2.0 * p[1] * p[1]));
    }
    std::vector<double> e1, e2;
    for (const auto& t : trials) {
        e1.push_back(t.top[0]);
        e2.push_back(t.top[1]);
    }
    const double ks1 = ks_two_sample(e1, r1), ks2 = ks_two_sample(e2, r2);
    info("n=p=800, 300 trials, 3000 reference draws, theta=" + fmt("%.4f", theta));
    verdict(6, ks1 <= 0.10 && ks2 <= 0.10,
            "covariance joint law: KS lambda_1 = " + fmt("%.4f", ks1) + ", lambda_2 = " + fmt("%.4f", ks2) + " (<= 0.10)",
            start);
}

// ---------------------------------------------------------------------------------------------

void criterion7() {
    const auto start = Clock::now();
    const WignerEnsembleSpec spec{FieldModel::iid(TailModel::exact_pareto(1.0)), 2000};
    const std::vector<double> eps{0.05, 0.5};
    const auto rows = truncated_norm_profile(spec, eps, 50, derive_seed(2024, "c7", 0));
    info("median |A^{<0.05}| = " + fmt("%.4f", rows[0].median_norm) + " (" + std::to_string(rows[0].unconverged) +
         " unconverged), median |A^{<0.5}| = " + fmt("%.4f", rows[1].median_norm) + " (" +
         std::to_string(rows[1].unconverged) + " unconverged)");
    // Frobenius bounds the norm from above and power iteration from below, so this ordering
    // certifies the inequality of the true medians.
    const bool certified = rows[0].median_frobenius < rows[1].median_norm;
    info("Frobenius envelopes: " + fmt("%.4f", rows[0].median_frobenius) + " and " + fmt("%.4f", rows[1].median_frobenius) +
         (certified ? "; envelope below 0.05 < estimate below 0.5, so the ordering holds for the true norms"
                    : "; ordering not certified by the envelope"));
    verdict(7, rows[0].median_norm < rows[1].median_norm, "truncation decay: median norm below 0.05 < below 0.5", start);
}

// ---------------------------------------------------------------------------------------------

double bounded(double x, double c) { return std::copysign(std::min(std::abs(x) / c, 1.0), x); }

double lag_correlation(const Eigen::MatrixXd& f, Eigen::Index di, Eigen::Index dj, double c) {
    const Eigen::Index rows = f.rows() - di, cols = f.cols() - dj;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            const double x = bounded(f(i, j), c), y = bounded(f(i + di, j + dj), c);
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
        }
    const double n = static_cast<double>(rows * cols);
    const double cov = sxy / n - (sx / n) * (sy / n);
    return cov / std::sqrt((sxx / n - (sx / n) * (sx / n)) * (syy / n - (sy / n) * (sy / n)));
}

std::vector<FieldModel> five_models() {
    Eigen::MatrixXd hpos(2, 2);
    hpos << 1.0, 0.5, 0.25, 1.0;
    return {FieldModel::iid(TailModel::exact_pareto(1.0)),
            FieldModel::linear_ma(example_filter(), TailModel::exact_pareto(1.0)),
            FieldModel::max_linear(hpos, TailModel::exact_pareto(1.0, 1.0)),
            FieldModel::random_coeff_bernoulli(0.5, TailModel::exact_pareto(1.0)),
            FieldModel::rademacher_sum(1, TailModel::exact_pareto(1.0))};
}

void criterion8(const SparseRun& c2, const std::vector<TrialResult>& c4) {
    const auto start = Clock::now();
    // (a) Correlation of the bounded transform sign(X) min(|X|/median|X|, 1) at sup-distance m+1.
    // About 10^6 pairs per lag, so the null standard error is about 0.001.
    int corr_fail = 0;
    double worst = 0.0;
    for (const auto& model : five_models()) {
        const Eigen::Index d = model.m() + 1;
        const auto f = generate_field(model, 1000 + d, 1000 + d, derive_seed(2024, "c8", model.m())).values;
        std::vector<double> mags(f.data(), f.data() + f.size());
        for (auto& x : mags) x = std::abs(x);
        std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2), mags.end());
        const double c = mags[mags.size() / 2];
        for (auto [di, dj] : {std::pair<Eigen::Index, Eigen::Index>{d, 0}, {0, d}, {d, d}}) {
            const double rho = std::abs(lag_correlation(f, di, dj, c));
            worst = std::max(worst, rho);
            if (!(rho <= 0.01)) ++corr_fail;
        }
    }
    info("lag m+1 correlation: max |rho| over 5 models x 3 directions = " + fmt("%.4f", worst) + " (<= 0.01)");

    // (b) N^- = -N^+ exactly on sparse-path trials.
    int sym_fail = 0, sym_checked = 0;
    for (std::size_t t = 0; t < c2.plus.size(); ++t) {
        ++sym_checked;
        const auto& p = c2.plus[t];
        const auto& m = c2.minus[t];
        bool same = p.size() == m.size();
        for (std::size_t i = 0; same && i < p.size(); ++i) same = (m[i] == -p[i]);
        sym_fail += !same;
    }
    for (const auto& t : c4) {
        if (t.path != SolverUsed::Sparse) continue;
        ++sym_checked;
        bool same = t.top.size() == t.bottom.size();
        for (std::size_t i = 0; same && i < t.top.size(); ++i) same = (t.bottom[i] == -t.top[i]);
        sym_fail += !same;
    }
    info("sign symmetry checked on " + std::to_string(sym_checked) + " sparse-path spectra, " + std::to_string(sym_fail) +
         " asymmetric");

    // (c) 1 vs 8 threads, byte-identical trial files, both ensembles and both solver paths.
    int det_fail = 0, det_checked = 0;
    for (const auto& model : five_models()) {
        for (auto kind : {EnsembleKind::Wigner, EnsembleKind::Covariance}) {
            for (auto solver : {SolverPath::Dense, SolverPath::Sparse}) {
                ExperimentConfig cfg(model);
                cfg.ensemble = kind;
                cfg.n = 120;
                cfg.p = 90;
                cfg.reps = 16;
                cfg.solver = solver;
                cfg.seed = derive_seed(2024, "c8-threads", det_checked);
                std::ostringstream a, b;
                cfg.threads = 1;
                write_trials_csv(a, run_trials(cfg), cfg.k);
                cfg.threads = 8;
                write_trials_csv(b, run_trials(cfg), cfg.k);
                det_fail += a.str() != b.str();
                ++det_checked;
            }
        }
    }
    info("thread determinism: " + std::to_string(det_checked - det_fail) + "/" + std::to_string(det_checked) +
         " configurations identical");
    verdict(8, corr_fail == 0 && sym_fail == 0 && sym_checked > 0 && det_fail == 0,
            "m-dependence, sign symmetry and thread determinism", start);
}

// ---------------------------------------------------------------------------------------------

void criterion9() {
    const auto start = Clock::now();
    const auto ma = FieldModel::linear_ma(example_filter(), TailModel::exact_pareto(1.0));
    RngStream rng(derive_seed(2024, "c9", 0));
    const auto emp = empirical_cluster_sampler(ma, 32, 4.0, ma.normalization()(1000ull * 1000ull), 2000, 100000000, rng);
    double s1 = 0.0, s2 = 0.0;
    for (const auto& sv : emp.svs) {
        s1 += sv.size() > 0 ? sv[0] : 0.0;
        s2 += sv.size() > 1 ? sv[1] : 0.0;
    }
    s1 /= static_cast<double>(emp.svs.size());
    s2 /= static_cast<double>(emp.svs.size());
    const bool ok_ma = std::abs(s1 - std::sqrt(8.0) / 2.0) <= 0.05 && std::abs(s2 - std::sqrt(2.0) / 2.0) <= 0.05;
    info("filter: mean (sigma_1, sigma_2) = (" + fmt("%.4f", s1) + ", " + fmt("%.4f", s2) + ") over " +
         std::to_string(emp.svs.size()) + " clusters, target (1.4142, 0.7071)");

    const auto iid = FieldModel::iid(TailModel::exact_pareto(1.0));
    RngStream rng2(derive_seed(2024, "c9", 1));
    const auto e2 = empirical_cluster_sampler(iid, 32, 4.0, iid.normalization()(1000ull * 1000ull), 2000, 100000000, rng2);
    double t1 = 0.0;
    for (const auto& sv : e2.svs) t1 += sv.front();
    t1 /= static_cast<double>(e2.svs.size());
    info("iid: mean sigma_1 = " + fmt("%.5f", t1));
    verdict(9, ok_ma && t1 >= 0.99, "cluster shape singular values", start);
}

}  // namespace

int main() {
    try {
        criterion1();
        const SparseRun c2 = criterion2_and_10();
        criterion3();
        const auto c4 = criterion4();
        criterion5();
        criterion6();
        criterion7();
        criterion8(c2, c4);
        criterion9();
    } catch (const std::exception& e) {
        std::printf("[FAIL] aborted: %s\n", e.what());
        return 2;
    }
    std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
