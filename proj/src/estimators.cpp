#include "htrm/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "block_sampler.hpp"
#include "htrm/errors.hpp"
#include "htrm/spectra.hpp"
#include "parallel.hpp"

namespace htrm {

double median(std::vector<double> xs) {
    if (xs.empty()) throw ConfigError("median of an empty list");
    const std::size_t mid = xs.size() / 2;
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
    if (xs.size() % 2) return xs[mid];
    const double hi = xs[mid];
    const double lo = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

Eigen::Index default_theta_block_side(std::uint64_t n) {
    if (n == 0) throw ConfigError("order n must be >= 1");
    return std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil(std::pow(static_cast<double>(n), 0.3) - 1e-12)));
}

ThetaEstimate estimate_extremal_index(const FieldModel& model, std::uint64_t n, Eigen::Index r, double u,
                                      std::uint64_t reps, std::uint64_t seed) {
    if (r < 1 || static_cast<std::uint64_t>(r) > n) throw ConfigError("extremal index: need 1 <= r <= n");
    if (!(u >= 1.0)) throw ConfigError("extremal index: u must be >= 1");
    if (reps < 1) throw ConfigError("extremal index: reps must be >= 1");

    ThetaEstimate est;
    est.r = r;
    est.k = static_cast<Eigen::Index>(n / static_cast<std::uint64_t>(r));
    est.u = u;
    est.threshold = model.normalization()(n * n) * u;
    const auto k2 = static_cast<std::uint64_t>(est.k) * static_cast<std::uint64_t>(est.k);
    RngStream rng(derive_seed(seed, "extremal-index", 0));
    const auto run = detail::run_block_exceedances(model, r, est.threshold, reps * k2, rng,
                                                   [](const Eigen::MatrixXd&) { return true; });
    est.accepted = run.accepted;
    est.blocks = run.blocks;
    if (est.accepted == 0)
        throw NumericError("extremal index: no block exceeded a_{n^2} u; use a smaller u, larger n or more reps");
    const double p = static_cast<double>(est.accepted) / static_cast<double>(est.blocks);
    const double scale = std::pow(u, model.alpha()) * static_cast<double>(k2);
    est.theta_hat = scale * p;
    est.std_error = scale * std::sqrt(p * (1.0 - p) / static_cast<double>(est.blocks));
    return est;
}

BlockEventProbs block_event_probs(const WignerEnsembleSpec& spec, const TruncationParams& trunc, Eigen::Index r,
                                  std::uint64_t reps, std::uint64_t seed, unsigned threads) {
    if (reps < 1) throw ConfigError("block events: reps must be >= 1");
    BlockEventProbs out;
    out.reps = reps;
    out.order = trimmed_order(spec.n, static_cast<std::uint64_t>(r));
    const auto n = static_cast<Eigen::Index>(out.order);
    const double b = spec.model.normalization()(out.order * out.order);
    out.threshold = trunc.sparse_threshold(out.order, b);

    struct Flags {
        bool multi = false, diag = false, three = false;
    };
    std::vector<Flags> flags(reps);
    detail::parallel_for(reps, threads, [&](std::uint64_t rep) {
        const auto above = field_exceedances(spec.model, n, n, derive_seed(seed, "block-events", rep),
                                             out.threshold * b, true);
        std::map<Eigen::Index, std::set<Eigen::Index>> rows;
        for (const auto& e : above.entries) {
            const Eigen::Index k = e.i / r, l = e.j / r;
            rows[k].insert(l);
            rows[l].insert(k);
        }
        Flags f;
        for (const auto& [k, ls] : rows) {
            if (ls.size() > 1) f.multi = true;
            if (ls.count(k)) f.diag = true;
            for (Eigen::Index l : ls)
                if (ls.count(l + 1) && ls.count(l + 2)) f.three = true;
        }
        flags[rep] = f;
    });
    for (const auto& f : flags) {
        out.p_multi_row += f.multi;
        out.p_diag_nonzero += f.diag;
        out.p_three_consecutive += f.three;
    }
    const auto d = static_cast<double>(reps);
    out.p_multi_row /= d;
    out.p_diag_nonzero /= d;
    out.p_three_consecutive /= d;
    return out;
}

std::vector<NormProfileRow> truncated_norm_profile(const WignerEnsembleSpec& spec, std::span<const double> eps_list,
                                                   std::uint64_t reps, std::uint64_t seed,
                                                   const NormProfileOptions& opt) {
    if (reps < 1) throw ConfigError("norm profile: reps must be >= 1");
    for (double e : eps_list)
        if (!(e >= 0.0)) throw ConfigError("norm profile: eps must be >= 0");
    const auto n = static_cast<Eigen::Index>(spec.n);
    const auto seq = spec.model.normalization();
    const std::size_t ne = eps_list.size();
    std::vector<NormEstimate> est(reps * ne);
    detail::parallel_for(reps, opt.threads, [&](std::uint64_t rep) {
        const auto field = generate_field(spec.model, n, n, derive_seed(seed, "norm-profile", rep));
        const SymMatrix a = build_wigner(field, seq);
        for (std::size_t e = 0; e < ne; ++e) {
            const double eps = eps_list[e];
            const Eigen::MatrixXd below = (a.a.array().abs() > eps).select(0.0, a.a);
            est[rep * ne + e] = spectral_norm(below, opt.tol, opt.max_iter);
        }
    });
    std::vector<NormProfileRow> rows(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        std::vector<double> vals, frob;
        for (std::uint64_t rep = 0; rep < reps; ++rep) {
            const auto& x = est[rep * ne + e];
            vals.push_back(x.value);
            frob.push_back(x.frobenius);
            if (!x.converged) ++rows[e].unconverged;
        }
        rows[e].eps = eps_list[e];
        rows[e].median_norm = median(vals);
        rows[e].median_frobenius = median(frob);
    }
    return rows;
}

}  // namespace htrm
