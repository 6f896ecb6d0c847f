#include "htrm/limit_process.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <queue>

#include "block_sampler.hpp"
#include "htrm/errors.hpp"
#include "htrm/spectra.hpp"

namespace htrm {

std::vector<double> ClusterShapeSpec::sample_singular_values(RngStream& rng) const {
    return nonzero_singular_values(q_sampler(rng));
}

std::vector<double> sample_ppp_points(double theta, double alpha, std::size_t count, RngStream& rng) {
    if (!(theta > 0.0) || !(alpha > 0.0)) throw ConfigError("sample_ppp_points: need theta > 0, alpha > 0");
    std::vector<double> out(count);
    double gamma = 0.0;
    for (auto& p : out) {
        gamma += rng.exponential();
        p = std::pow(gamma / theta, -1.0 / alpha);
    }
    return out;
}

LimitSample sample_limit_spectrum(const ClusterShapeSpec& cluster, double alpha, std::size_t k, RngStream& rng,
                                  const LimitOptions& opt) {
    if (k < 1) throw ConfigError("limit spectrum: K must be >= 1");
    if (!(alpha > 0.0)) throw ConfigError("limit spectrum: alpha must be positive");
    const double theta = cluster.theta * opt.intensity_scale;
    if (!(theta > 0.0)) throw ConfigError("limit spectrum: theta * intensity_scale must be positive");

    LimitSample s;
    s.k = k;
    std::priority_queue<double, std::vector<double>, std::greater<>> top;  // min-heap of the K largest
    double gamma = 0.0;
    for (std::size_t i = 0; i < opt.max_points; ++i) {
        gamma += rng.exponential();
        const double p = std::pow(gamma / theta, -1.0 / alpha);
        if (top.size() == k && p * cluster.sv_bound < top.top()) {
            s.certified = true;
            break;
        }
        auto sv = cluster.sample_singular_values(rng);
        for (double sigma : sv) {
            const double w = p * sigma;
            if (top.size() < k) top.push(w);
            else if (w > top.top()) {
                top.pop();
                top.push(w);
            }
        }
        s.points.push_back(p);
        s.sigmas.push_back(std::move(sv));
    }
    while (!top.empty()) {
        s.wigner.push_back(top.top());
        top.pop();
    }
    std::reverse(s.wigner.begin(), s.wigner.end());
    if (s.wigner.size() < k) {
        s.padded = true;
        s.wigner.resize(k, 0.0);
    }
    s.cov.reserve(k);
    for (double w : s.wigner) s.cov.push_back(w * w);
    return s;
}

std::vector<double> sample_limit_spectrum_wigner(const ClusterShapeSpec& cluster, double alpha, std::size_t k,
                                                 RngStream& rng, const LimitOptions& opt) {
    return sample_limit_spectrum(cluster, alpha, k, rng, opt).wigner;
}

std::vector<double> sample_limit_spectrum_cov(const ClusterShapeSpec& cluster, double alpha, std::size_t k,
                                              RngStream& rng, const LimitOptions& opt) {
    return sample_limit_spectrum(cluster, alpha, k, rng, opt).cov;
}

void write_limit_csv_header(std::ostream& os) { os << "trial,i,j,P_i,sigma_ij,wigner_point,cov_point\n"; }

void write_limit_csv_rows(std::ostream& os, std::size_t trial, const LimitSample& s) {
    char buf[160];
    for (std::size_t i = 0; i < s.points.size(); ++i)
        for (std::size_t j = 0; j < s.sigmas[i].size(); ++j) {
            const double p = s.points[i], sig = s.sigmas[i][j];
            std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.17g,%.17g,%.17g,%.17g\n", trial, i + 1, j + 1, p, sig,
                          p * sig, p * p * sig * sig);
            os << buf;
        }
}

EmpiricalCluster empirical_cluster_sampler(const FieldModel& model, Eigen::Index r, double u, double a,
                                           std::size_t samples, std::uint64_t max_rejects, RngStream& rng) {
    const Eigen::Index m = model.m();
    const Eigen::Index w = 2 * m + 1;
    if (r < w) throw ConfigError("empirical cluster sampler: block side r must be at least 2m+1");
    if (!(u >= 1.0)) throw ConfigError("empirical cluster sampler: u must be >= 1");
    if (!(a > 0.0)) throw ConfigError("empirical cluster sampler: scale a must be positive");
    if (samples < 1) throw ConfigError("empirical cluster sampler: need at least one sample");

    EmpiricalCluster out;
    const double threshold = a * u;
    // The block comes with a border of width m, so the window around the block maximum is
    // never cut by the block edge.
    const auto run = detail::run_block_exceedances(
        model, r, threshold, max_rejects + samples, rng,
        [&](const Eigen::MatrixXd& wide) {
            Eigen::Index bi = 0, bj = 0;
            const double sup = wide.block(m, m, r, r).cwiseAbs().maxCoeff(&bi, &bj);
            Eigen::MatrixXd win = wide.block(bi, bj, w, w) / sup;
            out.svs.push_back(nonzero_singular_values(win));
            out.windows.push_back(std::move(win));
            return out.windows.size() < samples;
        },
        m);
    out.blocks = run.blocks;
    out.accepted = run.accepted;
    out.acceptance_rate = run.blocks ? static_cast<double>(run.accepted) / static_cast<double>(run.blocks) : 0.0;
    if (out.windows.size() < samples) {
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "empirical cluster sampler: %zu of %zu blocks accepted after %llu rejects "
                      "(acceptance rate %.3g); lower u or raise max_rejects",
                      out.windows.size(), samples, static_cast<unsigned long long>(run.blocks - run.accepted),
                      out.acceptance_rate);
        throw NumericError(buf);
    }

    if (model.noise().family() != TailFamily::CustomInverseCdf) {
        const double n_equiv = model.normalization().index_for(a);
        const double scale = std::pow(u, model.alpha()) * n_equiv / static_cast<double>(r * r);
        const double pr = out.acceptance_rate;
        out.theta_hat = scale * pr;
        out.theta_stderr = scale * std::sqrt(pr * (1.0 - pr) / static_cast<double>(out.blocks));
    } else {
        out.theta_hat = std::numeric_limits<double>::quiet_NaN();
        out.theta_stderr = std::numeric_limits<double>::quiet_NaN();
    }

    auto pool = std::make_shared<std::vector<Eigen::MatrixXd>>(out.windows);
    out.spec.source = "empirical";
    out.spec.theta = out.theta_hat;
    out.spec.window = w;
    out.spec.sv_bound = 0.0;
    for (const auto& sv : out.svs)
        if (!sv.empty()) out.spec.sv_bound = std::max(out.spec.sv_bound, sv.front());
    out.spec.q_sampler = [pool](RngStream& g) {
        const auto idx = static_cast<std::size_t>(g.uniform() * static_cast<double>(pool->size()));
        return (*pool)[std::min(idx, pool->size() - 1)];
    };
    return out;
}

}  // namespace htrm
