#include "htrm/field_models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "field_kernel.hpp"
#include "htrm/errors.hpp"
#include "htrm/spectra.hpp"

namespace htrm {

std::string to_string(FieldFamily f) {
    switch (f) {
        case FieldFamily::Iid: return "iid";
        case FieldFamily::LinearMA: return "linear-ma";
        case FieldFamily::MaxLinear: return "max-linear";
        case FieldFamily::RandomCoeffBernoulli: return "random-coeff-bernoulli";
        case FieldFamily::RademacherSum: return "rademacher-sum";
    }
    return "?";
}

FieldFamily field_family_from_string(const std::string& s) {
    for (auto f : {FieldFamily::Iid, FieldFamily::LinearMA, FieldFamily::MaxLinear,
                   FieldFamily::RandomCoeffBernoulli, FieldFamily::RademacherSum})
        if (to_string(f) == s) return f;
    throw ConfigError("unknown field family '" + s + "'");
}

namespace {

void require_centered_if_needed(const TailModel& noise, const char* what) {
    if (noise.alpha() >= 2.0 && !noise.has_zero_mean())
        throw ConfigError(std::string(what) + ": alpha >= 2 requires mean-zero noise "
                                              "(shifted-pareto-centered or symmetric exact-pareto)");
}

void check_filter(const Eigen::MatrixXd& h) {
    if (h.size() == 0) throw ConfigError("filter must be non-empty");
    if (!h.allFinite()) throw ConfigError("filter coefficients must be finite");
    if ((h.array() == 0.0).all()) throw ConfigError("filter has all-zero coefficients");
}

std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

FieldModel FieldModel::iid(TailModel noise) {
    require_centered_if_needed(noise, "iid");
    return FieldModel(FieldFamily::Iid, std::move(noise));
}

FieldModel FieldModel::linear_ma(Eigen::MatrixXd filter, TailModel noise) {
    check_filter(filter);
    require_centered_if_needed(noise, "linear-ma");
    FieldModel f(FieldFamily::LinearMA, std::move(noise));
    f.m_ = static_cast<int>(std::max(filter.rows(), filter.cols()) - 1);
    f.filter_ = std::move(filter);
    return f;
}

FieldModel FieldModel::max_linear(Eigen::MatrixXd filter, TailModel noise) {
    check_filter(filter);
    if (noise.alpha() >= 2.0) throw ConfigError("max-linear requires alpha < 2");
    if ((filter.array() < 0.0).any()) throw ConfigError("max-linear requires nonnegative coefficients");
    if (noise.family() == TailFamily::ShiftedParetoCentered ||
        (noise.family() == TailFamily::ExactPareto && noise.rho() != 1.0))
        throw ConfigError("max-linear requires nonnegative noise (exact-pareto with rho = 1)");
    FieldModel f(FieldFamily::MaxLinear, std::move(noise));
    f.m_ = static_cast<int>(std::max(filter.rows(), filter.cols()) - 1);
    f.filter_ = std::move(filter);
    return f;
}

FieldModel FieldModel::random_coeff_bernoulli(double q, TailModel noise) {
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("random-coeff-bernoulli requires q in (0,1)");
    require_centered_if_needed(noise, "random-coeff-bernoulli");
    FieldModel f(FieldFamily::RandomCoeffBernoulli, std::move(noise));
    f.q_ = q;
    f.m_ = 1;
    return f;
}

FieldModel FieldModel::rademacher_sum(int m, TailModel noise) {
    if (m < 0) throw ConfigError("rademacher-sum requires m >= 0");
    FieldModel f(FieldFamily::RademacherSum, std::move(noise));
    f.m_ = m;
    return f;
}

double FieldModel::tail_constant() const {
    const double a = alpha();
    switch (family_) {
        case FieldFamily::Iid: return 1.0;
        case FieldFamily::LinearMA:
        case FieldFamily::MaxLinear: return filter_.array().abs().pow(a).sum();
        case FieldFamily::RandomCoeffBernoulli: return std::pow(4.0, a) + q_ + std::pow(3.0, a);
        case FieldFamily::RademacherSum: return static_cast<double>((m_ + 1) * (m_ + 1));
    }
    return 1.0;
}

double FieldModel::dominance_constant() const {
    switch (family_) {
        case FieldFamily::Iid: return 1.0;
        case FieldFamily::LinearMA: return filter_.array().abs().sum();
        case FieldFamily::MaxLinear: return filter_.maxCoeff();
        case FieldFamily::RandomCoeffBernoulli: return 8.0;
        case FieldFamily::RademacherSum: return static_cast<double>((m_ + 1) * (m_ + 1));
    }
    return 1.0;
}

NormalizationSeq FieldModel::normalization(NormMethod method, std::uint64_t seed) const {
    return NormalizationSeq(noise_, tail_constant(), method, seed);
}

std::string FieldModel::describe() const {
    std::ostringstream os;
    os << to_string(family_) << ";tail=" << to_string(noise_.family()) << ";alpha=" << fmt_double(noise_.alpha())
       << ";rho=" << fmt_double(noise_.rho()) << ";scale=" << fmt_double(noise_.scale());
    if (family_ == FieldFamily::LinearMA || family_ == FieldFamily::MaxLinear) {
        os << ";filter=[";
        for (Eigen::Index i = 0; i < filter_.rows(); ++i) {
            os << (i ? ",[" : "[");
            for (Eigen::Index j = 0; j < filter_.cols(); ++j) os << (j ? "," : "") << fmt_double(filter_(i, j));
            os << "]";
        }
        os << "]";
    }
    if (family_ == FieldFamily::RandomCoeffBernoulli) os << ";q=" << fmt_double(q_);
    if (family_ == FieldFamily::RademacherSum) os << ";m=" << m_;
    return os.str();
}

std::string FieldModel::fingerprint() const { return fnv1a_hex(describe()); }

int dependence_range(const FieldModel& model) { return model.m(); }

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

FieldSample generate_field(const FieldModel& model, Eigen::Index p, Eigen::Index n, std::uint64_t seed) {
    if (p < 1 || n < 1) throw ConfigError("generate_field: p and n must be >= 1");
    detail::NoiseGrid grid(p, n, model.m());
    detail::fill_from_lattice(grid, model.noise(), seed);
    return FieldSample{detail::apply_filter(model, grid), model.fingerprint(), seed};
}

SparseMatrix field_exceedances(const FieldModel& model, Eigen::Index p, Eigen::Index n, std::uint64_t seed,
                               double threshold, bool upper_only) {
    if (p < 1 || n < 1) throw ConfigError("field_exceedances: p and n must be >= 1");
    SparseMatrix out;
    out.rows = p;
    out.cols = n;
    const double p0 = model.noise().envelope_cutoff(threshold / model.dominance_constant());
    if (p0 >= 1.0) {
        const auto field = generate_field(model, p, n, seed);
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = upper_only ? i : 0; j < n; ++j)
                if (std::abs(field.values(i, j)) > threshold) out.entries.push_back({i, j, field.values(i, j)});
        return out;
    }

    // Only cells within reach of a noise value with v < p0 can exceed the threshold.
    const Eigen::Index m = model.m();
    std::vector<std::pair<Eigen::Index, Eigen::Index>> cand;
    for (Eigen::Index a = -m; a < p; ++a)
        for (Eigen::Index b = -m; b < n; ++b) {
            if (detail::lattice_v(lattice_words(seed, a, b)) >= p0) continue;
            for (Eigen::Index k = 0; k <= m; ++k)
                for (Eigen::Index l = 0; l <= m; ++l) {
                    const Eigen::Index i = a + k, j = b + l;
                    if (i < 0 || j < 0 || i >= p || j >= n) continue;
                    if (upper_only && j < i) continue;
                    cand.emplace_back(i, j);
                }
        }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

    const detail::LatticeNoise noise{&model.noise(), seed};
    for (const auto& [i, j] : cand) {
        const double x = detail::field_value(model, noise, i, j);
        if (std::abs(x) > threshold) out.entries.push_back({i, j, x});
    }
    return out;
}

ClusterShapeSpec theoretical_cluster(const FieldModel& model) {
    const double a = model.alpha();
    if (model.noise().family() == TailFamily::CustomInverseCdf)
        throw ConfigError("no closed-form cluster for custom-inverse-cdf noise (tail balance unknown); "
                          "use empirical_cluster_sampler");
    const double rho = model.noise().rho();
    ClusterShapeSpec spec;
    spec.source = "closed-form";
    switch (model.family()) {
        case FieldFamily::Iid:
            spec.theta = 1.0;
            spec.window = 1;
            spec.sv_bound = 1.0;
            spec.q_sampler = [rho](RngStream& rng) {
                Eigen::MatrixXd q(1, 1);
                q(0, 0) = rng.uniform() < rho ? 1.0 : -1.0;
                return q;
            };
            break;
        case FieldFamily::LinearMA:
        case FieldFamily::MaxLinear: {
            const Eigen::MatrixXd& h = model.filter();
            const double hmax = h.array().abs().maxCoeff();
            spec.theta = std::pow(hmax, a) / h.array().abs().pow(a).sum();
            spec.window = std::max(h.rows(), h.cols());
            const Eigen::MatrixXd base = h / hmax;
            spec.sv_bound = singular_values(base)(0);
            const double p_plus = model.family() == FieldFamily::MaxLinear ? 1.0 : rho;
            spec.q_sampler = [base, p_plus](RngStream& rng) -> Eigen::MatrixXd {
                return rng.uniform() < p_plus ? base : Eigen::MatrixXd(-base);
            };
            break;
        }
        case FieldFamily::RandomCoeffBernoulli: {
            const double q = model.q();
            spec.theta = std::pow(4.0, a) / (std::pow(4.0, a) + q + std::pow(3.0, a));
            spec.window = 2;
            Eigen::MatrixXd with_e(2, 2);
            with_e << 1.0, 0.0, 0.25, 0.75;
            spec.sv_bound = singular_values(with_e)(0);
            spec.q_sampler = [q, rho](RngStream& rng) {
                Eigen::MatrixXd m(2, 2);
                const double e = rng.uniform() < q ? 1.0 : 0.0;
                m << 1.0, 0.0, e / 4.0, 0.75;
                if (!(rng.uniform() < rho)) m = -m;
                return m;
            };
            break;
        }
        case FieldFamily::RademacherSum: {
            const int w = model.m() + 1;
            spec.theta = 1.0 / static_cast<double>(w * w);
            spec.window = w;
            spec.sv_bound = static_cast<double>(w);
            spec.q_sampler = [w](RngStream& rng) {
                Eigen::MatrixXd m(w, w);
                for (int i = 0; i < w; ++i)
                    for (int j = 0; j < w; ++j) m(i, j) = (rng.next_u32() >> 31) ? -1.0 : 1.0;
                return m;
            };
            break;
        }
    }
    return spec;
}

}  // namespace htrm
