#include "htrm/tail_sampling.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "htrm/errors.hpp"

namespace htrm {

std::string to_string(TailFamily f) {
    switch (f) {
        case TailFamily::ExactPareto: return "exact-pareto";
        case TailFamily::ShiftedParetoCentered: return "shifted-pareto-centered";
        case TailFamily::CustomInverseCdf: return "custom-inverse-cdf";
    }
    return "?";
}

TailFamily tail_family_from_string(const std::string& s) {
    if (s == "exact-pareto") return TailFamily::ExactPareto;
    if (s == "shifted-pareto-centered") return TailFamily::ShiftedParetoCentered;
    if (s == "custom-inverse-cdf") return TailFamily::CustomInverseCdf;
    throw ConfigError("unknown tail family '" + s + "'");
}

namespace {

void check_common(double alpha, double rho, double scale) {
    if (!(alpha > 0.0 && alpha < 4.0)) throw ConfigError("tail index alpha must lie in (0,4)");
    if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("tail balance rho must lie in [0,1]");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("scale must be positive");
}

}  // namespace

TailModel TailModel::exact_pareto(double alpha, double rho, double scale) {
    check_common(alpha, rho, scale);
    TailModel m;
    m.alpha_ = alpha;
    m.rho_ = rho;
    m.scale_ = scale;
    m.family_ = TailFamily::ExactPareto;
    return m;
}

TailModel TailModel::centered_pareto(double alpha, double rho, double scale) {
    check_common(alpha, rho, scale);
    if (alpha <= 1.0) throw ConfigError("centered Pareto needs alpha > 1 (finite mean)");
    TailModel m;
    m.alpha_ = alpha;
    m.rho_ = rho;
    m.scale_ = scale;
    m.family_ = TailFamily::ShiftedParetoCentered;
    m.shift_ = (2.0 * rho - 1.0) * scale * alpha / (alpha - 1.0);
    return m;
}

TailModel TailModel::custom(double alpha, std::function<double(double)> quantile) {
    check_common(alpha, 0.5, 1.0);
    if (!quantile) throw ConfigError("custom tail needs a quantile function");
    TailModel m;
    m.alpha_ = alpha;
    m.family_ = TailFamily::CustomInverseCdf;
    m.quantile_ = std::move(quantile);
    return m;
}

bool TailModel::has_zero_mean() const {
    if (family_ == TailFamily::ShiftedParetoCentered) return true;
    return family_ == TailFamily::ExactPareto && rho_ == 0.5 && alpha_ > 1.0;
}

double TailModel::from_uniforms(double v, double s) const {
    if (family_ == TailFamily::CustomInverseCdf) return quantile_(v);
    const double mag = scale_ * std::pow(v, -1.0 / alpha_);
    const double signed_mag = s < rho_ ? mag : -mag;
    return signed_mag - shift_;
}

double TailModel::envelope_cutoff(double t) const {
    if (family_ == TailFamily::CustomInverseCdf) return 1.0;
    const double room = t - std::abs(shift_);
    if (!(room > scale_)) return 1.0;
    return std::pow(room / scale_, -alpha_);
}

double sample_entry(const TailModel& model, RngStream& rng) {
    const double v = rng.uniform();
    const double s = rng.uniform();
    return model.from_uniforms(v, s);
}

NormalizationSeq::NormalizationSeq(TailModel tail, double tail_constant, NormMethod method,
                                   std::uint64_t seed, double mc_multiplier)
    : tail_(std::move(tail)),
      tail_constant_(tail_constant),
      method_(method),
      seed_(seed),
      mc_multiplier_(mc_multiplier),
      cache_(std::make_shared<std::map<std::uint64_t, double>>()),
      mutex_(std::make_shared<std::mutex>()) {
    if (!(tail_constant > 0.0) || !std::isfinite(tail_constant))
        throw ConfigError("tail constant must be positive");
    if (!(mc_multiplier >= 100.0)) throw ConfigError("quantile sample multiplier must be >= 100");
    if (tail_.family() == TailFamily::CustomInverseCdf) method_ = NormMethod::MonteCarloQuantile;
}

double NormalizationSeq::operator()(std::uint64_t n) const {
    if (n == 0) throw ConfigError("normalization index n must be >= 1");
    if (method_ == NormMethod::Exact)
        return tail_.scale() * std::pow(tail_constant_ * static_cast<double>(n), 1.0 / tail_.alpha());
    {
        std::lock_guard lock(*mutex_);
        if (auto it = cache_->find(n); it != cache_->end()) return it->second;
    }
    const double a = monte_carlo(n);
    std::lock_guard lock(*mutex_);
    return cache_->emplace(n, a).first->second;
}

double NormalizationSeq::index_for(double a) const {
    return std::pow(a / tail_.scale(), tail_.alpha()) / tail_constant_;
}

double NormalizationSeq::monte_carlo(std::uint64_t n) const {
    // Empirical (1 - 1/(c n)) quantile of |Z| over mc_multiplier * c n draws, i.e. the
    // mc_multiplier-th largest draw. One stream for every n keeps a_n nearly monotone.
    const double cn = tail_constant_ * static_cast<double>(n);
    const auto size = static_cast<std::uint64_t>(std::ceil(mc_multiplier_ * std::max(cn, 1.0)));
    const auto k = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(static_cast<double>(size) / cn)));
    RngStream rng(derive_seed(seed_, "norm-quantile", 0));
    std::priority_queue<double, std::vector<double>, std::greater<>> top;
    for (std::uint64_t i = 0; i < size; ++i) {
        const double x = std::abs(sample_entry(tail_, rng));
        if (top.size() < k) top.push(x);
        else if (x > top.top()) {
            top.pop();
            top.push(x);
        }
    }
    return top.top();
}

double hill_tail_index(std::span<const double> samples, std::size_t k) {
    if (samples.empty()) throw ConfigError("hill_tail_index: empty sample");
    if (k == 0 || k >= samples.size()) throw ConfigError("hill_tail_index: need 1 <= k < sample count");
    std::vector<double> mags(samples.size());
    std::transform(samples.begin(), samples.end(), mags.begin(), [](double x) { return std::abs(x); });
    std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k), mags.end(),
                     std::greater<>());
    const double threshold = mags[k];
    if (!(threshold > 0.0)) throw NumericError("hill_tail_index: (k+1)-th largest magnitude is zero");
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) acc += std::log(mags[i] / threshold);
    if (!(acc > 0.0)) throw NumericError("hill_tail_index: degenerate sample (zero log-spacings)");
    return static_cast<double>(k) / acc;
}

}  // namespace htrm
