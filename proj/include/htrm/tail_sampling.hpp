#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>

#include "htrm/rng.hpp"

namespace htrm {

enum class TailFamily { ExactPareto, ShiftedParetoCentered, CustomInverseCdf };

std::string to_string(TailFamily f);
TailFamily tail_family_from_string(const std::string& s);

// Regularly varying entry law with slowly varying factor fixed to 1.
//   exact-pareto:            X = S * scale * V^{-1/alpha},  P(S=+1) = rho
//   shifted-pareto-centered: the same minus its analytic mean (needs alpha > 1)
//   custom-inverse-cdf:      X = quantile(V)
class TailModel {
public:
    static TailModel exact_pareto(double alpha, double rho = 0.5, double scale = 1.0);
    static TailModel centered_pareto(double alpha, double rho = 0.5, double scale = 1.0);
    static TailModel custom(double alpha, std::function<double(double)> quantile);

    double alpha() const { return alpha_; }
    double rho() const { return rho_; }
    double scale() const { return scale_; }
    TailFamily family() const { return family_; }
    const std::function<double(double)>& quantile() const { return quantile_; }

    // Subtracted shift; zero unless centered.
    double shift() const { return shift_; }
    bool has_zero_mean() const;

    // Deterministic map from two uniforms in (0,1): v drives the magnitude, s the sign.
    double from_uniforms(double v, double s) const;

    // Smallest p0 such that v >= p0 guarantees |from_uniforms(v, .)| <= t. Returns 1 when
    // no useful bound exists.
    double envelope_cutoff(double t) const;

private:
    TailModel() = default;

    double alpha_ = 1.0;
    double rho_ = 0.5;
    double scale_ = 1.0;
    double shift_ = 0.0;
    TailFamily family_ = TailFamily::ExactPareto;
    std::function<double(double)> quantile_;
};

double sample_entry(const TailModel& model, RngStream& rng);

enum class NormMethod { Exact, MonteCarloQuantile };

// a_n with n P(|X| > a_n) -> 1, where P(|X| > x) ~ tail_constant * (x/scale)^{-alpha}.
class NormalizationSeq {
public:
    // The quantile method draws mc_multiplier * tail_constant * n values (at least 100 n).
    explicit NormalizationSeq(TailModel tail, double tail_constant = 1.0,
                              NormMethod method = NormMethod::Exact, std::uint64_t seed = 0,
                              double mc_multiplier = 100.0);

    double alpha() const { return tail_.alpha(); }
    double tail_constant() const { return tail_constant_; }
    NormMethod method() const { return method_; }
    const TailModel& tail() const { return tail_; }

    double operator()(std::uint64_t n) const;

    // Inverse of the exact map: the n with a_n = a.
    double index_for(double a) const;

private:
    double monte_carlo(std::uint64_t n) const;

    TailModel tail_;
    double tail_constant_;
    NormMethod method_;
    std::uint64_t seed_;
    double mc_multiplier_;
    std::shared_ptr<std::map<std::uint64_t, double>> cache_;
    std::shared_ptr<std::mutex> mutex_;
};

inline double norm_constant(const NormalizationSeq& seq, std::uint64_t n) { return seq(n); }

// Hill estimator of alpha from the k largest absolute values.
double hill_tail_index(std::span<const double> samples, std::size_t k);

}  // namespace htrm
