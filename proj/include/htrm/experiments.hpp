#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "htrm/field_models.hpp"
#include "htrm/matrix_assembly.hpp"

namespace htrm {

enum class EnsembleKind { Wigner, Covariance };
enum class SolverPath { Dense, Sparse };
enum class SolverUsed { Dense, Sparse, DenseFallback };

std::string to_string(EnsembleKind k);
std::string to_string(SolverPath s);
std::string to_string(SolverUsed s);
EnsembleKind ensemble_kind_from_string(const std::string& s);
SolverPath solver_path_from_string(const std::string& s);

struct ThetaSettings {
    std::uint64_t n = 0;  // 0: use the ensemble order
    Eigen::Index r = 0;   // 0: ceil(n^0.3)
    double u = 1.0;
    std::uint64_t reps = 100;
};

struct ExperimentConfig {
    explicit ExperimentConfig(FieldModel m) : model(std::move(m)) {}

    FieldModel model;
    EnsembleKind ensemble = EnsembleKind::Wigner;
    std::uint64_t n = 100;
    std::uint64_t p = 100;  // covariance only
    std::size_t k = 3;
    std::uint64_t reps = 100;
    SolverPath solver = SolverPath::Dense;
    TruncationParams truncation = fixed_truncation(0.5);
    Eigen::Index block_side = 0;  // 0: ceil(n^{1-eta})
    std::uint64_t seed = 1;
    unsigned threads = 1;
    // Multiplies theta in the limit reference. Unset: 1/2 for Wigner, 1 for covariance.
    std::optional<double> intensity_scale;
    std::uint64_t reference_multiplier = 10;
    ThetaSettings theta;
    std::string out_dir = ".";
    std::string prefix = "run";

    double reference_intensity() const;
    // Block side and orders after trimming to multiples of it (sparse path only trims).
    Eigen::Index effective_block_side() const;
    std::uint64_t effective_n() const;
    std::uint64_t effective_p() const;
    void validate() const;
};

struct TrialResult {
    std::uint64_t trial = 0;
    std::vector<double> top;     // K largest eigenvalues, descending (covariance: of AA')
    std::vector<double> bottom;  // Wigner: K smallest eigenvalues, ascending
    SolverUsed path = SolverUsed::Dense;
    bool event_s = false;
    double wall_seconds = 0.0;
};

std::vector<TrialResult> run_wigner_trials(const ExperimentConfig& cfg);
std::vector<TrialResult> run_cov_trials(const ExperimentConfig& cfg);
std::vector<TrialResult> run_trials(const ExperimentConfig& cfg);

// Single trials, exposed for cross-checks. The sparse variants return the spectrum of the
// thresholded matrix.
TrialResult wigner_trial(const ExperimentConfig& cfg, std::uint64_t trial);
TrialResult cov_trial(const ExperimentConfig& cfg, std::uint64_t trial);
std::uint64_t trial_seed(const ExperimentConfig& cfg, std::uint64_t trial);

// Per-trial CSV (no timing column, so the bytes depend only on config and seed).
void write_trials_csv(std::ostream& os, const std::vector<TrialResult>& trials, std::size_t k,
                      const std::string& comment = {});

struct AnalyticDistribution {
    std::string name;
    std::function<double(double)> cdf;
    std::function<double(double)> quantile;
};

// P(X <= x) = exp(-theta x^{-alpha}).
AnalyticDistribution frechet(double theta, double alpha);

struct QQRow {
    double prob = 0.0;
    double empirical = 0.0;
    double reference = 0.0;
};

struct Comparison {
    double ks = 0.0;
    double ks_scale = 0.0;  // sqrt(1/n + 1/m), or sqrt(1/n) against an analytic law
    std::size_t n_empirical = 0;
    std::size_t n_reference = 0;  // 0 for an analytic reference
    std::vector<QQRow> qq;
};

double ks_two_sample(std::span<const double> a, std::span<const double> b);
double ks_one_sample(std::span<const double> a, const std::function<double(double)>& cdf);
double empirical_quantile(std::vector<double> sorted_or_not, double prob);

Comparison compare_distributions(std::span<const double> empirical, std::span<const double> reference,
                                 std::size_t qq_points = 19);
Comparison compare_distributions(std::span<const double> empirical, const AnalyticDistribution& reference,
                                 std::size_t qq_points = 19);

void write_qq_table(std::ostream& os, const Comparison& c);

// Limit-law draws of the top-K points (Wigner: P sigma, covariance: P^2 sigma^2), one row per draw.
std::vector<std::vector<double>> reference_topk(const ExperimentConfig& cfg, std::uint64_t draws,
                                                std::uint64_t seed);

// Marginal comparison of each rank against reference_topk with reference_multiplier * reps draws.
std::vector<Comparison> compare_to_limit(const ExperimentConfig& cfg, const std::vector<TrialResult>& trials);

struct SweepRow {
    std::uint64_t n = 0;
    double ks = 0.0;
    double ks_scale = 0.0;
    std::uint64_t reps = 0;
    std::string reference;
};

// KS of the largest eigenvalue against its limit law at each n. The iid model uses the analytic
// Frechet law; other models use limit draws.
std::vector<SweepRow> convergence_sweep(const ExperimentConfig& cfg, std::span<const std::uint64_t> n_list);

}  // namespace htrm
