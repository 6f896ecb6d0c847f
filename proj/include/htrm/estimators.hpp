#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "htrm/field_models.hpp"
#include "htrm/matrix_assembly.hpp"

namespace htrm {

struct ThetaEstimate {
    double theta_hat = 0.0;
    double std_error = 0.0;  // binomial standard error, same scaling as theta_hat
    std::uint64_t accepted = 0;
    std::uint64_t blocks = 0;  // reps * k^2
    Eigen::Index r = 0;
    Eigen::Index k = 0;
    double u = 1.0;
    double threshold = 0.0;  // a_{n^2} * u
};

// r = ceil(n^0.3).
Eigen::Index default_theta_block_side(std::uint64_t n);

// theta_hat = u^alpha k^2 P(block max > a_{n^2} u) over reps*k^2 fresh r x r blocks, k = n / r.
ThetaEstimate estimate_extremal_index(const FieldModel& model, std::uint64_t n, Eigen::Index r, double u,
                                      std::uint64_t reps, std::uint64_t seed);

struct WignerEnsembleSpec {
    FieldModel model;
    std::uint64_t n = 0;
};

struct BlockEventProbs {
    double p_multi_row = 0.0;          // some block row holds two or more nonzero blocks
    double p_diag_nonzero = 0.0;       // some diagonal block is nonzero
    double p_three_consecutive = 0.0;  // some block row holds nonzero blocks at l, l+1, l+2
    std::uint64_t reps = 0;
    std::uint64_t order = 0;  // n trimmed to a multiple of r
    double threshold = 0.0;   // eps used on the normalized matrix
};

BlockEventProbs block_event_probs(const WignerEnsembleSpec& spec, const TruncationParams& trunc, Eigen::Index r,
                                  std::uint64_t reps, std::uint64_t seed, unsigned threads = 1);

struct NormProfileRow {
    double eps = 0.0;
    double median_norm = 0.0;       // median power-iteration estimate of |A^{<eps}|
    double median_frobenius = 0.0;  // median certified envelope
    std::uint64_t unconverged = 0;
};

struct NormProfileOptions {
    double tol = 1e-6;
    int max_iter = 300;
    unsigned threads = 1;
};

std::vector<NormProfileRow> truncated_norm_profile(const WignerEnsembleSpec& spec, std::span<const double> eps_list,
                                                   std::uint64_t reps, std::uint64_t seed,
                                                   const NormProfileOptions& opt = {});

double median(std::vector<double> xs);

}  // namespace htrm
