#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "htrm/rng.hpp"

namespace htrm {

// Extremal index plus the law of the normalized cluster array Q (sup-norm 1).
struct ClusterShapeSpec {
    double theta = 1.0;
    Eigen::Index window = 1;  // Q fits in a window x window array
    double sv_bound = 1.0;    // sigma_1(Q) <= sv_bound for every draw
    std::function<Eigen::MatrixXd(RngStream&)> q_sampler;
    std::string source;  // "closed-form" or "empirical"

    // Descending singular values of one Q draw, zeros dropped.
    std::vector<double> sample_singular_values(RngStream& rng) const;
};

}  // namespace htrm
