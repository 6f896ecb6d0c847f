#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "htrm/cluster_shape.hpp"
#include "htrm/field_models.hpp"
#include "htrm/rng.hpp"

namespace htrm {

// P_i = (Gamma_i / theta)^{-1/alpha}: the points of a Poisson process with mean measure
// theta * y^{-alpha} on (y, inf), in descending order.
std::vector<double> sample_ppp_points(double theta, double alpha, std::size_t count, RngStream& rng);

struct LimitOptions {
    // Multiplies theta. The Wigner edge uses 1/2 when only the upper triangle is independent.
    double intensity_scale = 1.0;
    // Hard cap on cluster centers drawn; hitting it leaves the top K uncertified.
    std::size_t max_points = 1u << 20;
};

struct LimitSample {
    std::vector<double> points;               // P_1 > P_2 > ... (centers actually used)
    std::vector<std::vector<double>> sigmas;  // nonzero singular values of each center's Q
    std::vector<double> wigner;               // top-K of P_i sigma_ij, descending, zero padded
    std::vector<double> cov;                  // top-K of P_i^2 sigma_ij^2
    std::size_t k = 0;
    bool certified = false;  // P_{N+1} * sv_bound < K-th value when drawing stopped
    bool padded = false;     // fewer than K nonzero products were available
};

LimitSample sample_limit_spectrum(const ClusterShapeSpec& cluster, double alpha, std::size_t k, RngStream& rng,
                                  const LimitOptions& opt = {});

std::vector<double> sample_limit_spectrum_wigner(const ClusterShapeSpec& cluster, double alpha, std::size_t k,
                                                 RngStream& rng, const LimitOptions& opt = {});
std::vector<double> sample_limit_spectrum_cov(const ClusterShapeSpec& cluster, double alpha, std::size_t k,
                                              RngStream& rng, const LimitOptions& opt = {});

// CSV rows: trial,i,j,P_i,sigma_ij,wigner_point,cov_point.
void write_limit_csv_header(std::ostream& os);
void write_limit_csv_rows(std::ostream& os, std::size_t trial, const LimitSample& s);

struct EmpiricalCluster {
    ClusterShapeSpec spec;                  // q_sampler resamples the accepted windows
    std::vector<Eigen::MatrixXd> windows;   // accepted (2m+1)-windows, sup-norm 1
    std::vector<std::vector<double>> svs;   // their singular values, descending
    std::uint64_t blocks = 0;               // blocks examined, accepted or not
    std::uint64_t accepted = 0;
    double acceptance_rate = 0.0;
    double theta_hat = 0.0;                 // u^alpha * (N / r^2) * acceptance rate, a = a_N
    double theta_stderr = 0.0;
};

// Rejection sampler for blocks with max |X| > a*u. Each accepted block is scaled by its own
// sup-norm and cut down to the (2m+1)-window around its largest entry.
EmpiricalCluster empirical_cluster_sampler(const FieldModel& model, Eigen::Index r, double u, double a,
                                           std::size_t samples, std::uint64_t max_rejects, RngStream& rng);

}  // namespace htrm
