#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "htrm/cluster_shape.hpp"
#include "htrm/matrix_assembly.hpp"
#include "htrm/tail_sampling.hpp"

namespace htrm {

enum class FieldFamily { Iid, LinearMA, MaxLinear, RandomCoeffBernoulli, RademacherSum };

std::string to_string(FieldFamily f);
FieldFamily field_family_from_string(const std::string& s);

// Stationary m-dependent field on Z^2.
//   Iid:                  X_{it} = Z_{it}
//   LinearMA:             X_{it} = sum_{k,l} h_{kl} Z_{i-k,t-l}
//   MaxLinear:            X_{it} = max_{k,l} h_{kl} Z_{i-k,t-l}      (h, Z >= 0, alpha < 2)
//   RandomCoeffBernoulli: X_{it} = 4 Z_{it} + e_{i-1,t} Z_{i-1,t} + 3 Z_{i-1,t-1},  e ~ Bernoulli(q)
//   RademacherSum:        X_{it} = e_{it} sum_{j,s=0}^{m} Z_{i-j,t-s},           e Rademacher
// The Rademacher window runs backwards; the field has the same law as the forward window.
class FieldModel {
public:
    static FieldModel iid(TailModel noise);
    static FieldModel linear_ma(Eigen::MatrixXd filter, TailModel noise);
    static FieldModel max_linear(Eigen::MatrixXd filter, TailModel noise);
    static FieldModel random_coeff_bernoulli(double q, TailModel noise);
    static FieldModel rademacher_sum(int m, TailModel noise);

    FieldFamily family() const { return family_; }
    const TailModel& noise() const { return noise_; }
    const Eigen::MatrixXd& filter() const { return filter_; }
    double q() const { return q_; }
    int m() const { return m_; }
    double alpha() const { return noise_.alpha(); }

    // P(|X| > x) ~ tail_constant * P(|Z| > x).
    double tail_constant() const;
    // |X_{it}| <= dominance_constant * max |Z| over the cell's footprint.
    double dominance_constant() const;

    // a_N for the field marginal.
    NormalizationSeq normalization(NormMethod method = NormMethod::Exact, std::uint64_t seed = 0) const;

    // Canonical one-line description and its 64-bit FNV-1a hash in hex.
    std::string describe() const;
    std::string fingerprint() const;

private:
    FieldModel(FieldFamily family, TailModel noise) : family_(family), noise_(std::move(noise)) {}

    FieldFamily family_;
    TailModel noise_;
    Eigen::MatrixXd filter_;
    double q_ = 0.0;
    int m_ = 0;
};

int dependence_range(const FieldModel& model);

struct FieldSample {
    Eigen::MatrixXd values;  // p x n
    std::string model_fingerprint;
    std::uint64_t seed = 0;
};

// Noise on [-m, p) x [-m, n) is keyed by (seed, lattice site), so any sub-block of the field
// is reproducible on its own.
FieldSample generate_field(const FieldModel& model, Eigen::Index p, Eigen::Index n, std::uint64_t seed);

// Entries of generate_field(model, p, n, seed) with |X| > threshold, found without building
// the dense field. Values are bit-identical to the dense ones. With upper_only, i <= j.
SparseMatrix field_exceedances(const FieldModel& model, Eigen::Index p, Eigen::Index n, std::uint64_t seed,
                               double threshold, bool upper_only = false);

// Closed-form (theta, Q) for the supported families.
ClusterShapeSpec theoretical_cluster(const FieldModel& model);

std::string fnv1a_hex(const std::string& text);

}  // namespace htrm
