#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "htrm/matrix_assembly.hpp"

namespace htrm {

struct EigenResult {
    Eigen::VectorXd values;   // descending
    Eigen::MatrixXd vectors;  // column j pairs with values(j); empty unless requested
};

// Dense symmetric eigensolver (Householder tridiagonalization + implicit QR, via Eigen).
EigenResult sym_eig(const Eigen::MatrixXd& m, bool want_vectors = false);
inline EigenResult sym_eig(const SymMatrix& m, bool want_vectors = false) { return sym_eig(m.a, want_vectors); }

// Descending singular values through the smaller Gram matrix.
Eigen::VectorXd singular_values(const Eigen::MatrixXd& m);

// Same, with values at the Gram route's rank-resolution floor (about 1e-7 sigma_1) dropped.
std::vector<double> nonzero_singular_values(const Eigen::MatrixXd& m);

struct BlockEigenvalue {
    double value = 0.0;
    Eigen::Index k = 0;  // block row
    Eigen::Index l = 0;  // block column, k < l
    Eigen::Index j = 0;  // singular value index within the block
};

// Spectrum of the >eps part under event S, or a fallback signal.
struct SparseSpectrum {
    bool event_s = false;
    std::string fallback_reason;
    std::vector<BlockEigenvalue> eigenvalues;  // descending by value
    std::vector<double> values() const;
};

SparseSpectrum sparse_truncated_spectrum(const SparseMatrix& above, const BlockDecomposition& blocks);

// Rectangular analogue: singular values of the >eps part when every block row and block
// column holds at most one nonzero block.
struct SparseSingularValues {
    bool event_s = false;
    std::string fallback_reason;
    std::vector<double> values;  // descending, nonzero
};

SparseSingularValues sparse_truncated_singular_values(const SparseMatrix& above, const BlockDecomposition& blocks);

struct NormEstimate {
    double value = 0.0;  // power-iteration estimate of the spectral norm
    double frobenius = 0.0;
    bool converged = false;
    int iterations = 0;
    // Power-iteration value when converged, else the Frobenius envelope.
    double bound() const { return converged ? value : frobenius; }
};

// Power iteration on M'M from a fixed start vector.
NormEstimate spectral_norm(const Eigen::MatrixXd& m, double tol = 1e-8, int max_iter = 1000);

struct WeylGap {
    double gap = 0.0;  // max_j |lambda_j(M+E) - lambda_j(M)|
    NormEstimate norm_e;
    double bound() const { return norm_e.bound(); }
};

WeylGap weyl_gap(const Eigen::MatrixXd& m, const Eigen::MatrixXd& e);

struct PointSets {
    std::vector<double> plus;   // descending
    std::vector<double> minus;  // ascending (most negative first)
};

// Entries with |x| <= zero_tol are dropped.
PointSets spectrum_point_sets(std::span<const double> eigs, double zero_tol = 0.0);

// Largest fraction of |v|^2 carried by the row ranges of one block pair (k,l).
double localization_score(const Eigen::VectorXd& v, const BlockDecomposition& blocks);

}  // namespace htrm
