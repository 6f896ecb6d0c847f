#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "htrm/tail_sampling.hpp"

namespace htrm {

struct FieldSample;

// Normalized Wigner matrix: upper triangle of the field reflected, divided by b_n = a_{n^2}.
struct SymMatrix {
    Eigen::MatrixXd a;
    double normalization = 1.0;
    Eigen::Index order() const { return a.rows(); }
};

// Normalized data matrix, entries divided by a_{np}.
struct RectMatrix {
    Eigen::MatrixXd a;
    double normalization = 1.0;
    double gamma = 1.0;  // p / n
};

struct SparseEntry {
    std::int64_t i = 0;
    std::int64_t j = 0;
    double value = 0.0;
    bool operator==(const SparseEntry&) const = default;
};

// Coordinate list sorted by (i, j). Symmetric matrices store both (i,j) and (j,i).
struct SparseMatrix {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    std::vector<SparseEntry> entries;

    Eigen::MatrixXd to_dense() const;
    double max_abs() const;
};

struct TruncatedPair {
    SparseMatrix above;     // |entry| > eps
    Eigen::MatrixXd below;  // the rest, so that above + below == M exactly
};

SymMatrix build_wigner(const FieldSample& field, const NormalizationSeq& seq);
RectMatrix build_data(const FieldSample& field, const NormalizationSeq& seq);

TruncatedPair truncate(const Eigen::MatrixXd& m, double eps);

struct BlockCoord {
    Eigen::Index k = 0;
    Eigen::Index l = 0;
    bool operator==(const BlockCoord&) const = default;
};

struct BlockDecomposition {
    Eigen::Index r = 1;
    Eigen::Index k_rows = 0;
    Eigen::Index k_cols = 0;
    Eigen::MatrixXd max_norm;  // k_rows x k_cols

    // Blocks with max-norm strictly above the threshold, row-major order.
    std::vector<BlockCoord> surviving(double threshold) const;
};

BlockDecomposition block_decompose(const Eigen::MatrixXd& m, Eigen::Index r);
BlockDecomposition block_decompose(const SparseMatrix& m, Eigen::Index r);

// Default block side ceil(n^{1-eta}) and the largest multiple of r not exceeding n.
Eigen::Index default_block_side(std::uint64_t n, double eta = 0.9);
std::uint64_t trimmed_order(std::uint64_t n, std::uint64_t r);

struct TruncationParams {
    enum class Mode { Fixed, Adaptive };
    Mode mode = Mode::Fixed;
    double eps = 0.5;
    double beta = 0.0;
    double eta = 0.9;
    double kappa = 0.95;

    // eps_n: the fixed eps, or n^beta / b_n.
    double eps_n(std::uint64_t n, double b_n) const;
    // Second threshold b_n^{(kappa-1)/2}; equals eps in fixed mode.
    double eps_tilde(double b_n) const;
    // Threshold used by the sparse spectral shortcut.
    double sparse_threshold(std::uint64_t n, double b_n) const;
    Eigen::Index block_side(std::uint64_t n) const { return default_block_side(n, eta); }
};

std::string to_string(TruncationParams::Mode mode);

// Window (4/(3 alpha), 2(8-alpha)/(alpha(10-alpha))) for the adaptive exponent beta.
std::pair<double, double> beta_window(double alpha);

TruncationParams fixed_truncation(double eps, double eta = 0.9);
TruncationParams adaptive_truncation(double alpha, double beta, double eta = 0.9, double kappa = 0.95);
// Checks the adaptive constraints and eps_tilde > eps_n at order n for b_n = n^{2/alpha}.
void validate_truncation(const TruncationParams& t, double alpha, std::uint64_t n);
TruncationParams default_truncation(double alpha, std::uint64_t n, double fixed_eps = 0.5);

// Binary matrix format: 16-byte header {u32 magic "HTRM", u32 kind, u32 rows, u32 cols}
// followed by rows*cols little-endian float64, row-major.
enum class MatrixKind : std::uint32_t { Field = 0, Symmetric = 1, Rectangular = 2 };

void write_matrix_bin(std::ostream& os, const Eigen::MatrixXd& m, MatrixKind kind);
Eigen::MatrixXd read_matrix_bin(std::istream& is, MatrixKind* kind = nullptr);
void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m, const std::string& comment = {});
Eigen::MatrixXd read_matrix_csv(std::istream& is);

}  // namespace htrm
