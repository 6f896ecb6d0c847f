#include "htrm/matrix_assembly.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "htrm/errors.hpp"
#include "htrm/field_models.hpp"

namespace htrm {

Eigen::MatrixXd SparseMatrix::to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
    for (const auto& e : entries) m(e.i, e.j) = e.value;
    return m;
}

double SparseMatrix::max_abs() const {
    double best = 0.0;
    for (const auto& e : entries) best = std::max(best, std::abs(e.value));
    return best;
}

SymMatrix build_wigner(const FieldSample& field, const NormalizationSeq& seq) {
    const Eigen::Index n = field.values.rows();
    if (n != field.values.cols()) throw ConfigError("build_wigner: field must be square");
    SymMatrix out;
    out.normalization = seq(static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n));
    out.a.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i <= j; ++i) {
            const double x = field.values(i, j) / out.normalization;
            out.a(i, j) = x;
            out.a(j, i) = x;
        }
    return out;
}

RectMatrix build_data(const FieldSample& field, const NormalizationSeq& seq) {
    const Eigen::Index p = field.values.rows(), n = field.values.cols();
    RectMatrix out;
    out.normalization = seq(static_cast<std::uint64_t>(p) * static_cast<std::uint64_t>(n));
    out.a = field.values / out.normalization;
    out.gamma = static_cast<double>(p) / static_cast<double>(n);
    return out;
}

TruncatedPair truncate(const Eigen::MatrixXd& m, double eps) {
    if (!(eps >= 0.0)) throw ConfigError("truncate: eps must be >= 0");
    TruncatedPair out;
    out.above.rows = m.rows();
    out.above.cols = m.cols();
    out.below = m;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (std::abs(m(i, j)) > eps) {
                out.above.entries.push_back({i, j, m(i, j)});
                out.below(i, j) = 0.0;
            }
    return out;
}

std::vector<BlockCoord> BlockDecomposition::surviving(double threshold) const {
    std::vector<BlockCoord> out;
    for (Eigen::Index k = 0; k < k_rows; ++k)
        for (Eigen::Index l = 0; l < k_cols; ++l)
            if (max_norm(k, l) > threshold) out.push_back({k, l});
    return out;
}

namespace {

BlockDecomposition empty_blocks(Eigen::Index rows, Eigen::Index cols, Eigen::Index r) {
    if (r < 1) throw ConfigError("block side r must be >= 1");
    if (r > rows || r > cols) throw ConfigError("block side r exceeds the matrix order");
    if (rows % r != 0 || cols % r != 0)
        throw ConfigError("block side r must divide the matrix dimensions (trim the order first)");
    BlockDecomposition b;
    b.r = r;
    b.k_rows = rows / r;
    b.k_cols = cols / r;
    b.max_norm = Eigen::MatrixXd::Zero(b.k_rows, b.k_cols);
    return b;
}

}  // namespace

BlockDecomposition block_decompose(const Eigen::MatrixXd& m, Eigen::Index r) {
    BlockDecomposition b = empty_blocks(m.rows(), m.cols(), r);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            double& slot = b.max_norm(i / r, j / r);
            slot = std::max(slot, std::abs(m(i, j)));
        }
    return b;
}

BlockDecomposition block_decompose(const SparseMatrix& m, Eigen::Index r) {
    BlockDecomposition b = empty_blocks(m.rows, m.cols, r);
    for (const auto& e : m.entries) {
        double& slot = b.max_norm(e.i / r, e.j / r);
        slot = std::max(slot, std::abs(e.value));
    }
    return b;
}

Eigen::Index default_block_side(std::uint64_t n, double eta) {
    if (n == 0) throw ConfigError("matrix order must be >= 1");
    const double r = std::ceil(std::pow(static_cast<double>(n), 1.0 - eta) - 1e-12);
    return std::clamp<Eigen::Index>(static_cast<Eigen::Index>(r), 1, static_cast<Eigen::Index>(n));
}

std::uint64_t trimmed_order(std::uint64_t n, std::uint64_t r) {
    if (r == 0 || r > n) throw ConfigError("block side r must lie in [1, n]");
    return n - n % r;
}

double TruncationParams::eps_n(std::uint64_t n, double b_n) const {
    if (mode == Mode::Fixed) return eps;
    return std::pow(static_cast<double>(n), beta) / b_n;
}

double TruncationParams::eps_tilde(double b_n) const {
    if (mode == Mode::Fixed) return eps;
    return std::pow(b_n, (kappa - 1.0) / 2.0);
}

double TruncationParams::sparse_threshold(std::uint64_t, double b_n) const {
    return mode == Mode::Fixed ? eps : eps_tilde(b_n);
}

std::string to_string(TruncationParams::Mode mode) {
    return mode == TruncationParams::Mode::Fixed ? "fixed" : "adaptive";
}

std::pair<double, double> beta_window(double alpha) {
    return {4.0 / (3.0 * alpha), 2.0 * (8.0 - alpha) / (alpha * (10.0 - alpha))};
}

TruncationParams fixed_truncation(double eps, double eta) {
    if (!(eps >= 0.0)) throw ConfigError("fixed truncation: eps must be >= 0");
    if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("fixed truncation: eta must lie in (0,1)");
    TruncationParams t;
    t.mode = TruncationParams::Mode::Fixed;
    t.eps = eps;
    t.eta = eta;
    return t;
}

TruncationParams adaptive_truncation(double alpha, double beta, double eta, double kappa) {
    if (!(alpha >= 2.0 && alpha < 4.0)) throw ConfigError("adaptive truncation requires 2 <= alpha < 4");
    const auto [lo, hi] = beta_window(alpha);
    if (!(lo < hi)) throw ConfigError("adaptive truncation: empty beta window");
    if (!(beta > lo && beta < hi)) throw ConfigError("adaptive truncation: beta outside its window");
    if (!(eta > 5.0 / 6.0 && eta < 1.0)) throw ConfigError("adaptive truncation: eta must lie in (5/6, 1)");
    if (!(kappa > eta && kappa < 1.0)) throw ConfigError("adaptive truncation: kappa must lie in (eta, 1)");
    if (!(eta > alpha * beta - 1.0)) throw ConfigError("adaptive truncation: need eta > alpha*beta - 1");
    TruncationParams t;
    t.mode = TruncationParams::Mode::Adaptive;
    t.beta = beta;
    t.eta = eta;
    t.kappa = kappa;
    return t;
}

void validate_truncation(const TruncationParams& t, double alpha, std::uint64_t n) {
    if (t.mode == TruncationParams::Mode::Fixed) return;
    adaptive_truncation(alpha, t.beta, t.eta, t.kappa);
    const double nd = static_cast<double>(n);
    const double b_n = std::pow(nd * nd, 1.0 / alpha);
    if (!(t.eps_tilde(b_n) > t.eps_n(n, b_n)))
        throw ConfigError("adaptive truncation: second threshold does not exceed eps_n at this order");
}

TruncationParams default_truncation(double alpha, std::uint64_t n, double fixed_eps) {
    if (alpha < 2.0) return fixed_truncation(fixed_eps);
    const auto [lo, hi] = beta_window(alpha);
    if (!(lo < hi)) throw ConfigError("default truncation: empty beta window");
    TruncationParams t = adaptive_truncation(alpha, 0.5 * (lo + hi));
    validate_truncation(t, alpha, n);
    return t;
}

namespace {

constexpr std::uint32_t kMagic = 0x4D525448u;  // bytes "HTRM" in little-endian order

void put_u32(std::ostream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw ConfigError("binary matrix: truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_matrix_bin(std::ostream& os, const Eigen::MatrixXd& m, MatrixKind kind) {
    put_u32(os, kMagic);
    put_u32(os, static_cast<std::uint32_t>(kind));
    put_u32(os, static_cast<std::uint32_t>(m.rows()));
    put_u32(os, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::uint64_t bits = std::bit_cast<std::uint64_t>(m(i, j));
            unsigned char b[8];
            for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(bits >> (8 * k));
            os.write(reinterpret_cast<const char*>(b), 8);
        }
}

Eigen::MatrixXd read_matrix_bin(std::istream& is, MatrixKind* kind) {
    if (get_u32(is) != kMagic) throw ConfigError("binary matrix: bad magic");
    const std::uint32_t k = get_u32(is);
    if (k > 2) throw ConfigError("binary matrix: unknown kind");
    if (kind) *kind = static_cast<MatrixKind>(k);
    const Eigen::Index rows = get_u32(is), cols = get_u32(is);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            unsigned char b[8];
            if (!is.read(reinterpret_cast<char*>(b), 8)) throw ConfigError("binary matrix: truncated data");
            std::uint64_t bits = 0;
            for (int q = 0; q < 8; ++q) bits |= static_cast<std::uint64_t>(b[q]) << (8 * q);
            m(i, j) = std::bit_cast<double>(bits);
        }
    return m;
}

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m, const std::string& comment) {
    if (!comment.empty()) os << "# " << comment << "\n";
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << "c" << j;
    os << "\n";
    char buf[32];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            os << (j ? "," : "") << buf;
        }
        os << "\n";
    }
}

Eigen::MatrixXd read_matrix_csv(std::istream& is) {
    std::string line;
    bool header_seen = false;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError("csv matrix: bad number '" + cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) throw ConfigError("csv matrix: ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError("csv matrix: no data rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

}  // namespace htrm
