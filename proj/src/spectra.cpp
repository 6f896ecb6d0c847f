#include "htrm/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "htrm/errors.hpp"
#include "htrm/rng.hpp"

namespace htrm {

namespace {

// Gram-route singular values below this fraction of sigma_1 are indistinguishable from 0.
constexpr double kRankTol = 64.0 * std::numeric_limits<double>::epsilon();

}  // namespace

EigenResult sym_eig(const Eigen::MatrixXd& m, bool want_vectors) {
    if (m.rows() != m.cols()) throw ConfigError("sym_eig: matrix is not square");
    if (!m.allFinite()) throw NumericError("sym_eig: non-finite entries");
    const double scale = m.cwiseAbs().maxCoeff();
    if (m.rows() > 0 && (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw ConfigError("sym_eig: matrix is not symmetric");

    EigenResult out;
    const Eigen::Index n = m.rows();
    if (n == 0) return out;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, want_vectors ? Eigen::ComputeEigenvectors
                                                                      : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("sym_eig: eigensolver did not converge");
    out.values = es.eigenvalues().reverse();
    if (want_vectors) out.vectors = es.eigenvectors().rowwise().reverse();
    return out;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return {};
    const Eigen::MatrixXd gram = m.rows() <= m.cols() ? Eigen::MatrixXd(m * m.transpose())
                                                      : Eigen::MatrixXd(m.transpose() * m);
    const Eigen::VectorXd lam = sym_eig(gram).values;
    return lam.cwiseMax(0.0).cwiseSqrt();
}

std::vector<double> nonzero_singular_values(const Eigen::MatrixXd& m) {
    const Eigen::VectorXd sv = singular_values(m);
    std::vector<double> out;
    const double cut = sv.size() ? sv(0) * std::sqrt(kRankTol * static_cast<double>(sv.size())) : 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cut) out.push_back(sv(i));
    return out;
}

std::vector<double> SparseSpectrum::values() const {
    std::vector<double> v;
    v.reserve(eigenvalues.size());
    for (const auto& e : eigenvalues) v.push_back(e.value);
    return v;
}

namespace {

using BlockMap = std::map<std::pair<Eigen::Index, Eigen::Index>, std::vector<SparseEntry>>;

BlockMap group_by_block(const SparseMatrix& above, const BlockDecomposition& blocks) {
    const Eigen::Index r = blocks.r;
    BlockMap out;
    for (const auto& e : above.entries) {
        const Eigen::Index k = e.i / r, l = e.j / r;
        if (k >= blocks.k_rows || l >= blocks.k_cols)
            throw ConfigError("sparse spectrum: entry outside the block grid (order not a multiple of r)");
        out[{k, l}].push_back(e);
    }
    return out;
}

// Nonzero singular values of the entries of one block, on their occupied rows and columns.
std::vector<double> block_singular_values(const std::vector<SparseEntry>& entries) {
    std::vector<Eigen::Index> rows, cols;
    for (const auto& e : entries) {
        rows.push_back(e.i);
        cols.push_back(e.j);
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                              static_cast<Eigen::Index>(cols.size()));
    for (const auto& e : entries) {
        const auto ri = std::lower_bound(rows.begin(), rows.end(), e.i) - rows.begin();
        const auto ci = std::lower_bound(cols.begin(), cols.end(), e.j) - cols.begin();
        b(ri, ci) = e.value;
    }
    return nonzero_singular_values(b);
}

}  // namespace

SparseSpectrum sparse_truncated_spectrum(const SparseMatrix& above, const BlockDecomposition& blocks) {
    SparseSpectrum out;
    const BlockMap by_block = group_by_block(above, blocks);

    std::map<Eigen::Index, std::set<Eigen::Index>> row_blocks;
    for (const auto& [kl, entries] : by_block) {
        if (kl.first == kl.second) {
            out.fallback_reason = "nonzero diagonal block";
            return out;
        }
        row_blocks[kl.first].insert(kl.second);
    }
    for (const auto& [k, ls] : row_blocks)
        if (ls.size() > 1) {
            out.fallback_reason = "block row with more than one nonzero block";
            return out;
        }

    out.event_s = true;
    for (const auto& [kl, entries] : by_block) {
        if (kl.first > kl.second) continue;
        const auto sv = block_singular_values(entries);
        for (std::size_t j = 0; j < sv.size(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            out.eigenvalues.push_back({sv[j], kl.first, kl.second, jj});
            out.eigenvalues.push_back({-sv[j], kl.first, kl.second, jj});
        }
    }
    std::stable_sort(out.eigenvalues.begin(), out.eigenvalues.end(),
                     [](const BlockEigenvalue& a, const BlockEigenvalue& b) { return a.value > b.value; });
    return out;
}

SparseSingularValues sparse_truncated_singular_values(const SparseMatrix& above, const BlockDecomposition& blocks) {
    SparseSingularValues out;
    const BlockMap by_block = group_by_block(above, blocks);
    std::map<Eigen::Index, int> per_row, per_col;
    for (const auto& [kl, entries] : by_block) {
        if (++per_row[kl.first] > 1 || ++per_col[kl.second] > 1) {
            out.fallback_reason = "block row or column with more than one nonzero block";
            return out;
        }
    }
    out.event_s = true;
    for (const auto& [kl, entries] : by_block) {
        const auto sv = block_singular_values(entries);
        out.values.insert(out.values.end(), sv.begin(), sv.end());
    }
    std::sort(out.values.begin(), out.values.end(), std::greater<>());
    return out;
}

NormEstimate spectral_norm(const Eigen::MatrixXd& m, double tol, int max_iter) {
    NormEstimate est;
    est.frobenius = m.norm();
    if (est.frobenius == 0.0 || m.cols() == 0) {
        est.converged = true;
        return est;
    }
    RngStream rng(0x243F6A8885A308D3ull);
    Eigen::VectorXd v(m.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform() - 0.5;
    v.normalize();
    // Converged when the Rayleigh residual |Gv - mu v| of G = M'M falls below tol * mu; the
    // eigenvalue error is then second order in the residual.
    for (int it = 1; it <= max_iter; ++it) {
        const Eigen::VectorXd w = m * v;
        const Eigen::VectorXd g = m.transpose() * w;
        const double mu = w.squaredNorm();
        est.value = std::sqrt(mu);
        est.iterations = it;
        const double gn = g.norm();
        if (gn == 0.0) {
            // Start vector in the null space of M'M.
            est.converged = false;
            break;
        }
        if ((g - mu * v).norm() <= tol * mu) {
            est.converged = true;
            break;
        }
        v = g / gn;
    }
    est.value = std::min(est.value, est.frobenius);
    return est;
}

WeylGap weyl_gap(const Eigen::MatrixXd& m, const Eigen::MatrixXd& e) {
    if (m.rows() != e.rows() || m.cols() != e.cols()) throw ConfigError("weyl_gap: dimension mismatch");
    WeylGap out;
    const Eigen::VectorXd a = sym_eig(m).values;
    const Eigen::VectorXd b = sym_eig(Eigen::MatrixXd(m + e)).values;
    out.gap = a.size() ? (a - b).cwiseAbs().maxCoeff() : 0.0;
    out.norm_e = spectral_norm(e);
    return out;
}

PointSets spectrum_point_sets(std::span<const double> eigs, double zero_tol) {
    PointSets out;
    for (double x : eigs) {
        if (x > zero_tol) out.plus.push_back(x);
        else if (x < -zero_tol) out.minus.push_back(x);
    }
    std::sort(out.plus.begin(), out.plus.end(), std::greater<>());
    std::sort(out.minus.begin(), out.minus.end());
    return out;
}

double localization_score(const Eigen::VectorXd& v, const BlockDecomposition& blocks) {
    const double total = v.squaredNorm();
    if (total == 0.0) return 0.0;
    const Eigen::Index r = blocks.r;
    const Eigen::Index k = std::max<Eigen::Index>(1, (v.size() + r - 1) / r);
    std::vector<double> mass(static_cast<std::size_t>(k), 0.0);
    for (Eigen::Index i = 0; i < v.size(); ++i) mass[static_cast<std::size_t>(i / r)] += v(i) * v(i);
    std::partial_sort(mass.begin(), mass.begin() + std::min<std::ptrdiff_t>(2, k), mass.end(), std::greater<>());
    const double best = mass[0] + (k > 1 ? mass[1] : 0.0);
    return std::min(1.0, best / total);
}

}  // namespace htrm
