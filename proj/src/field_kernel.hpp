#pragma once

// Shared filter kernels. Noise is any object with z(i, j) and aux(i, j) accessors.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "htrm/field_models.hpp"
#include "htrm/rng.hpp"

namespace htrm::detail {

inline double lattice_v(const std::array<std::uint32_t, 4>& w) {
    return u64_to_open01((static_cast<std::uint64_t>(w[0]) << 32) | w[1]);
}

inline double lattice_s(const std::array<std::uint32_t, 4>& w) { return u32_to_open01(w[2]); }

inline bool bernoulli_word(std::uint32_t aux, double q) {
    return static_cast<double>(aux) < q * 4294967296.0;
}

inline double rademacher_word(std::uint32_t aux) { return (aux >> 31) ? -1.0 : 1.0; }

template <class Noise>
double field_value(const FieldModel& model, const Noise& noise, Eigen::Index i, Eigen::Index t) {
    switch (model.family()) {
        case FieldFamily::Iid:
            return noise.z(i, t);
        case FieldFamily::LinearMA: {
            const auto& h = model.filter();
            double acc = 0.0;
            for (Eigen::Index k = 0; k < h.rows(); ++k)
                for (Eigen::Index l = 0; l < h.cols(); ++l)
                    if (h(k, l) != 0.0) acc += h(k, l) * noise.z(i - k, t - l);
            return acc;
        }
        case FieldFamily::MaxLinear: {
            const auto& h = model.filter();
            double best = -std::numeric_limits<double>::infinity();
            for (Eigen::Index k = 0; k < h.rows(); ++k)
                for (Eigen::Index l = 0; l < h.cols(); ++l) best = std::max(best, h(k, l) * noise.z(i - k, t - l));
            return best;
        }
        case FieldFamily::RandomCoeffBernoulli: {
            const double e = bernoulli_word(noise.aux(i - 1, t), model.q()) ? 1.0 : 0.0;
            return 4.0 * noise.z(i, t) + e * noise.z(i - 1, t) + 3.0 * noise.z(i - 1, t - 1);
        }
        case FieldFamily::RademacherSum: {
            const int m = model.m();
            double acc = 0.0;
            for (int j = 0; j <= m; ++j)
                for (int s = 0; s <= m; ++s) acc += noise.z(i - j, t - s);
            return rademacher_word(noise.aux(i, t)) * acc;
        }
    }
    return 0.0;
}

// Dense noise on [-m, rows) x [-m, cols).
struct NoiseGrid {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    Eigen::Index m = 0;
    std::vector<double> zs;
    std::vector<std::uint32_t> auxs;

    NoiseGrid(Eigen::Index rows_, Eigen::Index cols_, Eigen::Index m_)
        : rows(rows_), cols(cols_), m(m_),
          zs(static_cast<std::size_t>((rows_ + m_) * (cols_ + m_))),
          auxs(zs.size()) {}

    std::size_t index(Eigen::Index i, Eigen::Index j) const {
        return static_cast<std::size_t>((i + m) * (cols + m) + (j + m));
    }
    std::size_t size() const { return zs.size(); }
    double z(Eigen::Index i, Eigen::Index j) const { return zs[index(i, j)]; }
    std::uint32_t aux(Eigen::Index i, Eigen::Index j) const { return auxs[index(i, j)]; }
};

// On-demand counter-based noise; matches the dense grid filled from the same seed.
struct LatticeNoise {
    const TailModel* tail;
    std::uint64_t seed;
    double z(Eigen::Index i, Eigen::Index j) const {
        const auto w = lattice_words(seed, i, j);
        return tail->from_uniforms(lattice_v(w), lattice_s(w));
    }
    std::uint32_t aux(Eigen::Index i, Eigen::Index j) const { return lattice_words(seed, i, j)[3]; }
};

inline void fill_from_lattice(NoiseGrid& g, const TailModel& tail, std::uint64_t seed) {
    for (Eigen::Index i = -g.m; i < g.rows; ++i)
        for (Eigen::Index j = -g.m; j < g.cols; ++j) {
            const auto w = lattice_words(seed, i, j);
            const auto idx = g.index(i, j);
            g.zs[idx] = tail.from_uniforms(lattice_v(w), lattice_s(w));
            g.auxs[idx] = w[3];
        }
}

inline Eigen::MatrixXd apply_filter(const FieldModel& model, const NoiseGrid& g) {
    Eigen::MatrixXd out(g.rows, g.cols);
    for (Eigen::Index i = 0; i < g.rows; ++i)
        for (Eigen::Index t = 0; t < g.cols; ++t) out(i, t) = field_value(model, g, i, t);
    return out;
}

}  // namespace htrm::detail
