#include "block_sampler.hpp"

#include <algorithm>
#include <cmath>

#include "field_kernel.hpp"
#include "htrm/errors.hpp"

namespace htrm::detail {

namespace {

// Fills the grid; cells flagged large get v in (0, p0), the rest v in (p0, 1).
void fill_conditioned(NoiseGrid& g, const TailModel& tail, double p0, double pc, RngStream& rng) {
    const auto f = static_cast<std::uint64_t>(g.size());
    // Index of the first large cell given at least one: truncated geometric on [0, f).
    const double x = std::log1p(-rng.uniform() * pc) / std::log1p(-p0);
    std::uint64_t next = std::min<std::uint64_t>(static_cast<std::uint64_t>(std::max(0.0, std::floor(x))), f - 1);
    for (std::uint64_t idx = 0; idx < f; ++idx) {
        double v;
        if (idx == next) {
            v = p0 * rng.uniform();
            const std::uint64_t gap = rng.geometric(p0);
            next = gap >= f ? f : std::min<std::uint64_t>(f, idx + 1 + gap);
        } else {
            v = p0 + (1.0 - p0) * rng.uniform();
        }
        const double s = rng.uniform();
        g.zs[idx] = tail.from_uniforms(v, s);
        g.auxs[idx] = rng.next_u32();
    }
}

void fill_plain(NoiseGrid& g, const TailModel& tail, RngStream& rng) {
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        const double v = rng.uniform();
        const double s = rng.uniform();
        g.zs[idx] = tail.from_uniforms(v, s);
        g.auxs[idx] = rng.next_u32();
    }
}

// Noise for the block plus a border: cells of the block's own footprint are copied, the rest drawn.
NoiseGrid widen(const NoiseGrid& core, Eigen::Index margin, const TailModel& tail, RngStream& rng) {
    const Eigen::Index m = core.m;
    NoiseGrid ext(core.rows + 2 * margin, core.cols + 2 * margin, m);
    for (Eigen::Index i = -m; i < ext.rows; ++i)
        for (Eigen::Index j = -m; j < ext.cols; ++j) {
            const Eigen::Index ci = i - margin, cj = j - margin;
            const auto idx = ext.index(i, j);
            if (ci >= -m && ci < core.rows && cj >= -m && cj < core.cols) {
                ext.zs[idx] = core.z(ci, cj);
                ext.auxs[idx] = core.aux(ci, cj);
            } else {
                const double v = rng.uniform();
                const double s = rng.uniform();
                ext.zs[idx] = tail.from_uniforms(v, s);
                ext.auxs[idx] = rng.next_u32();
            }
        }
    return ext;
}

}  // namespace

BlockRun run_block_exceedances(const FieldModel& model, Eigen::Index r, double threshold,
                               std::uint64_t total_blocks, RngStream& rng,
                               const std::function<bool(const Eigen::MatrixXd&)>& on_accept,
                               Eigen::Index margin) {
    if (r < 1) throw ConfigError("block side r must be >= 1");
    if (margin < 0) throw ConfigError("block margin must be >= 0");
    BlockRun run;
    NoiseGrid grid(r, r, model.m());
    const double f = static_cast<double>(grid.size());
    const double p0 = model.noise().envelope_cutoff(threshold / model.dominance_constant());
    const bool conditioned = p0 < 1.0;
    const double pc = conditioned ? -std::expm1(f * std::log1p(-p0)) : 1.0;

    std::uint64_t pos = 0;
    while (pos < total_blocks) {
        if (conditioned) {
            const std::uint64_t gap = rng.geometric(pc);
            if (gap >= total_blocks - pos) break;
            pos += gap;
            fill_conditioned(grid, model.noise(), p0, pc, rng);
        } else {
            fill_plain(grid, model.noise(), rng);
        }
        ++run.candidates;
        const Eigen::MatrixXd block = apply_filter(model, grid);
        ++pos;
        if (block.cwiseAbs().maxCoeff() > threshold) {
            ++run.accepted;
            const bool more = margin == 0
                                  ? on_accept(block)
                                  : on_accept(apply_filter(model, widen(grid, margin, model.noise(), rng)));
            if (!more) {
                run.blocks = pos;
                return run;
            }
        }
    }
    run.blocks = total_blocks;
    return run;
}

}  // namespace htrm::detail
