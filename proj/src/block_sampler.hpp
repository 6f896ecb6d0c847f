#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "htrm/field_models.hpp"
#include "htrm/rng.hpp"

namespace htrm::detail {

struct BlockRun {
    std::uint64_t blocks = 0;      // blocks examined (including skipped non-candidates)
    std::uint64_t candidates = 0;  // blocks actually generated
    std::uint64_t accepted = 0;    // blocks with max |X| > threshold
};

// Scans total_blocks independent r x r field blocks and hands every block with
// max |X| > threshold to on_accept (which returns false to stop early).
//
// A block can only exceed the threshold when one of its (r+m)^2 noise magnitudes exceeds
// threshold / dominance_constant. Blocks without such a noise value are skipped with geometric
// gaps, and candidate blocks are drawn from the noise law conditioned on having at least one,
// so the accepted blocks have exactly the law of brute-force generation.
//
// With margin > 0 the accepted block is passed with a border of that width, the r x r block
// sitting at offset (margin, margin). Border noise lies outside the block's footprint and is
// drawn unconditionally.
BlockRun run_block_exceedances(const FieldModel& model, Eigen::Index r, double threshold,
                               std::uint64_t total_blocks, RngStream& rng,
                               const std::function<bool(const Eigen::MatrixXd&)>& on_accept,
                               Eigen::Index margin = 0);

}  // namespace htrm::detail
