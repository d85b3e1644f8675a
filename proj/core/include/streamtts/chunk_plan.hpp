#pragma once

#include <cstddef>

namespace streamtts {

/// One post-net work item: refine frames [start, end) using the buffered
/// window [start - left_ctx, end + right_ctx). Indices are absolute frame numbers.
struct ChunkPlan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::size_t left_ctx = 0;
    std::size_t right_ctx = 0;
    bool is_first = false;     // start == 0
    bool is_last = false;      // end is the final frame of the utterance
    bool reaches_end = false;  // window ends at the final frame (right_ctx may be short)

    std::size_t span() const { return end - start; }
    std::size_t window_first() const { return start - left_ctx; }
    std::size_t window_size() const { return left_ctx + span() + right_ctx; }
    bool reaches_start() const { return start == left_ctx; }

    bool operator==(const ChunkPlan&) const = default;
};

}  // namespace streamtts
