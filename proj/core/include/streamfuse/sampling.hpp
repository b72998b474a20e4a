#pragma once

#include <cstdint>
#include <vector>

#include "streamfuse/types.hpp"

namespace streamfuse {

// index_j = floor(j*N/k) for j = 0..k-1. Non-decreasing, strictly
// increasing when N >= k.
std::vector<std::int64_t> uniform_sample_indices(std::int64_t num_frames,
                                                 std::int64_t count);

// Uniform sampling over the concatenation of the record's proposal
// intervals, mapped back to absolute frame indices. Errors with
// missing_data when there are no proposals; callers fall back to
// uniform_sample_indices.
std::vector<std::int64_t> proposal_sample_indices(const VideoRecord& record,
                                                  std::int64_t count);

struct ClipSchedule {
  std::vector<std::int64_t> starts;
  bool padded = false;  // video shorter than one clip; repeat the last frame
};

// Stride = max(1, round(clip_len*(1-overlap))); starts while start+L <= N.
ClipSchedule clip_starts(std::int64_t num_frames, std::int64_t clip_len,
                         double overlap);

}  // namespace streamfuse
