#include "streamfuse/sampling.hpp"

#include <cmath>

#include "streamfuse/errors.hpp"

namespace streamfuse {

std::vector<std::int64_t> uniform_sample_indices(std::int64_t num_frames,
                                                 std::int64_t count) {
  if (num_frames < 1) {
    raise(ErrorCode::dim_mismatch, "uniform_sample_indices needs num_frames >= 1");
  }
  if (count < 1) {
    raise(ErrorCode::dim_mismatch, "uniform_sample_indices needs count >= 1");
  }
  std::vector<std::int64_t> indices(static_cast<std::size_t>(count));
  for (std::int64_t j = 0; j < count; ++j) {
    indices[static_cast<std::size_t>(j)] = (j * num_frames) / count;
  }
  return indices;
}

std::vector<std::int64_t> proposal_sample_indices(const VideoRecord& record,
                                                  std::int64_t count) {
  if (record.proposals.empty()) {
    raise(ErrorCode::missing_data,
          "video '" + record.id +
              "' has no proposals; fall back to uniform_sample_indices");
  }
  std::int64_t total = 0;
  for (const auto& interval : record.proposals) total += interval.length();

  const auto offsets = uniform_sample_indices(total, count);
  std::vector<std::int64_t> frames;
  frames.reserve(offsets.size());
  for (const std::int64_t offset : offsets) {
    // Walk the concatenated intervals to the absolute frame.
    std::int64_t remaining = offset;
    for (const auto& interval : record.proposals) {
      if (remaining < interval.length()) {
        frames.push_back(interval.start_frame + remaining);
        break;
      }
      remaining -= interval.length();
    }
  }
  return frames;
}

ClipSchedule clip_starts(std::int64_t num_frames, std::int64_t clip_len,
                         double overlap) {
  if (clip_len < 1) {
    raise(ErrorCode::dim_mismatch, "clip_len must be >= 1");
  }
  if (overlap < 0.0 || overlap >= 1.0) {
    raise(ErrorCode::dim_mismatch, "clip overlap must be in [0, 1)");
  }
  ClipSchedule schedule;
  if (num_frames < clip_len) {
    schedule.starts.push_back(0);
    schedule.padded = true;
    return schedule;
  }
  const auto stride = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::llround(static_cast<double>(clip_len) *
                                                (1.0 - overlap))));
  for (std::int64_t start = 0; start + clip_len <= num_frames; start += stride) {
    schedule.starts.push_back(start);
  }
  return schedule;
}

}  // namespace streamfuse
