#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "streamfuse/types.hpp"

namespace streamfuse {

// .fmat container: 21-byte header (magic "FMAT", u32 version = 1, u32 dim,
// u64 unit_count, u8 unit_kind), then row-major float32 little-endian
// payload. Sizes declared in the header must match the payload exactly.
inline constexpr std::uint32_t kFmatVersion = 1;
inline constexpr std::size_t kFmatHeaderSize = 21;

void write_fmat(const std::filesystem::path& path, const Eigen::MatrixXf& matrix,
                UnitKind kind);
Eigen::MatrixXf read_fmat(const std::filesystem::path& path,
                          UnitKind* kind_out = nullptr);

// FeatureSet = .fmat plus a `<path>.index.json` sidecar with the video map.
void write_features(const FeatureSet& features, const std::filesystem::path& path);
FeatureSet read_features(const std::filesystem::path& path);

// Scores CSV: header row `video_id,<class_0>,...`, '.' decimal separator,
// '\n' line endings, values at 9 significant digits.
struct ScoresFile {
  ScoreMatrix scores;
  std::vector<std::string> class_names;
};

void write_scores(const ScoreMatrix& scores,
                  const std::vector<std::string>& class_names,
                  const std::filesystem::path& path);
ScoresFile read_scores(const std::filesystem::path& path);

// Throws alignment_mismatch when columns or video ids disagree with the
// manifest (every scored id must exist; class columns must match exactly).
void check_scores_alignment(const ScoresFile& file, const DatasetManifest& manifest);

// FNV-1a 64-bit digest.
std::uint64_t fnv1a64(std::string_view bytes);

// Digest of a file as a fixed-width hex string. Used by the model
// descriptors to pin their .fmat blocks.
std::string file_checksum(const std::filesystem::path& path);

}  // namespace streamfuse
