#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "streamfuse/kmeans.hpp"
#include "streamfuse/pca.hpp"
#include "streamfuse/types.hpp"

namespace streamfuse {

// The three feature-space recipes composed by the pipeline, plus a
// passthrough for streams that arrive pre-encoded at video level.
enum class EncodeMode { none, mean_pool_l1, clip_pca_pool, lcd_vlad };

std::string to_string(EncodeMode mode);
EncodeMode encode_mode_from_string(const std::string& name);

struct EncoderConfig {
  EncodeMode mode = EncodeMode::none;
  Eigen::Index pca_out_dim = 0;   // 0 = no projection
  Eigen::Index vlad_centers = 256;
  int vlad_k = 5;
  std::int64_t clip_len = 16;
  double clip_overlap = 0.5;      // fraction of clip_len shared by neighbours
  std::int64_t sample_count = 25; // frames sampled per video
  std::int64_t descriptors_per_frame = 1;  // lcd_vlad: rows per frame
  bool use_proposals = false;     // restrict sampling to annotated proposals
  std::uint64_t seed = 0;         // codebook initialization
};

struct EncoderModels {
  std::optional<PcaModel> pca;
  std::optional<Codebook> codebook;
};

// Frame-level rows -> clip-level rows on the stride schedule, averaging each
// clip window. Videos shorter than one clip become a single clip padded by
// repeating the last frame.
FeatureSet segment_clips(const FeatureSet& frames, std::int64_t clip_len,
                         double overlap);

// One video of the LCD/VLAD-k chain: per frame, project the frame's local
// descriptors and VLAD-encode them; mean-pool the per-frame encodings.
Eigen::VectorXd encode_lcd_vlad_video(
    const std::vector<Eigen::MatrixXd>& frame_descriptors, const PcaModel& pca,
    const Codebook& codebook, int k);

// Fit whatever the mode needs (PCA and/or codebook) on the train subset.
EncoderModels fit_encoder(const FeatureSet& features,
                          const DatasetManifest& manifest,
                          const EncoderConfig& config);

// Apply the recipe to every video in the feature set, producing one
// video-level row per video in the input's order.
FeatureSet encode_stream(const FeatureSet& features,
                         const DatasetManifest& manifest,
                         const EncoderConfig& config,
                         const EncoderModels& models);

// Persist/recover the fitted models under `<dir>/<stem>.pca.json` and
// `<dir>/<stem>.codebook.json`, whichever the mode uses.
void save_encoder_models(const EncoderModels& models,
                         const std::filesystem::path& dir,
                         const std::string& stem);
EncoderModels load_encoder_models(const EncoderConfig& config,
                                  const std::filesystem::path& dir,
                                  const std::string& stem);

}  // namespace streamfuse
