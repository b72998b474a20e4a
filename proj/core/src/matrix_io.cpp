#include "streamfuse/matrix_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "streamfuse/errors.hpp"

namespace streamfuse {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'F', 'M', 'A', 'T'};

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::missing_data, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

// Little-endian float32 in/out. Assumes IEEE-754 floats on the host,
// byte-swapping is left to the (unsupported) big-endian case.
void append_f32(std::string& buf, float v) {
  static_assert(sizeof(float) == 4);
  char bytes[4];
  std::memcpy(bytes, &v, 4);
  buf.append(bytes, 4);
}

float get_f32(const char* p) {
  float v;
  std::memcpy(&v, p, 4);
  return v;
}

}  // namespace

void write_fmat(const std::filesystem::path& path, const Eigen::MatrixXf& matrix,
                UnitKind kind) {
  if (matrix.cols() < 1) {
    raise(ErrorCode::bad_format, "fmat dim must be >= 1, got " +
                                     std::to_string(matrix.cols()));
  }
  if (!matrix.allFinite()) {
    raise(ErrorCode::non_finite, "refusing to write non-finite values to " +
                                     path.string());
  }

  std::string buf;
  buf.reserve(kFmatHeaderSize +
              static_cast<std::size_t>(matrix.size()) * sizeof(float));
  buf.append(kMagic, 4);
  put_u32(buf, kFmatVersion);
  put_u32(buf, static_cast<std::uint32_t>(matrix.cols()));
  put_u64(buf, static_cast<std::uint64_t>(matrix.rows()));
  buf.push_back(static_cast<char>(kind));

  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      append_f32(buf, matrix(r, c));
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::missing_data, "cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) raise(ErrorCode::missing_data, "short write to " + path.string());
}

Eigen::MatrixXf read_fmat(const std::filesystem::path& path, UnitKind* kind_out) {
  const std::string bytes = read_all(path);
  if (bytes.size() < kFmatHeaderSize) {
    raise(ErrorCode::truncated, path.string() + ": file shorter than header");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    raise(ErrorCode::bad_magic, path.string() + ": magic is not FMAT");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t version = get_u32(p + 4);
  if (version != kFmatVersion) {
    raise(ErrorCode::version_mismatch,
          path.string() + ": version " + std::to_string(version));
  }
  const std::uint32_t dim = get_u32(p + 8);
  const std::uint64_t unit_count = get_u64(p + 12);
  const std::uint8_t kind_byte = p[20];
  if (dim < 1) {
    raise(ErrorCode::bad_format, path.string() + ": header dim 0");
  }
  if (kind_byte > 2) {
    raise(ErrorCode::bad_format,
          path.string() + ": unit_kind byte " + std::to_string(kind_byte));
  }

  const std::uint64_t expected =
      kFmatHeaderSize + unit_count * static_cast<std::uint64_t>(dim) * 4;
  if (bytes.size() != expected) {
    raise(ErrorCode::truncated, path.string() + ": payload is " +
                                    std::to_string(bytes.size() - kFmatHeaderSize) +
                                    " bytes, header declares " +
                                    std::to_string(expected - kFmatHeaderSize));
  }

  Eigen::MatrixXf matrix(static_cast<Eigen::Index>(unit_count),
                         static_cast<Eigen::Index>(dim));
  const char* payload = bytes.data() + kFmatHeaderSize;
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      const float v = get_f32(payload + (r * matrix.cols() + c) * 4);
      if (!std::isfinite(v)) {
        raise(ErrorCode::non_finite, path.string() + ": non-finite value at row " +
                                         std::to_string(r));
      }
      matrix(r, c) = v;
    }
  }
  if (kind_out) *kind_out = static_cast<UnitKind>(kind_byte);
  return matrix;
}

namespace {

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".index.json");
}

}  // namespace

void write_features(const FeatureSet& features, const std::filesystem::path& path) {
  if (auto violations = validate_features(features); !violations.empty()) {
    raise(ErrorCode::bad_format, "invalid FeatureSet: " + violations.front());
  }
  write_fmat(path, features.data, features.unit_kind);

  json doc;
  doc["unit_kind"] = to_string(features.unit_kind);
  json blocks = json::array();
  for (const auto& block : features.video_index) {
    blocks.push_back(json{{"id", block.video_id},
                          {"offset", block.offset},
                          {"count", block.count}});
  }
  doc["videos"] = std::move(blocks);

  std::ofstream out(sidecar_path(path));
  if (!out) raise(ErrorCode::missing_data, "cannot write " + sidecar_path(path).string());
  out << doc.dump(2) << '\n';
}

FeatureSet read_features(const std::filesystem::path& path) {
  FeatureSet features;
  features.data = read_fmat(path, &features.unit_kind);

  std::ifstream in(sidecar_path(path));
  if (!in) {
    raise(ErrorCode::missing_data,
          "missing sidecar index " + sidecar_path(path).string());
  }
  json doc;
  try {
    in >> doc;
    for (const auto& jb : doc.at("videos")) {
      VideoRows block;
      block.video_id = jb.at("id").get<std::string>();
      block.offset = jb.at("offset").get<std::int64_t>();
      block.count = jb.at("count").get<std::int64_t>();
      features.video_index.push_back(std::move(block));
    }
  } catch (const json::exception& e) {
    raise(ErrorCode::bad_format, sidecar_path(path).string() + ": " + e.what());
  }

  if (auto violations = validate_features(features); !violations.empty()) {
    raise(ErrorCode::bad_format,
          path.string() + ": " + violations.front());
  }
  return features;
}

void write_scores(const ScoreMatrix& scores,
                  const std::vector<std::string>& class_names,
                  const std::filesystem::path& path) {
  if (static_cast<Eigen::Index>(scores.video_ids.size()) != scores.scores.rows()) {
    raise(ErrorCode::alignment_mismatch, "score rows do not match video ids");
  }
  if (static_cast<Eigen::Index>(class_names.size()) != scores.scores.cols()) {
    raise(ErrorCode::alignment_mismatch, "score columns do not match class names");
  }
  if (!scores.scores.allFinite()) {
    raise(ErrorCode::non_finite, "refusing to write non-finite scores");
  }

  std::string buf = "video_id";
  for (const auto& name : class_names) {
    buf += ',';
    buf += name;
  }
  buf += '\n';
  char num[40];
  for (Eigen::Index r = 0; r < scores.scores.rows(); ++r) {
    buf += scores.video_ids[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < scores.scores.cols(); ++c) {
      std::snprintf(num, sizeof(num), "%.9g", scores.scores(r, c));
      buf += ',';
      buf += num;
    }
    buf += '\n';
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::missing_data, "cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

// Stream name is the basename with the `.scores.csv` / `.csv` suffix removed.
std::string stream_name_from_path(const std::filesystem::path& path) {
  std::string name = path.filename().string();
  for (const char* suffix : {".scores.csv", ".csv"}) {
    const std::size_t len = std::strlen(suffix);
    if (name.size() > len && name.compare(name.size() - len, len, suffix) == 0) {
      return name.substr(0, name.size() - len);
    }
  }
  return name;
}

}  // namespace

ScoresFile read_scores(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::missing_data, "cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) {
    raise(ErrorCode::bad_format, path.string() + ": empty scores file");
  }
  auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "video_id") {
    raise(ErrorCode::bad_format,
          path.string() + ": header must start with video_id and one class");
  }

  ScoresFile file;
  file.class_names.assign(header.begin() + 1, header.end());
  const std::size_t k = file.class_names.size();

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != k + 1) {
      raise(ErrorCode::bad_format,
            path.string() + ": row '" + fields[0] + "' has " +
                std::to_string(fields.size() - 1) + " scores, expected " +
                std::to_string(k));
    }
    file.scores.video_ids.push_back(fields[0]);
    std::vector<double> row(k);
    for (std::size_t c = 0; c < k; ++c) {
      try {
        std::size_t used = 0;
        row[c] = std::stod(fields[c + 1], &used);
        if (used != fields[c + 1].size()) throw std::invalid_argument(fields[c + 1]);
      } catch (const std::exception&) {
        raise(ErrorCode::bad_format, path.string() + ": bad number '" +
                                         fields[c + 1] + "' in row '" + fields[0] +
                                         "'");
      }
      if (!std::isfinite(row[c])) {
        raise(ErrorCode::non_finite,
              path.string() + ": non-finite score in row '" + fields[0] + "'");
      }
    }
    rows.push_back(std::move(row));
  }

  file.scores.stream_name = stream_name_from_path(path);
  file.scores.scores.resize(static_cast<Eigen::Index>(rows.size()),
                            static_cast<Eigen::Index>(k));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      file.scores.scores(static_cast<Eigen::Index>(r),
                         static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }

  // Flag simplex rows so downstream fusion knows the stream is calibrated.
  file.scores.normalized = true;
  for (Eigen::Index r = 0; r < file.scores.scores.rows() && file.scores.normalized;
       ++r) {
    const double sum = file.scores.scores.row(r).sum();
    if (std::abs(sum - 1.0) > 1e-6 || file.scores.scores.row(r).minCoeff() < 0) {
      file.scores.normalized = false;
    }
  }
  return file;
}

void check_scores_alignment(const ScoresFile& file, const DatasetManifest& manifest) {
  if (file.class_names != manifest.class_names) {
    raise(ErrorCode::alignment_mismatch,
          "scores list " + std::to_string(file.class_names.size()) +
              " classes, manifest has " +
              std::to_string(manifest.class_names.size()) +
              " (names must match in order)");
  }
  std::unordered_map<std::string, int> counts;
  for (const auto& video : manifest.videos) counts.emplace(video.id, 0);
  for (const auto& id : file.scores.video_ids) {
    auto it = counts.find(id);
    if (it == counts.end()) {
      raise(ErrorCode::alignment_mismatch,
            "scored video '" + id + "' is not in the manifest");
    }
    if (++it->second > 1) {
      raise(ErrorCode::alignment_mismatch, "video '" + id + "' scored twice");
    }
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (const char ch : bytes) {
    hash ^= static_cast<unsigned char>(ch);
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string file_checksum(const std::filesystem::path& path) {
  const std::string bytes = read_all(path);
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return std::string(out);
}

}  // namespace streamfuse
