#include "streamfuse/manifest.hpp"

#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "streamfuse/errors.hpp"

namespace streamfuse {

using nlohmann::json;

std::vector<std::string> validate_manifest(const DatasetManifest& manifest) {
  std::vector<std::string> violations;

  if (manifest.class_names.empty()) {
    violations.push_back("class_names must be non-empty");
  }
  std::unordered_set<std::string> seen_classes;
  for (const auto& name : manifest.class_names) {
    if (!seen_classes.insert(name).second) {
      violations.push_back("duplicate class name '" + name + "'");
    }
  }

  const auto num_classes = static_cast<std::int32_t>(manifest.class_names.size());
  std::unordered_set<std::string> seen_ids;
  for (const auto& video : manifest.videos) {
    if (!seen_ids.insert(video.id).second) {
      violations.push_back("duplicate video id '" + video.id + "'");
    }
    if (video.label && (*video.label < 0 || *video.label >= num_classes)) {
      violations.push_back("video '" + video.id + "' label " +
                           std::to_string(*video.label) +
                           " outside class range [0, " +
                           std::to_string(num_classes) + ")");
    }
    if (video.num_frames < 1) {
      violations.push_back("video '" + video.id + "' must have num_frames >= 1");
    }
    for (const auto& interval : video.proposals) {
      if (interval.start_frame < 0 || interval.start_frame > interval.end_frame ||
          interval.end_frame >= video.num_frames) {
        violations.push_back("video '" + video.id + "' proposal [" +
                             std::to_string(interval.start_frame) + ", " +
                             std::to_string(interval.end_frame) +
                             "] outside frame range [0, " +
                             std::to_string(video.num_frames) + ")");
      }
    }
  }
  return violations;
}

namespace {

json interval_to_json(const TemporalInterval& interval) {
  return json::array({interval.start_frame, interval.end_frame});
}

TemporalInterval interval_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) {
    raise(ErrorCode::bad_format, "proposal must be a [start, end] pair");
  }
  TemporalInterval interval;
  interval.start_frame = j.at(0).get<std::int64_t>();
  interval.end_frame = j.at(1).get<std::int64_t>();
  return interval;
}

}  // namespace

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    raise(ErrorCode::missing_data, "cannot open manifest " + path.string());
  }
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    raise(ErrorCode::bad_format, "manifest " + path.string() + ": " + e.what());
  }

  DatasetManifest manifest;
  try {
    manifest.class_names = doc.at("class_names").get<std::vector<std::string>>();
    for (const auto& jv : doc.at("videos")) {
      VideoRecord video;
      video.id = jv.at("id").get<std::string>();
      video.subset = subset_from_string(jv.at("subset").get<std::string>());
      if (jv.contains("label") && !jv.at("label").is_null()) {
        video.label = jv.at("label").get<std::int32_t>();
      }
      video.num_frames = jv.at("num_frames").get<std::int64_t>();
      if (jv.contains("proposals")) {
        for (const auto& ji : jv.at("proposals")) {
          video.proposals.push_back(interval_from_json(ji));
        }
      }
      manifest.videos.push_back(std::move(video));
    }
  } catch (const json::exception& e) {
    raise(ErrorCode::bad_format, "manifest " + path.string() + ": " + e.what());
  }
  return manifest;
}

void write_manifest(const DatasetManifest& manifest,
                    const std::filesystem::path& path) {
  json doc;
  doc["class_names"] = manifest.class_names;
  json videos = json::array();
  for (const auto& video : manifest.videos) {
    json jv;
    jv["id"] = video.id;
    jv["subset"] = to_string(video.subset);
    if (video.label) jv["label"] = *video.label;
    jv["num_frames"] = video.num_frames;
    if (!video.proposals.empty()) {
      json intervals = json::array();
      for (const auto& interval : video.proposals) {
        intervals.push_back(interval_to_json(interval));
      }
      jv["proposals"] = intervals;
    }
    videos.push_back(std::move(jv));
  }
  doc["videos"] = std::move(videos);

  std::ofstream out(path);
  if (!out) {
    raise(ErrorCode::missing_data, "cannot write manifest " + path.string());
  }
  out << doc.dump(2) << '\n';
}

}  // namespace streamfuse
