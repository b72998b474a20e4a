#pragma once

#include <filesystem>
#include <vector>

#include "streamfuse/types.hpp"

namespace streamfuse {

// Empty result means every manifest invariant holds; otherwise one
// human-readable violation per breach. Pure: same input, same output.
std::vector<std::string> validate_manifest(const DatasetManifest& manifest);

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest,
                    const std::filesystem::path& path);

}  // namespace streamfuse
