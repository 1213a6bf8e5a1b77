#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sisl {

enum class Label { authentic, spliced };

const char* to_string(Label label);
Label parse_label(const std::string& text);

struct ManifestEntry {
    std::filesystem::path image_path;
    std::string id;
    std::optional<std::filesystem::path> mask_path;
    Label label = Label::authentic;
};

/// One record per line: `path,id,mask_path,label`. Relative paths in a file are
/// resolved against the manifest's directory. Blank lines and `#` comments are ignored.
struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    std::size_t size() const { return entries.size(); }
    const ManifestEntry* find(const std::string& id) const;
};

DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir = {});
DatasetManifest read_manifest(const std::filesystem::path& path);
/// Paths are written relative to `base_dir` when they live beneath it.
std::string format_manifest(const DatasetManifest& manifest, const std::filesystem::path& base_dir = {});
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Loads every mask and checks it against its image's dimensions.
void validate_masks(const DatasetManifest& manifest);

}  // namespace sisl
