#include "sisl/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "sisl/error.hpp"
#include "sisl/image.hpp"

namespace sisl {

const char* to_string(Label label) {
    return label == Label::spliced ? "spliced" : "authentic";
}

Label parse_label(const std::string& text) {
    if (text == "authentic") return Label::authentic;
    if (text == "spliced") return Label::spliced;
    throw DataError("unknown label '" + text + "' (expected authentic or spliced)");
}

const ManifestEntry* DatasetManifest::find(const std::string& id) const {
    for (const auto& e : entries) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::filesystem::path resolve(const std::string& p, const std::filesystem::path& base) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) return base / path;
    return path;
}

}  // namespace

DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
    DatasetManifest manifest;
    std::set<std::string> ids;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(trim(field));
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        if (fields.size() != 4) {
            throw DataError("manifest line " + std::to_string(line_no) + ": expected 4 fields, got " +
                            std::to_string(fields.size()));
        }
        ManifestEntry entry;
        entry.image_path = resolve(fields[0], base_dir);
        entry.id = fields[1];
        if (!fields[2].empty()) entry.mask_path = resolve(fields[2], base_dir);
        entry.label = parse_label(fields[3]);
        if (entry.id.empty()) {
            throw DataError("manifest line " + std::to_string(line_no) + ": empty id");
        }
        if (!ids.insert(entry.id).second) {
            throw DataError("manifest line " + std::to_string(line_no) + ": duplicate id " + entry.id);
        }
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read manifest " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str(), path.parent_path());
}

namespace {

std::string relative_to(const std::filesystem::path& p, const std::filesystem::path& base) {
    if (base.empty()) return p.generic_string();
    const auto rel = p.lexically_relative(base);
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
    return p.generic_string();
}

}  // namespace

std::string format_manifest(const DatasetManifest& manifest, const std::filesystem::path& base_dir) {
    std::ostringstream out;
    for (const auto& e : manifest.entries) {
        out << relative_to(e.image_path, base_dir) << ',' << e.id << ','
            << (e.mask_path ? relative_to(*e.mask_path, base_dir) : std::string{}) << ','
            << to_string(e.label) << '\n';
    }
    return out.str();
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write manifest " + path.string());
    out << format_manifest(manifest, path.parent_path());
}

void validate_masks(const DatasetManifest& manifest) {
    for (const auto& e : manifest.entries) {
        if (!e.mask_path) continue;
        const auto image = load_image(e.image_path, e.id);
        const auto mask = load_mask(*e.mask_path);
        if (mask.height != image.height || mask.width != image.width) {
            throw DataError("mask " + e.mask_path->string() + " is " + std::to_string(mask.height) + "x" +
                            std::to_string(mask.width) + " but image " + e.id + " is " +
                            std::to_string(image.height) + "x" + std::to_string(image.width));
        }
    }
}

}  // namespace sisl
