#include "sisl/model_io.hpp"

#include <cstring>

#include "sisl/binary_io.hpp"
#include "sisl/error.hpp"

namespace sisl {

namespace {

constexpr char kModelMagic[8] = {'S', 'I', 'S', 'L', 'M', 'O', 'D', 'L'};
constexpr char kArraysMagic[8] = {'S', 'I', 'S', 'L', 'A', 'R', 'R', 'S'};
constexpr std::size_t kChecksumStart = 12;  // magic + version

void put_arrays(binio::Writer& w, const std::map<std::string, NamedArray>& arrays) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(arrays.size()));
    for (const auto& [name, arr] : arrays) {
        w.put_string(name);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(arr.shape.size()));
        for (int d : arr.shape) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
        w.put_bytes(arr.values.data(), arr.values.size() * sizeof(float));
    }
}

std::map<std::string, NamedArray> get_arrays(binio::Reader& r, const std::string& what) {
    std::map<std::string, NamedArray> arrays;
    const auto count = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = r.get_string();
        NamedArray arr;
        const auto rank = r.get<std::uint32_t>();
        if (rank > 8) throw DataError(what + ": implausible rank for " + name);
        std::size_t n = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            arr.shape.push_back(static_cast<int>(r.get<std::uint32_t>()));
            n *= static_cast<std::size_t>(arr.shape.back());
        }
        if (n * sizeof(float) > r.remaining()) throw DataError(what + ": truncated array " + name);
        arr.values.resize(n);
        r.get_bytes(arr.values.data(), n * sizeof(float));
        if (!arrays.emplace(std::move(name), std::move(arr)).second) {
            throw DataError(what + ": duplicate array name");
        }
    }
    return arrays;
}

void put_checksum(binio::Writer& w) {
    const auto& b = w.bytes();
    const std::uint64_t sum = binio::fnv1a64(b.data() + kChecksumStart, b.size() - kChecksumStart);
    w.put<std::uint64_t>(sum);
}

// Verifies magic, version and checksum; returns a reader positioned after the version.
binio::Reader open_container(const std::vector<std::uint8_t>& bytes, const char (&magic)[8],
                             const std::string& what, std::uint32_t* version_out) {
    if (bytes.size() < kChecksumStart + sizeof(std::uint64_t) ||
        std::memcmp(bytes.data(), magic, sizeof(magic)) != 0) {
        throw DataError(what + ": bad magic, not a " + std::string(magic, 8) + " file");
    }
    std::uint32_t version;
    std::memcpy(&version, bytes.data() + 8, sizeof(version));
    if (version > kModelFormatVersion) {
        throw DataError(what + ": format version " + std::to_string(version) +
                        " is newer than the supported version " + std::to_string(kModelFormatVersion));
    }
    if (version == 0) throw DataError(what + ": invalid format version 0");
    const std::size_t payload_end = bytes.size() - sizeof(std::uint64_t);
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + payload_end, sizeof(stored));
    const std::uint64_t actual = binio::fnv1a64(bytes.data() + kChecksumStart, payload_end - kChecksumStart);
    if (stored != actual) throw DataError(what + ": checksum mismatch");
    if (version_out) *version_out = version;
    return binio::Reader(bytes.data() + kChecksumStart, payload_end - kChecksumStart, what);
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const ModelState& model) {
    binio::Writer w;
    w.put_bytes(kModelMagic, sizeof(kModelMagic));
    w.put<std::uint32_t>(model.format_version);
    w.put<std::uint64_t>(model.training_steps);
    w.put_string(to_canonical_text(model.config));
    put_arrays(w, model.weights);
    put_checksum(w);
    return std::move(w.bytes());
}

ModelState deserialize_model(const std::vector<std::uint8_t>& bytes, const std::string& what) {
    ModelState model;
    binio::Reader r = open_container(bytes, kModelMagic, what, &model.format_version);
    model.training_steps = r.get<std::uint64_t>();
    model.config = parse_canonical_text(r.get_string());
    model.weights = get_arrays(r, what);
    if (r.remaining() != 0) throw DataError(what + ": trailing bytes");
    return model;
}

void save_model(const ModelState& model, const std::filesystem::path& path) {
    binio::write_file(path.string(), serialize_model(model));
}

ModelState load_model(const std::filesystem::path& path) {
    return deserialize_model(binio::read_file(path.string()), path.string());
}

void save_named_arrays(const std::map<std::string, NamedArray>& arrays, std::uint64_t counter,
                       const std::filesystem::path& path) {
    binio::Writer w;
    w.put_bytes(kArraysMagic, sizeof(kArraysMagic));
    w.put<std::uint32_t>(kModelFormatVersion);
    w.put<std::uint64_t>(counter);
    put_arrays(w, arrays);
    put_checksum(w);
    binio::write_file(path.string(), w.bytes());
}

std::map<std::string, NamedArray> load_named_arrays(const std::filesystem::path& path, std::uint64_t& counter) {
    const auto bytes = binio::read_file(path.string());
    binio::Reader r = open_container(bytes, kArraysMagic, path.string(), nullptr);
    counter = r.get<std::uint64_t>();
    auto arrays = get_arrays(r, path.string());
    if (r.remaining() != 0) throw DataError(path.string() + ": trailing bytes");
    return arrays;
}

}  // namespace sisl
