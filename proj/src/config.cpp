#include "sisl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "sisl/error.hpp"

namespace sisl {

using nlohmann::json;

void PipelineConfig::validate() const {
    if (encoder.patch.height < 8 || encoder.patch.width < 8) throw UsageError("patch size must be at least 8x8");
    if (encoder.embedding_dim < 1) throw UsageError("embedding_dim must be >= 1");
    if (encoder.base_width < 0) throw UsageError("base_width must be >= 0");
    if (inference.stride < 1) throw UsageError("stride must be >= 1");
    if (inference.batch_size < 1) throw UsageError("inference batch_size must be >= 1");
    if (workers < 1) throw UsageError("workers must be >= 1");
    train.validate();
    meanshift.validate();
    thresholds.validate();
    if (synth.train_images < 0 || synth.test_count < 0) throw UsageError("synth counts must be >= 0");
    if (synth.region_min < 1 || synth.region_max < synth.region_min) throw UsageError("synth region range is invalid");
    if (synth.region_max > synth.image_height || synth.region_max > synth.image_width) {
        throw UsageError("synth region_max exceeds the image size");
    }
    if (synth.signature_a == synth.signature_b) throw UsageError("synth signatures must differ");
}

namespace {

// Reads keys out of one JSON object, rejecting any key it was not asked for.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw UsageError("config: '" + name_ + "' must be an object");
    }
    ~Section() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [key, _] : j_.items()) {
            if (!seen_.count(key)) throw UsageError("config: unknown key '" + name_ + "." + key + "'");
        }
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw UsageError("config: bad value for '" + name_ + "." + key + "'");
        }
    }
    template <typename Enum, typename Parse>
    void get_enum(const char* key, Enum& out, Parse parse) {
        std::string text;
        get(key, text);
        if (!text.empty()) out = parse(text);
    }
    void get_path(const char* key, std::filesystem::path& out, const std::filesystem::path& base) {
        std::string text;
        get(key, text);
        if (text.empty()) return;
        std::filesystem::path p(text);
        out = p.is_relative() && !base.empty() ? base / p : p;
    }
    bool has(const char* key) {
        seen_.insert(key);
        return j_.contains(key);
    }
    const json& at(const char* key) const { return j_.at(key); }
    std::string child(const char* key) const { return name_ + "." + key; }

private:
    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

void read_signature(const json& j, const std::string& name, SignatureParams& s) {
    Section sec(j, name);
    sec.get("noise_sigma", s.noise_sigma);
    sec.get("spectrum_center", s.spectrum_center);
    sec.get("spectrum_width", s.spectrum_width);
    sec.get("quant_step", s.quant_step);
}

json write_signature(const SignatureParams& s) {
    return {{"noise_sigma", s.noise_sigma},
            {"spectrum_center", s.spectrum_center},
            {"spectrum_width", s.spectrum_width},
            {"quant_step", s.quant_step}};
}

std::string absolute_or_empty(const std::filesystem::path& p) {
    return p.empty() ? std::string() : std::filesystem::absolute(p).lexically_normal().string();
}

}  // namespace

PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    PipelineConfig c;
    {
        Section top(root, "config");
        top.get("seed", c.seed);
        top.get("workers", c.workers);
        top.get_enum("detection_method", c.method, parse_detection_method);
        top.get_enum("normalization", c.normalization, parse_normalization);

        if (top.has("encoder")) {
            Section s(top.at("encoder"), "encoder");
            s.get_enum("input_mode", c.encoder.input_mode, parse_input_mode);
            s.get_enum("backbone", c.encoder.backbone, parse_backbone);
            s.get("embedding_dim", c.encoder.embedding_dim);
            s.get("base_width", c.encoder.base_width);
            s.get("patch_height", c.encoder.patch.height);
            s.get("patch_width", c.encoder.patch.width);
        }
        if (top.has("train")) {
            Section s(top.at("train"), "train");
            s.get("batch_pairs", c.train.batch_pairs);
            s.get("temperature", c.train.temperature);
            s.get("peak_lr", c.train.peak_lr);
            s.get("final_lr", c.train.final_lr);
            s.get("warmup_steps", c.train.warmup_steps);
            s.get("total_steps", c.train.total_steps);
            s.get("adam_beta1", c.train.adam_beta1);
            s.get("adam_beta2", c.train.adam_beta2);
            s.get("adam_epsilon", c.train.adam_epsilon);
            s.get("symmetric_loss", c.train.symmetric_loss);
            s.get("patches_per_image", c.train.patches_per_image);
            s.get("checkpoint_every", c.train.checkpoint_every);
        }
        if (top.has("meanshift")) {
            Section s(top.at("meanshift"), "meanshift");
            if (s.has("bandwidth")) {
                const json& b = s.at("bandwidth");
                if (b.is_string() && b.get<std::string>() == "auto") {
                    c.meanshift.bandwidth.reset();
                } else if (b.is_number()) {
                    c.meanshift.bandwidth = b.get<double>();
                } else {
                    throw UsageError("config: meanshift.bandwidth must be a number or \"auto\"");
                }
            }
            s.get("tolerance", c.meanshift.tolerance);
            s.get("max_iterations", c.meanshift.max_iterations);
            s.get_enum("aggregation", c.meanshift.aggregation, parse_aggregation);
        }
        if (top.has("thresholds")) {
            Section s(top.at("thresholds"), "thresholds");
            s.get("delta_b", c.thresholds.delta_b);
            s.get("delta_l", c.thresholds.delta_l);
            s.get("rho_threshold", c.thresholds.rho_threshold);
        }
        if (top.has("inference")) {
            Section s(top.at("inference"), "inference");
            s.get("stride", c.inference.stride);
            s.get("batch_size", c.inference.batch_size);
        }
        if (top.has("synth")) {
            Section s(top.at("synth"), "synth");
            s.get("train_images", c.synth.train_images);
            s.get("test_count", c.synth.test_count);
            s.get("image_height", c.synth.image_height);
            s.get("image_width", c.synth.image_width);
            s.get("region_min", c.synth.region_min);
            s.get("region_max", c.synth.region_max);
            if (s.has("signature_a")) read_signature(s.at("signature_a"), s.child("signature_a"), c.synth.signature_a);
            if (s.has("signature_b")) read_signature(s.at("signature_b"), s.child("signature_b"), c.synth.signature_b);
        }
        if (top.has("paths")) {
            Section s(top.at("paths"), "paths");
            s.get_path("model", c.paths.model, base_dir);
            s.get_path("train_manifest", c.paths.train_manifest, base_dir);
            s.get_path("test_manifest", c.paths.test_manifest, base_dir);
            s.get_path("output_dir", c.paths.output_dir, base_dir);
        }
    }
    c.train.seed = c.seed;
    c.validate();
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path());
}

std::string format_config(const PipelineConfig& c) {
    json root;
    root["seed"] = c.seed;
    root["workers"] = c.workers;
    root["detection_method"] = to_string(c.method);
    root["normalization"] = to_string(c.normalization);
    root["encoder"] = {{"input_mode", to_string(c.encoder.input_mode)},
                       {"backbone", to_string(c.encoder.backbone)},
                       {"embedding_dim", c.encoder.embedding_dim},
                       {"base_width", c.encoder.base_width},
                       {"patch_height", c.encoder.patch.height},
                       {"patch_width", c.encoder.patch.width}};
    root["train"] = {{"batch_pairs", c.train.batch_pairs},
                     {"temperature", c.train.temperature},
                     {"peak_lr", c.train.peak_lr},
                     {"final_lr", c.train.final_lr},
                     {"warmup_steps", c.train.warmup_steps},
                     {"total_steps", c.train.total_steps},
                     {"adam_beta1", c.train.adam_beta1},
                     {"adam_beta2", c.train.adam_beta2},
                     {"adam_epsilon", c.train.adam_epsilon},
                     {"symmetric_loss", c.train.symmetric_loss},
                     {"patches_per_image", c.train.patches_per_image},
                     {"checkpoint_every", c.train.checkpoint_every}};
    json ms = {{"tolerance", c.meanshift.tolerance},
               {"max_iterations", c.meanshift.max_iterations},
               {"aggregation", to_string(c.meanshift.aggregation)}};
    if (c.meanshift.bandwidth) ms["bandwidth"] = *c.meanshift.bandwidth;
    else ms["bandwidth"] = "auto";
    root["meanshift"] = ms;
    root["thresholds"] = {{"delta_b", c.thresholds.delta_b},
                          {"delta_l", c.thresholds.delta_l},
                          {"rho_threshold", c.thresholds.rho_threshold}};
    root["inference"] = {{"stride", c.inference.stride}, {"batch_size", c.inference.batch_size}};
    root["synth"] = {{"train_images", c.synth.train_images},
                     {"test_count", c.synth.test_count},
                     {"image_height", c.synth.image_height},
                     {"image_width", c.synth.image_width},
                     {"region_min", c.synth.region_min},
                     {"region_max", c.synth.region_max},
                     {"signature_a", write_signature(c.synth.signature_a)},
                     {"signature_b", write_signature(c.synth.signature_b)}};
    root["paths"] = {{"model", absolute_or_empty(c.paths.model)},
                     {"train_manifest", absolute_or_empty(c.paths.train_manifest)},
                     {"test_manifest", absolute_or_empty(c.paths.test_manifest)},
                     {"output_dir", absolute_or_empty(c.paths.output_dir)}};
    return root.dump(2) + "\n";
}

void save_config(const PipelineConfig& config, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << format_config(config);
}

}  // namespace sisl
