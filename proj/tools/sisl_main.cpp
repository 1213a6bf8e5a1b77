// Command-line front end: train, analyze, detect, localize, eval, synth, bench.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "sisl/commands.hpp"
#include "sisl/error.hpp"
#include "sisl/model_io.hpp"

namespace fs = std::filesystem;
using namespace sisl;

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string out;
    std::optional<double> delta_b;
    std::optional<double> delta_l;
    std::string method;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "pipeline config (JSON)")->required();
    cmd->add_option("--seed", f.seed, "override the config seed");
    cmd->add_option("--workers", f.workers, "worker threads");
    cmd->add_option("--out", f.out, "output directory (default: config paths.output_dir)");
    cmd->add_option("--delta-b", f.delta_b, "detection binarization threshold");
    cmd->add_option("--delta-l", f.delta_l, "localization threshold");
    cmd->add_option("--method", f.method, "detection method: spavg or pctarea");
}

PipelineConfig resolve(const CommonFlags& f, fs::path& out_dir) {
    PipelineConfig c = load_config(f.config);
    if (f.seed) c.seed = c.train.seed = *f.seed;
    if (f.workers) c.workers = *f.workers;
    if (f.delta_b) c.thresholds.delta_b = *f.delta_b;
    if (f.delta_l) c.thresholds.delta_l = *f.delta_l;
    if (!f.method.empty()) c.method = parse_detection_method(f.method);
    if (!f.out.empty()) c.paths.output_dir = f.out;
    if (c.paths.output_dir.empty()) throw UsageError("no output directory: pass --out or set paths.output_dir");
    c.validate();
    out_dir = c.paths.output_dir;
    return c;
}

DatasetManifest test_manifest(PipelineConfig& c, const std::string& override_path) {
    if (!override_path.empty()) c.paths.test_manifest = override_path;
    if (c.paths.test_manifest.empty()) throw UsageError("no manifest: pass --manifest or set paths.test_manifest");
    return read_manifest(c.paths.test_manifest);
}

int batch_status(const std::vector<std::string>& errors) {
    if (errors.empty()) return 0;
    std::cerr << errors.size() << " image(s) failed\n";
    return static_cast<int>(ErrorKind::data);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Patch-consistency splicing detector"};
    app.require_subcommand(1);
    CommonFlags flags;

    auto* train = app.add_subcommand("train", "train the encoder on paths.train_manifest");
    add_common(train, flags);
    bool resume = false;
    train->add_flag("--resume", resume, "continue from the model in the output directory");

    auto* analyze = app.add_subcommand("analyze", "write the response map of one image");
    add_common(analyze, flags);
    std::string image;
    analyze->add_option("image", image, "input image")->required();

    std::string manifest_path;
    auto* detect = app.add_subcommand("detect", "score every image of a manifest");
    add_common(detect, flags);
    detect->add_option("--manifest", manifest_path, "dataset manifest (default: paths.test_manifest)");

    auto* localize = app.add_subcommand("localize", "write localization masks for a manifest");
    add_common(localize, flags);
    localize->add_option("--manifest", manifest_path, "dataset manifest (default: paths.test_manifest)");

    auto* eval = app.add_subcommand("eval", "detection AP and localization metrics for a manifest");
    add_common(eval, flags);
    eval->add_option("--manifest", manifest_path, "dataset manifest (default: paths.test_manifest)");
    std::string responses;
    eval->add_option("--responses", responses, "directory of <id>.resp files; skips inference");

    auto* synth = app.add_subcommand("synth", "generate a two-signature fixture dataset");
    add_common(synth, flags);
    std::optional<int> count;
    synth->add_option("--count", count, "authentic and spliced test images each (default: synth.test_count)");

    auto* bench = app.add_subcommand("bench", "per-stage inference timing on one image");
    add_common(bench, flags);
    bench->add_option("image", image, "input image")->required();
    int repetitions = 5;
    bench->add_option("--repetitions", repetitions, "timed runs (>= 3)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ErrorKind::usage);
    }

    try {
        fs::path out;
        PipelineConfig config = resolve(flags, out);
        if (*train) {
            const TrainOutcome r = cmd_train(config, out, resume, std::cout);
            std::cout << "trained steps " << r.start_step << " -> " << r.final_step << ", model "
                      << r.model_path.string() << "\n";
            return 0;
        }
        if (*analyze) {
            cmd_analyze(config, image, out, std::cout);
            return 0;
        }
        if (*detect) {
            const auto m = test_manifest(config, manifest_path);
            return batch_status(cmd_detect(config, m, out, std::cout).errors);
        }
        if (*localize) {
            const auto m = test_manifest(config, manifest_path);
            return batch_status(cmd_localize(config, m, out, std::cout).errors);
        }
        if (*eval) {
            const auto m = test_manifest(config, manifest_path);
            std::optional<fs::path> dir;
            if (!responses.empty()) dir = responses;
            const auto r = cmd_eval(config, m, dir, out, std::cout);
            return batch_status(r.errors);
        }
        if (*synth) {
            cmd_synth(config, count.value_or(config.synth.test_count), out, std::cout);
            return 0;
        }
        if (*bench) {
            if (config.paths.model.empty()) throw UsageError("config paths.model is not set");
            const ModelState model = load_model(config.paths.model);
            const ImageRecord img = load_image(image, fs::path(image).stem().string());
            PipelineConfig single = config;
            single.workers = 1;
            std::cout << timing_csv(benchmark_inference(model, img, repetitions, single));
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::data);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::data);
    }
    return static_cast<int>(ErrorKind::usage);
}
