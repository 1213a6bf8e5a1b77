#include "sisl/commands.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "sisl/error.hpp"
#include "sisl/model_io.hpp"
#include "sisl/random.hpp"
#include "sisl/splice.hpp"

namespace sisl {

namespace fs = std::filesystem;

namespace {

// Seed streams kept clear of the per-step batch seeds (1..total_steps).
constexpr std::uint64_t kInitStream = 0x100000001ULL;
constexpr std::uint64_t kPoolStream = 0x100000002ULL;
constexpr std::uint64_t kSynthStream = 0x100000003ULL;

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("write failed for " + path.string());
}

void require_model(const PipelineConfig& config) {
    if (config.paths.model.empty()) throw UsageError("config paths.model is not set");
}

std::string checkpoint_name(std::uint64_t step) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "step_%08llu.sislm", static_cast<unsigned long long>(step));
    return buf;
}

}  // namespace

void echo_config(const PipelineConfig& config, const fs::path& out_dir) {
    save_config(config, out_dir / files::kConfigEcho);
}

TrainOutcome cmd_train(const PipelineConfig& config, const fs::path& out_dir, bool resume, std::ostream& log) {
    config.validate();
    if (config.paths.train_manifest.empty()) throw UsageError("config paths.train_manifest is not set");
    const DatasetManifest manifest = read_manifest(config.paths.train_manifest);
    const auto B = static_cast<std::size_t>(config.train.batch_pairs);
    if (manifest.size() < B) {
        throw UsageError("training needs at least batch_pairs=" + std::to_string(B) + " images, manifest has " +
                         std::to_string(manifest.size()));
    }

    std::vector<ImageRecord> images;
    images.reserve(manifest.size());
    for (const auto& e : manifest.entries) images.push_back(load_image(e.image_path, e.id));

    const fs::path model_path = out_dir / files::kModel;
    const fs::path optimizer_path = out_dir / files::kOptimizer;
    ModelState model;
    AdamState adam;
    if (resume && fs::exists(model_path)) {
        model = load_model(model_path);
        if (!(model.config == config.encoder)) throw UsageError("resumed model's encoder differs from the config");
        if (fs::exists(optimizer_path)) adam = load_adam_state(optimizer_path);
        log << "resuming from step " << model.training_steps << "\n";
    } else {
        model = build_encoder(config.encoder, mix_seed(config.seed, kInitStream));
    }

    ContrastiveTrainer trainer(model, adam, config.train, config.normalization);
    const PatchPool pool = build_patch_pool(images, config.encoder.patch, config.train.patches_per_image,
                                            mix_seed(config.seed, kPoolStream));

    fs::create_directories(out_dir);
    echo_config(config, out_dir);
    const fs::path log_path = out_dir / files::kTrainLog;
    const bool append = resume && trainer.steps() > 0 && fs::exists(log_path);
    std::ofstream log_file(log_path, append ? std::ios::app : std::ios::trunc);
    if (!log_file) throw DataError("cannot write " + log_path.string());
    if (!append) log_file << TrainLog::csv_header() << "\n";

    TrainOutcome outcome;
    outcome.start_step = trainer.steps();
    outcome.model_path = model_path;
    const int every = std::max(1, config.train.total_steps / 20);

    auto save_all = [&](const ContrastiveTrainer& t) {
        const ModelState state = t.model();
        save_model(state, model_path);
        save_adam_state(t.adam_state(), optimizer_path);
        log_file.flush();
    };
    outcome.log = run_training(
        trainer, pool,
        [&](const TrainRecord& r) {
            log_file << TrainLog::csv_row(r) << "\n";
            if (r.step % every == 0 || r.step == 1) {
                char buf[160];
                std::snprintf(buf, sizeof(buf), "step %llu lr %.3g loss %.4f intra %.3f inter %.3f\n",
                              static_cast<unsigned long long>(r.step), r.lr, r.loss, r.intra_sim, r.inter_sim);
                log << buf << std::flush;
            }
        },
        [&](const ContrastiveTrainer& t) {
            save_all(t);
            save_model(t.model(), out_dir / "checkpoints" / checkpoint_name(t.steps()));
        });
    save_all(trainer);
    outcome.final_step = trainer.steps();
    return outcome;
}

Analysis cmd_analyze(const PipelineConfig& config, const fs::path& image_path, const fs::path& out_dir,
                     std::ostream& log) {
    require_model(config);
    const ModelState model = load_model(config.paths.model);
    Analyzer analyzer(model, config);
    const ImageRecord image = load_image(image_path, image_path.stem().string());
    Analysis a = analyzer.run(image);
    fs::create_directories(out_dir);
    echo_config(config, out_dir);
    save_response_png(a.response, out_dir / (image.id + "_response.png"));
    write_response_raw(a.response, out_dir / (image.id + ".resp"));
    log << a.timing.line(image.id) << "\n";
    return a;
}

std::vector<std::optional<ResponseMap>> analyze_manifest(const ModelState& model, const PipelineConfig& config,
                                                         const DatasetManifest& manifest,
                                                         std::vector<std::string>& errors) {
    const std::size_t n = manifest.size();
    std::vector<std::optional<ResponseMap>> out(n);
    std::vector<std::string> failure(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr fatal;
    std::mutex fatal_mutex;

    auto work = [&] {
        try {
            Analyzer analyzer(model, config);
            for (std::size_t i = next++; i < n; i = next++) {
                const auto& e = manifest.entries[i];
                try {
                    out[i] = analyzer.run(load_image(e.image_path, e.id)).response;
                } catch (const NumericalError&) {
                    throw;
                } catch (const Error& err) {
                    failure[i] = e.id + ": " + err.what();
                }
            }
        } catch (...) {
            std::lock_guard lock(fatal_mutex);
            if (!fatal) fatal = std::current_exception();
            next = n;
        }
    };
    const int workers = std::max(1, std::min<int>(config.workers, static_cast<int>(std::max<std::size_t>(n, 1))));
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (fatal) std::rethrow_exception(fatal);
    for (auto& f : failure) {
        if (!f.empty()) errors.push_back(std::move(f));
    }
    return out;
}

BatchOutcome cmd_detect(const PipelineConfig& config, const DatasetManifest& manifest, const fs::path& out_dir,
                        std::ostream& log) {
    require_model(config);
    const ModelState model = load_model(config.paths.model);
    BatchOutcome outcome;
    const auto responses = analyze_manifest(model, config, manifest, outcome.errors);
    fs::create_directories(out_dir);
    echo_config(config, out_dir);
    std::string csv = detection_csv_header() + "\n";
    for (std::size_t i = 0; i < responses.size(); ++i) {
        if (!responses[i]) continue;
        const ResponseMap& r = *responses[i];
        write_response_raw(r, out_dir / "responses" / (r.image_id + ".resp"));
        save_response_png(r, out_dir / "responses" / (r.image_id + "_response.png"));
        const Decision d = decide(r, config.method, config.thresholds);
        csv += format_detection_line(d.detection, config.thresholds.rho_threshold) + "\n";
        outcome.detections.push_back(d.detection);
    }
    write_text(out_dir / files::kDetections, csv);
    for (const auto& e : outcome.errors) log << "error: " << e << "\n";
    log << outcome.detections.size() << " of " << manifest.size() << " images scored\n";
    return outcome;
}

BatchOutcome cmd_localize(const PipelineConfig& config, const DatasetManifest& manifest, const fs::path& out_dir,
                          std::ostream& log) {
    require_model(config);
    const ModelState model = load_model(config.paths.model);
    BatchOutcome outcome;
    const auto responses = analyze_manifest(model, config, manifest, outcome.errors);
    fs::create_directories(out_dir);
    echo_config(config, out_dir);
    for (std::size_t i = 0; i < responses.size(); ++i) {
        if (!responses[i]) continue;
        const Decision d = decide(*responses[i], config.method, config.thresholds);
        save_mask_png(d.mask, out_dir / "masks" / (responses[i]->image_id + "_mask.png"));
        outcome.detections.push_back(d.detection);
    }
    for (const auto& e : outcome.errors) log << "error: " << e << "\n";
    log << outcome.detections.size() << " of " << manifest.size() << " masks written\n";
    return outcome;
}

EvalOutcome cmd_eval(const PipelineConfig& config, const DatasetManifest& manifest,
                     const std::optional<fs::path>& responses_dir, const fs::path& out_dir, std::ostream& log) {
    EvalOutcome outcome;
    std::vector<std::optional<ResponseMap>> responses(manifest.size());
    if (responses_dir) {
        for (std::size_t i = 0; i < manifest.size(); ++i) {
            const auto& e = manifest.entries[i];
            const fs::path p = *responses_dir / (e.id + ".resp");
            if (!fs::exists(p)) {
                outcome.errors.push_back(e.id + ": missing response " + p.string());
                continue;
            }
            try {
                responses[i] = read_response_raw(p);
                responses[i]->image_id = e.id;
            } catch (const DataError& err) {
                outcome.errors.push_back(e.id + ": " + err.what());
            }
        }
    } else {
        require_model(config);
        responses = analyze_manifest(load_model(config.paths.model), config, manifest, outcome.errors);
    }

    std::vector<EvalItem> items;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        if (!responses[i]) continue;
        const auto& e = manifest.entries[i];
        EvalItem item{e.id, e.label, std::move(*responses[i]), std::nullopt};
        if (e.label == Label::spliced) {
            if (!e.mask_path) {
                outcome.errors.push_back(e.id + ": spliced image has no mask");
                continue;
            }
            try {
                item.gt = load_mask(*e.mask_path);
                item.gt->image_id = e.id;
            } catch (const DataError& err) {
                outcome.errors.push_back(e.id + ": " + err.what());
                continue;
            }
            if (item.gt->height != item.response.height || item.gt->width != item.response.width) {
                outcome.errors.push_back(e.id + ": mask and response dimensions differ");
                continue;
            }
        }
        items.push_back(std::move(item));
    }

    fs::create_directories(out_dir);
    echo_config(config, out_dir);
    const std::string dataset = manifest.entries.empty() ? "empty" : config.paths.test_manifest.stem().string();
    try {
        outcome.report = evaluate_dataset(std::move(items), config.thresholds, config.method,
                                          dataset.empty() ? "dataset" : dataset);
    } catch (const UsageError& err) {
        outcome.errors.push_back(std::string("report: ") + err.what());
    }
    if (outcome.report) {
        write_text(out_dir / files::kReport, outcome.report->to_csv());
        write_text(out_dir / files::kSummary, outcome.report->summary());
        log << outcome.report->summary();
    }
    for (const auto& e : outcome.errors) log << "error: " << e << "\n";
    return outcome;
}

SynthOutcome cmd_synth(const PipelineConfig& config, int count, const fs::path& out_dir, std::ostream& log) {
    config.validate();
    if (count < 0) throw UsageError("synth count must be >= 0");
    const SynthConfig& s = config.synth;
    if (count == 0) log << "warning: count=0, the test manifest will be empty\n";
    const std::uint64_t base = mix_seed(config.seed, kSynthStream);
    const int H = s.image_height, W = s.image_width;
    const SignatureParams sigs[2] = {s.signature_a, s.signature_b};

    fs::create_directories(out_dir);
    SynthOutcome outcome;
    char name[64];
    for (int i = 0; i < s.train_images; ++i) {
        std::snprintf(name, sizeof(name), "train_%04d", i);
        const ImageRecord content = synthesize_content(name, H, W, mix_seed(base, 3 * i));
        const ImageRecord img = apply_signature(content, sigs[i % 2], mix_seed(base, 3 * i + 1));
        const fs::path p = out_dir / "train" / (std::string(name) + ".png");
        save_png(img, p);
        outcome.train.entries.push_back({p, name, std::nullopt, Label::authentic});
    }

    const std::uint64_t test_base = mix_seed(base, 0x7e57);
    for (int i = 0; i < count; ++i) {
        std::snprintf(name, sizeof(name), "auth_%04d", i);
        const ImageRecord content = synthesize_content(name, H, W, mix_seed(test_base, 4 * i));
        const ImageRecord img = apply_signature(content, sigs[i % 2], mix_seed(test_base, 4 * i + 1));
        const fs::path p = out_dir / "test" / (std::string(name) + ".png");
        save_png(img, p);
        outcome.test.entries.push_back({p, name, std::nullopt, Label::authentic});
    }
    for (int i = 0; i < count; ++i) {
        std::snprintf(name, sizeof(name), "splice_%04d", i);
        const std::uint64_t seed = mix_seed(test_base, 0x5011ce00ULL + i);
        Rng rng(seed);
        std::uniform_int_distribution<int> side(s.region_min, s.region_max);
        const int h = side(rng), w = side(rng);
        std::uniform_int_distribution<int> top(0, H - h), left(0, W - w);
        const RectRegion rect{top(rng), left(rng), h, w};

        const ImageRecord host = synthesize_content(name, H, W, mix_seed(seed, 1));
        const ImageRecord donor = synthesize_content(std::string(name) + "_donor", H, W, mix_seed(seed, 2));
        SpliceSpec spec;
        spec.host_id = host.id;
        spec.donor_id = donor.id;
        spec.region = rect;
        spec.signature_a = sigs[i % 2];
        spec.signature_b = sigs[(i + 1) % 2];
        SpliceResult res = generate_synthetic_splice(host, donor, spec, mix_seed(seed, 3));
        res.image.id = name;
        const fs::path p = out_dir / "test" / (std::string(name) + ".png");
        const fs::path m = out_dir / "test" / "masks" / (std::string(name) + "_mask.png");
        save_png(res.image, p);
        save_mask_png(res.mask, m);
        outcome.test.entries.push_back({p, name, m, Label::spliced});
    }
    write_manifest(outcome.train, out_dir / files::kTrainManifest);
    write_manifest(outcome.test, out_dir / files::kTestManifest);
    echo_config(config, out_dir);
    log << "wrote " << outcome.train.size() << " training and " << outcome.test.size() << " test images to "
        << out_dir.string() << "\n";
    return outcome;
}

}  // namespace sisl
