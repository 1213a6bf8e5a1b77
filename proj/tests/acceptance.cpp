// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Usage: sisl_acceptance [work_dir] [--only N]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sisl/commands.hpp"
#include "sisl/config.hpp"
#include "sisl/consistency.hpp"
#include "sisl/decision.hpp"
#include "sisl/encoder.hpp"
#include "sisl/error.hpp"
#include "sisl/metrics.hpp"
#include "sisl/model_io.hpp"
#include "sisl/pipeline.hpp"
#include "sisl/spectral.hpp"
#include "sisl/splice.hpp"
#include "sisl/trainer.hpp"

using namespace sisl;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(SISL_SOURCE_DIR) / "configs";

// Collects failures for one criterion; notes are printed after the verdict.
struct Check {
    bool ok = true;
    std::vector<std::string> notes;
    std::vector<std::string> failures;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (failures.size() < 5) failures.push_back(what);
        }
    }
    void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

Eigen::MatrixXd random_embeddings(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = g(rng);
    return m;
}

oracle::Mat to_mat(const Eigen::MatrixXd& m) {
    oracle::Mat out(m.rows(), oracle::Vec(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
    return out;
}

Eigen::MatrixXd to_eigen(const oracle::Mat& m) {
    Eigen::MatrixXd e(m.size(), m[0].size());
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m[i].size(); ++j) e(i, j) = m[i][j];
    return e;
}

ResponseMap random_map(std::mt19937_64& rng, int h, int w) {
    std::uniform_real_distribution<double> u(0, 1);
    ResponseMap r(h, w);
    for (auto& v : r.values) v = u(rng);
    return r;
}

BinaryMask random_mask(std::mt19937_64& rng, int h, int w, double p) {
    std::bernoulli_distribution b(p);
    BinaryMask m(h, w);
    for (auto& v : m.values) v = b(rng);
    return m;
}

// 1. Spectral features against the direct cosine sum. Patches enter as pixel / 255.
void rfft_oracle(Check& c) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> px(0, 255);
    double worst = 0, worst_dc = 0;
    const std::vector<std::pair<int, int>> sizes{{4, 4}, {8, 8}, {16, 16}, {4, 8}, {16, 8}};
    for (auto [U, V] : sizes) {
        for (int trial = 0; trial < 3; ++trial) {
            Patch p;
            p.height = U;
            p.width = V;
            p.pixels.resize(static_cast<std::size_t>(U) * V * kChannels);
            for (auto& v : p.pixels) v = static_cast<std::uint8_t>(px(rng));
            const SpectralFeature f = rfft_features(p);
            c.expect(f.rows == U && f.cols == V / 2 + 1 && f.channels == kChannels, "feature shape");
            for (int ch = 0; ch < kChannels; ++ch) {
                oracle::Vec plane(static_cast<std::size_t>(U) * V);
                for (int i = 0; i < U * V; ++i) plane[i] = p.pixels[static_cast<std::size_t>(i) * kChannels + ch] / 255.0;
                const oracle::Vec want = oracle::dft_real_half(plane, U, V);
                for (std::size_t k = 0; k < want.size(); ++k)
                    worst = std::max(worst, std::abs(f.coefficients[ch * want.size() + k] - want[k]));
            }
        }
        // constant patch: only the DC term survives
        Patch flat;
        flat.height = U;
        flat.width = V;
        flat.pixels.assign(static_cast<std::size_t>(U) * V * kChannels, 137);
        const SpectralFeature f = rfft_features(flat);
        const std::size_t per = static_cast<std::size_t>(U) * (V / 2 + 1);
        for (int ch = 0; ch < kChannels; ++ch) {
            worst_dc = std::max(worst_dc, std::abs(f.coefficients[ch * per] - 137.0 / 255.0 * std::sqrt(double(U) * V)));
            for (std::size_t k = 1; k < per; ++k) worst_dc = std::max(worst_dc, std::abs(f.coefficients[ch * per + k]));
        }
    }
    c.expect(worst <= 1e-6, "coefficient error " + fmt("%.3g", worst));
    c.expect(worst_dc <= 1e-5, "DC case error " + fmt("%.3g", worst_dc));
    c.note("max coefficient error " + fmt("%.2e", worst) + ", DC case " + fmt("%.2e", worst_dc));
}

// 2. Loss fixture and naive double loop.
void loss_oracle(Check& c) {
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
    const double fixture = contrastive_loss(eye, eye, 1.0).loss;
    const double want = 2.0 * -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
    c.expect(std::abs(fixture - want) <= 1e-6, "fixture " + fmt("%.8f", fixture));
    c.expect(std::abs(fixture - 0.62652) <= 1e-5, "fixture constant");
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> tau(0.1, 2.0);
    double worst = 0;
    const int Bs[3] = {2, 5, 16};
    for (int trial = 0; trial < 100; ++trial) {
        const int B = Bs[trial % 3], D = 3 + trial % 9;
        const Eigen::MatrixXd a = random_embeddings(rng, B, D), b = random_embeddings(rng, B, D);
        const double t = tau(rng);
        const double got = contrastive_loss(a, b, t).loss;
        const double ref = oracle::contrastive_loss(to_mat(a), to_mat(b), t);
        worst = std::max(worst, std::abs(got - ref));
    }
    c.expect(worst <= 1e-6, "random batch error " + fmt("%.3g", worst));
    c.note("fixture " + fmt("%.6f", fixture) + ", max error on 100 batches " + fmt("%.2e", worst));
}

std::vector<ImageRecord> signature_corpus(int n, int size) {
    std::vector<ImageRecord> out;
    const SignatureParams a{6, 0.1, 0.06, 0}, b{6, 0.4, 0.08, 8};
    for (int i = 0; i < n; ++i) {
        ImageRecord img = synthesize_content("img" + std::to_string(i), size, size, 300 + i);
        out.push_back(apply_signature(img, i % 2 ? a : b, 400 + i));
    }
    return out;
}

// 3. Finite differences through a small encoder.
void gradient_oracle(Check& c) {
    EncoderConfig cfg;
    cfg.backbone = Backbone::tiny4conv;
    cfg.embedding_dim = 8;
    cfg.base_width = 3;
    cfg.patch = {32, 32};
    const ModelState model = build_encoder(cfg, 11);
    c.expect(model.parameter_count() <= 10000, "encoder too large");
    const auto images = signature_corpus(5, 64);
    const PatchPool pool = build_patch_pool(images, cfg.patch, 4, 12);
    const PairBatch batch = build_pair_batch(pool, 4, 13);
    std::string detail = std::to_string(model.parameter_count()) + " parameters, 64 coordinates:";
    for (double tau : {0.9, 2.0}) {
        const double err = gradient_check(model, batch, tau, 1e-4, 64, 14);
        c.expect(err <= 1e-3, "tau " + fmt("%.1f", tau) + " error " + fmt("%.3g", err));
        detail += " tau " + fmt("%.1f", tau) + " max rel err " + fmt("%.2e", err);
    }
    c.note(detail);
}

// 4. Softmax rows, scale and permutation invariance.
void softmax_invariants(Check& c) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> tau(0.1, 2.0), scale(0.01, 100.0);
    double row_err = 0, scale_err = 0, perm_err = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int B = 2 + trial % 15, D = 2 + trial % 7;
        const Eigen::MatrixXd a = random_embeddings(rng, B, D), b = random_embeddings(rng, B, D);
        const double t = tau(rng);
        const auto base = contrastive_loss(a, b, t);
        for (int k = 0; k < B; ++k) row_err = std::max(row_err, std::abs(base.phi.row(k).sum() - 1.0));

        const double s = scale(rng);
        scale_err = std::max(scale_err, std::abs(contrastive_loss(s * a, s * b, t).loss - base.loss));
        Eigen::MatrixXd a2 = a, b2 = b;
        for (int k = 0; k < B; ++k) {
            a2.row(k) *= scale(rng);
            b2.row(k) *= scale(rng);
        }
        scale_err = std::max(scale_err, std::abs(contrastive_loss(a2, b2, t).loss - base.loss));

        std::vector<int> perm(B);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Eigen::MatrixXd pa(B, D), pb(B, D);
        for (int k = 0; k < B; ++k) pa.row(k) = a.row(perm[k]), pb.row(k) = b.row(perm[k]);
        const auto permuted = contrastive_loss(pa, pb, t);
        perm_err = std::max(perm_err, std::abs(permuted.loss - base.loss));
        for (int i = 0; i < B; ++i)
            for (int j = 0; j < B; ++j)
                perm_err = std::max(perm_err, std::abs(permuted.phi(i, j) - base.phi(perm[i], perm[j])));
    }
    c.expect(row_err <= 1e-6, "row sums " + fmt("%.3g", row_err));
    c.expect(scale_err <= 1e-6, "rescaling " + fmt("%.3g", scale_err));
    c.expect(perm_err <= 1e-6, "permutation " + fmt("%.3g", perm_err));
    c.note("200 instances: row sum " + fmt("%.1e", row_err) + ", rescale " + fmt("%.1e", scale_err) +
           ", permutation " + fmt("%.1e", perm_err));
}

// 5. Meanshift fixtures and fuzzing.
void meanshift_oracle(Check& c) {
    double worst = 0;
    {
        const oracle::Mat pts{{0.0}, {0.1}, {-0.1}};
        MeanShiftConfig cfg;
        cfg.bandwidth = 1.0;
        const double got = meanshift_mode(to_eigen(pts), cfg)[0];
        worst = std::max(worst, std::abs(got - oracle::meanshift(pts, 1.0)[0]));
        c.expect(std::abs(got) < 0.05, "1-D fixture mode " + fmt("%.4f", got));
    }
    {
        std::vector<Embedding> z;
        for (auto [x, y] : std::vector<std::pair<float, float>>{{1, 0}, {2, 0}, {1, 0}, {0.5f, 0}, {0, 1}, {0, 3}})
            z.push_back(Embedding{{x, y}});
        const ConsistencyMatrix m = pairwise_consistency(z, 2, 3);
        for (bool fixed : {false, true}) {
            MeanShiftConfig cfg;
            if (fixed) cfg.bandwidth = 0.5;
            const oracle::Mat rows = to_mat(m.values);
            const double h = fixed ? 0.5 : oracle::median_pairwise_distance(rows);
            const Eigen::VectorXd got = meanshift_mode(m.values, cfg);
            const oracle::Vec want = oracle::meanshift(rows, h);
            for (int j = 0; j < 6; ++j) worst = std::max(worst, std::abs(got[j] - want[j]));
        }
    }
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> n_points(1, 16), dims(1, 6);
    std::uniform_real_distribution<double> bw(0.05, 3.0);
    int outside = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const int n = n_points(rng), d = dims(rng);
        const oracle::Mat pts = oracle::random_matrix(rng, n, d, -2, 2);
        MeanShiftConfig cfg;
        if (trial % 2) cfg.bandwidth = bw(rng);
        const Eigen::VectorXd got = meanshift_mode(to_eigen(pts), cfg);
        if (n >= 2) {
            const double h = cfg.bandwidth.value_or(std::max(1e-3, oracle::median_pairwise_distance(pts)));
            const oracle::Vec want = oracle::meanshift(pts, h);
            for (int k = 0; k < d; ++k) worst = std::max(worst, std::abs(got[k] - want[k]));
        }
        for (int k = 0; k < d; ++k) {
            double lo = pts[0][k], hi = pts[0][k];
            for (const auto& p : pts) lo = std::min(lo, p[k]), hi = std::max(hi, p[k]);
            outside += got[k] < lo - 1e-12 || got[k] > hi + 1e-12;
        }
    }
    c.expect(worst <= 0.05, "oracle disagreement " + fmt("%.3g", worst));
    c.expect(outside == 0, std::to_string(outside) + " coordinates outside the bounding box");
    c.note("max deviation from direct iteration " + fmt("%.2e", worst) + ", 500 fuzzed modes inside the box");
}

// 6. Decision rules against brute-force counting.
void decision_oracle(Check& c) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0, 1);
    int bad_idem = 0, bad_mono = 0, bad_nest = 0, bad_count = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int h = 3 + trial % 11, w = 2 + trial % 13;
        ResponseMap r = random_map(rng, h, w);
        if (trial % 3 == 0)
            for (auto& v : r.values) v = std::min(1.0, v + 0.4);  // push some maps over the inversion line
        const auto [once, inv] = maybe_invert(r);
        const auto [twice, inv2] = maybe_invert(once);
        bad_idem += inv2 || twice.values != once.values;
        double sum = 0;
        for (double v : r.values) sum += v;
        bad_count += inv != (sum / r.values.size() > 0.5);

        const double d1 = u(rng), d2 = u(rng), lo = std::min(d1, d2), hi = std::max(d1, d2);
        bad_mono += detect_pctarea(once, hi).score > detect_pctarea(once, lo).score;
        std::size_t above = 0;
        for (double v : once.values) above += v > lo;
        bad_count += detect_pctarea(once, lo).score != static_cast<double>(above) / once.values.size();

        const BinaryMask big = localize(once, lo), small = localize(once, hi);
        for (std::size_t i = 0; i < once.values.size(); ++i) {
            bad_nest += small.values[i] && !big.values[i];
            bad_count += big.values[i] != (once.values[i] > lo);
        }
        bad_count += big.count() != above;
    }
    c.expect(bad_idem == 0, "idempotence violations " + std::to_string(bad_idem));
    c.expect(bad_mono == 0, "monotonicity violations " + std::to_string(bad_mono));
    c.expect(bad_nest == 0, "nesting violations " + std::to_string(bad_nest));
    c.expect(bad_count == 0, "count mismatches " + std::to_string(bad_count));
    c.note("200 maps, no violations of idempotence, monotonicity, nesting or counts");
}

// 7. Metric fixtures and exhaustive AP.
void metrics_oracle(Check& c) {
    const double ap = average_precision(std::vector<double>{0.9, 0.8, 0.7, 0.6}, std::vector<int>{1, 0, 1, 0});
    c.expect(std::abs(ap - 5.0 / 6.0) <= 1e-9, "AP fixture " + fmt("%.12f", ap));
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> level(0, 12), n(5, 40);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int len = n(rng);
        std::vector<double> s(len);
        std::vector<int> l(len);
        for (int i = 0; i < len; ++i) {
            s[i] = trial % 2 ? level(rng) / 12.0 : std::uniform_real_distribution<double>(0, 1)(rng);
            l[i] = level(rng) < 5;
        }
        l[0] = 1;
        worst = std::max(worst, std::abs(average_precision(s, l) - oracle::average_precision(s, l)));
    }
    c.expect(worst <= 1e-9, "AP oracle error " + fmt("%.3g", worst));
    const double m = mcc({3, 4, 1, 2});
    c.expect(std::abs(m - 10.0 / std::sqrt(600.0)) <= 1e-9, "MCC fixture " + fmt("%.12f", m));
    int violations = 0;
    for (int i = 0; i < 500; ++i) {
        const int h = 2 + i % 9, w = 3 + i % 7;
        const MaskScores s = f1_iou(random_mask(rng, h, w, 0.1 + 0.001 * i), random_mask(rng, h, w, 0.5));
        violations += s.iou > s.f1 + 1e-15;
    }
    c.expect(violations == 0, std::to_string(violations) + " IoU > F1 cases");
    c.note("AP fixture " + fmt("%.10f", ap) + ", exhaustive oracle max error " + fmt("%.1e", worst) + ", MCC " +
           fmt("%.10f", m));
}

// 8. Desk-scale synth, train, detect, localize.
void desk_end_to_end(Check& c, const fs::path& work) {
    fs::remove_all(work);
    PipelineConfig cfg = load_config(kConfigs / "desk.json");
    cfg.paths.train_manifest = work / "data" / files::kTrainManifest;
    cfg.paths.test_manifest = work / "data" / files::kTestManifest;
    cfg.paths.model = work / "run" / files::kModel;
    cfg.paths.output_dir = work / "run";
    std::ostringstream log;

    const SynthOutcome corpus = cmd_synth(cfg, cfg.synth.test_count, work / "data", log);
    std::size_t auth = 0, spliced = 0;
    for (const auto& e : corpus.test.entries) (e.label == Label::spliced ? spliced : auth)++;
    c.expect(corpus.train.size() == 40 && auth == 10 && spliced == 10, "corpus counts");
    c.expect(cfg.encoder.backbone == Backbone::tiny4conv && cfg.train.batch_pairs == 16 &&
                 cfg.train.total_steps == 2000 && cfg.train.temperature == 0.9,
             "desk config drifted");

    const auto t0 = std::chrono::steady_clock::now();
    const TrainOutcome trained = cmd_train(cfg, work / "run", false, log);
    const double train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.expect(trained.final_step == 2000, "training stopped early");
    c.expect(train_seconds <= 900.0, "training took " + fmt("%.0f s", train_seconds));
    const auto& recs = trained.log.records;

    // held-out pairs: patches of test authentic images never seen in training
    const ModelState model = load_model(cfg.paths.model);
    Encoder<float> encoder(model);
    std::vector<ImageRecord> held_out;
    for (const auto& e : corpus.test.entries)
        if (e.label == Label::authentic) held_out.push_back(load_image(e.image_path, e.id));
    const SimilarityMargin margin = similarity_margin(encoder, held_out, cfg.normalization, 2000, 99);
    c.expect(margin.margin() >= 0.2, "similarity margin " + fmt("%.3f", margin.margin()));

    const BatchOutcome det = cmd_detect(cfg, corpus.test, work / "detect", log);
    c.expect(det.ok(), "detect reported errors");
    const EvalOutcome ev = cmd_eval(cfg, corpus.test, work / "detect" / "responses", work / "eval", log);
    c.expect(ev.report.has_value() && ev.errors.empty(), "eval reported errors");
    const double ap = ev.report ? ev.report->ap : 0.0;
    c.expect(ap >= 0.9, "AP " + fmt("%.3f", ap));

    double authentic_mean = 0;
    std::vector<EvalItem> items;
    for (const auto& e : corpus.test.entries) {
        EvalItem it{e.id, e.label, read_response_raw(work / "detect" / "responses" / (e.id + ".resp")), std::nullopt};
        if (e.mask_path) it.gt = load_mask(*e.mask_path);
        if (e.label == Label::authentic) authentic_mean += maybe_invert(it.response).first.mean() / auth;
        items.push_back(std::move(it));
    }
    const std::vector<double> grid = default_threshold_grid();
    const std::vector<double> sweep = localization_sweep(items, grid);
    const auto best = std::max_element(sweep.begin(), sweep.end());
    const double best_delta = grid[best - sweep.begin()];
    c.expect(*best >= 0.5, "best IoU " + fmt("%.3f", *best));

    if (!recs.empty())
        c.note("loss " + fmt("%.3f", recs.front().loss) + " -> " + fmt("%.3f", recs.back().loss) +
               ", mean authentic response " + fmt("%.3f", authentic_mean));
    c.note("train " + fmt("%.1f s", train_seconds) + ", margin " + fmt("%.3f", margin.margin()) + " (intra " +
           fmt("%.3f", margin.intra) + ", inter " + fmt("%.3f", margin.inter) + "), AP " + fmt("%.3f", ap) +
           " (" + to_string(cfg.method) + "), best IoU " + fmt("%.3f", *best) + " at delta_l " +
           fmt("%.2f", best_delta));
}

// 9. Reference hyperparameters through the config echo.
void reference_config(Check& c, const fs::path& work) {
    const PipelineConfig loaded = load_config(kConfigs / "reference.json");
    fs::remove_all(work);
    echo_config(loaded, work);
    const PipelineConfig cfg = load_config(work / files::kConfigEcho);
    c.expect(format_config(cfg) == format_config(loaded), "echo differs from the loaded config");
    c.expect(cfg.encoder.patch.height == 128 && cfg.encoder.patch.width == 128, "patch size");
    c.expect(cfg.inference.stride == 64, "stride");
    c.expect(cfg.train.batch_pairs == 256, "batch pairs");
    c.expect(cfg.train.temperature == 0.9, "temperature");
    c.expect(cfg.train.peak_lr == 1e-3 && cfg.train.final_lr == 1e-5, "learning rates");
    c.expect(cfg.encoder.embedding_dim == 256, "embedding dim");
    c.expect(cfg.encoder.backbone == Backbone::resnet18_like, "backbone");
    c.expect(EncoderConfig{}.backbone == Backbone::resnet18_like, "built-in default backbone");
    // cosine annealing: peak at the end of warmup, final at the last step, midpoint halfway
    const TrainConfig& t = cfg.train;
    const int mid = t.warmup_steps + (t.total_steps - t.warmup_steps) / 2;
    const double want_mid = t.final_lr + 0.5 * (t.peak_lr - t.final_lr) *
                                             (1 + std::cos(std::acos(-1.0) * (mid - t.warmup_steps) /
                                                           double(t.total_steps - t.warmup_steps)));
    c.expect(std::abs(lr_at(t.warmup_steps, t) - t.peak_lr) < 1e-12, "lr at end of warmup");
    c.expect(std::abs(lr_at(t.total_steps, t) - t.final_lr) < 1e-12, "lr at the last step");
    c.expect(std::abs(lr_at(mid, t) - want_mid) < 1e-12, "cosine midpoint");
    c.note("patch 128x128, stride 64, B=256, tau 0.9, lr 1e-3 -> 1e-5 cosine, D=256, resnet18_like");
}

// 10. Similarity stage scaling.
void similarity_performance(Check& c) {
    const std::vector<int> Js{16, 64, 256};
    const ScalingFit fit = similarity_scaling(Js, 256, 7, 10);
    c.expect(std::abs(fit.slope - 2.0) <= 0.5, "slope " + fmt("%.2f", fit.slope));
    const double t64 = time_similarity(64, 256, 5, 11, 0.0);
    c.expect(t64 < 1.0, "J=64 took " + fmt("%.3f s", t64));
    std::string detail = "log-log slope " + fmt("%.2f", fit.slope) + " (";
    for (std::size_t i = 0; i < fit.points.size(); ++i)
        detail += (i ? ", J=" : "J=") + std::to_string(fit.points[i].patches) + " " +
                  fmt("%.2e s", fit.points[i].seconds);
    detail += "), J=64 D=256 single call " + fmt("%.2e s", t64);
    c.note(detail);
}

}  // namespace

int main(int argc, char** argv) {
    fs::path work = fs::temp_directory_path() / "sisl_acceptance";
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) only = std::stoi(argv[++i]);
        else work = a;
    }

    struct Criterion {
        int id;
        const char* name;
        std::function<void(Check&)> run;
    };
    const std::vector<Criterion> criteria{
        {1, "rfft matches the direct cosine sum", rfft_oracle},
        {2, "contrastive loss fixture and double loop", loss_oracle},
        {3, "encoder gradients match finite differences", gradient_oracle},
        {4, "softmax rows, rescaling and permutation invariants", softmax_invariants},
        {5, "meanshift fixtures and bounding box", meanshift_oracle},
        {6, "decision rules against brute-force counting", decision_oracle},
        {7, "AP, MCC and IoU/F1 oracles", metrics_oracle},
        {8, "desk-scale end to end", [&](Check& c) { desk_end_to_end(c, work / "desk"); }},
        {9, "reference hyperparameters via config echo", [&](Check& c) { reference_config(c, work / "echo"); }},
        {10, "similarity stage scales quadratically", similarity_performance},
    };

    int failed = 0;
    for (const auto& cr : criteria) {
        if (only && cr.id != only) continue;
        Check c;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            cr.run(c);
        } catch (const std::exception& e) {
            c.ok = false;
            c.failures.push_back(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !c.ok;
        std::cout << (c.ok ? "PASS" : "FAIL") << " [" << cr.id << "] " << cr.name << " (" << fmt("%.1f", secs)
                  << " s)";
        for (const auto& n : c.notes) std::cout << " | " << n;
        for (const auto& f : c.failures) std::cout << " | failed: " << f;
        std::cout << std::endl;
    }
    std::cout << (failed ? "FAIL" : "PASS") << " acceptance: " << failed << " criteria failed" << std::endl;
    return failed ? 1 : 0;
}
