#include "sisl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include "sisl/error.hpp"
#include "sisl/model_io.hpp"
#include "sisl/random.hpp"

namespace sisl {

void TrainConfig::validate() const {
    if (!(temperature > 0.0)) throw UsageError("temperature must be > 0");
    if (!(final_lr > 0.0) || final_lr > peak_lr) throw UsageError("need 0 < final_lr <= peak_lr");
    if (warmup_steps < 0 || warmup_steps >= total_steps) throw UsageError("need 0 <= warmup_steps < total_steps");
    if (batch_pairs < 2) throw UsageError("batch_pairs must be >= 2");
    if (patches_per_image < 2) throw UsageError("patches_per_image must be >= 2");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw UsageError("adam betas must lie in [0, 1)");
    }
}

PatchPool build_patch_pool(std::span<const ImageRecord> images, PatchSize size, int per_image,
                           std::uint64_t seed) {
    PatchPool pool;
    for (std::size_t i = 0; i < images.size(); ++i) {
        pool.image_ids.push_back(images[i].id);
        pool.patches.push_back(sample_training_patches(images[i], size, per_image, mix_seed(seed, i)));
    }
    return pool;
}

PairBatch build_pair_batch(const PatchPool& pool, int pairs, std::uint64_t seed) {
    if (pairs < 1) throw UsageError("pair batch needs at least one pair");
    if (pool.size() < static_cast<std::size_t>(pairs)) {
        throw UsageError("pair batch of " + std::to_string(pairs) + " needs that many images, pool has " +
                         std::to_string(pool.size()));
    }
    Rng rng(seed);
    // Partial Fisher-Yates: the first `pairs` entries are a uniform sample without replacement.
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int i = 0; i < pairs; ++i) {
        std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), order.size() - 1);
        std::swap(order[i], order[pick(rng)]);
    }
    PairBatch batch;
    for (int i = 0; i < pairs; ++i) {
        const auto& patches = pool.patches[order[i]];
        if (patches.size() < 2) {
            throw UsageError("image " + pool.image_ids[order[i]] + " has fewer than 2 pre-cropped patches");
        }
        std::uniform_int_distribution<std::size_t> first(0, patches.size() - 1);
        std::uniform_int_distribution<std::size_t> second(0, patches.size() - 2);
        const std::size_t a = first(rng);
        std::size_t b = second(rng);
        if (b >= a) ++b;
        batch.first.push_back(patches[a]);
        batch.second.push_back(patches[b]);
        batch.image_ids.push_back(pool.image_ids[order[i]]);
    }
    return batch;
}

namespace {

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size()) throw UsageError("cosine_similarity: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (!(na > 0.0) || !(nb > 0.0)) throw NumericalError("cosine_similarity: degenerate zero-norm embedding");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

Eigen::VectorXd row_norms(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw NumericalError(std::string("contrastive_loss: non-finite values in ") + what);
    Eigen::VectorXd n = m.rowwise().norm();
    for (Eigen::Index i = 0; i < n.size(); ++i) {
        if (!(n[i] > 0.0)) {
            throw NumericalError(std::string("contrastive_loss: degenerate zero-norm embedding in ") + what);
        }
    }
    return n;
}

// Row softmax of logits with max subtraction; returns -sum_k log p[k][k] and fills p.
double directional(const Eigen::MatrixXd& logits, Eigen::MatrixXd& p) {
    p.resize(logits.rows(), logits.cols());
    double loss = 0.0;
    for (Eigen::Index k = 0; k < logits.rows(); ++k) {
        const double mx = logits.row(k).maxCoeff();
        double denom = 0.0;
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            p(k, j) = std::exp(logits(k, j) - mx);
            denom += p(k, j);
        }
        p.row(k) /= denom;
        loss -= (logits(k, k) - mx) - std::log(denom);
    }
    return loss;
}

}  // namespace

double cosine_similarity(std::span<const float> a, std::span<const float> b) { return cosine_impl(a, b); }
double cosine_similarity(std::span<const double> a, std::span<const double> b) { return cosine_impl(a, b); }

ContrastiveLossResult contrastive_loss(const Eigen::MatrixXd& first, const Eigen::MatrixXd& second, double tau,
                                       bool symmetric) {
    if (!(tau > 0.0)) throw UsageError("contrastive_loss: temperature must be > 0");
    if (first.rows() < 1 || first.rows() != second.rows() || first.cols() != second.cols()) {
        throw UsageError("contrastive_loss: need two equal-shape non-empty embedding sets");
    }
    const Eigen::VectorXd na = row_norms(first, "first");
    const Eigen::VectorXd nb = row_norms(second, "second");
    const Eigen::MatrixXd ua = na.cwiseInverse().asDiagonal() * first;
    const Eigen::MatrixXd ub = nb.cwiseInverse().asDiagonal() * second;

    ContrastiveLossResult out;
    out.similarity = ua * ub.transpose();
    const Eigen::MatrixXd logits = out.similarity / tau;
    const Eigen::Index B = first.rows();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(B, B);

    out.loss = directional(logits, out.phi);
    Eigen::MatrixXd grad_sim = (out.phi - eye) / tau;
    if (symmetric) {
        Eigen::MatrixXd phi_t;
        const double reverse = directional(logits.transpose(), phi_t);
        out.loss = 0.5 * (out.loss + reverse);
        grad_sim = 0.5 * (grad_sim + ((phi_t - eye) / tau).transpose());
    }

    // Through the normalization: d/da (a/|a|) = (I - u u^T) / |a|.
    const Eigen::MatrixXd gua = grad_sim * ub;
    const Eigen::MatrixXd gub = grad_sim.transpose() * ua;
    out.grad_first.resize(first.rows(), first.cols());
    out.grad_second.resize(second.rows(), second.cols());
    for (Eigen::Index k = 0; k < B; ++k) {
        out.grad_first.row(k) = (gua.row(k) - gua.row(k).dot(ua.row(k)) * ua.row(k)) / na[k];
        out.grad_second.row(k) = (gub.row(k) - gub.row(k).dot(ub.row(k)) * ub.row(k)) / nb[k];
    }
    return out;
}

ContrastiveLossResult contrastive_loss(std::span<const Embedding> first, std::span<const Embedding> second,
                                       double tau, bool symmetric) {
    if (first.empty() || first.size() != second.size()) {
        throw UsageError("contrastive_loss: need two equal-size non-empty embedding sets");
    }
    const auto D = static_cast<Eigen::Index>(first.front().dim());
    Eigen::MatrixXd a(static_cast<Eigen::Index>(first.size()), D), b(a.rows(), D);
    for (std::size_t k = 0; k < first.size(); ++k) {
        if (first[k].dim() != static_cast<std::size_t>(D) || second[k].dim() != static_cast<std::size_t>(D)) {
            throw UsageError("contrastive_loss: embedding dimension mismatch");
        }
        for (Eigen::Index d = 0; d < D; ++d) {
            a(static_cast<Eigen::Index>(k), d) = first[k].values[d];
            b(static_cast<Eigen::Index>(k), d) = second[k].values[d];
        }
    }
    return contrastive_loss(a, b, tau, symmetric);
}

double lr_at(int step, const TrainConfig& c) {
    if (step <= 0) return 0.0;
    if (step < c.warmup_steps) return c.peak_lr * static_cast<double>(step) / c.warmup_steps;
    if (step >= c.total_steps) return c.final_lr;
    const double t = static_cast<double>(step - c.warmup_steps) / (c.total_steps - c.warmup_steps);
    return c.final_lr + 0.5 * (c.peak_lr - c.final_lr) * (1.0 + std::cos(std::numbers::pi * t));
}

void save_adam_state(const AdamState& state, const std::filesystem::path& path) {
    std::map<std::string, NamedArray> arrays;
    for (const auto& [k, v] : state.first_moment) arrays.emplace("m/" + k, v);
    for (const auto& [k, v] : state.second_moment) arrays.emplace("v/" + k, v);
    save_named_arrays(arrays, state.step, path);
}

AdamState load_adam_state(const std::filesystem::path& path) {
    AdamState state;
    auto arrays = load_named_arrays(path, state.step);
    for (auto& [k, v] : arrays) {
        if (k.starts_with("m/")) state.first_moment.emplace(k.substr(2), std::move(v));
        else if (k.starts_with("v/")) state.second_moment.emplace(k.substr(2), std::move(v));
        else throw DataError(path.string() + ": unexpected array " + k);
    }
    return state;
}

std::string TrainLog::csv_header() { return "step,lr,loss,intra_sim,inter_sim"; }

std::string TrainLog::csv_row(const TrainRecord& r) {
    std::ostringstream out;
    out << r.step << ',' << std::setprecision(9) << r.lr << ',' << r.loss << ',' << r.intra_sim << ','
        << r.inter_sim;
    return out.str();
}

std::string TrainLog::to_csv() const {
    std::string s = csv_header() + "\n";
    for (const auto& r : records) s += csv_row(r) + "\n";
    return s;
}

// ---------------------------------------------------------------------------
// ContrastiveTrainer

ContrastiveTrainer::ContrastiveTrainer(const ModelState& model, const TrainConfig& config,
                                       SpectrumNormalization normalization)
    : ContrastiveTrainer(model, AdamState{}, config, normalization) {}

ContrastiveTrainer::ContrastiveTrainer(const ModelState& model, const AdamState& adam, const TrainConfig& config,
                                       SpectrumNormalization normalization)
    : config_(config), normalization_(normalization), encoder_(model), steps_(model.training_steps) {
    config_.validate();
    for (auto* p : encoder_.parameters()) {
        if (!p->trainable) continue;
        params_.push_back(p);
        std::vector<float> m(p->size(), 0.0f), v(p->size(), 0.0f);
        const auto mi = adam.first_moment.find(p->name);
        const auto vi = adam.second_moment.find(p->name);
        if (mi != adam.first_moment.end() && vi != adam.second_moment.end()) {
            if (mi->second.values.size() != p->size() || vi->second.values.size() != p->size()) {
                throw DataError("optimizer state for " + p->name + " has the wrong size");
            }
            m = mi->second.values;
            v = vi->second.values;
        } else if (!adam.first_moment.empty()) {
            throw DataError("optimizer state is missing " + p->name);
        }
        m_.push_back(std::move(m));
        v_.push_back(std::move(v));
    }
    if (!adam.first_moment.empty() && adam.step != steps_) {
        throw DataError("optimizer state step " + std::to_string(adam.step) + " does not match model step " +
                        std::to_string(steps_));
    }
}

EncoderBatch<float> ContrastiveTrainer::prepare(const PairBatch& batch) const {
    const auto& cfg = encoder_.config();
    return concat_batches(make_encoder_batch(cfg, batch.first, normalization_),
                          make_encoder_batch(cfg, batch.second, normalization_));
}

TrainRecord ContrastiveTrainer::step(const PairBatch& batch, std::optional<double> lr_override) {
    return step(prepare(batch), batch.image_ids, lr_override);
}

TrainRecord ContrastiveTrainer::step(const EncoderBatch<float>& inputs, std::span<const std::string> image_ids,
                                     std::optional<double> lr_override) {
    const int B = inputs.size / 2;
    if (B < 1 || inputs.size != 2 * B) throw UsageError("trainer step needs 2B inputs");
    const std::uint64_t step_no = steps_ + 1;
    const double lr =
        lr_override.value_or(lr_at(static_cast<int>(std::min<std::uint64_t>(step_no, INT32_MAX)), config_));

    encoder_.zero_grad();
    const nn::Tensor<float> z = encoder_.forward(inputs, true);
    const int D = z.c;
    Eigen::MatrixXd first(B, D), second(B, D);
    for (int k = 0; k < B; ++k) {
        for (int d = 0; d < D; ++d) {
            first(k, d) = z.sample(k)[d];
            second(k, d) = z.sample(B + k)[d];
        }
    }
    auto fail = [&](const std::string& why) {
        std::ostringstream msg;
        msg << "training diverged at step " << step_no << " (lr " << lr << "): " << why << "; batch ids:";
        for (const auto& id : image_ids) msg << ' ' << id;
        throw NumericalError(msg.str());
    };
    ContrastiveLossResult res;
    try {
        res = contrastive_loss(first, second, config_.temperature, config_.symmetric_loss);
    } catch (const NumericalError& e) {
        fail(e.what());
    }
    if (!std::isfinite(res.loss)) fail("non-finite loss");

    nn::Tensor<float> grad(2 * B, D, 1, 1);
    for (int k = 0; k < B; ++k) {
        for (int d = 0; d < D; ++d) {
            grad.sample(k)[d] = static_cast<float>(res.grad_first(k, d));
            grad.sample(B + k)[d] = static_cast<float>(res.grad_second(k, d));
        }
    }
    encoder_.backward(grad);
    adam_update(lr);
    steps_ = step_no;

    TrainRecord rec;
    rec.step = step_no;
    rec.lr = lr;
    rec.loss = res.loss;
    rec.intra_sim = res.similarity.diagonal().mean();
    rec.inter_sim = B > 1 ? (res.similarity.sum() - res.similarity.trace()) / (static_cast<double>(B) * (B - 1)) : 0.0;
    return rec;
}

void ContrastiveTrainer::adam_update(double lr) {
    const double t = static_cast<double>(steps_ + 1);
    const double b1 = config_.adam_beta1, b2 = config_.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    const float fb1 = static_cast<float>(b1), fb2 = static_cast<float>(b2);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& p = *params_[i];
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            const float g = p.grad[j];
            m[j] = fb1 * m[j] + (1.0f - fb1) * g;
            v[j] = fb2 * v[j] + (1.0f - fb2) * g * g;
            if (lr == 0.0) continue;
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            p.value[j] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + config_.adam_epsilon));
        }
    }
}

ModelState ContrastiveTrainer::model() const { return encoder_.state(steps_); }

AdamState ContrastiveTrainer::adam_state() const {
    AdamState s;
    s.step = steps_;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        s.first_moment[params_[i]->name] = NamedArray{params_[i]->shape, m_[i]};
        s.second_moment[params_[i]->name] = NamedArray{params_[i]->shape, v_[i]};
    }
    return s;
}

StepResult train_step(const ModelState& model, const PairBatch& batch, const AdamState& adam,
                      const TrainConfig& config, SpectrumNormalization normalization) {
    ContrastiveTrainer trainer(model, adam, config, normalization);
    StepResult out;
    out.loss = trainer.step(batch).loss;
    out.model = trainer.model();
    out.adam = trainer.adam_state();
    return out;
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

struct PreparedBatch {
    std::uint64_t step = 0;
    EncoderBatch<float> inputs;
    std::vector<std::string> ids;
};

template <typename Item>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

    void push(Item item) {
        std::unique_lock lock(mu_);
        not_full_.wait(lock, [&] { return items_.size() < capacity_ || closed_; });
        if (closed_) return;
        items_.push_back(std::move(item));
        not_empty_.notify_one();
    }
    std::optional<Item> pop() {
        std::unique_lock lock(mu_);
        not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
        if (items_.empty()) return std::nullopt;
        Item item = std::move(items_.front());
        items_.pop_front();
        not_full_.notify_one();
        return item;
    }
    void close() {
        std::lock_guard lock(mu_);
        closed_ = true;
        not_empty_.notify_all();
        not_full_.notify_all();
    }

private:
    std::size_t capacity_;
    std::deque<Item> items_;
    bool closed_ = false;
    std::mutex mu_;
    std::condition_variable not_empty_, not_full_;
};

}  // namespace

TrainLog run_training(ContrastiveTrainer& trainer, const PatchPool& pool, const RecordCallback& on_record,
                      const CheckpointCallback& on_checkpoint) {
    const TrainConfig& cfg = trainer.config();
    if (pool.size() < static_cast<std::size_t>(cfg.batch_pairs)) {
        throw UsageError("training needs at least " + std::to_string(cfg.batch_pairs) + " images, pool has " +
                         std::to_string(pool.size()));
    }
    TrainLog log;
    const std::uint64_t first = trainer.steps() + 1;
    const std::uint64_t last = static_cast<std::uint64_t>(cfg.total_steps);
    if (first > last) return log;

    BoundedQueue<PreparedBatch> queue(2);
    std::exception_ptr producer_error;
    std::thread producer([&] {
        try {
            for (std::uint64_t s = first; s <= last; ++s) {
                PairBatch pb = build_pair_batch(pool, cfg.batch_pairs, mix_seed(cfg.seed, s));
                PreparedBatch item{s, trainer.prepare(pb), std::move(pb.image_ids)};
                queue.push(std::move(item));
            }
        } catch (...) {
            producer_error = std::current_exception();
        }
        queue.close();
    });

    try {
        while (auto item = queue.pop()) {
            const TrainRecord rec = trainer.step(item->inputs, item->ids);
            log.records.push_back(rec);
            if (on_record) on_record(rec);
            if (on_checkpoint && cfg.checkpoint_every > 0 && rec.step % cfg.checkpoint_every == 0) {
                on_checkpoint(trainer);
            }
        }
    } catch (...) {
        queue.close();
        producer.join();
        throw;
    }
    producer.join();
    if (producer_error) std::rethrow_exception(producer_error);
    return log;
}

// ---------------------------------------------------------------------------
// Gradient check

double gradient_check(const ModelState& model, const PairBatch& batch, double tau, double epsilon,
                      int coordinates, std::uint64_t seed, SpectrumNormalization normalization, bool symmetric) {
    Encoder<double> encoder(model);
    const auto& cfg = model.config;
    const EncoderBatch<double> inputs = cast_batch<double>(concat_batches(
        make_encoder_batch(cfg, batch.first, normalization), make_encoder_batch(cfg, batch.second, normalization)));
    const int B = batch.size();

    auto split = [&](const nn::Tensor<double>& z, Eigen::MatrixXd& a, Eigen::MatrixXd& b) {
        a.resize(B, z.c);
        b.resize(B, z.c);
        for (int k = 0; k < B; ++k) {
            for (int d = 0; d < z.c; ++d) {
                a(k, d) = z.sample(k)[d];
                b(k, d) = z.sample(B + k)[d];
            }
        }
    };
    auto loss_value = [&] {
        Eigen::MatrixXd a, b;
        split(encoder.forward(inputs, true), a, b);
        return contrastive_loss(a, b, tau, symmetric).loss;
    };

    encoder.zero_grad();
    const nn::Tensor<double> z = encoder.forward(inputs, true);
    Eigen::MatrixXd a, b;
    split(z, a, b);
    const auto res = contrastive_loss(a, b, tau, symmetric);
    nn::Tensor<double> grad(2 * B, z.c, 1, 1);
    for (int k = 0; k < B; ++k) {
        for (int d = 0; d < z.c; ++d) {
            grad.sample(k)[d] = res.grad_first(k, d);
            grad.sample(B + k)[d] = res.grad_second(k, d);
        }
    }
    encoder.backward(grad);

    std::vector<std::pair<nn::Parameter<double>*, std::size_t>> coords;
    for (auto* p : encoder.parameters()) {
        if (!p->trainable) continue;
        for (std::size_t i = 0; i < p->size(); ++i) coords.emplace_back(p, i);
    }
    Rng rng(seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(std::min<std::size_t>(coords.size(), static_cast<std::size_t>(coordinates)));

    double worst = 0.0;
    for (auto [p, i] : coords) {
        const double analytic = p->grad[i];
        const double original = p->value[i];
        p->value[i] = original + epsilon;
        const double up = loss_value();
        p->value[i] = original - epsilon;
        const double down = loss_value();
        p->value[i] = original;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
    return worst;
}

// ---------------------------------------------------------------------------

SimilarityMargin similarity_margin(Encoder<float>& encoder, std::span<const ImageRecord> images,
                                   SpectrumNormalization normalization, int pairs, std::uint64_t seed) {
    if (images.size() < 2) throw UsageError("similarity_margin needs at least two images");
    const PatchSize size = encoder.config().patch;
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, images.size() - 1);
    auto random_patch = [&](const ImageRecord& img) {
        return sample_training_patches(img, size, 1, rng())[0];
    };
    auto embed_pair = [&](const Patch& p, const Patch& q) {
        const std::vector<Patch> both{p, q};
        const auto e = embed(encoder, make_encoder_batch(encoder.config(), both, normalization));
        return cosine_similarity(e[0], e[1]);
    };
    SimilarityMargin m;
    for (int i = 0; i < pairs; ++i) {
        const auto& img = images[pick(rng)];
        m.intra += embed_pair(random_patch(img), random_patch(img));
        const std::size_t a = pick(rng);
        std::size_t b = pick(rng);
        while (b == a) b = pick(rng);
        m.inter += embed_pair(random_patch(images[a]), random_patch(images[b]));
    }
    m.intra /= pairs;
    m.inter /= pairs;
    return m;
}

}  // namespace sisl
