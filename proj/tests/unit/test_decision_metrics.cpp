#include <random>

#include "doctest.h"

#include "../oracles.hpp"
#include "sisl/decision.hpp"
#include "sisl/error.hpp"
#include "sisl/metrics.hpp"

using namespace sisl;

namespace {

ResponseMap constant_map(int h, int w, double v) {
    ResponseMap r(h, w, v);
    r.image_id = "c";
    return r;
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

}  // namespace

TEST_CASE("inversion rule") {
    auto [a, inv_a] = maybe_invert(constant_map(4, 4, 0.7));
    CHECK(inv_a);
    for (double v : a.values) CHECK(v == doctest::Approx(0.3));
    auto [b, inv_b] = maybe_invert(constant_map(4, 4, 0.3));
    CHECK_FALSE(inv_b);
    CHECK(b.values[0] == 0.3);
    auto [c, inv_c] = maybe_invert(constant_map(4, 4, 0.5));
    CHECK_FALSE(inv_c);
}

TEST_CASE("detection scores") {
    CHECK(detect_spavg(constant_map(4, 4, 0.0)).score == 0.0);
    ResponseMap q(4, 4, 0.0);
    for (int c = 0; c < 4; ++c) q.at(0, c) = 1.0;
    CHECK(detect_spavg(q).score == doctest::Approx(0.25));
    CHECK(detect_pctarea(constant_map(4, 4, 0.2), 0.25).score == 0.0);
    ResponseMap p(4, 4, 0.1);
    for (int c = 0; c < 4; ++c) p.at(2, c) = 0.9;
    CHECK(detect_pctarea(p, 0.5).score == 0.25);
    CHECK(detect_pctarea(constant_map(2, 2, 0.25), 0.25).score == 0.0);
}

TEST_CASE("localization boundaries") {
    std::mt19937_64 rng(41);
    const ResponseMap r = random_map(rng, 8, 8);
    CHECK(localize(r, 1.0).count() == 0u);
    ResponseMap z(3, 3, 0.0);
    z.at(1, 1) = 0.01;
    const BinaryMask m = localize(z, 0.0);
    CHECK(m.count() == 1u);
    CHECK(m.at(1, 1) == 1);
    CHECK(m.threshold == 0.0);
}

TEST_CASE("decision properties over random maps") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
        const ResponseMap r = random_map(rng, 5 + trial % 7, 4 + trial % 5);
        const auto once = maybe_invert(r).first;
        const auto twice = maybe_invert(once);
        CHECK_FALSE(twice.second);
        CHECK(twice.first.values == once.values);
        CHECK(detect_spavg(once).score <= 0.5 + 1.0 / (2.0 * r.values.size()));

        double sum = 0;
        for (double v : r.values) sum += v;
        CHECK(std::abs(detect_spavg(r).score - sum / r.values.size()) < 1e-12);

        const double d1 = u(rng), d2 = u(rng), lo = std::min(d1, d2), hi = std::max(d1, d2);
        CHECK(detect_pctarea(r, hi).score <= detect_pctarea(r, lo).score);
        std::size_t above = 0;
        for (double v : r.values) above += v > lo;
        CHECK(detect_pctarea(r, lo).score == static_cast<double>(above) / r.values.size());

        const BinaryMask big = localize(r, lo), small = localize(r, hi);
        for (std::size_t i = 0; i < r.values.size(); ++i) {
            CHECK(big.values[i] == (r.values[i] > lo));
            if (small.values[i]) CHECK(big.values[i]);
        }
    }
}

TEST_CASE("decide inverts before scoring and masking") {
    ResponseMap r(2, 2, 0.9);
    r.at(0, 0) = 0.1;
    r.image_id = "x";
    const Decision d = decide(r, DetectionMethod::pctarea, Thresholds{});
    CHECK(d.detection.inverted);
    CHECK(d.detection.score == 0.25);
    CHECK(d.mask.count() == 1u);
    CHECK(d.mask.at(0, 0) == 1);
    CHECK(format_detection_line(d.detection, 0.5) == "x,pctarea,0.250000,1,authentic");
    CHECK(detection_csv_header() == "id,method,score,inverted,verdict");
}

TEST_CASE("threshold validation") {
    Thresholds t;
    CHECK(t.delta_b == 0.25);
    CHECK(t.delta_l == t.delta_b);
    t.delta_l = 1.5;
    CHECK_THROWS_AS(t.validate(), UsageError);
    CHECK_THROWS_AS(parse_detection_method("max"), UsageError);
}

TEST_CASE("average precision fixtures") {
    const std::vector<double> s{0.9, 0.8, 0.7, 0.6};
    const std::vector<int> l{1, 0, 1, 0};
    CHECK(std::abs(average_precision(s, l) - (0.5 + 0.5 * 2.0 / 3.0)) < 1e-12);
    CHECK(average_precision(std::vector<double>{0.9, 0.8, 0.1}, std::vector<int>{1, 1, 0}) == 1.0);
    CHECK(average_precision(std::vector<double>{0.5}, std::vector<int>{1}) == 1.0);
    CHECK_THROWS_AS(average_precision(std::vector<double>{0.5, 0.2}, std::vector<int>{0, 0}), UsageError);
    CHECK_THROWS_AS(average_precision(std::vector<double>{0.5}, std::vector<int>{1, 0}), UsageError);
    // Ties form one step: both tied items enter together.
    CHECK(average_precision(std::vector<double>{0.5, 0.5}, std::vector<int>{1, 0}) == doctest::Approx(0.5));
}

TEST_CASE("average precision agrees with the exhaustive sweep and ignores monotone maps") {
    std::mt19937_64 rng(43);
    std::uniform_int_distribution<int> level(0, 9);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> s(20);
        std::vector<int> l(20);
        for (int i = 0; i < 20; ++i) {
            s[i] = level(rng) / 10.0;  // coarse levels force ties
            l[i] = level(rng) < 4;
        }
        l[trial % 20] = 1;
        CHECK(std::abs(average_precision(s, l) - oracle::average_precision(s, l)) < 1e-9);
        std::vector<double> t(20);
        for (int i = 0; i < 20; ++i) t[i] = std::exp(3 * s[i]) - 7;
        CHECK(std::abs(average_precision(t, l) - average_precision(s, l)) < 1e-12);
    }
}

TEST_CASE("matthews correlation") {
    CHECK(mcc({5, 5, 0, 0}) == 1.0);
    CHECK(std::abs(mcc({3, 4, 1, 2}) - 10.0 / std::sqrt(600.0)) < 1e-12);
    CHECK(mcc({0, 6, 0, 4}) == 0.0);
    CHECK(mcc({0, 0, 5, 5}) == -1.0);
    std::mt19937_64 rng(44);
    std::uniform_int_distribution<int> n(0, 50);
    for (int i = 0; i < 100; ++i) {
        const ConfusionCounts c{static_cast<std::uint64_t>(n(rng)), static_cast<std::uint64_t>(n(rng)),
                                static_cast<std::uint64_t>(n(rng)), static_cast<std::uint64_t>(n(rng))};
        CHECK(std::abs(mcc(c) - mcc({c.tn, c.tp, c.fn, c.fp})) < 1e-12);
        CHECK(mcc(c) >= -1.0);
        CHECK(mcc(c) <= 1.0);
    }
}

TEST_CASE("f1 and iou") {
    BinaryMask gt(4, 4), pred(4, 4);
    for (int c = 0; c < 4; ++c) gt.at(1, c) = gt.at(2, c) = 1;
    auto s = f1_iou(gt, gt);
    CHECK(s.f1 == 1.0);
    CHECK(s.iou == 1.0);
    for (int c = 0; c < 4; ++c) pred.at(1, c) = 1;
    s = f1_iou(pred, gt);
    CHECK(s.f1 == doctest::Approx(2.0 / 3.0));
    CHECK(s.iou == doctest::Approx(0.5));
    CHECK(s.counts.total() == 16u);
    BinaryMask other(4, 4);
    other.at(0, 0) = 1;
    CHECK(f1_iou(other, gt).iou == 0.0);
    CHECK(f1_iou(other, gt).f1 == 0.0);
    CHECK(f1_iou(BinaryMask(4, 4), BinaryMask(4, 4)).iou == 1.0);
    CHECK(f1_iou(BinaryMask(4, 4), gt).f1 == 0.0);
    CHECK_THROWS_AS(f1_iou(BinaryMask(4, 5), gt), DataError);

    std::mt19937_64 rng(45);
    for (int i = 0; i < 500; ++i) {
        const auto sc = f1_iou(random_mask(rng, 6, 7, 0.3), random_mask(rng, 6, 7, 0.4));
        CHECK(sc.iou <= sc.f1 + 1e-15);
    }
}

namespace {

std::vector<EvalItem> six_items(std::mt19937_64& rng) {
    std::vector<EvalItem> items;
    for (int i = 0; i < 6; ++i) {
        EvalItem it;
        it.id = "img" + std::to_string(i);
        it.label = i % 2 ? Label::spliced : Label::authentic;
        it.response = random_map(rng, 6, 6);
        for (auto& v : it.response.values) v *= it.label == Label::spliced ? 1.0 : 0.6;
        it.response.image_id = it.id;
        if (it.label == Label::spliced) it.gt = random_mask(rng, 6, 6, 0.3);
        items.push_back(std::move(it));
    }
    return items;
}

}  // namespace

TEST_CASE("evaluate_dataset: perfect pipeline") {
    std::vector<EvalItem> items;
    for (int i = 0; i < 4; ++i) {
        EvalItem it;
        it.id = "p" + std::to_string(i);
        it.label = i < 2 ? Label::spliced : Label::authentic;
        it.response = ResponseMap(8, 8, 0.0);
        if (it.label == Label::spliced) {
            BinaryMask gt(8, 8);
            for (int r = 2; r < 5; ++r)
                for (int c = 1; c < 4 + i; ++c) gt.at(r, c) = 1, it.response.at(r, c) = 1.0;
            it.gt = gt;
        }
        items.push_back(std::move(it));
    }
    const MetricsReport rep = evaluate_dataset(items, Thresholds{}, DetectionMethod::pctarea, "perfect");
    CHECK(rep.ap == 1.0);
    CHECK(rep.mean_iou == 1.0);
    CHECK(rep.mean_f1 == 1.0);
    CHECK(rep.mean_mcc == doctest::Approx(1.0));
    CHECK(rep.to_csv().find("# delta_b=0.250000\n") != std::string::npos);
}

TEST_CASE("evaluate_dataset recomposes from per-image computations and ignores order") {
    std::mt19937_64 rng(46);
    const auto items = six_items(rng);
    const Thresholds th{0.3, 0.4, 0.5};
    const MetricsReport rep = evaluate_dataset(items, th, DetectionMethod::spavg, "six");
    std::vector<double> scores;
    std::vector<int> labels;
    double iou = 0, f1 = 0, m = 0;
    for (const auto& it : items) {
        auto inv = maybe_invert(it.response).first;
        scores.push_back(detect_spavg(inv).score);
        labels.push_back(it.label == Label::spliced);
        if (it.gt) {
            const auto s = f1_iou(localize(inv, 0.4), *it.gt);
            iou += s.iou / 3;
            f1 += s.f1 / 3;
            m += mcc(s.counts) / 3;
        }
    }
    CHECK(rep.ap == doctest::Approx(oracle::average_precision(scores, labels)).epsilon(1e-12));
    CHECK(rep.mean_iou == doctest::Approx(iou).epsilon(1e-12));
    CHECK(rep.mean_f1 == doctest::Approx(f1).epsilon(1e-12));
    CHECK(rep.mean_mcc == doctest::Approx(m).epsilon(1e-12));
    CHECK(rep.spliced == 3u);

    auto shuffled = items;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(evaluate_dataset(shuffled, th, DetectionMethod::spavg, "six").to_csv() == rep.to_csv());
}

TEST_CASE("evaluate_dataset errors") {
    std::mt19937_64 rng(47);
    auto items = six_items(rng);
    items[1].gt.reset();
    CHECK_THROWS_AS(evaluate_dataset(items, Thresholds{}, DetectionMethod::spavg), DataError);

    std::vector<EvalItem> single(1);
    single[0].id = "only";
    single[0].label = Label::spliced;
    single[0].response = ResponseMap(2, 2, 0.9);
    single[0].gt = BinaryMask(2, 2);
    CHECK(evaluate_dataset(single, Thresholds{}, DetectionMethod::spavg).ap == 1.0);
    single[0].label = Label::authentic;
    CHECK_THROWS_AS(evaluate_dataset(single, Thresholds{}, DetectionMethod::spavg), UsageError);
}

TEST_CASE("localization sweep grid") {
    const auto g = default_threshold_grid();
    REQUIRE(g.size() == 19u);
    CHECK(g.front() == doctest::Approx(0.05));
    CHECK(g.back() == doctest::Approx(0.95));
    std::mt19937_64 rng(48);
    const auto items = six_items(rng);
    const auto sweep = localization_sweep(items, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        Thresholds th;
        th.delta_l = g[i];
        CHECK(sweep[i] == doctest::Approx(evaluate_dataset(items, th, DetectionMethod::spavg).mean_iou));
    }
}
