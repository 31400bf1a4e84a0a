#include <doctest.h>

#include <cmath>

#include "styleprof/error.hpp"
#include "styleprof/features.hpp"
#include "styleprof/linear.hpp"
#include "styleprof/random.hpp"
#include "styleprof/synthetic.hpp"

using namespace styleprof;
using namespace styleprof::linear;
using features::SparseVector;

namespace {

SparseVector unit(std::uint32_t i, std::size_t dim, double v = 1.0) {
    SparseVector x;
    x.indices = {i};
    x.values = {v};
    x.dimension = dim;
    return x;
}

struct Data {
    std::vector<SparseVector> xs;
    std::vector<bool> ys;
};

Data synthetic_data(std::size_t n, double strength, std::uint64_t seed) {
    synthetic::SyntheticOptions so;
    so.seed = seed;
    so.n = n;
    so.marker_strength = strength;
    const auto c = synthetic::generate_synthetic(so);
    std::vector<std::string> texts;
    Data d;
    for (const auto& r : c.records()) {
        texts.push_back(r.utterance.text);
        d.ys.push_back(synthetic::contains_marker(r.utterance.text, Characteristic::Emotionality));
    }
    const auto vocab = features::build_vocab(texts, features::VocabConfig{});
    for (const auto& t : texts) d.xs.push_back(features::vectorize(t, vocab));
    return d;
}

double dot_oracle(const LinearModel& m, const SparseVector& x) {
    std::vector<double> dense(m.dimension(), 0.0);
    for (std::size_t i = 0; i < x.nnz(); ++i) dense[x.indices[i]] = x.values[i];
    double s = m.bias;
    for (std::size_t i = 0; i < dense.size(); ++i) s += dense[i] * m.weights[i];
    return s;
}

}  // namespace

TEST_CASE("separable pair") {
    const std::vector<SparseVector> xs{unit(0, 2), unit(1, 2)};
    const std::vector<bool> ys{true, false};
    const auto m = train_linear(xs, ys, LinearConfig{});
    CHECK(predict_linear(m, xs[0]).label);
    CHECK_FALSE(predict_linear(m, xs[1]).label);
    CHECK(m.objective_log.size() == LinearConfig{}.epochs + 1);
    CHECK(m.objective_log.back() < m.objective_log.front());
}

TEST_CASE("training is deterministic per seed") {
    const auto d = synthetic_data(300, 0.9, 3);
    LinearConfig cfg;
    cfg.seed = 11;
    const auto a = train_linear(d.xs, d.ys, cfg);
    const auto b = train_linear(d.xs, d.ys, cfg);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
    cfg.seed = 12;
    const auto c = train_linear(d.xs, d.ys, cfg);
    CHECK(c.weights != a.weights);
}

TEST_CASE("fits a marker-separable corpus") {
    const auto d = synthetic_data(1000, 1.0, 4);
    const auto m = train_linear(d.xs, d.ys, LinearConfig{});
    std::size_t correct = 0;
    for (std::size_t i = 0; i < d.xs.size(); ++i) correct += predict_linear(m, d.xs[i]).label == d.ys[i];
    CHECK(static_cast<double>(correct) / static_cast<double>(d.xs.size()) >= 0.99);
}

TEST_CASE("margins") {
    const auto d = synthetic_data(200, 0.8, 5);
    const auto m = train_linear(d.xs, d.ys, LinearConfig{});
    for (const auto& x : d.xs) {
        CHECK(margin_of(m, x) == doctest::Approx(dot_oracle(m, x)).epsilon(1e-12));
        const auto p = predict_linear(m, x);
        CHECK(p.label == (p.margin >= 0.0));
    }
    SparseVector zero;
    zero.dimension = m.dimension();
    CHECK(margin_of(m, zero) == m.bias);
    CHECK(predict_linear(m, zero).label == (m.bias >= 0.0));

    LinearModel flat;
    flat.weights.assign(3, 0.0);
    CHECK(predict_linear(flat, unit(1, 3)).label);

    // Scaling the input scales the non-bias part of the margin.
    for (std::size_t i = 0; i < 20; ++i) {
        auto x = d.xs[i];
        for (auto& v : x.values) v *= 3.0;
        CHECK(margin_of(m, x) - m.bias == doctest::Approx(3.0 * (margin_of(m, d.xs[i]) - m.bias)));
    }
}

TEST_CASE("unused dimensions do not change the solution") {
    const auto d = synthetic_data(200, 0.8, 6);
    auto padded = d.xs;
    for (auto& x : padded) x.dimension += 50;
    const auto a = train_linear(d.xs, d.ys, LinearConfig{});
    const auto b = train_linear(padded, d.ys, LinearConfig{});
    REQUIRE(b.dimension() == a.dimension() + 50);
    for (std::size_t i = 0; i < a.dimension(); ++i) CHECK(b.weights[i] == doctest::Approx(a.weights[i]));
    for (std::size_t i = a.dimension(); i < b.dimension(); ++i) CHECK(b.weights[i] == 0.0);
    CHECK(b.bias == doctest::Approx(a.bias));
}

TEST_CASE("input errors") {
    const std::vector<SparseVector> xs{unit(0, 2), unit(1, 2)};
    CHECK_THROWS_AS(train_linear(xs, std::vector<bool>{true}, LinearConfig{}), Error);
    CHECK_THROWS_AS(train_linear(xs, std::vector<bool>{true, true}, LinearConfig{}), Error);
    const std::vector<SparseVector> mixed{unit(0, 2), unit(1, 3)};
    CHECK_THROWS_AS(train_linear(mixed, std::vector<bool>{true, false}, LinearConfig{}), Error);
}

TEST_CASE("calibration") {
    CHECK(probability(Calibration{1.0, 0.0}, 0.0) == 0.5);
    CHECK(probability(Calibration{2.0, 1.0}, 1.0) == doctest::Approx(1.0 / (1.0 + std::exp(-3.0))));

    Rng rng(9);
    std::vector<double> margins;
    std::vector<bool> labels;
    for (int i = 0; i < 400; ++i) {
        const bool y = rng.bernoulli(0.4);
        labels.push_back(y);
        margins.push_back((y ? 0.5 : -0.5) + rng.normal() * 0.8);
    }
    const auto cal = fit_calibration(margins, labels);
    CHECK(cal.a > 0.0);
    const double best = calibration_nll(cal, margins, labels);
    CHECK(best <= calibration_nll(Calibration{1.0, 0.0}, margins, labels));
    for (double da : {-0.1, 0.1}) {
        for (double db : {-0.1, 0.0, 0.1}) {
            CHECK(best <= calibration_nll(Calibration{cal.a + da, cal.b + db}, margins, labels) + 1e-12);
        }
    }
    double prev = -1.0;
    for (int i = -500; i <= 500; ++i) {
        const double p = probability(cal, i * 0.01);
        CHECK(p >= prev);
        prev = p;
    }
    CHECK_THROWS_AS(fit_calibration(margins, std::vector<bool>(margins.size(), true)), Error);
}
