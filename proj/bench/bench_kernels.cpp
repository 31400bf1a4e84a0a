// Serial reference vs OpenMP kernels over one synthetic batch.
#include <benchmark/benchmark.h>

#include "styleprof/corpus.hpp"
#include "styleprof/features.hpp"
#include "styleprof/kernels.hpp"
#include "styleprof/linear.hpp"
#include "styleprof/nn/models.hpp"
#include "styleprof/synthetic.hpp"

namespace {

using namespace styleprof;

struct Fixture {
    std::vector<std::string> texts;
    std::vector<bool> labels;
    features::Vocabulary vocab;
    std::vector<features::SparseVector> xs;
    linear::LinearModel model;
    std::unique_ptr<nn::CharCnn> ccnn;
    std::unique_ptr<nn::SeqNet> seqnet;

    Fixture() {
        synthetic::SyntheticOptions so;
        so.n = 2000;
        so.seed = 11;
        so.marker_strength = 0.8;
        const auto corpus = synthetic::generate_synthetic(so);
        for (const auto& r : corpus.records()) {
            texts.push_back(r.utterance.text);
            labels.push_back(r.annotation.votes[Characteristic::Emotionality][0]);
        }
        vocab = features::build_vocab(texts);
        xs = kernels::serial::vectorize_batch(texts, vocab);
        model = linear::train_linear(xs, labels, {});
        ccnn = std::make_unique<nn::CharCnn>(nn::CharCnnConfig{}, nn::Charset::build(texts, 20000));
        seqnet = std::make_unique<nn::SeqNet>(nn::SeqNetConfig{}, nn::TokenVocab::build(texts, 5000));
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

void BM_VectorizeSerial(benchmark::State& s) {
    const auto& f = fixture();
    for (auto _ : s) benchmark::DoNotOptimize(kernels::serial::vectorize_batch(f.texts, f.vocab));
}
void BM_VectorizeParallel(benchmark::State& s) {
    const auto& f = fixture();
    for (auto _ : s) benchmark::DoNotOptimize(kernels::parallel::vectorize_batch(f.texts, f.vocab));
}
void BM_MarginsSerial(benchmark::State& s) {
    const auto& f = fixture();
    for (auto _ : s) benchmark::DoNotOptimize(kernels::serial::margins(f.model, f.xs));
}
void BM_MarginsParallel(benchmark::State& s) {
    const auto& f = fixture();
    for (auto _ : s) benchmark::DoNotOptimize(kernels::parallel::margins(f.model, f.xs));
}
void BM_CharCnnSerial(benchmark::State& s) {
    const auto& f = fixture();
    for (auto _ : s) benchmark::DoNotOptimize(kernels::serial::forward_batch(*f.ccnn, f.texts));
}
void BM_CharCnnParallel(benchmark::State& s) {
    const auto& f = fixture();
    for (auto _ : s) benchmark::DoNotOptimize(kernels::parallel::forward_batch(*f.ccnn, f.texts));
}
void BM_SeqNetSerial(benchmark::State& s) {
    const auto& f = fixture();
    for (auto _ : s) benchmark::DoNotOptimize(kernels::serial::forward_batch(*f.seqnet, f.texts));
}
void BM_SeqNetParallel(benchmark::State& s) {
    const auto& f = fixture();
    for (auto _ : s) benchmark::DoNotOptimize(kernels::parallel::forward_batch(*f.seqnet, f.texts));
}

}  // namespace

BENCHMARK(BM_VectorizeSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VectorizeParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MarginsSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MarginsParallel)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_CharCnnSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CharCnnParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SeqNetSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SeqNetParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
