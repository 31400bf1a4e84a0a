#include "styleprof/kernels.hpp"

#include <omp.h>

namespace styleprof::kernels {

namespace serial {

std::vector<features::SparseVector> vectorize_batch(std::span<const std::string> texts,
                                                    const features::Vocabulary& vocab) {
    std::vector<features::SparseVector> out(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) out[i] = features::vectorize(texts[i], vocab);
    return out;
}

std::vector<double> margins(const linear::LinearModel& model,
                            std::span<const features::SparseVector> xs) {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = linear::margin_of(model, xs[i]);
    return out;
}

std::vector<std::array<double, 2>> forward_batch(const nn::Network& net,
                                                 std::span<const std::string> texts) {
    std::vector<std::array<double, 2>> out(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) out[i] = net.predict(texts[i]);
    return out;
}

}  // namespace serial

namespace parallel {

std::vector<features::SparseVector> vectorize_batch(std::span<const std::string> texts,
                                                    const features::Vocabulary& vocab) {
    std::vector<features::SparseVector> out(texts.size());
    const auto n = static_cast<long>(texts.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (long i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = features::vectorize(texts[static_cast<std::size_t>(i)], vocab);
    }
    return out;
}

std::vector<double> margins(const linear::LinearModel& model,
                            std::span<const features::SparseVector> xs) {
    std::vector<double> out(xs.size());
    const auto n = static_cast<long>(xs.size());
    bool mismatch = false;
#pragma omp parallel for schedule(static) reduction(|| : mismatch)
    for (long i = 0; i < n; ++i) {
        const auto& x = xs[static_cast<std::size_t>(i)];
        if (x.dimension != model.dimension()) {
            mismatch = true;
            continue;
        }
        out[static_cast<std::size_t>(i)] = linear::margin_of(model, x);
    }
    // rethrow outside the parallel region with the serial error message
    if (mismatch) return serial::margins(model, xs);
    return out;
}

std::vector<std::array<double, 2>> forward_batch(const nn::Network& net,
                                                 std::span<const std::string> texts) {
    std::vector<std::array<double, 2>> out(texts.size());
    const auto n = static_cast<long>(texts.size());
    bool failed = false;
#pragma omp parallel for schedule(dynamic, 8) reduction(|| : failed)
    for (long i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = net.predict(texts[static_cast<std::size_t>(i)]);
        } catch (...) {
            failed = true;
        }
    }
    if (failed) return serial::forward_batch(net, texts);
    return out;
}

}  // namespace parallel

int max_threads() { return omp_get_max_threads(); }

}  // namespace styleprof::kernels
