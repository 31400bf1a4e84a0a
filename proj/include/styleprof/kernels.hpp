#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "styleprof/features.hpp"
#include "styleprof/linear.hpp"
#include "styleprof/nn/models.hpp"

// Batch kernels in two flavours: `serial` is the reference, `parallel` splits
// the batch across OpenMP threads. Every item is computed independently by
// the same code, so both return bit-identical results.

namespace styleprof::kernels {

namespace serial {

std::vector<features::SparseVector> vectorize_batch(std::span<const std::string> texts,
                                                    const features::Vocabulary& vocab);
std::vector<double> margins(const linear::LinearModel& model,
                            std::span<const features::SparseVector> xs);
std::vector<std::array<double, 2>> forward_batch(const nn::Network& net,
                                                 std::span<const std::string> texts);

}  // namespace serial

namespace parallel {

std::vector<features::SparseVector> vectorize_batch(std::span<const std::string> texts,
                                                    const features::Vocabulary& vocab);
std::vector<double> margins(const linear::LinearModel& model,
                            std::span<const features::SparseVector> xs);
std::vector<std::array<double, 2>> forward_batch(const nn::Network& net,
                                                 std::span<const std::string> texts);

}  // namespace parallel

int max_threads();

}  // namespace styleprof::kernels
