#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace styleprof::nn {

/// Named dense tensor, row-major.
struct Tensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> values;
    /// Frozen tensors take part in the forward pass but are never updated.
    bool frozen = false;

    std::size_t size() const { return values.size(); }
};

/// One gradient buffer per tensor, same layout.
using GradSet = std::vector<std::vector<double>>;

class ParamSet {
public:
    /// Appends a zero tensor and returns its index.
    std::size_t add(std::string name, std::vector<std::size_t> shape);

    Tensor& operator[](std::size_t i) { return tensors_[i]; }
    const Tensor& operator[](std::size_t i) const { return tensors_[i]; }
    std::size_t count() const { return tensors_.size(); }
    std::vector<Tensor>& tensors() { return tensors_; }
    const std::vector<Tensor>& tensors() const { return tensors_; }

    /// Index of a tensor by name; throws NotFound.
    std::size_t index_of(std::string_view name) const;

    GradSet zero_grads() const;
    std::size_t total_size() const;

private:
    std::vector<Tensor> tensors_;
};

void zero(GradSet& grads);
/// dst += src, tensor by tensor in index order.
void accumulate(GradSet& dst, const GradSet& src);
void scale(GradSet& grads, double factor);

struct AdamConfig {
    double learning_rate = 0.005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class Adam {
public:
    Adam(const ParamSet& params, AdamConfig config);
    void step(ParamSet& params, const GradSet& grads);

private:
    AdamConfig config_;
    GradSet m_;
    GradSet v_;
    std::uint64_t t_ = 0;
};

}  // namespace styleprof::nn
