#include "styleprof/nn/params.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "styleprof/error.hpp"

namespace styleprof::nn {

std::size_t ParamSet::add(std::string name, std::vector<std::size_t> shape) {
    const std::size_t n =
        std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    tensors_.push_back(Tensor{std::move(name), std::move(shape), std::vector<double>(n, 0.0), false});
    return tensors_.size() - 1;
}

std::size_t ParamSet::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
        if (tensors_[i].name == name) return i;
    }
    throw Error(ErrorCode::NotFound, "no parameter tensor named " + std::string(name));
}

GradSet ParamSet::zero_grads() const {
    GradSet g;
    g.reserve(tensors_.size());
    for (const auto& t : tensors_) g.emplace_back(t.size(), 0.0);
    return g;
}

std::size_t ParamSet::total_size() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
}

void zero(GradSet& grads) {
    for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
}

void accumulate(GradSet& dst, const GradSet& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) {
        for (std::size_t k = 0; k < dst[i].size(); ++k) dst[i][k] += src[i][k];
    }
}

void scale(GradSet& grads, double factor) {
    for (auto& g : grads) {
        for (double& v : g) v *= factor;
    }
}

Adam::Adam(const ParamSet& params, AdamConfig config)
    : config_(config), m_(params.zero_grads()), v_(params.zero_grads()) {}

void Adam::step(ParamSet& params, const GradSet& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.count(); ++i) {
        auto& p = params[i];
        if (p.frozen) continue;
        auto& m = m_[i];
        auto& v = v_[i];
        const auto& g = grads[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
            v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
            p.values[k] -= config_.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.epsilon);
        }
    }
}

}  // namespace styleprof::nn
