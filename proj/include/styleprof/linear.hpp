#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "styleprof/features.hpp"

namespace styleprof::linear {

struct LinearConfig {
    double C = 1.0;
    std::size_t epochs = 20;
    std::uint64_t seed = 1;
};

/// Platt-style sigmoid over the raw margin: P(yes) = 1 / (1 + exp(-(a*m + b))).
struct Calibration {
    double a = 1.0;
    double b = 0.0;
};

struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;
    Calibration calibration;
    LinearConfig config;
    std::string vocab_fingerprint;
    /// Training objective after each epoch; entry 0 is the objective at w = 0.
    std::vector<double> objective_log;

    std::size_t dimension() const { return weights.size(); }
};

struct Prediction {
    bool label = false;
    double margin = 0.0;
};

/// Pegasos subgradient descent on (1/2)|w|^2 + (1/2)b^2 + C * sum hinge(y(w.x + b)),
/// i.e. lambda = 1/(C n) and step 1/(lambda t). The bias is the weight of a
/// constant unit feature. Examples are visited in an Rng-shuffled order per
/// epoch, so weights are bit-identical for a fixed seed.
LinearModel train_linear(std::span<const features::SparseVector> xs,
                         const std::vector<bool>& labels, const LinearConfig& config);

/// Label is yes when the margin is >= 0 (a margin of exactly 0 predicts yes).
Prediction predict_linear(const LinearModel& model, const features::SparseVector& x);

double margin_of(const LinearModel& model, const features::SparseVector& x);

/// Maximum-likelihood sigmoid fit on dev margins (Newton with backtracking,
/// Platt's smoothed targets). The slope is kept positive so the probability
/// is increasing in margin. Throws Calibration on single-class dev.
Calibration fit_calibration(std::span<const double> margins, const std::vector<bool>& labels);

LinearModel calibrate(LinearModel model, std::span<const features::SparseVector> dev,
                      const std::vector<bool>& labels);

double probability(const Calibration& cal, double margin);

/// Cross-entropy of sigmoid(a*m + b) against the smoothed targets used by the fit.
double calibration_nll(const Calibration& cal, std::span<const double> margins,
                       const std::vector<bool>& labels);

double objective(const LinearModel& model, std::span<const features::SparseVector> xs,
                 const std::vector<bool>& labels);

}  // namespace styleprof::linear
