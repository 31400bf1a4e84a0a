#include "styleprof/linear.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "styleprof/error.hpp"
#include "styleprof/random.hpp"

namespace styleprof::linear {

using features::SparseVector;

namespace {

void check_dimensions(std::span<const SparseVector> xs) {
    for (const auto& x : xs) {
        if (x.dimension != xs.front().dimension) {
            throw Error(ErrorCode::DimensionMismatch, "training vectors differ in dimension");
        }
    }
}

double sparse_dot(const std::vector<double>& w, const SparseVector& x) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.indices.size(); ++k) s += w[x.indices[k]] * x.values[k];
    return s;
}

double squared_norm(const SparseVector& x) {
    double s = 0.0;
    for (double v : x.values) s += v * v;
    return s;
}

// log(1 + exp(z)) without overflow
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

double margin_of(const LinearModel& model, const SparseVector& x) {
    if (x.dimension != model.dimension()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "vector dimension " + std::to_string(x.dimension) + " != model dimension " +
                        std::to_string(model.dimension()));
    }
    return sparse_dot(model.weights, x) + model.bias;
}

Prediction predict_linear(const LinearModel& model, const SparseVector& x) {
    const double m = margin_of(model, x);
    return Prediction{m >= 0.0, m};
}

double objective(const LinearModel& model, std::span<const SparseVector> xs,
                 const std::vector<bool>& labels) {
    double reg = model.bias * model.bias;
    for (double w : model.weights) reg += w * w;
    double hinge = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double y = labels[i] ? 1.0 : -1.0;
        hinge += std::max(0.0, 1.0 - y * (sparse_dot(model.weights, xs[i]) + model.bias));
    }
    return 0.5 * reg + model.config.C * hinge;
}

LinearModel train_linear(std::span<const SparseVector> xs, const std::vector<bool>& labels,
                         const LinearConfig& config) {
    if (xs.size() != labels.size()) {
        throw Error(ErrorCode::InvalidArgument, "vectors and labels differ in length");
    }
    if (xs.empty()) throw Error(ErrorCode::DegenerateTraining, "no training data");
    if (!(config.C > 0.0)) throw Error(ErrorCode::InvalidArgument, "C must be > 0");
    const auto n_yes = std::count(labels.begin(), labels.end(), true);
    if (n_yes == 0 || n_yes == static_cast<long>(labels.size())) {
        throw Error(ErrorCode::DegenerateTraining, "training data contains a single class");
    }
    check_dimensions(xs);

    const std::size_t n = xs.size();
    const std::size_t dim = xs.front().dimension;
    const double lambda = 1.0 / (config.C * static_cast<double>(n));
    const double radius_sq = 1.0 / lambda;

    // w = scale * v, bias = scale * vb; the unit bias feature makes |x|^2 one larger
    std::vector<double> v(dim, 0.0);
    double vb = 0.0;
    double scale = 1.0;
    double v_norm_sq = 0.0;
    std::vector<double> x_norm_sq(n);
    for (std::size_t i = 0; i < n; ++i) x_norm_sq[i] = squared_norm(xs[i]) + 1.0;

    LinearModel model;
    model.config = config;
    model.weights.assign(dim, 0.0);
    model.objective_log.push_back(objective(model, xs, labels));

    std::vector<std::size_t> order(n);
    std::uint64_t t = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng rng = Rng::derive(config.seed, epoch);
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t i : order) {
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            const double y = labels[i] ? 1.0 : -1.0;
            const double vx = sparse_dot(v, xs[i]) + vb;
            const double margin = y * scale * vx;

            const double shrink = 1.0 - 1.0 / static_cast<double>(t);
            if (shrink <= 0.0) {
                std::fill(v.begin(), v.end(), 0.0);
                vb = 0.0;
                v_norm_sq = 0.0;
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if (margin < 1.0) {
                // w += eta*y*x  <=>  v += (eta*y/scale)*x
                const double a = eta * y / scale;
                const double vx_now = (shrink <= 0.0) ? 0.0 : vx;
                v_norm_sq += 2.0 * a * vx_now + a * a * x_norm_sq[i];
                const auto& x = xs[i];
                for (std::size_t k = 0; k < x.indices.size(); ++k) v[x.indices[k]] += a * x.values[k];
                vb += a;
            }
            // projection onto the ball of radius 1/sqrt(lambda)
            const double w_norm_sq = scale * scale * v_norm_sq;
            if (w_norm_sq > radius_sq) scale *= std::sqrt(radius_sq / w_norm_sq);
            if (scale < 1e-9) {
                for (double& e : v) e *= scale;
                vb *= scale;
                v_norm_sq *= scale * scale;
                scale = 1.0;
            }
        }
        for (std::size_t d = 0; d < dim; ++d) model.weights[d] = scale * v[d];
        model.bias = scale * vb;
        const double obj = objective(model, xs, labels);
        if (!std::isfinite(obj)) {
            throw Error(ErrorCode::Divergence,
                        "non-finite objective at epoch " + std::to_string(epoch + 1));
        }
        model.objective_log.push_back(obj);
    }
    return model;
}

double probability(const Calibration& cal, double margin) {
    const double z = cal.a * margin + cal.b;
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

struct Targets {
    double hi;
    double lo;
};

Targets smoothed_targets(const std::vector<bool>& labels) {
    const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), true));
    const auto neg = static_cast<double>(labels.size()) - pos;
    return {(pos + 1.0) / (pos + 2.0), 1.0 / (neg + 2.0)};
}

double nll(double a, double b, std::span<const double> m, const std::vector<bool>& labels,
           Targets t) {
    double total = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double z = a * m[i] + b;
        const double target = labels[i] ? t.hi : t.lo;
        // -(t log s(z) + (1-t) log(1 - s(z))) = softplus(z) - t z
        total += softplus(z) - target * z;
    }
    return total;
}

}  // namespace

double calibration_nll(const Calibration& cal, std::span<const double> margins,
                       const std::vector<bool>& labels) {
    return nll(cal.a, cal.b, margins, labels, smoothed_targets(labels));
}

Calibration fit_calibration(std::span<const double> margins, const std::vector<bool>& labels) {
    if (margins.size() != labels.size() || margins.empty()) {
        throw Error(ErrorCode::Calibration, "calibration needs aligned, non-empty margins");
    }
    const auto pos = std::count(labels.begin(), labels.end(), true);
    if (pos == 0 || pos == static_cast<long>(labels.size())) {
        throw Error(ErrorCode::Calibration, "calibration set contains a single class");
    }
    const Targets t = smoothed_targets(labels);
    const double prior = std::log((static_cast<double>(pos) + 1.0) /
                                  (static_cast<double>(labels.size() - pos) + 1.0));
    double a = 0.0, b = prior;
    double f = nll(a, b, margins, labels, t);
    constexpr double kRidge = 1e-12;
    for (int iter = 0; iter < 100; ++iter) {
        double ga = 0, gb = 0, haa = kRidge, hab = 0, hbb = kRidge;
        for (std::size_t i = 0; i < margins.size(); ++i) {
            const double p = probability({a, b}, margins[i]);
            const double d = p - (labels[i] ? t.hi : t.lo);
            const double w = p * (1.0 - p);
            ga += d * margins[i];
            gb += d;
            haa += w * margins[i] * margins[i];
            hab += w * margins[i];
            hbb += w;
        }
        if (std::abs(ga) < 1e-10 && std::abs(gb) < 1e-10) break;
        const double det = haa * hbb - hab * hab;
        const double da = -(hbb * ga - hab * gb) / det;
        const double db = -(-hab * ga + haa * gb) / det;
        const double slope = ga * da + gb * db;
        double step = 1.0;
        bool moved = false;
        while (step >= 1e-10) {
            const double na = a + step * da, nb = b + step * db;
            const double nf = nll(na, nb, margins, labels, t);
            if (nf < f + 1e-4 * step * slope) {
                a = na;
                b = nb;
                f = nf;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    if (!(a > 0.0)) {
        // anti-correlated margins: keep a tiny positive slope and refit the intercept
        a = 1e-6;
        double lo = -50.0, hi = 50.0;
        for (int k = 0; k < 200; ++k) {
            const double mid = 0.5 * (lo + hi);
            double g = 0.0;
            for (std::size_t i = 0; i < margins.size(); ++i) {
                g += probability({a, mid}, margins[i]) - (labels[i] ? t.hi : t.lo);
            }
            (g > 0 ? hi : lo) = mid;
        }
        b = 0.5 * (lo + hi);
    }
    return Calibration{a, b};
}

LinearModel calibrate(LinearModel model, std::span<const SparseVector> dev,
                      const std::vector<bool>& labels) {
    if (dev.empty()) throw Error(ErrorCode::Calibration, "empty calibration set");
    std::vector<double> margins;
    margins.reserve(dev.size());
    for (const auto& x : dev) margins.push_back(margin_of(model, x));
    model.calibration = fit_calibration(margins, labels);
    return model;
}

}  // namespace styleprof::linear
