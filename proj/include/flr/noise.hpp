#pragma once

// Seeded hybrid-noise injection: additive feature noise and symmetric label flips.

#include "flr/core.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace flr {

enum class FeatureNoise { None, Gaussian, Laplacian };

struct NoiseSpec {
    FeatureNoise feature_family = FeatureNoise::None;
    /// Standard deviation of the additive feature noise, for either family.
    double sigma_f = 0.0;
    /// Fraction of rows whose label is flipped.
    double eta_l = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(sigma_f >= 0.0) || !std::isfinite(sigma_f)) {
            throw ValidationError("sigma_f must be finite and nonnegative");
        }
        if (!(eta_l >= 0.0 && eta_l <= 1.0)) throw ValidationError("eta_l must lie in [0, 1]");
    }
};

namespace detail {

// Feature and label injection draw from separate streams so that one does not
// shift the other when only one kind of noise is requested.
inline std::mt19937_64 noise_engine(std::uint64_t seed, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      stream};
    return std::mt19937_64(seq);
}

}  // namespace detail

/// Returns X + E with E i.i.d. zero-mean noise of standard deviation sigma_f.
/// Laplacian noise uses scale sigma_f / sqrt(2) so both families share sigma_f.
inline Matrix inject_feature_noise(const Matrix& X, const NoiseSpec& spec) {
    spec.validate();
    require_dense(X, "features");
    if (spec.feature_family == FeatureNoise::None || spec.sigma_f == 0.0) return X;

    auto rng = detail::noise_engine(spec.seed, 0);
    Matrix out = X;
    // Fill in row-major order so a row's noise does not depend on the column count
    // of later rows.
    if (spec.feature_family == FeatureNoise::Gaussian) {
        std::normal_distribution<double> draw(0.0, spec.sigma_f);
        for (Index i = 0; i < out.rows(); ++i)
            for (Index j = 0; j < out.cols(); ++j) out(i, j) += draw(rng);
    } else {
        // Difference of two i.i.d. exponentials with mean b is Laplace(0, b).
        const double b = spec.sigma_f / std::sqrt(2.0);
        std::exponential_distribution<double> draw(1.0 / b);
        for (Index i = 0; i < out.rows(); ++i)
            for (Index j = 0; j < out.cols(); ++j) {
                const double a = draw(rng);
                out(i, j) += a - draw(rng);
            }
    }
    return out;
}

/// Result of label corruption: the new one-hot labels and which rows changed.
struct LabelNoiseResult {
    Matrix Y;
    std::vector<bool> flipped;
};

/// Picks floor(eta_l * n) distinct rows uniformly and moves each to a class drawn
/// uniformly from the other c - 1 classes.
inline LabelNoiseResult inject_label_noise_with_mask(const Matrix& Y, const NoiseSpec& spec) {
    spec.validate();
    require_one_hot(Y, "labels");
    const Index n = Y.rows();
    const Index c = Y.cols();
    const auto count = static_cast<Index>(std::floor(spec.eta_l * static_cast<double>(n)));

    if (c < 2 && spec.eta_l > 0.0) {
        throw ValidationError("label noise needs at least two classes");
    }
    LabelNoiseResult out{Y, std::vector<bool>(static_cast<std::size_t>(n), false)};
    if (count == 0) return out;

    std::vector<Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Index{0});
    auto rng = detail::noise_engine(spec.seed, 1);
    std::shuffle(rows.begin(), rows.end(), rng);

    std::uniform_int_distribution<Index> other(0, c - 2);
    for (Index k = 0; k < count; ++k) {
        const Index i = rows[static_cast<std::size_t>(k)];
        Index original = 0;
        Y.row(i).maxCoeff(&original);
        Index target = other(rng);
        if (target >= original) ++target;
        out.Y.row(i).setZero();
        out.Y(i, target) = 1.0;
        out.flipped[static_cast<std::size_t>(i)] = true;
    }
    return out;
}

inline Matrix inject_label_noise(const Matrix& Y, const NoiseSpec& spec) {
    return inject_label_noise_with_mask(Y, spec).Y;
}

}  // namespace flr
