#pragma once

// Random solver states and the block-by-block optimality report shared by the
// solver tests and the acceptance runner.

#include "flr/solver.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <random>

namespace fixtures {

using flr::Index;
using flr::Matrix;

inline Matrix gaussian(std::mt19937_64& rng, Index rows, Index cols, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

inline Matrix random_one_hot(std::mt19937_64& rng, Index n, Index c) {
    std::uniform_int_distribution<Index> pick(0, c - 1);
    Matrix Y = Matrix::Zero(n, c);
    for (Index i = 0; i < n; ++i) Y(i, pick(rng)) = 1.0;
    return Y;
}

/// Every block Gaussian except B, which is uniform on [0, 1]; mu log-uniform
/// on [0.1, 10].
inline flr::SolverState random_state(std::mt19937_64& rng, Index n, Index d, Index c) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    flr::SolverState s;
    s.X = gaussian(rng, n, d);
    s.Z = gaussian(rng, d, c);
    s.B = Matrix(n, c);
    for (Index i = 0; i < s.B.size(); ++i) s.B.data()[i] = unit(rng);
    s.J = gaussian(rng, d, c);
    s.K = gaussian(rng, n, d);
    s.Ef = gaussian(rng, n, d, 0.3);
    s.El = gaussian(rng, n, c, 0.3);
    s.M1 = gaussian(rng, n, d);
    s.M2 = gaussian(rng, n, c);
    s.M3 = gaussian(rng, d, c);
    s.M4 = gaussian(rng, n, c);
    s.M5 = gaussian(rng, n, d);
    s.mu = std::pow(10.0, -1.0 + 2.0 * unit(rng));
    return s;
}

inline oracle::State to_oracle(const flr::SolverState& s) {
    return {s.X, s.Z, s.B, s.J, s.K, s.Ef, s.El, s.M1, s.M2, s.M3, s.M4, s.M5, s.mu};
}

inline oracle::Weights to_weights(const flr::Hyperparams& hp) {
    return {hp.lambda1, hp.lambda2, hp.lambda3, hp.feature_reg == flr::FeatureReg::Frobenius};
}

struct BlockReport {
    double j_plug_back = 0.0;      // ||(I + K^T K) J - rhs||_F
    double k_plug_back = 0.0;      // ||K (J J^T + I) - rhs||_F
    double b_stationarity = 0.0;   // max |dL/dB| at the unprojected B, central differences
    double prox_gap = 0.0;         // max over X, Z, E_f, E_l of L(update) - L(oracle minimizer)
    double max_increase = 0.0;     // max over the seven blocks of L(after) - L(before)
    double curvature_spread = 0.0; // anisotropy seen while recovering the prox centers
};

/// Checks every block update of `s` against the literal augmented Lagrangian.
inline BlockReport check_blocks(const flr::SolverState& s, const Matrix& Xt, const Matrix& Yt,
                                const flr::Hyperparams& hp) {
    BlockReport rep;
    const oracle::Weights w = to_weights(hp);
    const oracle::State base = to_oracle(s);
    auto lag = [&](const oracle::State& st) { return oracle::lagrangian(st, Xt, Yt, w); };

    // J and K against their normal equations.
    {
        const Matrix J = flr::update_J(s);
        const Matrix lhs = (Matrix::Identity(s.d(), s.d()) + s.K.transpose() * s.K) * J;
        const Matrix rhs = s.Z + s.K.transpose() * s.B + (s.M3 + s.K.transpose() * s.M4) / s.mu;
        rep.j_plug_back = (lhs - rhs).norm();
        const Matrix K = flr::update_K(s);
        const Matrix lhs_k = K * (s.J * s.J.transpose() + Matrix::Identity(s.d(), s.d()));
        const Matrix rhs_k = (s.M4 * s.J.transpose() + s.M5) / s.mu + s.B * s.J.transpose() + s.X;
        rep.k_plug_back = (lhs_k - rhs_k).norm();
    }

    // Unprojected B is a stationary point of L in B.
    {
        const Matrix B = flr::update_B_unprojected(s, Yt);
        const double h = 1e-2;
        oracle::State st = base;
        for (Index i = 0; i < B.rows(); ++i) {
            for (Index j = 0; j < B.cols(); ++j) {
                st.B = B;
                st.B(i, j) += h;
                const double up = lag(st);
                st.B(i, j) -= 2.0 * h;
                const double down = lag(st);
                rep.b_stationarity = std::max(rep.b_stationarity, std::abs(up - down) / (2.0 * h));
            }
        }
    }

    // Prox blocks: recover the quadratic part of L in the block, minimize
    // penalty + quadratic numerically, compare with the closed form.
    auto prox_check = [&](Matrix oracle::State::*block, const Matrix& update,
                          const std::function<double(const Matrix&)>& penalty,
                          const std::function<Matrix(const Matrix&, double)>& minimize) {
        auto with = [&](const Matrix& W) {
            oracle::State st = base;
            st.*block = W;
            return st;
        };
        double spread = 0.0;
        const auto [a, center] = oracle::isotropic_quadratic(
            [&](const Matrix& W) { return lag(with(W)) - penalty(W); }, update.rows(), update.cols(),
            &spread);
        rep.curvature_spread = std::max(rep.curvature_spread, spread / a);
        const Matrix best = minimize(center, a);
        rep.prox_gap = std::max(rep.prox_gap, lag(with(update)) - lag(with(best)));
    };
    prox_check(&oracle::State::X, flr::update_X(s, Xt),
               [](const Matrix& W) { return oracle::nuclear_norm(W); },
               [](const Matrix& C, double a) { return oracle::nuclear_prox_als(C, 1.0 / a); });
    prox_check(&oracle::State::Z, flr::update_Z(s, hp),
               [&](const Matrix& W) { return hp.lambda1 * oracle::nuclear_norm(W); },
               [&](const Matrix& C, double a) { return oracle::nuclear_prox_als(C, hp.lambda1 / a); });
    if (w.frobenius) {
        prox_check(&oracle::State::Ef, flr::update_Ef(s, Xt, hp),
                   [](const Matrix&) { return 0.0; },
                   [](const Matrix& C, double) { return C; });
    } else {
        prox_check(&oracle::State::Ef, flr::update_Ef(s, Xt, hp),
                   [&](const Matrix& W) { return hp.lambda2 * oracle::l1(W); },
                   [&](const Matrix& C, double a) { return oracle::l1_prox_search(C, hp.lambda2 / a); });
    }
    prox_check(&oracle::State::El, flr::update_El(s, Yt, hp),
               [&](const Matrix& W) { return hp.lambda3 * oracle::l21(W); },
               [&](const Matrix& C, double a) { return oracle::l21_prox_search(C, hp.lambda3 / a); });

    // One Gauss-Seidel sweep, measuring L around each block.
    {
        flr::SolverState cur = s;
        auto step = [&](auto&& apply) {
            const double before = lag(to_oracle(cur));
            apply();
            rep.max_increase = std::max(rep.max_increase, lag(to_oracle(cur)) - before);
        };
        step([&] { cur.X = flr::update_X(cur, Xt); });
        step([&] { cur.Z = flr::update_Z(cur, hp); });
        step([&] { cur.B = flr::update_B(cur, Yt); });
        step([&] { cur.J = flr::update_J(cur); });
        step([&] { cur.K = flr::update_K(cur); });
        step([&] { cur.Ef = flr::update_Ef(cur, Xt, hp); });
        step([&] { cur.El = flr::update_El(cur, Yt, hp); });
    }
    return rep;
}

}  // namespace fixtures
