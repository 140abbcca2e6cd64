#pragma once

// Seven-block non-convex ADMM for joint feature and label recovery.
//
// Model:  min ||X||_* + l1 ||Z||_* + l2 R(E_f) + l3 ||E_l||_{2,1}
//         s.t. Xt = X + E_f,  Yt = B + E_l,  Z = J,  X = K,  B = K J,  B in [0,1]
//
// The multipliers M1..M5 belong to the five equality constraints in that order.

#include "flr/core.hpp"
#include "flr/prox.hpp"

#include <Eigen/Cholesky>

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace flr {

enum class FeatureReg { L1, Frobenius };

/// How the stopping test measures the constraint residuals.
enum class ResidualMode { Absolute, Relative };

/// Which error blocks participate. The ablations pin one block at zero.
enum class Ablation { Full, NoFeatureRecovery, NoLabelRecovery };

enum class Termination { Converged, IterMax };

struct Hyperparams {
    double lambda1 = 0.1;
    double lambda2 = 0.1;
    double lambda3 = 0.1;
    double mu0 = 1e-3;
    double rho = 1.2;
    double epsilon = 1e-6;
    std::size_t iter_max = 1000;
    FeatureReg feature_reg = FeatureReg::L1;
    /// Upper bound on the penalty parameter; nullopt lets it grow without bound.
    std::optional<double> mu_cap = 1e12;
    ResidualMode residual_mode = ResidualMode::Absolute;
    Ablation ablation = Ablation::Full;

    void validate() const {
        auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
        if (!positive(lambda1) || !positive(lambda2) || !positive(lambda3)) {
            throw ValidationError("lambda1, lambda2, lambda3 must be positive");
        }
        if (!positive(mu0)) throw ValidationError("mu0 must be positive");
        if (!(rho > 1.0) || !std::isfinite(rho)) throw ValidationError("rho must exceed 1");
        if (!positive(epsilon)) throw ValidationError("epsilon must be positive");
        if (mu_cap && !(*mu_cap > 0.0)) throw ValidationError("mu_cap must be positive");
    }
};

/// All iterates of the ADMM loop.
struct SolverState {
    Matrix X, Z, B, J, K, Ef, El;
    Matrix M1, M2, M3, M4, M5;
    double mu = 0.0;
    std::size_t iter = 0;

    Index n() const { return X.rows(); }
    Index d() const { return X.cols(); }
    Index c() const { return B.cols(); }

    bool all_finite() const {
        return X.allFinite() && Z.allFinite() && B.allFinite() && J.allFinite() &&
               K.allFinite() && Ef.allFinite() && El.allFinite() && M1.allFinite() &&
               M2.allFinite() && M3.allFinite() && M4.allFinite() && M5.allFinite() &&
               std::isfinite(mu);
    }
};

/// Frobenius norms of Xt-X-Ef, Yt-B-El, Z-J, B-KJ, X-K (in that order).
using Residuals = std::array<double, 5>;

struct TraceRecord {
    std::size_t iter = 0;
    Residuals residuals{};
    double objective = 0.0;
    double mu = 0.0;
    double b_min = 0.0;
    double b_max = 0.0;
    /// mu_t times the step norms of K, J, E_f, E_l during iteration t. These are
    /// the quantities the convergence theory assumes vanish; recorded, not enforced.
    std::array<double, 4> scaled_steps{};
};

using ConvergenceTrace = std::vector<TraceRecord>;

struct FitResult {
    Matrix X_star, Z_star, Ef_star, El_star;
    SolverState state;
    ConvergenceTrace trace;
    Termination termination = Termination::IterMax;
};

inline const char* to_string(Termination t) {
    return t == Termination::Converged ? "Converged" : "IterMax";
}

/// Zero iterates sized for an n x d feature matrix and n x c label matrix.
inline SolverState init_state(Index n, Index d, Index c, const Hyperparams& hp) {
    if (n < 1 || d < 1 || c < 1) {
        throw ValidationError(detail::concat("dimensions must be >= 1, got n=", n, " d=", d,
                                             " c=", c));
    }
    constexpr Index limit = std::numeric_limits<Index>::max();
    for (auto [a, b] : {std::pair{n, d}, std::pair{n, c}, std::pair{d, c}, std::pair{d, d}}) {
        if (a > limit / b) {
            throw ValidationError(detail::concat("problem size overflows: ", a, " x ", b));
        }
    }
    SolverState s;
    s.X = Matrix::Zero(n, d);
    s.Z = Matrix::Zero(d, c);
    s.B = Matrix::Zero(n, c);
    s.J = Matrix::Zero(d, c);
    s.K = Matrix::Zero(n, d);
    s.Ef = Matrix::Zero(n, d);
    s.El = Matrix::Zero(n, c);
    s.M1 = Matrix::Zero(n, d);
    s.M2 = Matrix::Zero(n, c);
    s.M3 = Matrix::Zero(d, c);
    s.M4 = Matrix::Zero(n, c);
    s.M5 = Matrix::Zero(n, d);
    s.mu = hp.mu0;
    s.iter = 0;
    return s;
}

// Block updates. Each returns the new value of one block from the current state;
// none of them modifies the state.

inline Matrix update_X(const SolverState& s, const Matrix& Xt) {
    const double mu = s.mu;
    const Matrix center = (mu * (Xt - s.Ef + s.K) - s.M5 + s.M1) / (2.0 * mu);
    return svt(center, Threshold(1.0 / (2.0 * mu)), "X-update center");
}

inline Matrix update_Z(const SolverState& s, const Hyperparams& hp) {
    const Matrix center = s.J - s.M3 / s.mu;
    return svt(center, Threshold(hp.lambda1 / s.mu), "Z-update center");
}

/// Unconstrained minimizer of the B subproblem, before the box projection.
inline Matrix update_B_unprojected(const SolverState& s, const Matrix& Yt) {
    const double mu = s.mu;
    return (mu * (Yt - s.El + s.K * s.J) + s.M2 - s.M4) / (2.0 * mu);
}

inline Matrix update_B(const SolverState& s, const Matrix& Yt) {
    return clamp01(update_B_unprojected(s, Yt));
}

/// J = (I + K^T K)^{-1} (Z + K^T B + (M3 + K^T M4) / mu), via Cholesky.
inline Matrix update_J(const SolverState& s) {
    const Index d = s.K.cols();
    Matrix gram = s.K.transpose() * s.K;
    gram.diagonal().array() += 1.0;
    const Matrix rhs = s.Z + s.K.transpose() * s.B + (s.M3 + s.K.transpose() * s.M4) / s.mu;
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) {
        throw NumericError(detail::concat("Cholesky of I + K^T K failed (d=", d, ")"));
    }
    return llt.solve(rhs);
}

/// K = ((M4 J^T + M5) / mu + B J^T + X) (J J^T + I)^{-1}, via a right solve.
inline Matrix update_K(const SolverState& s) {
    const Index d = s.J.rows();
    Matrix gram = s.J * s.J.transpose();
    gram.diagonal().array() += 1.0;
    const Matrix rhs = (s.M4 * s.J.transpose() + s.M5) / s.mu + s.B * s.J.transpose() + s.X;
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) {
        throw NumericError(detail::concat("Cholesky of J J^T + I failed (d=", d, ")"));
    }
    // gram is symmetric, so K^T = gram^{-1} rhs^T.
    return llt.solve(rhs.transpose()).transpose();
}

/// Feature-error block. L1 uses entrywise shrinkage; Frobenius uses the
/// closed-form minimizer of l2 ||E||_F^2 + (mu/2) ||E - center||_F^2.
inline Matrix update_Ef(const SolverState& s, const Matrix& Xt, const Hyperparams& hp) {
    const Matrix center = Xt - s.X + s.M1 / s.mu;
    if (hp.feature_reg == FeatureReg::Frobenius) {
        const Threshold weight(hp.lambda2);
        return s.mu * center / (s.mu + 2.0 * weight.value());
    }
    return soft_threshold(center, Threshold(hp.lambda2 / s.mu));
}

inline Matrix update_El(const SolverState& s, const Matrix& Yt, const Hyperparams& hp) {
    const Matrix center = Yt - s.B + s.M2 / s.mu;
    return row_shrink(center, Threshold(hp.lambda3 / s.mu));
}

/// Dual ascent on M1..M5, then mu := min(rho * mu, mu_cap) and iter += 1.
inline SolverState update_multipliers_and_mu(SolverState s, const Matrix& Xt, const Matrix& Yt,
                                             const Hyperparams& hp) {
    const double mu = s.mu;
    s.M1 += mu * (Xt - s.X - s.Ef);
    s.M2 += mu * (Yt - s.B - s.El);
    s.M3 += mu * (s.Z - s.J);
    s.M4 += mu * (s.B - s.K * s.J);
    s.M5 += mu * (s.X - s.K);
    s.mu = hp.rho * mu;
    if (hp.mu_cap) s.mu = std::min(s.mu, *hp.mu_cap);
    ++s.iter;
    return s;
}

inline Residuals residuals(const SolverState& s, const Matrix& Xt, const Matrix& Yt) {
    return {(Xt - s.X - s.Ef).norm(), (Yt - s.B - s.El).norm(), (s.Z - s.J).norm(),
            (s.B - s.K * s.J).norm(), (s.X - s.K).norm()};
}

inline double feature_regularizer(const Matrix& Ef, FeatureReg reg) {
    return reg == FeatureReg::L1 ? l1_norm(Ef) : Ef.squaredNorm();
}

/// ||X||_* + l1 ||Z||_* + l2 R(E_f) + l3 ||E_l||_{2,1}.
inline double objective(const SolverState& s, const Hyperparams& hp) {
    return nuclear_norm(s.X) + hp.lambda1 * nuclear_norm(s.Z) +
           hp.lambda2 * feature_regularizer(s.Ef, hp.feature_reg) + hp.lambda3 * l21_norm(s.El);
}

/// Augmented Lagrangian at the current state (box constraint on B not included).
inline double augmented_lagrangian(const SolverState& s, const Matrix& Xt, const Matrix& Yt,
                                   const Hyperparams& hp) {
    const Matrix c1 = Xt - s.X - s.Ef;
    const Matrix c2 = Yt - s.B - s.El;
    const Matrix c3 = s.Z - s.J;
    const Matrix c4 = s.B - s.K * s.J;
    const Matrix c5 = s.X - s.K;
    const double linear = s.M1.cwiseProduct(c1).sum() + s.M2.cwiseProduct(c2).sum() +
                          s.M3.cwiseProduct(c3).sum() + s.M4.cwiseProduct(c4).sum() +
                          s.M5.cwiseProduct(c5).sum();
    const double quad = c1.squaredNorm() + c2.squaredNorm() + c3.squaredNorm() +
                        c4.squaredNorm() + c5.squaredNorm();
    return objective(s, hp) + linear + 0.5 * s.mu * quad;
}

namespace detail {

inline TraceRecord make_record(const SolverState& s, const Matrix& Xt, const Matrix& Yt,
                               const Hyperparams& hp) {
    TraceRecord r;
    r.iter = s.iter;
    r.residuals = residuals(s, Xt, Yt);
    r.objective = objective(s, hp);
    r.mu = s.mu;
    r.b_min = s.B.minCoeff();
    r.b_max = s.B.maxCoeff();
    return r;
}

inline bool within_tolerance(const Residuals& r, const Matrix& Xt, const Matrix& Yt,
                             const Hyperparams& hp) {
    double feature_scale = 1.0;
    double label_scale = 1.0;
    if (hp.residual_mode == ResidualMode::Relative) {
        feature_scale = 1.0 + Xt.norm();
        label_scale = 1.0 + Yt.norm();
    }
    const std::array<double, 5> scale{feature_scale, label_scale, label_scale, label_scale,
                                      feature_scale};
    for (std::size_t k = 0; k < r.size(); ++k) {
        if (!(r[k] <= hp.epsilon * scale[k])) return false;
    }
    return true;
}

}  // namespace detail

/// Runs the ADMM loop until every residual is within epsilon or iter_max
/// iterations have run.
///
/// The trace holds one record for the initial state plus one per iteration.
/// Each iteration updates X, Z, B, J, K, E_f, E_l in that order, every update
/// seeing the blocks already refreshed in the same sweep, then the multipliers
/// and mu.
inline FitResult fit(const Matrix& Xt, const Matrix& Yt, const Hyperparams& hp) {
    hp.validate();
    require_dense(Xt, "Xtilde");
    require_one_hot(Yt, "Ytilde");
    if (Xt.rows() != Yt.rows()) {
        throw ValidationError(detail::concat("Xtilde has ", Xt.rows(), " rows but Ytilde has ",
                                             Yt.rows()));
    }

    const bool update_feature_error = hp.ablation != Ablation::NoFeatureRecovery;
    const bool update_label_error = hp.ablation != Ablation::NoLabelRecovery;

    FitResult result;
    SolverState s = init_state(Xt.rows(), Xt.cols(), Yt.cols(), hp);
    result.trace.push_back(detail::make_record(s, Xt, Yt, hp));

    while (s.iter < hp.iter_max) {
        const double mu = s.mu;
        const Matrix K_prev = s.K;
        const Matrix J_prev = s.J;
        const Matrix Ef_prev = s.Ef;
        const Matrix El_prev = s.El;

        s.X = update_X(s, Xt);
        s.Z = update_Z(s, hp);
        s.B = update_B(s, Yt);
        s.J = update_J(s);
        s.K = update_K(s);
        if (update_feature_error) s.Ef = update_Ef(s, Xt, hp);
        if (update_label_error) s.El = update_El(s, Yt, hp);
        s = update_multipliers_and_mu(std::move(s), Xt, Yt, hp);

        if (!s.all_finite()) {
            throw DivergenceError(s.iter, detail::concat("non-finite iterate at iteration ",
                                                         s.iter, " (mu=", mu, ")"));
        }

        TraceRecord rec = detail::make_record(s, Xt, Yt, hp);
        rec.scaled_steps = {mu * (s.K - K_prev).norm(), mu * (s.J - J_prev).norm(),
                            mu * (s.Ef - Ef_prev).norm(), mu * (s.El - El_prev).norm()};
        const bool done = detail::within_tolerance(rec.residuals, Xt, Yt, hp);
        result.trace.push_back(rec);
        if (done) {
            result.termination = Termination::Converged;
            break;
        }
    }

    result.X_star = s.X;
    result.Z_star = s.Z;
    result.Ef_star = s.Ef;
    result.El_star = s.El;
    result.state = std::move(s);
    return result;
}

}  // namespace flr
