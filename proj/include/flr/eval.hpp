#pragma once

// Projection classifier, accuracy, least-squares baseline and the
// Rademacher-complexity generalization bound.

#include "flr/core.hpp"
#include "flr/prox.hpp"
#include "flr/solver.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace flr {

/// Per-feature z-scoring learned on training data.
struct Standardizer {
    RowVector mean;
    RowVector scale;

    Index dim() const { return mean.size(); }

    Matrix apply(const Matrix& X) const {
        if (X.cols() != dim()) {
            throw ValidationError(detail::concat("standardizer expects ", dim(), " features, got ",
                                                 X.cols()));
        }
        return (X.rowwise() - mean).array().rowwise() / scale.array();
    }

    RowVector apply_row(const RowVector& x) const {
        return ((x - mean).array() / scale.array()).matrix();
    }
};

/// Means and population standard deviations of each column. Constant columns
/// get scale 1.
inline Standardizer standardize_fit(const Matrix& X) {
    require_dense(X, "standardizer input");
    Standardizer s;
    s.mean = X.colwise().mean();
    s.scale.resize(X.cols());
    for (Index j = 0; j < X.cols(); ++j) {
        const double var = (X.col(j).array() - s.mean(j)).square().mean();
        const double sd = std::sqrt(var);
        s.scale(j) = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

inline Matrix standardize_apply(const Standardizer& s, const Matrix& X) { return s.apply(X); }

struct Classifier {
    Matrix Z;  // d x c
    std::optional<Standardizer> standardizer;
    std::vector<std::string> class_names;

    Index d() const { return Z.rows(); }
    Index c() const { return Z.cols(); }

    void validate() const {
        require_dense(Z, "classifier weights");
        if (!standardizer) return;
        if (standardizer->mean.size() != d() || standardizer->scale.size() != d()) {
            throw ValidationError("standardizer length must equal the feature dimension");
        }
        if (!(standardizer->scale.array() > 0.0).all() || !standardizer->mean.allFinite()) {
            throw ValidationError("standardizer scales must be positive");
        }
    }
};

/// Argmax of x Z over classes; ties go to the lowest class index.
inline Index predict(const Classifier& clf, const RowVector& x) {
    if (x.size() != clf.d()) {
        throw ValidationError(detail::concat("feature row has length ", x.size(), ", model expects ",
                                             clf.d()));
    }
    if (!x.allFinite()) throw ValidationError("feature row has non-finite entries");
    const RowVector scores = clf.standardizer ? RowVector(clf.standardizer->apply_row(x) * clf.Z)
                                              : RowVector(x * clf.Z);
    Index best = 0;
    for (Index j = 1; j < scores.size(); ++j)
        if (scores(j) > scores(best)) best = j;
    return best;
}

inline std::vector<Index> predict_all(const Classifier& clf, const Matrix& X) {
    std::vector<Index> out(static_cast<std::size_t>(X.rows()));
    for (Index i = 0; i < X.rows(); ++i) out[static_cast<std::size_t>(i)] = predict(clf, X.row(i));
    return out;
}

/// Fraction of rows of X whose prediction equals the given class index.
inline double accuracy(const Classifier& clf, const Matrix& X, const std::vector<Index>& y) {
    if (X.rows() == 0) throw ValidationError("accuracy needs a non-empty test set");
    if (static_cast<std::size_t>(X.rows()) != y.size()) {
        throw ValidationError("feature rows and labels differ in count");
    }
    std::size_t hits = 0;
    for (Index i = 0; i < X.rows(); ++i)
        if (predict(clf, X.row(i)) == y[static_cast<std::size_t>(i)]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(X.rows());
}

/// Minimum-norm least-squares fit of one-hot targets: argmin ||X Z - Y||_F.
inline Classifier fit_least_squares(const Matrix& X, const Matrix& Y) {
    require_dense(X, "features");
    require_dense(Y, "targets");
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(X);
    Classifier clf;
    clf.Z = cod.solve(Y);
    return clf;
}

// Model file: "d c" header, d rows of c weights, a standardizer flag line
// ("standardizer 0" or "standardizer 1" followed by a mean row and a scale
// row), then an optional "classes" line of names.

inline void write_classifier(const Classifier& clf, std::ostream& out) {
    clf.validate();
    out << clf.d() << ' ' << clf.c() << '\n';
    auto row = [&out](const auto& v) {
        for (Index j = 0; j < v.size(); ++j) {
            if (j) out << ' ';
            out << detail::format_real(v(j));
        }
        out << '\n';
    };
    for (Index i = 0; i < clf.d(); ++i) row(clf.Z.row(i));
    out << "standardizer " << (clf.standardizer ? 1 : 0) << '\n';
    if (clf.standardizer) {
        row(clf.standardizer->mean);
        row(clf.standardizer->scale);
    }
    if (!clf.class_names.empty()) {
        out << "classes";
        for (const auto& name : clf.class_names) out << ' ' << name;
        out << '\n';
    }
}

inline Classifier read_classifier(std::istream& in) {
    Index d = 0, c = 0;
    if (!(in >> d >> c) || d < 1 || c < 1) throw ParseError(1, "model: bad 'd c' header");
    auto read_values = [&in](Index count, const char* what) {
        RowVector v(count);
        for (Index j = 0; j < count; ++j) {
            if (!(in >> v(j))) throw ParseError(0, detail::concat("model: truncated ", what));
        }
        return v;
    };
    Classifier clf;
    clf.Z.resize(d, c);
    for (Index i = 0; i < d; ++i) clf.Z.row(i) = read_values(c, "weights");
    std::string tag;
    int flag = 0;
    if (!(in >> tag >> flag) || tag != "standardizer" || (flag != 0 && flag != 1)) {
        throw ParseError(0, "model: expected 'standardizer 0|1'");
    }
    if (flag == 1) {
        Standardizer s;
        s.mean = read_values(d, "standardizer mean");
        s.scale = read_values(d, "standardizer scale");
        clf.standardizer = std::move(s);
    }
    if (in >> tag) {
        if (tag != "classes") throw ParseError(0, "model: unexpected trailing token '" + tag + "'");
        std::string rest;
        std::getline(in, rest);
        std::istringstream names(rest);
        std::string name;
        while (names >> name) clf.class_names.push_back(name);
        if (static_cast<Index>(clf.class_names.size()) != c) {
            throw ParseError(0, "model: class name count does not match c");
        }
    }
    clf.validate();
    return clf;
}

inline void save_classifier(const Classifier& clf, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_classifier(clf, out);
}

inline Classifier load_classifier(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open " + path.string());
    return read_classifier(in);
}

/// Norm budgets and loss constants entering the generalization bound.
struct BoundInputs {
    Index n = 0;
    Index c = 0;
    Index d = 0;
    double X_star_nuc = 0.0;  // ||X*||_*
    double Z_star_nuc = 0.0;  // ||Z*||_*
    double El_21 = 0.0;       // ||E_l*||_{2,1}
    double Ef_1 = 0.0;        // ||E_f*||_1, entrywise
    double Xtilde_F = 0.0;    // ||Xtilde||_F
    double lipschitz_L = 1.0;
    double loss_bound_B = 1.0;
    double delta = 0.05;

    Index n_c() const { return std::max(n, c); }

    void validate() const {
        if (n < 1 || d < 1) throw ValidationError("bound: n and d must be >= 1");
        if (c < 2) throw ValidationError("bound: c must be >= 2 (ln c must be positive)");
        for (double v : {X_star_nuc, Z_star_nuc, El_21, Ef_1, Xtilde_F, lipschitz_L, loss_bound_B}) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw ValidationError("bound: norms and loss constants must be finite and >= 0");
            }
        }
        if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("bound: delta must lie in (0, 1)");
    }
};

struct BoundResult {
    double C1 = 0.0, C2 = 0.0, C3 = 0.0, C4 = 0.0;
    double complexity = 0.0;  // upper bound on the Rademacher complexity
    double gap = 0.0;         // bound on sup |expected risk - empirical risk|
};

/// complexity = El_21 C1 + min{X* Z* C2, Z* (Xtilde_F + sqrt(d) Ef_1) C3, C4}
/// gap        = 2 L complexity + B sqrt(ln(1/delta) / (2 n c))
/// with C1 = sqrt(3 ln c / (n c)), C2 = sqrt(ln(2 max(n, c)) / (n c)),
/// C3 = 1 / sqrt(n c), C4 = sqrt(2 / c).
inline BoundResult rademacher_bound(const BoundInputs& b) {
    b.validate();
    const double n = static_cast<double>(b.n);
    const double c = static_cast<double>(b.c);
    const double nc = n * c;
    BoundResult r;
    r.C1 = std::sqrt(3.0 * std::log(c) / nc);
    r.C2 = std::sqrt(std::log(2.0 * static_cast<double>(b.n_c())) / nc);
    r.C3 = 1.0 / std::sqrt(nc);
    r.C4 = std::sqrt(2.0 / c);
    const double via_nuclear = b.X_star_nuc * b.Z_star_nuc * r.C2;
    const double via_features =
        b.Z_star_nuc * (b.Xtilde_F + std::sqrt(static_cast<double>(b.d)) * b.Ef_1) * r.C3;
    r.complexity = b.El_21 * r.C1 + std::min({via_nuclear, via_features, r.C4});
    r.gap = 2.0 * b.lipschitz_L * r.complexity +
            b.loss_bound_B * std::sqrt(std::log(1.0 / b.delta) / (2.0 * nc));
    return r;
}

/// Norm budgets read off a fitted model.
inline BoundInputs bound_inputs_from_fit(const FitResult& fit, const Matrix& Xtilde,
                                         Index classes) {
    BoundInputs b;
    b.n = Xtilde.rows();
    b.d = Xtilde.cols();
    b.c = classes;
    b.X_star_nuc = nuclear_norm(fit.X_star);
    b.Z_star_nuc = nuclear_norm(fit.Z_star);
    b.El_21 = l21_norm(fit.El_star);
    b.Ef_1 = l1_norm(fit.Ef_star);
    b.Xtilde_F = Xtilde.norm();
    return b;
}

}  // namespace flr
