#pragma once

// Labelled datasets: CSV IO, seeded train/test splits and planted synthetic instances.

#include "flr/core.hpp"
#include "flr/noise.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace flr {

struct NoisyDataset {
    Matrix Xtilde;  // n x d
    Matrix Ytilde;  // n x c, one-hot rows
    std::vector<std::string> class_names;

    Index n() const { return Xtilde.rows(); }
    Index d() const { return Xtilde.cols(); }
    Index c() const { return Ytilde.cols(); }
    std::vector<Index> labels() const { return class_indices(Ytilde); }

    void validate() const {
        require_dense(Xtilde, "features");
        require_one_hot(Ytilde, "labels");
        if (Xtilde.rows() != Ytilde.rows()) {
            throw ValidationError("feature and label row counts differ");
        }
        if (!class_names.empty() && static_cast<Index>(class_names.size()) != c()) {
            throw ValidationError("class_names length must equal the number of classes");
        }
    }
};

/// Rows of `ds` selected by `rows`, in that order.
inline NoisyDataset select_rows(const NoisyDataset& ds, const std::vector<Index>& rows) {
    NoisyDataset out;
    out.Xtilde.resize(static_cast<Index>(rows.size()), ds.d());
    out.Ytilde.resize(static_cast<Index>(rows.size()), ds.c());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        out.Xtilde.row(static_cast<Index>(k)) = ds.Xtilde.row(rows[k]);
        out.Ytilde.row(static_cast<Index>(k)) = ds.Ytilde.row(rows[k]);
    }
    out.class_names = ds.class_names;
    return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline double parse_real(std::string_view field, std::size_t line_no, std::size_t column) {
    double value = 0.0;
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() ||
        !std::isfinite(value)) {
        throw ParseError(line_no, concat("line ", line_no, ", column ", column + 1,
                                         ": not a finite number: '", field, "'"));
    }
    return value;
}

/// Non-empty lines of a text file, paired with their 1-based line numbers.
inline std::vector<std::pair<std::size_t, std::string>> read_lines(
    const std::filesystem::path& path, bool has_header) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, concat("cannot open ", path.string()));
    std::vector<std::pair<std::size_t, std::string>> lines;
    std::string line;
    std::size_t line_no = 0;
    bool header_pending = has_header;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        if (header_pending) {
            header_pending = false;
            continue;
        }
        lines.emplace_back(line_no, line);
    }
    if (lines.empty()) throw ParseError(line_no, concat(path.string(), ": no data rows"));
    return lines;
}

}  // namespace detail

/// Reads rows of `d` numeric features followed by one label field.
/// Labels may be any string; class indices follow first appearance.
inline NoisyDataset load_csv(const std::filesystem::path& path, bool has_header = false) {
    const auto lines = detail::read_lines(path, has_header);
    std::size_t width = 0;
    std::vector<std::vector<double>> features;
    std::vector<Index> labels;
    std::map<std::string, Index, std::less<>> class_index;
    std::vector<std::string> class_names;

    for (const auto& [line_no, line] : lines) {
        const auto fields = detail::split_fields(line);
        if (width == 0) {
            if (fields.size() < 2) {
                throw ParseError(line_no, detail::concat("line ", line_no,
                                                         ": need at least one feature and a label"));
            }
            width = fields.size();
        } else if (fields.size() != width) {
            throw ParseError(line_no, detail::concat("line ", line_no, ": expected ", width,
                                                     " fields, got ", fields.size()));
        }
        std::vector<double> row(width - 1);
        for (std::size_t j = 0; j + 1 < width; ++j) row[j] = detail::parse_real(fields[j], line_no, j);
        features.push_back(std::move(row));

        const std::string_view label = fields.back();
        if (label.empty()) {
            throw ParseError(line_no, detail::concat("line ", line_no, ": empty label"));
        }
        auto it = class_index.find(label);
        if (it == class_index.end()) {
            it = class_index.emplace(std::string(label), static_cast<Index>(class_names.size())).first;
            class_names.emplace_back(label);
        }
        labels.push_back(it->second);
    }

    NoisyDataset ds;
    ds.Xtilde.resize(static_cast<Index>(features.size()), static_cast<Index>(width - 1));
    for (std::size_t i = 0; i < features.size(); ++i)
        for (std::size_t j = 0; j + 1 < width; ++j)
            ds.Xtilde(static_cast<Index>(i), static_cast<Index>(j)) = features[i][j];
    ds.Ytilde = one_hot(labels, static_cast<Index>(class_names.size()));
    ds.class_names = std::move(class_names);
    return ds;
}

/// Writes features with round-trip precision and the class name (or index) last.
inline void write_csv(const NoisyDataset& ds, const std::filesystem::path& path,
                      bool header = false) {
    ds.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    if (header) {
        for (Index j = 0; j < ds.d(); ++j) out << 'f' << j << ',';
        out << "label\n";
    }
    const auto labels = ds.labels();
    for (Index i = 0; i < ds.n(); ++i) {
        for (Index j = 0; j < ds.d(); ++j) out << detail::format_real(ds.Xtilde(i, j)) << ',';
        const Index k = labels[static_cast<std::size_t>(i)];
        if (ds.class_names.empty()) {
            out << k;
        } else {
            out << ds.class_names[static_cast<std::size_t>(k)];
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

/// Reads an all-numeric CSV.
inline Matrix load_matrix_csv(const std::filesystem::path& path, bool has_header = false) {
    const auto lines = detail::read_lines(path, has_header);
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    for (const auto& [line_no, line] : lines) {
        const auto fields = detail::split_fields(line);
        if (width == 0) width = fields.size();
        if (fields.size() != width) {
            throw ParseError(line_no, detail::concat("line ", line_no, ": expected ", width,
                                                     " fields, got ", fields.size()));
        }
        std::vector<double> row(width);
        for (std::size_t j = 0; j < width; ++j) row[j] = detail::parse_real(fields[j], line_no, j);
        rows.push_back(std::move(row));
    }
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j)
            m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    return m;
}

inline void write_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << detail::format_real(m(i, j));
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

struct Split {
    NoisyDataset train;
    NoisyDataset test;
    std::vector<Index> train_rows;
    std::vector<Index> test_rows;
};

/// Seeded shuffle; the first floor(train_fraction * n) shuffled rows train.
inline Split split(const NoisyDataset& ds, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ValidationError("train_fraction must lie in (0, 1)");
    }
    const Index n = ds.n();
    const auto n_train = static_cast<Index>(std::floor(train_fraction * static_cast<double>(n)));
    if (n_train < 1 || n_train >= n) {
        throw ValidationError(detail::concat("split of ", n, " rows at fraction ", train_fraction,
                                             " leaves one side empty"));
    }
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    Split s;
    s.train_rows.assign(order.begin(), order.begin() + n_train);
    s.test_rows.assign(order.begin() + n_train, order.end());
    s.train = select_rows(ds, s.train_rows);
    s.test = select_rows(ds, s.test_rows);
    return s;
}

struct PlantedSpec {
    Index n = 200;
    Index d = 20;
    Index c = 4;
    Index rank = 4;
    /// Fraction of feature entries hit by sparse gross corruption.
    double sparsity = 0.0;
    double eta_l = 0.0;
    std::uint64_t seed = 0;
    /// Sparse corruption magnitudes are drawn uniformly from [m/2, 3m/2] with random sign.
    double corruption_magnitude = 5.0;
    /// Minimum gap between the best and second-best class score of every row.
    double margin = 0.0;
};

struct PlantedInstance {
    NoisyDataset clean;
    NoisyDataset noisy;
    Matrix Ef;                       // noisy.Xtilde == clean.Xtilde + Ef
    std::vector<bool> label_flipped;
};

/// Synthetic low-rank data with linearly realizable labels plus known corruption.
///
/// Rows of the rank-space factor A are (C_k + z) / sqrt(2) for a random class
/// centroid C_k and standard-normal z, so A is marginally standard normal; the
/// clean features are A B^T with B standard normal. A row's label is the argmax
/// of its centroid scores A C^T, so X Z reproduces the labels for
/// Z = B (B^T B)^{-1} C^T. Rows whose score gap is below `margin` are redrawn.
inline PlantedInstance make_planted(const PlantedSpec& spec) {
    if (spec.n < 1 || spec.d < 1 || spec.c < 1) throw ValidationError("n, d, c must be >= 1");
    if (spec.rank < 1 || spec.rank > std::min(spec.n, spec.d)) {
        throw ValidationError("rank must lie in [1, min(n, d)]");
    }
    if (!(spec.sparsity >= 0.0 && spec.sparsity < 1.0)) {
        throw ValidationError("sparsity must lie in [0, 1)");
    }
    if (!(spec.eta_l >= 0.0 && spec.eta_l <= 1.0)) throw ValidationError("eta_l must lie in [0, 1]");
    if (spec.eta_l > 0.0 && spec.c < 2) throw ValidationError("label noise needs c >= 2");
    if (!(spec.corruption_magnitude >= 0.0)) {
        throw ValidationError("corruption_magnitude must be nonnegative");
    }
    if (!(spec.margin >= 0.0)) throw ValidationError("margin must be nonnegative");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto gaussian = [&](Index rows, Index cols) {
        Matrix m(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
        return m;
    };

    const Matrix centroids = gaussian(spec.c, spec.rank);
    std::uniform_int_distribution<Index> pick_class(0, spec.c - 1);
    Matrix A(spec.n, spec.rank);
    std::vector<Index> labels(static_cast<std::size_t>(spec.n));
    constexpr int max_attempts = 10000;
    for (Index i = 0; i < spec.n; ++i) {
        int attempt = 0;
        for (;; ++attempt) {
            if (attempt == max_attempts) {
                throw ValidationError("margin too large: cannot draw a row that satisfies it");
            }
            const Index k = pick_class(rng);
            RowVector row = centroids.row(k);
            for (Index j = 0; j < spec.rank; ++j) row(j) += normal(rng);
            row /= std::sqrt(2.0);
            const RowVector scores = row * centroids.transpose();
            Index best = 0;
            const double top = scores.maxCoeff(&best);
            double second = -std::numeric_limits<double>::infinity();
            for (Index j = 0; j < spec.c; ++j)
                if (j != best) second = std::max(second, scores(j));
            if (spec.c == 1 || top - second >= spec.margin) {
                A.row(i) = row;
                labels[static_cast<std::size_t>(i)] = best;
                break;
            }
        }
    }
    const Matrix basis = gaussian(spec.d, spec.rank);

    PlantedInstance out;
    out.clean.Xtilde = A * basis.transpose();
    out.clean.Ytilde = one_hot(labels, spec.c);

    out.Ef = Matrix::Zero(spec.n, spec.d);
    const auto total = spec.n * spec.d;
    const auto corrupted = static_cast<Index>(std::floor(spec.sparsity * static_cast<double>(total)));
    if (corrupted > 0) {
        std::vector<Index> cells(static_cast<std::size_t>(total));
        std::iota(cells.begin(), cells.end(), Index{0});
        std::shuffle(cells.begin(), cells.end(), rng);
        std::uniform_real_distribution<double> size(0.5 * spec.corruption_magnitude,
                                                    1.5 * spec.corruption_magnitude);
        std::bernoulli_distribution negative(0.5);
        for (Index k = 0; k < corrupted; ++k) {
            const Index cell = cells[static_cast<std::size_t>(k)];
            const double v = size(rng);
            out.Ef(cell / spec.d, cell % spec.d) = negative(rng) ? -v : v;
        }
    }

    out.noisy.Xtilde = out.clean.Xtilde + out.Ef;
    NoiseSpec label_noise;
    label_noise.eta_l = spec.eta_l;
    label_noise.seed = spec.seed;
    auto flipped = inject_label_noise_with_mask(out.clean.Ytilde, label_noise);
    out.noisy.Ytilde = std::move(flipped.Y);
    out.label_flipped = std::move(flipped.flipped);
    return out;
}

/// Writes features.csv, labels.csv, ef.csv and flips.csv under `dir`.
/// features.csv holds the noisy features, labels.csv the noisy and clean class
/// index per row, flips.csv a 0/1 flag per row.
inline void save_planted(const PlantedInstance& inst, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_matrix_csv(inst.noisy.Xtilde, dir / "features.csv");
    write_matrix_csv(inst.Ef, dir / "ef.csv");
    const auto noisy = inst.noisy.labels();
    const auto clean = inst.clean.labels();
    std::ofstream labels(dir / "labels.csv");
    std::ofstream flips(dir / "flips.csv");
    for (std::size_t i = 0; i < noisy.size(); ++i) {
        labels << noisy[i] << ',' << clean[i] << '\n';
        flips << (inst.label_flipped[i] ? 1 : 0) << '\n';
    }
    if (!labels || !flips) throw std::runtime_error("write failed under " + dir.string());
}

}  // namespace flr
