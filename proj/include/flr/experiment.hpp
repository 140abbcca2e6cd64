#pragma once

// Multi-trial experiment driver: split, corrupt the training rows, fit, score on
// the clean test rows, and write per-trial artifacts.
//
// Output layout under output_dir:
//   config.json
//   trial_<k>/metrics.json   deterministic per-trial metrics
//   trial_<k>/trace.csv      convergence trace
//   trial_<k>/timing.json    wall-clock time (the only nondeterministic file)
//   summary.json             mean and std of the per-trial accuracies

#include "flr/dataset.hpp"
#include "flr/eval.hpp"
#include "flr/json_io.hpp"
#include "flr/noise.hpp"
#include "flr/solver.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace flr {

struct ExperimentConfig {
    /// CSV dataset (features then label); used when `planted` is empty.
    std::optional<std::string> dataset;
    bool has_header = false;
    std::optional<PlantedSpec> planted;
    NoiseSpec noise;
    Hyperparams hyperparams;
    std::size_t trials = 5;
    double train_fraction = 0.8;
    bool standardize = false;
    Ablation ablation = Ablation::Full;
    std::string output_dir = "flr_output";
    std::uint64_t base_seed = 0;

    void validate() const {
        if (trials < 1) throw ValidationError("trials must be >= 1");
        if (dataset.has_value() == planted.has_value()) {
            throw ValidationError("config needs exactly one of 'dataset' or 'planted'");
        }
        if (dataset && !std::filesystem::exists(*dataset)) {
            throw ValidationError("dataset not found: " + *dataset);
        }
        if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
            throw ValidationError("train_fraction must lie in (0, 1)");
        }
        noise.validate();
        Hyperparams hp = hyperparams;
        hp.ablation = ablation;
        hp.validate();
    }
};

inline void to_json(json& j, const ExperimentConfig& c) {
    j = json{{"has_header", c.has_header},   {"noise", c.noise},
             {"hyperparams", c.hyperparams}, {"trials", c.trials},
             {"train_fraction", c.train_fraction}, {"standardize", c.standardize},
             {"ablation", c.ablation},       {"output_dir", c.output_dir},
             {"base_seed", c.base_seed}};
    j["dataset"] = c.dataset ? json(*c.dataset) : json(nullptr);
    j["planted"] = c.planted ? json(*c.planted) : json(nullptr);
}

inline void from_json(const json& j, ExperimentConfig& c) {
    if (j.contains("dataset") && !j.at("dataset").is_null()) c.dataset = j.at("dataset").get<std::string>();
    if (j.contains("planted") && !j.at("planted").is_null()) c.planted = j.at("planted").get<PlantedSpec>();
    detail::read_field(j, "has_header", c.has_header);
    detail::read_field(j, "noise", c.noise);
    detail::read_field(j, "hyperparams", c.hyperparams);
    detail::read_field(j, "trials", c.trials);
    detail::read_field(j, "train_fraction", c.train_fraction);
    detail::read_field(j, "standardize", c.standardize);
    c.ablation = detail::enum_field(j, "ablation", c.ablation);
    detail::read_field(j, "output_dir", c.output_dir);
    detail::read_field(j, "base_seed", c.base_seed);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        return j.get<ExperimentConfig>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad config field: ") + e.what());
    }
}

/// Writes iteration, the five residuals, objective, mu and the mu-scaled step
/// norms as CSV, one row per trace record.
inline void emit_trace(const FitResult& fit, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "iter,r_feature,r_label,r_zj,r_bkj,r_xk,objective,mu,mu_dK,mu_dJ,mu_dEf,mu_dEl\n";
    for (const auto& r : fit.trace) {
        out << r.iter;
        for (double v : r.residuals) out << ',' << detail::format_real(v);
        out << ',' << detail::format_real(r.objective) << ',' << detail::format_real(r.mu);
        for (double v : r.scaled_steps) out << ',' << detail::format_real(v);
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

struct TrialResult {
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double accuracy = 0.0;
    double baseline_accuracy = 0.0;  // least squares on the corrupted training data
    Termination termination = Termination::IterMax;
    std::size_t iterations = 0;
    Residuals final_residuals{};
    double seconds = 0.0;
    Matrix Ef_star;
    Matrix El_star;
};

struct ExperimentSummary {
    std::vector<TrialResult> trials;
    std::size_t succeeded = 0;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;  // sample standard deviation; 0 for one trial
    double mean_baseline = 0.0;
    double std_baseline = 0.0;
};

namespace detail {

inline void write_json(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

/// Clean source data plus, for planted instances, the corrupted rows to train on.
struct Source {
    NoisyDataset clean;
    std::optional<NoisyDataset> corrupted;
};

inline Source load_source(const ExperimentConfig& cfg) {
    Source src;
    if (cfg.planted) {
        PlantedInstance inst = make_planted(*cfg.planted);
        src.clean = std::move(inst.clean);
        src.corrupted = std::move(inst.noisy);
    } else {
        src.clean = load_csv(*cfg.dataset, cfg.has_header);
    }
    return src;
}

struct TrialData {
    Split split;         // clean train/test partition
    NoisyDataset train;  // corrupted training rows fed to the solver
};

/// Trial t splits with seed base_seed + t and corrupts only the training rows,
/// with noise seed noise.seed + t.
inline TrialData make_trial_data(const ExperimentConfig& cfg, const Source& src, std::size_t t) {
    TrialData data;
    data.split = split(src.clean, cfg.train_fraction, cfg.base_seed + t);
    data.train = src.corrupted ? select_rows(*src.corrupted, data.split.train_rows)
                               : data.split.train;
    NoiseSpec noise = cfg.noise;
    noise.seed = cfg.noise.seed + t;
    data.train.Xtilde = inject_feature_noise(data.train.Xtilde, noise);
    data.train.Ytilde = inject_label_noise(data.train.Ytilde, noise);
    return data;
}

inline TrialResult run_trial(const ExperimentConfig& cfg, const Source& src, std::size_t t) {
    TrialResult tr;
    tr.trial = t;
    tr.seed = cfg.base_seed + t;
    const auto start = std::chrono::steady_clock::now();

    const TrialData data = make_trial_data(cfg, src, t);
    const Split& sp = data.split;
    const NoisyDataset& train = data.train;

    Hyperparams hp = cfg.hyperparams;
    hp.ablation = cfg.ablation;

    std::optional<Standardizer> standardizer;
    Matrix fit_features = train.Xtilde;
    if (cfg.standardize) {
        standardizer = standardize_fit(train.Xtilde);
        fit_features = standardizer->apply(train.Xtilde);
    }

    try {
        const FitResult fit_result = fit(fit_features, train.Ytilde, hp);
        Classifier clf{fit_result.Z_star, standardizer, src.clean.class_names};
        Classifier baseline = fit_least_squares(fit_features, train.Ytilde);
        baseline.standardizer = standardizer;

        const auto test_labels = sp.test.labels();
        tr.accuracy = accuracy(clf, sp.test.Xtilde, test_labels);
        tr.baseline_accuracy = accuracy(baseline, sp.test.Xtilde, test_labels);
        tr.termination = fit_result.termination;
        tr.iterations = fit_result.state.iter;
        tr.final_residuals = fit_result.trace.back().residuals;
        tr.Ef_star = fit_result.Ef_star;
        tr.El_star = fit_result.El_star;
        tr.ok = true;

        const auto dir = std::filesystem::path(cfg.output_dir) / ("trial_" + std::to_string(t));
        std::filesystem::create_directories(dir);
        emit_trace(fit_result, dir / "trace.csv");
    } catch (const NumericError& e) {
        tr.ok = false;
        tr.error = e.what();
    }
    tr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return tr;
}

inline json trial_metrics(const TrialResult& tr) {
    json j{{"trial", tr.trial}, {"seed", tr.seed}, {"ok", tr.ok}};
    if (!tr.ok) {
        j["error"] = tr.error;
        return j;
    }
    j["accuracy"] = tr.accuracy;
    j["baseline_accuracy"] = tr.baseline_accuracy;
    j["termination"] = tr.termination;
    j["iterations"] = tr.iterations;
    j["final_residuals"] = tr.final_residuals;
    return j;
}

}  // namespace detail

/// Runs every trial and writes the artifacts listed at the top of this file.
/// A trial whose solver fails is recorded and skipped; the caller decides what
/// to do when no trial succeeds.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::filesystem::path root(cfg.output_dir);
    std::filesystem::create_directories(root);
    detail::write_json(json(cfg), root / "config.json");

    const detail::Source src = detail::load_source(cfg);
    ExperimentSummary summary;
    std::vector<double> acc, base;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        TrialResult tr = detail::run_trial(cfg, src, t);
        const auto dir = root / ("trial_" + std::to_string(t));
        std::filesystem::create_directories(dir);
        detail::write_json(detail::trial_metrics(tr), dir / "metrics.json");
        detail::write_json(json{{"seconds", tr.seconds}}, dir / "timing.json");
        if (tr.ok) {
            ++summary.succeeded;
            acc.push_back(tr.accuracy);
            base.push_back(tr.baseline_accuracy);
        }
        summary.trials.push_back(std::move(tr));
    }
    std::tie(summary.mean_accuracy, summary.std_accuracy) = detail::mean_std(acc);
    std::tie(summary.mean_baseline, summary.std_baseline) = detail::mean_std(base);

    json s{{"trials", cfg.trials},
           {"succeeded", summary.succeeded},
           {"failed", cfg.trials - summary.succeeded},
           {"accuracies", acc},
           {"baseline_accuracies", base}};
    if (summary.succeeded > 0) {
        s["mean_accuracy"] = summary.mean_accuracy;
        s["std_accuracy"] = summary.std_accuracy;
        s["mean_baseline_accuracy"] = summary.mean_baseline;
        s["std_baseline_accuracy"] = summary.std_baseline;
    }
    detail::write_json(s, root / "summary.json");
    return summary;
}

enum class SweepParam { Lambda1, Lambda2, Lambda3 };

inline SweepParam parse_sweep_param(const std::string& name) {
    if (name == "lambda1") return SweepParam::Lambda1;
    if (name == "lambda2") return SweepParam::Lambda2;
    if (name == "lambda3") return SweepParam::Lambda3;
    throw ValidationError("sweep parameter must be lambda1, lambda2 or lambda3, got " + name);
}

inline const char* to_string(SweepParam p) {
    switch (p) {
        case SweepParam::Lambda1: return "lambda1";
        case SweepParam::Lambda2: return "lambda2";
        case SweepParam::Lambda3: return "lambda3";
    }
    return "?";
}

struct SweepRow {
    double value = 0.0;
    ExperimentSummary summary;
};

/// One run_experiment per value, in the given order, under
/// output_dir/<param>_<index>/, plus output_dir/sweep.csv.
inline std::vector<SweepRow> sweep(const ExperimentConfig& cfg, SweepParam param,
                                   const std::vector<double>& values) {
    if (values.empty()) throw ValidationError("sweep needs at least one value");
    const std::filesystem::path root(cfg.output_dir);
    std::filesystem::create_directories(root);
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < values.size(); ++i) {
        ExperimentConfig run = cfg;
        switch (param) {
            case SweepParam::Lambda1: run.hyperparams.lambda1 = values[i]; break;
            case SweepParam::Lambda2: run.hyperparams.lambda2 = values[i]; break;
            case SweepParam::Lambda3: run.hyperparams.lambda3 = values[i]; break;
        }
        run.output_dir = (root / (std::string(to_string(param)) + "_" + std::to_string(i))).string();
        rows.push_back({values[i], run_experiment(run)});
    }

    std::ofstream out(root / "sweep.csv");
    out << "param,value,succeeded,mean_accuracy,std_accuracy,mean_baseline_accuracy\n";
    for (const auto& r : rows) {
        out << to_string(param) << ',' << detail::format_real(r.value) << ','
            << r.summary.succeeded << ',' << detail::format_real(r.summary.mean_accuracy) << ','
            << detail::format_real(r.summary.std_accuracy) << ','
            << detail::format_real(r.summary.mean_baseline) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for sweep.csv");
    return rows;
}

}  // namespace flr
