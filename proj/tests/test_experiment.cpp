#include "flr/experiment.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace {

namespace fs = std::filesystem;
using flr::ExperimentConfig;
using flr::json;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

class Experiment : public ::testing::Test {
protected:
    void SetUp() override {
        root = fs::temp_directory_path() /
               ("flr_experiment_" +
                std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(root);
    }
    void TearDown() override { fs::remove_all(root); }

    ExperimentConfig planted_config(const std::string& name) const {
        ExperimentConfig cfg;
        flr::PlantedSpec spec;
        spec.n = 100;
        spec.d = 12;
        spec.c = 3;
        spec.rank = 3;
        spec.margin = 1.0;
        spec.seed = 4;
        cfg.planted = spec;
        cfg.trials = 3;
        cfg.output_dir = (root / name).string();
        return cfg;
    }

    fs::path root;
};

TEST_F(Experiment, SeparableCleanSetIsLearned) {
    ExperimentConfig cfg = planted_config("separable");
    flr::PlantedSpec spec;
    spec.margin = 2.0;
    spec.seed = 1;
    cfg.planted = spec;
    cfg.trials = 5;
    const auto summary = flr::run_experiment(cfg);
    EXPECT_EQ(summary.succeeded, 5u);
    EXPECT_GE(summary.mean_accuracy, 0.99);
}

TEST_F(Experiment, WritesLayoutAndSummaryMatchesTrials) {
    ExperimentConfig cfg = planted_config("layout");
    cfg.noise = {flr::FeatureNoise::Gaussian, 0.2, 0.3, 8};
    const auto summary = flr::run_experiment(cfg);
    const fs::path out(cfg.output_dir);
    EXPECT_TRUE(fs::exists(out / "config.json"));
    std::vector<double> acc;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        const fs::path dir = out / ("trial_" + std::to_string(t));
        EXPECT_TRUE(fs::exists(dir / "trace.csv"));
        EXPECT_TRUE(fs::exists(dir / "timing.json"));
        const json m = read_json(dir / "metrics.json");
        ASSERT_TRUE(m.at("ok").get<bool>());
        acc.push_back(m.at("accuracy").get<double>());
    }
    double mean = 0.0;
    for (double a : acc) mean += a;
    mean /= static_cast<double>(acc.size());
    double ss = 0.0;
    for (double a : acc) ss += (a - mean) * (a - mean);
    const double sd = std::sqrt(ss / static_cast<double>(acc.size() - 1));
    const json s = read_json(out / "summary.json");
    EXPECT_NEAR(s.at("mean_accuracy").get<double>(), mean, 1e-12);
    EXPECT_NEAR(s.at("std_accuracy").get<double>(), sd, 1e-12);
    EXPECT_NEAR(summary.mean_accuracy, mean, 1e-12);
}

TEST_F(Experiment, TraceRowsFollowTheMuSchedule) {
    ExperimentConfig cfg = planted_config("trace");
    cfg.trials = 1;
    cfg.hyperparams.iter_max = 25;
    cfg.hyperparams.mu_cap = 2e-3;
    flr::run_experiment(cfg);
    std::ifstream in(fs::path(cfg.output_dir) / "trial_0" / "trace.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line.rfind("iter,r_feature,r_label,r_zj,r_bkj,r_xk,objective,mu", 0), 0u);
    int rows = 0;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string field;
        std::vector<double> v;
        while (std::getline(ss, field, ',')) v.push_back(std::stod(field));
        const double expected = std::min(1e-3 * std::pow(1.2, rows), 2e-3);
        EXPECT_NEAR(v.at(7), expected, 1e-12 * expected);
        ++rows;
    }
    EXPECT_EQ(rows, 26);
}

TEST_F(Experiment, NoiseTouchesOnlyTrainingRows) {
    ExperimentConfig cfg = planted_config("noise_only_train");
    cfg.noise = {flr::FeatureNoise::Laplacian, 0.5, 0.6, 2};
    const auto src = flr::detail::load_source(cfg);
    for (std::size_t t = 0; t < 2; ++t) {
        const auto data = flr::detail::make_trial_data(cfg, src, t);
        const auto clean_split = flr::split(src.clean, cfg.train_fraction, cfg.base_seed + t);
        EXPECT_EQ(data.split.test.Xtilde, clean_split.test.Xtilde);
        EXPECT_EQ(data.split.test.Ytilde, clean_split.test.Ytilde);
        EXPECT_NE(data.train.Xtilde, clean_split.train.Xtilde);
        EXPECT_NE(data.train.Ytilde, clean_split.train.Ytilde);
    }
}

TEST_F(Experiment, RerunIsByteIdentical) {
    ExperimentConfig cfg = planted_config("first");
    cfg.trials = 1;
    cfg.noise = {flr::FeatureNoise::Gaussian, 0.2, 0.3, 1};
    flr::run_experiment(cfg);
    ExperimentConfig again = cfg;
    again.output_dir = (root / "second").string();
    flr::run_experiment(again);
    for (const char* f : {"trial_0/metrics.json", "trial_0/trace.csv"}) {
        EXPECT_EQ(slurp(root / "first" / f), slurp(root / "second" / f)) << f;
    }
}

TEST_F(Experiment, NoLabelRecoveryDoesNotBeatFull) {
    ExperimentConfig cfg = planted_config("full");
    cfg.noise.eta_l = 0.3;
    const auto full = flr::run_experiment(cfg);
    cfg.ablation = flr::Ablation::NoLabelRecovery;
    cfg.output_dir = (root / "nolabel").string();
    const auto ablated = flr::run_experiment(cfg);
    EXPECT_LE(ablated.mean_accuracy, full.mean_accuracy);
    for (const auto& t : ablated.trials) EXPECT_EQ(t.El_star.cwiseAbs().maxCoeff(), 0.0);
}

TEST_F(Experiment, NoFeatureRecoveryPinsFeatureError) {
    ExperimentConfig cfg = planted_config("nofeature");
    cfg.trials = 1;
    cfg.ablation = flr::Ablation::NoFeatureRecovery;
    const auto summary = flr::run_experiment(cfg);
    EXPECT_EQ(summary.trials.at(0).Ef_star.cwiseAbs().maxCoeff(), 0.0);
}

TEST_F(Experiment, SingleValueSweepEqualsPlainRun) {
    ExperimentConfig cfg = planted_config("sweep_one");
    cfg.trials = 2;
    cfg.noise.eta_l = 0.2;
    const auto rows = flr::sweep(cfg, flr::SweepParam::Lambda2, {0.3});
    ExperimentConfig plain = cfg;
    plain.hyperparams.lambda2 = 0.3;
    plain.output_dir = (root / "plain").string();
    const auto direct = flr::run_experiment(plain);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].summary.mean_accuracy, direct.mean_accuracy);
    EXPECT_EQ(slurp(fs::path(cfg.output_dir) / "lambda2_0" / "trial_1" / "metrics.json"),
              slurp(root / "plain" / "trial_1" / "metrics.json"));
}

TEST_F(Experiment, ThreeValueSweepKeepsOrderAndIsStable) {
    ExperimentConfig cfg = planted_config("sweep_three");
    cfg.noise.eta_l = 0.3;
    const auto rows = flr::sweep(cfg, flr::SweepParam::Lambda3, {0.01, 0.1, 1.0});
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].value, 0.01);
    EXPECT_EQ(rows[2].value, 1.0);
    double lo = 1.0, hi = 0.0;
    for (const auto& r : rows) {
        lo = std::min(lo, r.summary.mean_accuracy);
        hi = std::max(hi, r.summary.mean_accuracy);
    }
    EXPECT_LE(hi - lo, 0.15);

    std::ifstream table(fs::path(cfg.output_dir) / "sweep.csv");
    std::string line;
    int lines = 0;
    while (std::getline(table, line)) ++lines;
    EXPECT_EQ(lines, 4);
}

TEST_F(Experiment, ConfigJsonRoundTripAndValidation) {
    ExperimentConfig cfg = planted_config("json");
    cfg.hyperparams.mu_cap.reset();
    cfg.hyperparams.feature_reg = flr::FeatureReg::Frobenius;
    cfg.ablation = flr::Ablation::NoLabelRecovery;
    const auto back = json(cfg).get<ExperimentConfig>();
    EXPECT_EQ(json(back), json(cfg));
    EXPECT_FALSE(back.hyperparams.mu_cap.has_value());

    ExperimentConfig both = cfg;
    both.dataset = "x.csv";
    EXPECT_THROW(both.validate(), flr::ValidationError);
    ExperimentConfig none = cfg;
    none.planted.reset();
    EXPECT_THROW(none.validate(), flr::ValidationError);
    ExperimentConfig zero = cfg;
    zero.trials = 0;
    EXPECT_THROW(zero.validate(), flr::ValidationError);

    json bad = json(cfg);
    bad["ablation"] = "Sideways";
    EXPECT_THROW(bad.get<ExperimentConfig>(), flr::ValidationError);
}

}  // namespace
