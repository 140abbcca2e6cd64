#include "flr/dataset.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

namespace {

namespace fs = std::filesystem;
using flr::Matrix;

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("flr_dataset_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    fs::path write(const std::string& name, const std::string& text) {
        const fs::path p = dir / name;
        std::ofstream(p) << text;
        return p;
    }

    fs::path dir;
};

TEST_F(TempDir, LabelsInFirstAppearanceOrder) {
    const auto ds = flr::load_csv(write("a.csv", "1,2,a\n3,4,b\n5,6,a\n"));
    EXPECT_EQ(ds.c(), 2);
    Matrix Y(3, 2);
    Y << 1, 0, 0, 1, 1, 0;
    EXPECT_EQ(ds.Ytilde, Y);
    EXPECT_EQ(ds.class_names, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(ds.Xtilde(2, 1), 6.0);
}

TEST_F(TempDir, SingleRowAndHeader) {
    const auto ds = flr::load_csv(write("h.csv", "x,y,label\n0.5, -1e-3 ,cat\n"), true);
    EXPECT_EQ(ds.n(), 1);
    EXPECT_EQ(ds.d(), 2);
    EXPECT_EQ(ds.Xtilde(0, 1), -1e-3);
}

TEST_F(TempDir, ParseErrorsNameTheLine) {
    try {
        flr::load_csv(write("r.csv", "1,2,a\n3,b\n"));
        FAIL();
    } catch (const flr::ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
    try {
        flr::load_csv(write("n.csv", "1,2,a\n3,4,a\n5,x,b\n"));
        FAIL();
    } catch (const flr::ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(flr::load_csv(write("e.csv", "")), flr::ParseError);
    EXPECT_THROW(flr::load_csv(write("inf.csv", "1,nan,a\n")), flr::ParseError);
    EXPECT_THROW(flr::load_csv(dir / "missing.csv"), flr::ParseError);
}

TEST_F(TempDir, WriteLoadRoundTrip) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 1e3);
    flr::NoisyDataset ds;
    ds.Xtilde.resize(20, 3);
    for (flr::Index i = 0; i < ds.Xtilde.size(); ++i) ds.Xtilde.data()[i] = g(rng) * 1e-7;
    std::vector<flr::Index> labels;
    for (int i = 0; i < 20; ++i) labels.push_back((i * 7) % 3);
    ds.Ytilde = flr::one_hot(labels, 3);
    ds.class_names = {"zero", "one", "two"};
    flr::write_csv(ds, dir / "rt.csv", true);
    const auto back = flr::load_csv(dir / "rt.csv", true);
    EXPECT_LE((back.Xtilde - ds.Xtilde).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(back.labels(), ds.labels());
}

TEST(Split, EightyTwentyIsDisjointAndExhaustive) {
    flr::NoisyDataset ds;
    ds.Xtilde = Matrix::Random(10, 2);
    ds.Ytilde = flr::one_hot({0, 1, 0, 1, 0, 1, 0, 1, 0, 1}, 2);
    const auto s = flr::split(ds, 0.8, 3);
    EXPECT_EQ(s.train.n(), 8);
    EXPECT_EQ(s.test.n(), 2);
    std::set<flr::Index> all(s.train_rows.begin(), s.train_rows.end());
    for (auto r : s.test_rows) EXPECT_TRUE(all.insert(r).second);
    EXPECT_EQ(all.size(), 10u);
    for (std::size_t k = 0; k < s.test_rows.size(); ++k) {
        EXPECT_EQ(s.test.Xtilde.row(static_cast<flr::Index>(k)), ds.Xtilde.row(s.test_rows[k]));
    }

    const auto again = flr::split(ds, 0.8, 3);
    EXPECT_EQ(again.train_rows, s.train_rows);
    EXPECT_EQ(flr::split(ds, 0.99, 1).train.n(), 9);
    EXPECT_THROW(flr::split(ds, 0.05, 1), flr::ValidationError);
    EXPECT_THROW(flr::split(ds, 1.0, 1), flr::ValidationError);
}

TEST(Planted, NoCorruptionMeansNoisyEqualsClean) {
    flr::PlantedSpec spec;
    spec.n = 30;
    spec.d = 6;
    spec.c = 3;
    spec.rank = 2;
    const auto inst = flr::make_planted(spec);
    EXPECT_EQ(inst.noisy.Xtilde, inst.clean.Xtilde);
    EXPECT_EQ(inst.noisy.Ytilde, inst.clean.Ytilde);
}

TEST(Planted, RankOneOuterProduct) {
    flr::PlantedSpec spec;
    spec.n = 4;
    spec.d = 4;
    spec.c = 2;
    spec.rank = 1;
    const auto s = oracle::singular_values(flr::make_planted(spec).clean.Xtilde);
    EXPECT_LE(s(1), 1e-10 * s(0));
}

TEST(Planted, SparseCountAndGroundTruth) {
    flr::PlantedSpec spec;
    spec.n = 100;
    spec.d = 100;
    spec.c = 5;
    spec.rank = 5;
    spec.sparsity = 0.05;
    spec.eta_l = 0.3;
    spec.seed = 11;
    const auto inst = flr::make_planted(spec);
    EXPECT_EQ((inst.Ef.array() != 0.0).count(), 500);
    EXPECT_EQ(inst.noisy.Xtilde, Matrix(inst.clean.Xtilde + inst.Ef));
    const auto a = inst.clean.labels(), b = inst.noisy.labels();
    std::size_t flips = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i] != b[i], static_cast<bool>(inst.label_flipped[i]));
        flips += a[i] != b[i];
    }
    EXPECT_EQ(flips, 30u);

    const auto again = flr::make_planted(spec);
    EXPECT_EQ(again.noisy.Xtilde, inst.noisy.Xtilde);
    EXPECT_EQ(again.noisy.Ytilde, inst.noisy.Ytilde);
}

TEST(Planted, LabelsAreLinearlyRealizable) {
    flr::PlantedSpec spec;
    spec.n = 150;
    spec.d = 12;
    spec.c = 4;
    spec.rank = 4;
    spec.margin = 0.5;
    spec.seed = 2;
    const auto inst = flr::make_planted(spec);
    // A least-squares fit of the clean labels must separate them when a linear
    // separator exists; check that a perceptron on the clean features converges.
    const Matrix& X = inst.clean.Xtilde;
    const auto y = inst.clean.labels();
    Matrix W = Matrix::Zero(X.cols(), spec.c);
    bool separated = false;
    for (int epoch = 0; epoch < 5000 && !separated; ++epoch) {
        separated = true;
        for (flr::Index i = 0; i < X.rows(); ++i) {
            flr::Index arg = 0;
            (X.row(i) * W).maxCoeff(&arg);
            const flr::Index truth = y[static_cast<std::size_t>(i)];
            if (arg != truth) {
                W.col(truth) += X.row(i).transpose();
                W.col(arg) -= X.row(i).transpose();
                separated = false;
            }
        }
    }
    EXPECT_TRUE(separated);
}

TEST(Planted, RejectsInfeasibleSpecs) {
    flr::PlantedSpec spec;
    spec.rank = 50;
    EXPECT_THROW(flr::make_planted(spec), flr::ValidationError);
    spec = flr::PlantedSpec{};
    spec.sparsity = 1.0;
    EXPECT_THROW(flr::make_planted(spec), flr::ValidationError);
    spec = flr::PlantedSpec{};
    spec.c = 1;
    spec.eta_l = 0.2;
    EXPECT_THROW(flr::make_planted(spec), flr::ValidationError);
}

TEST_F(TempDir, SavePlantedWritesFourFiles) {
    flr::PlantedSpec spec;
    spec.n = 12;
    spec.d = 5;
    spec.c = 3;
    spec.rank = 2;
    spec.sparsity = 0.1;
    spec.eta_l = 0.25;
    const auto inst = flr::make_planted(spec);
    flr::save_planted(inst, dir / "planted");
    for (const char* f : {"features.csv", "labels.csv", "ef.csv", "flips.csv"}) {
        EXPECT_TRUE(fs::exists(dir / "planted" / f)) << f;
    }
    const Matrix features = flr::load_matrix_csv(dir / "planted" / "features.csv");
    EXPECT_LE((features - inst.noisy.Xtilde).cwiseAbs().maxCoeff(), 1e-12);
    const Matrix ef = flr::load_matrix_csv(dir / "planted" / "ef.csv");
    EXPECT_EQ(ef, inst.Ef);
}

}  // namespace
