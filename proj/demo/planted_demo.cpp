// Fits a corrupted planted instance and compares against least squares.
//
//   planted_demo [seed]

#include "flr/flr.hpp"

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
    flr::PlantedSpec spec;
    spec.n = 250;
    spec.sparsity = 0.05;
    spec.eta_l = 0.3;
    spec.margin = 1.0;
    spec.seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 0;

    const flr::PlantedInstance inst = flr::make_planted(spec);
    const flr::Split sp = flr::split(inst.clean, 0.8, spec.seed);
    const flr::NoisyDataset train = flr::select_rows(inst.noisy, sp.train_rows);

    const flr::FitResult result = flr::fit(train.Xtilde, train.Ytilde, flr::Hyperparams{});
    const flr::Classifier model{result.Z_star, std::nullopt, {}};
    const flr::Classifier baseline = flr::fit_least_squares(train.Xtilde, train.Ytilde);

    const auto truth = sp.test.labels();
    const auto& last = result.trace.back();
    std::cout << "termination  " << flr::to_string(result.termination) << " after "
              << result.state.iter << " iterations\n";
    std::cout << "residuals   ";
    for (double r : last.residuals) std::cout << ' ' << r;
    std::cout << "\nrank(X*)     "
              << (flr::thin_svd(result.X_star).singularValues().array() > 1e-6).count() << '\n';
    std::cout << "FLR accuracy " << flr::accuracy(model, sp.test.Xtilde, truth) << '\n';
    std::cout << "LS accuracy  " << flr::accuracy(baseline, sp.test.Xtilde, truth) << '\n';
}
