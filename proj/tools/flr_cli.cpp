// Command-line front end: fit, predict, inject, run, sweep, bound.

#include "flr/flr.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kValidation = 2, kNumeric = 3 };

struct HyperparamOptions {
    std::string file;
    std::optional<double> lambda1, lambda2, lambda3, mu0, rho, epsilon;
    std::optional<std::size_t> iter_max;
    std::string feature_reg;
    std::string mu_cap;
    bool relative = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--hyperparams", file, "JSON file with solver hyperparameters");
        cmd->add_option("--lambda1", lambda1, "weight of ||Z||_*");
        cmd->add_option("--lambda2", lambda2, "weight of the feature-noise regularizer");
        cmd->add_option("--lambda3", lambda3, "weight of ||E_l||_{2,1}");
        cmd->add_option("--mu0", mu0, "initial penalty parameter");
        cmd->add_option("--rho", rho, "penalty growth factor (> 1)");
        cmd->add_option("--epsilon", epsilon, "residual tolerance");
        cmd->add_option("--iter-max", iter_max, "maximum number of iterations");
        cmd->add_option("--feature-reg", feature_reg, "L1 or Frobenius")
            ->check(CLI::IsMember({"L1", "Frobenius"}));
        cmd->add_option("--mu-cap", mu_cap, "upper bound on mu, or 'none'");
        cmd->add_flag("--relative-residuals", relative, "scale the stopping residuals by data norms");
    }

    flr::Hyperparams resolve() const {
        flr::Hyperparams hp;
        if (!file.empty()) {
            std::ifstream in(file);
            if (!in) throw flr::ValidationError("cannot open " + file);
            hp = flr::json::parse(in).get<flr::Hyperparams>();
        }
        if (lambda1) hp.lambda1 = *lambda1;
        if (lambda2) hp.lambda2 = *lambda2;
        if (lambda3) hp.lambda3 = *lambda3;
        if (mu0) hp.mu0 = *mu0;
        if (rho) hp.rho = *rho;
        if (epsilon) hp.epsilon = *epsilon;
        if (iter_max) hp.iter_max = *iter_max;
        if (!feature_reg.empty()) {
            hp.feature_reg = feature_reg == "L1" ? flr::FeatureReg::L1 : flr::FeatureReg::Frobenius;
        }
        if (mu_cap == "none") {
            hp.mu_cap.reset();
        } else if (!mu_cap.empty()) {
            hp.mu_cap = std::stod(mu_cap);
        }
        if (relative) hp.residual_mode = flr::ResidualMode::Relative;
        hp.validate();
        return hp;
    }
};

struct BoundConstants {
    double lipschitz = 1.0;
    double loss_bound = 1.0;
    double delta = 0.05;

    void attach(CLI::App* cmd) {
        cmd->add_option("--lipschitz", lipschitz, "Lipschitz constant of the loss");
        cmd->add_option("--loss-bound", loss_bound, "upper bound of the loss");
        cmd->add_option("--delta", delta, "confidence parameter in (0, 1)");
    }

    void apply(flr::BoundInputs& b) const {
        b.lipschitz_L = lipschitz;
        b.loss_bound_B = loss_bound;
        b.delta = delta;
    }
};

std::vector<double> parse_values(const std::string& list) {
    std::vector<double> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw flr::ValidationError("not a number in --values: '" + item + "'");
        }
    }
    return out;
}

flr::FeatureNoise parse_family(const std::string& s) {
    if (s == "none" || s == "None") return flr::FeatureNoise::None;
    if (s == "gaussian" || s == "Gaussian") return flr::FeatureNoise::Gaussian;
    if (s == "laplacian" || s == "Laplacian") return flr::FeatureNoise::Laplacian;
    throw flr::ValidationError("unknown noise family: " + s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint feature and label recovery from hybrid-noise data"};
    app.require_subcommand(1);

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "fit a model on a labelled CSV");
    std::string fit_data, fit_model, fit_trace, fit_bound;
    bool fit_header = false, fit_standardize = false;
    HyperparamOptions fit_hp;
    BoundConstants fit_consts;
    fit_cmd->add_option("--data", fit_data, "CSV: features then label")->required();
    fit_cmd->add_flag("--header", fit_header, "first line is a header");
    fit_cmd->add_flag("--standardize", fit_standardize, "z-score features before fitting");
    fit_cmd->add_option("--model", fit_model, "output model file")->required();
    fit_cmd->add_option("--trace", fit_trace, "output convergence trace CSV");
    fit_cmd->add_option("--bound-inputs", fit_bound, "output BoundInputs JSON from the fit");
    fit_hp.attach(fit_cmd);
    fit_consts.attach(fit_cmd);

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "predict labels with a fitted model");
    std::string pred_model, pred_features, pred_out;
    bool pred_header = false, pred_labeled = false;
    predict_cmd->add_option("--model", pred_model, "model file")->required();
    predict_cmd->add_option("--features", pred_features, "CSV of feature rows")->required();
    predict_cmd->add_flag("--header", pred_header, "first line is a header");
    predict_cmd->add_flag("--labeled", pred_labeled,
                          "last column is a label; report accuracy on stderr");
    predict_cmd->add_option("--out", pred_out, "write predictions here instead of stdout");

    // inject
    auto* inject_cmd = app.add_subcommand("inject", "corrupt a labelled CSV with hybrid noise");
    std::string inj_data, inj_out, inj_family = "none";
    bool inj_header = false;
    flr::NoiseSpec inj_spec;
    inject_cmd->add_option("--data", inj_data, "input CSV")->required();
    inject_cmd->add_flag("--header", inj_header, "first line is a header");
    inject_cmd->add_option("--family", inj_family, "none, gaussian or laplacian");
    inject_cmd->add_option("--sigma", inj_spec.sigma_f, "feature noise standard deviation");
    inject_cmd->add_option("--eta", inj_spec.eta_l, "fraction of labels to flip");
    inject_cmd->add_option("--seed", inj_spec.seed, "random seed");
    inject_cmd->add_option("--out", inj_out, "output CSV")->required();

    // run
    auto* run_cmd = app.add_subcommand("run", "run a multi-trial experiment from a JSON config");
    std::string run_config, run_output;
    run_cmd->add_option("--config", run_config, "experiment config JSON")->required();
    run_cmd->add_option("--output-dir", run_output, "override output_dir from the config");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "repeat an experiment over one lambda");
    std::string sweep_config, sweep_output, sweep_param, sweep_values;
    sweep_cmd->add_option("--config", sweep_config, "experiment config JSON")->required();
    sweep_cmd->add_option("--param", sweep_param, "lambda1, lambda2 or lambda3")->required();
    sweep_cmd->add_option("--values", sweep_values, "comma-separated values")->required();
    sweep_cmd->add_option("--output-dir", sweep_output, "override output_dir from the config");

    // bound
    auto* bound_cmd = app.add_subcommand("bound", "evaluate the generalization bound");
    std::string bound_inputs, bound_data;
    bool bound_header = false;
    HyperparamOptions bound_hp;
    BoundConstants bound_consts;
    bound_cmd->add_option("--inputs", bound_inputs, "BoundInputs JSON");
    bound_cmd->add_option("--data", bound_data, "fit this CSV and bound the result");
    bound_cmd->add_flag("--header", bound_header, "first line of --data is a header");
    bound_hp.attach(bound_cmd);
    bound_consts.attach(bound_cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*fit_cmd) {
            const flr::Hyperparams hp = fit_hp.resolve();
            const flr::NoisyDataset ds = flr::load_csv(fit_data, fit_header);
            flr::Classifier clf;
            flr::Matrix features = ds.Xtilde;
            if (fit_standardize) {
                clf.standardizer = flr::standardize_fit(ds.Xtilde);
                features = clf.standardizer->apply(ds.Xtilde);
            }
            const flr::FitResult result = flr::fit(features, ds.Ytilde, hp);
            clf.Z = result.Z_star;
            clf.class_names = ds.class_names;
            flr::save_classifier(clf, fit_model);
            if (!fit_trace.empty()) flr::emit_trace(result, fit_trace);
            if (!fit_bound.empty()) {
                flr::BoundInputs b = flr::bound_inputs_from_fit(result, features, ds.c());
                fit_consts.apply(b);
                std::ofstream(fit_bound) << flr::json(b).dump(2) << '\n';
            }
            const auto& last = result.trace.back();
            std::cerr << "termination=" << flr::to_string(result.termination)
                      << " iterations=" << result.state.iter << " max_residual="
                      << *std::max_element(last.residuals.begin(), last.residuals.end()) << '\n';
            return kOk;
        }

        if (*predict_cmd) {
            const flr::Classifier clf = flr::load_classifier(pred_model);
            flr::Matrix features;
            std::vector<std::string> truth;
            if (pred_labeled) {
                const flr::NoisyDataset ds = flr::load_csv(pred_features, pred_header);
                features = ds.Xtilde;
                for (flr::Index k : ds.labels()) truth.push_back(ds.class_names[static_cast<std::size_t>(k)]);
            } else {
                features = flr::load_matrix_csv(pred_features, pred_header);
            }
            const auto predictions = flr::predict_all(clf, features);
            std::ofstream file;
            if (!pred_out.empty()) {
                file.open(pred_out);
                if (!file) throw std::runtime_error("cannot write " + pred_out);
            }
            std::ostream& out = pred_out.empty() ? std::cout : file;
            std::size_t hits = 0;
            for (std::size_t i = 0; i < predictions.size(); ++i) {
                const auto k = static_cast<std::size_t>(predictions[i]);
                const std::string name = clf.class_names.empty() ? std::to_string(k) : clf.class_names[k];
                out << name << '\n';
                if (pred_labeled && name == truth[i]) ++hits;
            }
            if (pred_labeled) {
                std::cerr << "accuracy=" << static_cast<double>(hits) / static_cast<double>(predictions.size())
                          << '\n';
            }
            return kOk;
        }

        if (*inject_cmd) {
            inj_spec.feature_family = parse_family(inj_family);
            flr::NoisyDataset ds = flr::load_csv(inj_data, inj_header);
            ds.Xtilde = flr::inject_feature_noise(ds.Xtilde, inj_spec);
            ds.Ytilde = flr::inject_label_noise(ds.Ytilde, inj_spec);
            flr::write_csv(ds, inj_out, inj_header);
            return kOk;
        }

        if (*run_cmd) {
            flr::ExperimentConfig cfg = flr::load_config(run_config);
            if (!run_output.empty()) cfg.output_dir = run_output;
            const auto summary = flr::run_experiment(cfg);
            for (const auto& t : summary.trials) {
                if (!t.ok) std::cerr << "trial " << t.trial << " failed: " << t.error << '\n';
            }
            if (summary.succeeded == 0) {
                std::cerr << "all trials failed\n";
                return kNumeric;
            }
            std::cout << "mean_accuracy=" << summary.mean_accuracy
                      << " std_accuracy=" << summary.std_accuracy
                      << " succeeded=" << summary.succeeded << '/' << cfg.trials << '\n';
            return kOk;
        }

        if (*sweep_cmd) {
            flr::ExperimentConfig cfg = flr::load_config(sweep_config);
            if (!sweep_output.empty()) cfg.output_dir = sweep_output;
            const auto param = flr::parse_sweep_param(sweep_param);
            const auto rows = flr::sweep(cfg, param, parse_values(sweep_values));
            bool any = false;
            for (const auto& r : rows) {
                std::cout << sweep_param << '=' << r.value << " mean_accuracy=" << r.summary.mean_accuracy
                          << " succeeded=" << r.summary.succeeded << '\n';
                any = any || r.summary.succeeded > 0;
            }
            return any ? kOk : kNumeric;
        }

        if (*bound_cmd) {
            flr::BoundInputs b;
            if (!bound_inputs.empty() == !bound_data.empty()) {
                throw flr::ValidationError("bound needs exactly one of --inputs or --data");
            }
            if (!bound_inputs.empty()) {
                std::ifstream in(bound_inputs);
                if (!in) throw flr::ValidationError("cannot open " + bound_inputs);
                b = flr::json::parse(in).get<flr::BoundInputs>();
            } else {
                const flr::NoisyDataset ds = flr::load_csv(bound_data, bound_header);
                const auto result = flr::fit(ds.Xtilde, ds.Ytilde, bound_hp.resolve());
                b = flr::bound_inputs_from_fit(result, ds.Xtilde, ds.c());
                bound_consts.apply(b);
            }
            flr::json out{{"inputs", b}, {"result", flr::rademacher_bound(b)}};
            std::cout << out.dump(2) << '\n';
            return kOk;
        }
    } catch (const flr::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const flr::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const flr::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kNumeric;
    } catch (const flr::json::exception& e) {
        std::cerr << "error: bad JSON: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}
