#pragma once

// JSON mappings for the configuration types. Missing fields keep their defaults.

#include "flr/dataset.hpp"
#include "flr/eval.hpp"
#include "flr/noise.hpp"
#include "flr/solver.hpp"

#include "json.hpp"

#include <string>

namespace flr {

using json = nlohmann::json;

NLOHMANN_JSON_SERIALIZE_ENUM(FeatureReg, {{FeatureReg::L1, "L1"},
                                          {FeatureReg::Frobenius, "Frobenius"}})
NLOHMANN_JSON_SERIALIZE_ENUM(ResidualMode, {{ResidualMode::Absolute, "absolute"},
                                            {ResidualMode::Relative, "relative"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Ablation, {{Ablation::Full, "Full"},
                                        {Ablation::NoFeatureRecovery, "NoFeatureRecovery"},
                                        {Ablation::NoLabelRecovery, "NoLabelRecovery"}})
NLOHMANN_JSON_SERIALIZE_ENUM(FeatureNoise, {{FeatureNoise::None, "None"},
                                            {FeatureNoise::Gaussian, "Gaussian"},
                                            {FeatureNoise::Laplacian, "Laplacian"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Termination, {{Termination::Converged, "Converged"},
                                           {Termination::IterMax, "IterMax"}})

namespace detail {

// NLOHMANN_JSON_SERIALIZE_ENUM maps unknown strings to the first enumerator;
// reject them instead.
template <typename Enum>
Enum enum_field(const json& j, const char* key, Enum fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    const Enum e = v.get<Enum>();
    if (json(e) != v) {
        throw ValidationError(concat("unknown value ", v.dump(), " for '", key, "'"));
    }
    return e;
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace detail

inline void to_json(json& j, const Hyperparams& hp) {
    j = json{{"lambda1", hp.lambda1},       {"lambda2", hp.lambda2},
             {"lambda3", hp.lambda3},       {"mu0", hp.mu0},
             {"rho", hp.rho},               {"epsilon", hp.epsilon},
             {"iter_max", hp.iter_max},     {"feature_reg", hp.feature_reg},
             {"residual_mode", hp.residual_mode}, {"ablation", hp.ablation}};
    j["mu_cap"] = hp.mu_cap ? json(*hp.mu_cap) : json(nullptr);
}

inline void from_json(const json& j, Hyperparams& hp) {
    detail::read_field(j, "lambda1", hp.lambda1);
    detail::read_field(j, "lambda2", hp.lambda2);
    detail::read_field(j, "lambda3", hp.lambda3);
    detail::read_field(j, "mu0", hp.mu0);
    detail::read_field(j, "rho", hp.rho);
    detail::read_field(j, "epsilon", hp.epsilon);
    detail::read_field(j, "iter_max", hp.iter_max);
    hp.feature_reg = detail::enum_field(j, "feature_reg", hp.feature_reg);
    hp.residual_mode = detail::enum_field(j, "residual_mode", hp.residual_mode);
    hp.ablation = detail::enum_field(j, "ablation", hp.ablation);
    if (j.contains("mu_cap")) {
        const json& cap = j.at("mu_cap");
        if (cap.is_null() || (cap.is_string() && cap.get<std::string>() == "none")) {
            hp.mu_cap.reset();
        } else {
            hp.mu_cap = cap.get<double>();
        }
    }
}

inline void to_json(json& j, const NoiseSpec& s) {
    j = json{{"feature_family", s.feature_family},
             {"sigma_f", s.sigma_f},
             {"eta_l", s.eta_l},
             {"seed", s.seed}};
}

inline void from_json(const json& j, NoiseSpec& s) {
    s.feature_family = detail::enum_field(j, "feature_family", s.feature_family);
    detail::read_field(j, "sigma_f", s.sigma_f);
    detail::read_field(j, "eta_l", s.eta_l);
    detail::read_field(j, "seed", s.seed);
}

inline void to_json(json& j, const PlantedSpec& s) {
    j = json{{"n", s.n},
             {"d", s.d},
             {"c", s.c},
             {"rank", s.rank},
             {"sparsity", s.sparsity},
             {"eta_l", s.eta_l},
             {"seed", s.seed},
             {"corruption_magnitude", s.corruption_magnitude},
             {"margin", s.margin}};
}

inline void from_json(const json& j, PlantedSpec& s) {
    detail::read_field(j, "n", s.n);
    detail::read_field(j, "d", s.d);
    detail::read_field(j, "c", s.c);
    detail::read_field(j, "rank", s.rank);
    detail::read_field(j, "sparsity", s.sparsity);
    detail::read_field(j, "eta_l", s.eta_l);
    detail::read_field(j, "seed", s.seed);
    detail::read_field(j, "corruption_magnitude", s.corruption_magnitude);
    detail::read_field(j, "margin", s.margin);
}

inline void to_json(json& j, const BoundInputs& b) {
    j = json{{"n", b.n},
             {"c", b.c},
             {"d", b.d},
             {"X_star_nuc", b.X_star_nuc},
             {"Z_star_nuc", b.Z_star_nuc},
             {"El_21", b.El_21},
             {"Ef_1", b.Ef_1},
             {"Xtilde_F", b.Xtilde_F},
             {"lipschitz_L", b.lipschitz_L},
             {"loss_bound_B", b.loss_bound_B},
             {"delta", b.delta}};
}

inline void from_json(const json& j, BoundInputs& b) {
    detail::read_field(j, "n", b.n);
    detail::read_field(j, "c", b.c);
    detail::read_field(j, "d", b.d);
    detail::read_field(j, "X_star_nuc", b.X_star_nuc);
    detail::read_field(j, "Z_star_nuc", b.Z_star_nuc);
    detail::read_field(j, "El_21", b.El_21);
    detail::read_field(j, "Ef_1", b.Ef_1);
    detail::read_field(j, "Xtilde_F", b.Xtilde_F);
    detail::read_field(j, "lipschitz_L", b.lipschitz_L);
    detail::read_field(j, "loss_bound_B", b.loss_bound_B);
    detail::read_field(j, "delta", b.delta);
}

inline void to_json(json& j, const BoundResult& r) {
    j = json{{"C1", r.C1},   {"C2", r.C2},
             {"C3", r.C3},   {"C4", r.C4},
             {"complexity", r.complexity}, {"gap", r.gap}};
}

}  // namespace flr
