// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#pragma once

#include <array>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "raycal/em_field.hpp"
#include "raycal/json_util.hpp"
#include "raycal/parameters.hpp"
#include "raycal/trainable.hpp"

namespace raycal {

struct AntennaSpec {
    enum class Kind { Isotropic, SgMixture };
    Kind kind = Kind::Isotropic;
    SgMixture sg;          // fixed mixture (Kind::SgMixture, not trainable)
    double slant = 0.0;    // rad
    double yaw = 0.0, pitch = 0.0, roll = 0.0; // rad
    bool trainable = false;
    std::size_t components = 3;      // trainable mixture size
    double init_concentration = 1.0; // trainable initial lambda

    AntennaPose pose() const { return {rotation_zyx(yaw, pitch, roll), slant}; }
};

// Materials declared "fixed" in the scene stay frozen; every other material
// is trained with `materials` (embedding or neural). Materials whose
// scattering spec is trainable get a hemispherical-Gaussian pattern block,
// one per material or one shared block.
struct ModelConfig {
    MaterialModel materials = MaterialModel::Embedding;
    std::size_t embedding_dim = 30;
    int encoding_levels = 10;
    std::vector<int> hidden{128, 128, 128, 128};
    bool neural_pattern_heads = false;
    AntennaSpec tx;
    AntennaSpec rx;
    bool shared_pattern = false;
    HgNormalization hg_mode = HgNormalization::AxisElevation;
};

json model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const json& j, const std::string& context);
json antenna_to_json(const AntennaSpec& a);
AntennaSpec antenna_from_json(const json& j, const std::string& context);

class Model {
  public:
    // Creates and initializes every trainable block for `scene`.
    Model(const Scene& scene, ModelConfig config, std::uint64_t seed);

    const Scene& scene() const { return *scene_; }
    const ModelConfig& config() const { return config_; }
    ParameterStore& parameters() { return params_; }
    const ParameterStore& parameters() const { return params_; }
    const MlpShape& mlp_shape() const { return mlp_; }

    // Path coefficients for every path in `set` (delay phase excluded).
    // `chi` holds per-path diffuse phases (empty: all zero).
    template <class T>
    std::vector<Complex<T>> coefficients(const PathSet& set, double frequency, std::span<const T> params,
                                         std::span<const std::array<double, 2>> chi = {}) const;

    // Centered-order CIR through a tap kernel built from the same PathSet.
    template <class T>
    std::vector<Complex<T>> predict_cir(const PathSet& set, std::span<const std::complex<double>> kernel,
                                        const Waveform& wf, std::span<const T> params,
                                        std::span<const std::array<double, 2>> chi = {}) const;

    // Current values for reporting (neural: average over the material's
    // triangle centroids).
    MaterialParams material(std::uint32_t material_id) const;
    std::optional<SgMixture> tx_mixture() const;
    double tx_gain(const Vec3& local_direction) const;
    double rx_gain(const Vec3& local_direction) const;
    // Effective pattern parameters of a material with trainable scattering.
    std::optional<HgPattern> pattern(std::uint32_t material_id) const;
    double scattering_value(std::uint32_t material_id, const Vec3& k_i, const Vec3& k_s, const Vec3& n) const;

  private:
    template <class T>
    friend class ModelSource;

    const Scene* scene_;
    ModelConfig config_;
    ParameterStore params_;
    MlpShape mlp_;
    std::vector<std::optional<std::size_t>> material_block_; // per material id (embedding)
    std::optional<std::size_t> neural_block_;
    std::vector<std::optional<std::size_t>> pattern_block_;  // per material id
    std::optional<std::size_t> tx_block_;
    std::optional<std::size_t> rx_block_;
};

extern template std::vector<Complex<double>> Model::coefficients(const PathSet&, double, std::span<const double>,
                                                                 std::span<const std::array<double, 2>>) const;
extern template std::vector<Complex<ad::Var>> Model::coefficients(const PathSet&, double, std::span<const ad::Var>,
                                                                  std::span<const std::array<double, 2>>) const;
extern template std::vector<Complex<double>> Model::predict_cir(const PathSet&, std::span<const std::complex<double>>,
                                                                const Waveform&, std::span<const double>,
                                                                std::span<const std::array<double, 2>>) const;
extern template std::vector<Complex<ad::Var>> Model::predict_cir(const PathSet&,
                                                                 std::span<const std::complex<double>>, const Waveform&,
                                                                 std::span<const ad::Var>,
                                                                 std::span<const std::array<double, 2>>) const;

std::vector<double> path_delays(const PathSet& set);

// ---- checkpoints -------------------------------------------------------------

inline constexpr const char* kCheckpointFormat = "raycal-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct OptimizerState {
    std::uint64_t step = 0;
    std::vector<double> m;
    std::vector<double> v;
};

struct CheckpointExtras {
    std::uint64_t seed = 0;
    std::uint64_t iterations = 0;
    double alpha = 1.0;
};

std::string checkpoint_to_json(const Model& model, const OptimizerState& opt, const CheckpointExtras& extras);

struct LoadedCheckpoint {
    ModelConfig config;
    std::string scene_hash;
    std::map<std::string, std::vector<double>> blocks;
    std::uint64_t step = 0;
    std::map<std::string, std::vector<double>> m;
    std::map<std::string, std::vector<double>> v;
    CheckpointExtras extras;
};

LoadedCheckpoint parse_checkpoint(const std::string& text, const std::string& origin);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

// Rebuilds the model for `scene` and overwrites its parameters. Throws
// IncompatibleError when the checkpoint was made for another scene or its
// blocks do not match the model layout.
Model restore_model(const Scene& scene, const LoadedCheckpoint& ck);
OptimizerState restore_optimizer(const Model& model, const LoadedCheckpoint& ck);

} // namespace raycal
