// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#pragma once

#include <map>
#include <string>
#include <vector>

#include "raycal/dataset.hpp"
#include "raycal/model.hpp"

namespace raycal {

struct Box {
    Vec3 lower;
    Vec3 upper;
};

struct SynthConfig {
    std::map<std::string, MaterialParams> materials; // ground truth by material name
    ScatteringSpec scattering;                       // applied to every material
    std::map<std::string, ScatteringSpec> scattering_overrides;
    std::size_t positions = 256;
    std::vector<Box> regions;
    std::vector<Vec3> rx{{1.0, 2.0, 1.5}};
    Waveform waveform;
    TraceConfig trace{3, 20000, 256, 0, CandidateMode::Sbr};
    std::uint64_t seed = 0;
    bool random_phases = false;
    AntennaSpec tx_antenna;
    AntennaSpec rx_antenna;
    HgNormalization hg_mode = HgNormalization::AxisElevation;

    // Table values of the shipped corridor (floor / walls / ceiling).
    static SynthConfig corridor_defaults();
};

json synth_config_to_json(const SynthConfig& c);
SynthConfig synth_config_from_json(const json& j, const std::string& context);
SynthConfig load_synth_config(const std::filesystem::path& path);
// FNV-1a of the canonical JSON form.
std::string synth_config_hash(const SynthConfig& c);

// Copy of `scene` with every material replaced by its fixed ground truth.
// Throws InputError when a non-fixed scene material has no entry.
Scene ground_truth_scene(const Scene& scene, const SynthConfig& c);

struct GeneratedData {
    Dataset dataset;
    PathCache paths; // one set per record, record order
    std::size_t flagged = 0;
    double mean_path_count = 0.0;
};

// Samples positions, traces, and renders CIRs with the ground truth.
GeneratedData generate(const Scene& scene, const SynthConfig& c);

// Uniform positions inside the union of `regions` (volume-weighted).
std::vector<Vec3> sample_positions(const std::vector<Box>& regions, std::size_t count, std::uint64_t seed);

} // namespace raycal
