// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#pragma once

#include <memory>

#include "raycal/calibration.hpp"
#include "raycal/scenes.hpp"
#include "raycal/synth.hpp"

namespace raycal::testing {

// A small corridor with a generated dataset and matching examples. Held by
// pointer so the examples keep valid references into the path cache.
struct SmallProblem {
    Scene scene;
    SynthConfig synth;
    GeneratedData data;
    std::vector<Example> examples;
};

inline MaterialSpec embedding_base()
{
    MaterialSpec base;
    base.model = MaterialModel::Embedding;
    base.scattering.kind = ScatteringSpec::Kind::Backscatter;
    base.scattering.alpha_r = 5;
    base.scattering.alpha_s = 8;
    base.scattering.lobe_fraction = 0.8;
    return base;
}

inline std::unique_ptr<SmallProblem> make_small_problem(std::size_t positions = 12, std::uint64_t seed = 1)
{
    auto p = std::make_unique<SmallProblem>();
    p->scene = make_corridor({8.0, 3.0, 2.5, 2.0}, embedding_base());
    p->synth = SynthConfig::corridor_defaults();
    p->synth.positions = positions;
    p->synth.regions = {{{2.0, 0.5, 0.8}, {7.5, 2.5, 2.0}}};
    p->synth.rx = {{1.0, 1.5, 1.4}};
    p->synth.trace = {2, 3000, 32, 0, CandidateMode::Sbr};
    p->synth.seed = seed;
    p->data = generate(p->scene, p->synth);
    for (std::size_t i = 0; i < p->data.dataset.records.size(); ++i)
        p->examples.push_back(
            make_example(p->data.dataset.records[i], p->data.paths.sets[i], p->data.dataset.manifest.waveform));
    return p;
}

} // namespace raycal::testing
