// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include <benchmark/benchmark.h>

#include "raycal/kernels.hpp"
#include "raycal/scenes.hpp"
#include "raycal/synth.hpp"

namespace {

using namespace raycal;

struct Fixture {
    Scene scene;
    SynthConfig synth;
    GeneratedData data;
    std::vector<Example> examples;
    std::vector<const Example*> batch;
    std::unique_ptr<Model> model;

    Fixture()
    {
        MaterialSpec base;
        base.model = MaterialModel::Embedding;
        scene = make_corridor({}, base);
        synth = SynthConfig::corridor_defaults();
        synth.positions = 32;
        synth.trace.ray_count = 4000;
        synth.trace.diffuse_samples = 64;
        data = generate(scene, synth);
        for (std::size_t i = 0; i < data.dataset.records.size(); ++i)
            if (!data.dataset.records[i].no_paths)
                examples.push_back(make_example(data.dataset.records[i], data.paths.sets[i], synth.waveform));
        for (const auto& e : examples)
            batch.push_back(&e);
        model = std::make_unique<Model>(scene, ModelConfig{}, 3);
    }
};

Fixture& fixture()
{
    static Fixture f;
    return f;
}

template <bool Parallel>
void BM_BatchGradient(benchmark::State& state)
{
    Fixture& f = fixture();
    BatchInput in;
    in.examples = f.batch;
    for (auto _ : state) {
        auto r = Parallel ? batch_gradient_parallel(*f.model, in, f.synth.waveform)
                          : batch_gradient_serial(*f.model, in, f.synth.waveform);
        benchmark::DoNotOptimize(r.loss);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(f.batch.size()));
}

template <bool Parallel>
void BM_Trace(benchmark::State& state)
{
    Fixture& f = fixture();
    std::vector<Vec3> tx(f.data.paths.tx.begin(), f.data.paths.tx.begin() + 8);
    std::vector<Vec3> rx(f.data.paths.rx.begin(), f.data.paths.rx.begin() + 8);
    for (auto _ : state) {
        auto sets = Parallel ? trace_positions_parallel(f.scene, tx, rx, f.synth.trace)
                             : trace_positions_serial(f.scene, tx, rx, f.synth.trace);
        benchmark::DoNotOptimize(sets.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(tx.size()));
}

} // namespace

BENCHMARK(BM_BatchGradient<false>)->Name("batch_gradient/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradient<true>)->Name("batch_gradient/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Trace<false>)->Name("trace/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Trace<true>)->Name("trace/parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
