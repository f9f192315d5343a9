// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------
//
// Hot loops with an OpenMP implementation and a serial reference. Both
// produce bit-identical results: per-item work is independent and every
// reduction runs in item order after the parallel region.

#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "raycal/calibration.hpp"

namespace raycal {

struct BatchEvaluation {
    double loss = 0.0; // batch means
    double delay = 0.0;
    double power = 0.0;
    double alpha = 1.0;
    std::vector<double> gradient; // d(mean loss)/d(raw parameters)
    std::vector<double> measured_power;
    std::vector<double> predicted_power;
};

// Receives per-example measured and predicted powers after the forward
// pass and returns the scale applied to the measured powers.
using ScaleFn = std::function<double(std::span<const double> measured, std::span<const double> predicted)>;

struct BatchInput {
    std::span<const Example* const> examples;
    // Per-example diffuse phases, empty for all zero.
    std::span<const std::vector<std::array<double, 2>>> chi;
    ScaleFn scale; // null: alpha = 1
};

BatchEvaluation batch_gradient_serial(const Model& model, const BatchInput& in, const Waveform& wf);
BatchEvaluation batch_gradient_parallel(const Model& model, const BatchInput& in, const Waveform& wf);

// Per-example loss terms with plain doubles.
std::vector<LossTerms<double>> batch_loss_serial(const Model& model, std::span<const Example> examples, double alpha,
                                                 const Waveform& wf);
std::vector<LossTerms<double>> batch_loss_parallel(const Model& model, std::span<const Example> examples,
                                                   double alpha, const Waveform& wf);

// Predicted CIRs (centered order) for every example.
std::vector<std::vector<std::complex<double>>> predict_all(const Model& model, std::span<const Example> examples,
                                                           const Waveform& wf);

// Paths for every pair (tx[i], rx[i]). Diffuse surface samples are shared.
std::vector<PathSet> trace_positions_serial(const Scene& scene, std::span<const Vec3> tx, std::span<const Vec3> rx,
                                            const TraceConfig& config);
std::vector<PathSet> trace_positions_parallel(const Scene& scene, std::span<const Vec3> tx,
                                              std::span<const Vec3> rx, const TraceConfig& config);

// Sets the OpenMP thread count; 0 keeps the runtime default.
void set_thread_count(int threads);

} // namespace raycal
