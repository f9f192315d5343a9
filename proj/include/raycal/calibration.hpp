// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#pragma once

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "raycal/dataset.hpp"
#include "raycal/model.hpp"

namespace raycal {

// ---- loss primitives ------------------------------------------------------------

// Sum of |h[l]|^2.
template <class T>
T channel_gain(std::span<const Complex<T>> h)
{
    T p(0.0);
    for (const auto& c : h)
        p = p + abs2(c);
    return p;
}

double channel_gain(std::span<const std::complex<double>> h);

// Signed tap index of centered position k: l = k - N/2.
inline double tap_index(std::size_t k, std::size_t n) { return static_cast<double>(k) - static_cast<double>(n / 2); }

// RMS delay spread in seconds of a centered-order CIR. Taps are indexed
// l = -N/2 .. N/2-1, so precursor leakage sits just before the main tap
// rather than at the end of the window. Zero power gives 0 and sets
// *zero_power when provided.
template <class T>
T rms_delay_spread(std::span<const Complex<T>> h, double bandwidth, bool* zero_power = nullptr)
{
    const std::size_t n = h.size();
    std::vector<T> p;
    p.reserve(n);
    T total(0.0);
    for (const auto& c : h) {
        p.push_back(abs2(c));
        total = total + p.back();
    }
    if (ad::value_of(total) <= 0.0) {
        if (zero_power)
            *zero_power = true;
        return T(0.0);
    }
    T m1(0.0);
    for (std::size_t k = 0; k < n; ++k)
        m1 = m1 + p[k] * tap_index(k, n);
    const T mean = m1 / total;
    T m2(0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const T d = tap_index(k, n) - mean;
        m2 = m2 + p[k] * (d * d);
    }
    if (ad::value_of(m2) <= 0.0)
        return T(0.0);
    return ad::safe_sqrt(m2 / total) * (1.0 / bandwidth);
}

double rms_delay_spread(std::span<const std::complex<double>> h, double bandwidth, bool* zero_power = nullptr);

// |x - y| / (x + y), 0 when both are 0.
template <class T>
T smape(double x, const T& y)
{
    const double den = x + ad::value_of(y);
    if (den <= 0.0)
        return T(0.0);
    return ad::abs(y - x) / (y + x);
}

template <class T>
struct LossTerms {
    T delay{0.0};
    T power{0.0};
    T total{0.0};
};

// Delay-spread SMAPE plus power SMAPE. `measured` is already rescaled.
template <class T>
LossTerms<T> example_loss(std::span<const std::complex<double>> measured, std::span<const Complex<T>> predicted,
                          double bandwidth)
{
    if (measured.size() != predicted.size())
        throw UsageError("example_loss: CIR lengths differ");
    LossTerms<T> out;
    const double p_meas = channel_gain(measured);
    const double tau_meas = rms_delay_spread(measured, bandwidth);
    out.delay = smape(tau_meas, rms_delay_spread<T>(predicted, bandwidth));
    out.power = smape(p_meas, channel_gain<T>(predicted));
    out.total = out.delay + out.power;
    return out;
}

// argmin_alpha sum (alpha P_b - Phat_b)^2 = sum P_b Phat_b / sum P_b^2.
// Throws InputError when every measured power is 0.
double estimate_scale_batch(std::span<const double> measured, std::span<const double> predicted);

struct ScalingState {
    double alpha = 1.0;
    std::uint64_t iteration = 0; // number of estimates absorbed
};

// alpha_i = decay alpha_{i-1} + (1 - decay) estimate, alpha_0 = first estimate.
ScalingState update_scale(const ScalingState& s, double estimate, double decay);

// Cyclic shift so the first tap above max|h| * ratio lands on delay index 0.
std::vector<std::complex<double>> align_cir(std::span<const std::complex<double>> h, double ratio = 0.01);

// ---- optimizer --------------------------------------------------------------------

struct AdamConfig {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
  public:
    Adam(AdamConfig config, std::size_t n);
    Adam(AdamConfig config, OptimizerState state);

    // x -= lr_t m_hat / (sqrt(v_hat) + eps); `lr_scale` multiplies lr.
    void step(std::span<double> x, std::span<const double> grad, double lr_scale = 1.0);
    const OptimizerState& state() const { return state_; }

  private:
    AdamConfig config_;
    OptimizerState state_;
};

// ---- training ---------------------------------------------------------------------

struct TrainingConfig {
    std::size_t batch = 32;
    double lr = 0.01;
    double ema_decay = 0.9;
    std::uint64_t iterations = 5000;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    bool synthetic = true;        // alpha fixed at 1
    bool random_phases = false;   // resample diffuse phases every iteration
    std::uint64_t eval_every = 50; // validation cadence, iterations
    std::size_t patience = 20;     // validation evaluations without improvement
    double final_lr_fraction = 1.0; // lr decays exponentially to lr * this at the budget
    int threads = 0;                // 0: OpenMP default

    void validate() const;
};

json training_config_to_json(const TrainingConfig& c);
TrainingConfig training_config_from_json(const json& j, const std::string& context);

// One calibration example: geometry for a position, its tap kernel and the
// measured CIR.
struct Example {
    std::uint64_t id = 0;
    const PathSet* paths = nullptr;
    std::vector<std::complex<double>> kernel; // paths x N
    std::vector<std::complex<double>> measured;
    std::size_t rx = 0;
    Vec3 tx;
};

Example make_example(const DatasetRecord& record, const PathSet& paths, const Waveform& wf);

struct LogRow {
    std::uint64_t iteration = 0;
    double loss = 0.0;
    double delay = 0.0;
    double power = 0.0;
    double alpha = 1.0;
    double seconds = 0.0;
    double validation = -1.0; // < 0 when not evaluated at this iteration
};

std::string log_csv_header();
std::string log_csv_row(const LogRow& row);

struct TrainResult {
    std::vector<LogRow> history;
    double train_loss = 0.0;      // full training set, final parameters
    double validation_loss = -1.0; // < 0 without a validation set
    std::uint64_t iterations = 0;
    std::uint64_t best_iteration = 0;
    bool stopped_early = false;
    double alpha = 1.0;
    OptimizerState optimizer;
};

using ProgressFn = std::function<void(const LogRow&)>;

// Algorithm: epoch-shuffled batches, scale EMA, Adam. When a validation set
// is given, the parameters with the best validation loss are kept.
TrainResult train(Model& model, std::span<const Example> train_set, std::span<const Example> validation,
                  const TrainingConfig& config, const Waveform& wf, const ProgressFn& progress = {},
                  const OptimizerState* resume = nullptr);

// Mean loss over `examples` with the measured CIRs rescaled by sqrt(alpha).
double mean_loss(const Model& model, std::span<const Example> examples, double alpha, const Waveform& wf);

// ---- evaluation ------------------------------------------------------------------

struct PositionMetrics {
    Vec3 tx;
    std::vector<std::uint64_t> ids;
    double measured_db = 0.0;
    double predicted_db = 0.0;
    double measured_rms = 0.0;  // s
    double predicted_rms = 0.0; // s
    double ale = 0.0;           // dB
    double rae = 0.0;
};

struct Summary {
    double mean = 0.0;
    double std = 0.0;
    double median = 0.0;
    double max = 0.0;
};

struct MetricsReport {
    std::vector<PositionMetrics> positions;
    Summary ale;
    Summary rae;
    std::vector<double> ale_cdf; // sorted samples
    std::vector<double> rae_cdf;
    double alpha = 1.0;
};

Summary summarize(std::span<const double> values);

// Groups examples by transmitter position; powers and delay spreads are
// averaged over the receive antennas of a position.
MetricsReport evaluate(const Model& model, std::span<const Example> examples, double alpha, const Waveform& wf);
std::string metrics_to_json(const MetricsReport& report);

} // namespace raycal
