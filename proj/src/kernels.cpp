// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "raycal/kernels.hpp"

#include <cmath>
#include <exception>
#include <memory>
#include <mutex>

#include <omp.h>

#include "raycal/errors.hpp"

namespace raycal {

namespace {

// Collects the first exception thrown inside a parallel region (lowest item
// index wins, so the reported error does not depend on scheduling).
class ErrorSlot {
  public:
    void capture(std::size_t index)
    {
        std::lock_guard<std::mutex> lock(mu_);
        if (!error_ || index < index_) {
            error_ = std::current_exception();
            index_ = index;
        }
    }
    void rethrow() const
    {
        if (error_)
            std::rethrow_exception(error_);
    }

  private:
    std::mutex mu_;
    std::exception_ptr error_;
    std::size_t index_ = 0;
};

struct ExampleState {
    std::unique_ptr<ad::Tape> tape;
    std::vector<Complex<ad::Var>> predicted;
    double predicted_power = 0.0;
    double measured_power = 0.0;
    LossTerms<double> terms;
    std::vector<double> gradient;
};

void check_finite(const ad::Tape& tape, const char* stage)
{
    if (auto id = tape.first_nonfinite())
        throw NumericalError(std::string("non-finite value during ") + stage + ": first at " + tape.describe(*id));
}

void forward(const Model& model, const Example& ex, std::span<const std::array<double, 2>> chi, const Waveform& wf,
             ExampleState& st)
{
    st.tape = std::make_unique<ad::Tape>();
    const auto params = model.parameters().bind(*st.tape);
    st.predicted = model.predict_cir<ad::Var>(*ex.paths, ex.kernel, wf, params, chi);
    check_finite(*st.tape, "forward pass");
    st.predicted_power = ad::value_of(channel_gain<ad::Var>(st.predicted));
    st.measured_power = channel_gain(ex.measured);
}

void backward(const Example& ex, double alpha, double inv_batch, const Waveform& wf, ExampleState& st)
{
    const double s = std::sqrt(alpha);
    std::vector<std::complex<double>> measured(ex.measured.size());
    for (std::size_t k = 0; k < measured.size(); ++k)
        measured[k] = ex.measured[k] * s;
    const auto terms = example_loss<ad::Var>(measured, st.predicted, wf.bandwidth());
    st.terms = {terms.delay.value, terms.power.value, terms.total.value};
    check_finite(*st.tape, "loss evaluation");
    st.gradient = st.tape->backward(terms.total * inv_batch);
    for (double g : st.gradient)
        if (!std::isfinite(g))
            throw NumericalError("non-finite gradient for example " + std::to_string(ex.id));
    st.tape.reset();
    st.predicted.clear();
}

std::span<const std::array<double, 2>> chi_for(const BatchInput& in, std::size_t i)
{
    if (in.chi.empty())
        return {};
    return in.chi[i];
}

BatchEvaluation reduce(const Model& model, const std::vector<ExampleState>& states, double alpha)
{
    BatchEvaluation out;
    out.alpha = alpha;
    out.gradient.assign(model.parameters().size(), 0.0);
    const double inv = 1.0 / static_cast<double>(states.size());
    for (const auto& st : states) {
        out.loss += st.terms.total * inv;
        out.delay += st.terms.delay * inv;
        out.power += st.terms.power * inv;
        for (std::size_t k = 0; k < out.gradient.size(); ++k)
            out.gradient[k] += st.gradient[k];
        out.measured_power.push_back(st.measured_power);
        out.predicted_power.push_back(st.predicted_power);
    }
    return out;
}

double batch_scale(const BatchInput& in, const std::vector<ExampleState>& states)
{
    if (!in.scale)
        return 1.0;
    std::vector<double> meas, pred;
    for (const auto& st : states) {
        meas.push_back(st.measured_power);
        pred.push_back(st.predicted_power);
    }
    return in.scale(meas, pred);
}

void check_batch(const BatchInput& in)
{
    if (in.examples.empty())
        throw UsageError("empty batch");
    if (!in.chi.empty() && in.chi.size() != in.examples.size())
        throw UsageError("phase list does not match the batch");
}

LossTerms<double> loss_double(const Model& model, const Example& ex, double alpha, const Waveform& wf)
{
    const auto params = model.parameters().values();
    const auto h = model.predict_cir<double>(*ex.paths, ex.kernel, wf, params);
    const double s = std::sqrt(alpha);
    std::vector<std::complex<double>> measured(ex.measured.size());
    for (std::size_t k = 0; k < measured.size(); ++k)
        measured[k] = ex.measured[k] * s;
    return example_loss<double>(measured, h, wf.bandwidth());
}

std::vector<SurfaceSample> shared_samples(const Scene& scene, const TraceConfig& config)
{
    if (config.diffuse_samples == 0 || scene.empty())
        return {};
    return sample_surface(scene, config.diffuse_samples, config.seed);
}

} // namespace

BatchEvaluation batch_gradient_serial(const Model& model, const BatchInput& in, const Waveform& wf)
{
    check_batch(in);
    const std::size_t n = in.examples.size();
    std::vector<ExampleState> states(n);
    for (std::size_t i = 0; i < n; ++i)
        forward(model, *in.examples[i], chi_for(in, i), wf, states[i]);
    const double alpha = batch_scale(in, states);
    for (std::size_t i = 0; i < n; ++i)
        backward(*in.examples[i], alpha, 1.0 / static_cast<double>(n), wf, states[i]);
    return reduce(model, states, alpha);
}

BatchEvaluation batch_gradient_parallel(const Model& model, const BatchInput& in, const Waveform& wf)
{
    check_batch(in);
    const auto n = static_cast<std::ptrdiff_t>(in.examples.size());
    std::vector<ExampleState> states(in.examples.size());
    ErrorSlot err;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            forward(model, *in.examples[k], chi_for(in, k), wf, states[k]);
        } catch (...) {
            err.capture(k);
        }
    }
    err.rethrow();
    const double alpha = batch_scale(in, states);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            backward(*in.examples[k], alpha, 1.0 / static_cast<double>(n), wf, states[k]);
        } catch (...) {
            err.capture(k);
        }
    }
    err.rethrow();
    return reduce(model, states, alpha);
}

std::vector<LossTerms<double>> batch_loss_serial(const Model& model, std::span<const Example> examples, double alpha,
                                                 const Waveform& wf)
{
    std::vector<LossTerms<double>> out;
    out.reserve(examples.size());
    for (const auto& ex : examples)
        out.push_back(loss_double(model, ex, alpha, wf));
    return out;
}

std::vector<LossTerms<double>> batch_loss_parallel(const Model& model, std::span<const Example> examples,
                                                   double alpha, const Waveform& wf)
{
    std::vector<LossTerms<double>> out(examples.size());
    ErrorSlot err;
    const auto n = static_cast<std::ptrdiff_t>(examples.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            out[k] = loss_double(model, examples[k], alpha, wf);
        } catch (...) {
            err.capture(k);
        }
    }
    err.rethrow();
    return out;
}

std::vector<std::vector<std::complex<double>>> predict_all(const Model& model, std::span<const Example> examples,
                                                           const Waveform& wf)
{
    std::vector<std::vector<std::complex<double>>> out(examples.size());
    ErrorSlot err;
    const auto n = static_cast<std::ptrdiff_t>(examples.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            const auto h = model.predict_cir<double>(*examples[k].paths, examples[k].kernel, wf,
                                                     model.parameters().values());
            out[k] = to_std(h);
        } catch (...) {
            err.capture(k);
        }
    }
    err.rethrow();
    return out;
}

std::vector<PathSet> trace_positions_serial(const Scene& scene, std::span<const Vec3> tx, std::span<const Vec3> rx,
                                            const TraceConfig& config)
{
    if (tx.size() != rx.size())
        throw UsageError("tx and rx lists differ in length");
    const auto samples = shared_samples(scene, config);
    std::vector<PathSet> out;
    out.reserve(tx.size());
    for (std::size_t i = 0; i < tx.size(); ++i)
        out.push_back(trace_all(scene, tx[i], rx[i], config, samples));
    return out;
}

std::vector<PathSet> trace_positions_parallel(const Scene& scene, std::span<const Vec3> tx,
                                              std::span<const Vec3> rx, const TraceConfig& config)
{
    if (tx.size() != rx.size())
        throw UsageError("tx and rx lists differ in length");
    const auto samples = shared_samples(scene, config);
    std::vector<PathSet> out(tx.size());
    ErrorSlot err;
    const auto n = static_cast<std::ptrdiff_t>(tx.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            out[k] = trace_all(scene, tx[k], rx[k], config, samples);
        } catch (...) {
            err.capture(k);
        }
    }
    err.rethrow();
    return out;
}

void set_thread_count(int threads)
{
    if (threads > 0)
        omp_set_num_threads(threads);
}

} // namespace raycal
