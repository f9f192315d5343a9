// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "raycal/calibration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>

#include "raycal/errors.hpp"
#include "raycal/kernels.hpp"

namespace raycal {

double channel_gain(std::span<const std::complex<double>> h)
{
    double p = 0.0;
    for (const auto& c : h)
        p += std::norm(c);
    return p;
}

double rms_delay_spread(std::span<const std::complex<double>> h, double bandwidth, bool* zero_power)
{
    std::vector<Complex<double>> c;
    c.reserve(h.size());
    for (const auto& z : h)
        c.push_back({z.real(), z.imag()});
    return rms_delay_spread<double>(c, bandwidth, zero_power);
}

double estimate_scale_batch(std::span<const double> measured, std::span<const double> predicted)
{
    if (measured.size() != predicted.size() || measured.empty())
        throw UsageError("estimate_scale_batch: batch sizes differ or are empty");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < measured.size(); ++i) {
        num += measured[i] * predicted[i];
        den += measured[i] * measured[i];
    }
    if (!(den > 0.0))
        throw InputError("cannot estimate the measurement scale: every measured power in the batch is zero");
    return num / den;
}

ScalingState update_scale(const ScalingState& s, double estimate, double decay)
{
    if (!(estimate > 0.0))
        throw NumericalError("scale estimate must be positive");
    if (!(decay >= 0.0 && decay < 1.0))
        throw UsageError("EMA decay must lie in [0, 1)");
    ScalingState next;
    next.iteration = s.iteration + 1;
    const double previous = s.iteration == 0 ? estimate : s.alpha;
    next.alpha = decay * previous + (1.0 - decay) * estimate;
    return next;
}

std::vector<std::complex<double>> align_cir(std::span<const std::complex<double>> h, double ratio)
{
    const std::size_t n = h.size();
    std::vector<std::complex<double>> out(h.begin(), h.end());
    double peak = 0.0;
    for (const auto& c : h)
        peak = std::max(peak, std::abs(c));
    if (peak == 0.0)
        return out;
    std::size_t first = 0;
    while (std::abs(h[first]) <= peak * ratio)
        ++first;
    // Centered order: delay index 0 sits at position n/2.
    const std::size_t target = n / 2;
    for (std::size_t k = 0; k < n; ++k)
        out[(k + target + n - first) % n] = h[k];
    return out;
}

// ---- Adam ---------------------------------------------------------------------------

Adam::Adam(AdamConfig config, std::size_t n) : config_(config)
{
    state_.m.assign(n, 0.0);
    state_.v.assign(n, 0.0);
}

Adam::Adam(AdamConfig config, OptimizerState state) : config_(config), state_(std::move(state)) {}

void Adam::step(std::span<double> x, std::span<const double> grad, double lr_scale)
{
    if (x.size() != grad.size() || x.size() != state_.m.size())
        throw UsageError("Adam: size mismatch");
    ++state_.step;
    const double t = static_cast<double>(state_.step);
    const double c1 = 1.0 - std::pow(config_.beta1, t);
    const double c2 = 1.0 - std::pow(config_.beta2, t);
    const double lr = config_.lr * lr_scale;
    for (std::size_t i = 0; i < x.size(); ++i) {
        state_.m[i] = config_.beta1 * state_.m[i] + (1.0 - config_.beta1) * grad[i];
        state_.v[i] = config_.beta2 * state_.v[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
        const double mh = state_.m[i] / c1;
        const double vh = state_.v[i] / c2;
        x[i] -= lr * mh / (std::sqrt(vh) + config_.eps);
    }
}

// ---- configuration -------------------------------------------------------------------

void TrainingConfig::validate() const
{
    if (batch < 1)
        throw InputError("training: batch must be >= 1");
    if (!(lr >= 0.0))
        throw InputError("training: learning rate must be >= 0");
    if (!(ema_decay >= 0.0 && ema_decay < 1.0))
        throw InputError("training: ema_decay must lie in [0, 1)");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && eps > 0.0))
        throw InputError("training: invalid optimizer hyperparameters");
    if (eval_every < 1)
        throw InputError("training: eval_every must be >= 1");
    if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0))
        throw InputError("training: final_lr_fraction must lie in (0, 1]");
}

json training_config_to_json(const TrainingConfig& c)
{
    return {{"batch", c.batch},           {"lr", c.lr},
            {"ema_decay", c.ema_decay},   {"iterations", c.iterations},
            {"seed", c.seed},             {"beta1", c.beta1},
            {"beta2", c.beta2},           {"eps", c.eps},
            {"synthetic", c.synthetic},   {"random_phases", c.random_phases},
            {"eval_every", c.eval_every}, {"patience", c.patience},
            {"final_lr_fraction", c.final_lr_fraction}};
}

TrainingConfig training_config_from_json(const json& j, const std::string& context)
{
    StrictReader r(j, context);
    TrainingConfig c;
    c.batch = r.get_or("batch", c.batch);
    c.lr = r.get_or("lr", c.lr);
    c.ema_decay = r.get_or("ema_decay", c.ema_decay);
    c.iterations = r.get_or("iterations", c.iterations);
    c.seed = r.get_or("seed", c.seed);
    c.beta1 = r.get_or("beta1", c.beta1);
    c.beta2 = r.get_or("beta2", c.beta2);
    c.eps = r.get_or("eps", c.eps);
    c.synthetic = r.get_or("synthetic", c.synthetic);
    c.random_phases = r.get_or("random_phases", c.random_phases);
    c.eval_every = r.get_or("eval_every", c.eval_every);
    c.patience = r.get_or("patience", c.patience);
    c.final_lr_fraction = r.get_or("final_lr_fraction", c.final_lr_fraction);
    r.finish();
    c.validate();
    return c;
}

Example make_example(const DatasetRecord& record, const PathSet& paths, const Waveform& wf)
{
    if (record.cir.size() != static_cast<std::size_t>(wf.subcarriers))
        throw InputError("record " + std::to_string(record.id) + ": CIR length does not match the waveform");
    Example ex;
    ex.id = record.id;
    ex.paths = &paths;
    ex.kernel = tap_kernel(path_delays(paths), wf);
    ex.measured = record.cir;
    ex.rx = record.rx;
    ex.tx = record.tx;
    return ex;
}

std::string log_csv_header() { return "iteration,loss,delay_term,power_term,alpha,validation_loss,wall_clock_s\n"; }

std::string log_csv_row(const LogRow& row)
{
    char buf[320];
    std::snprintf(buf, sizeof buf, "%llu,%.10g,%.10g,%.10g,%.10g,%s,%.3f\n",
                  static_cast<unsigned long long>(row.iteration), row.loss, row.delay, row.power, row.alpha,
                  row.validation < 0.0 ? "" : format_double(row.validation).c_str(), row.seconds);
    return buf;
}

// ---- training --------------------------------------------------------------------------

double mean_loss(const Model& model, std::span<const Example> examples, double alpha, const Waveform& wf)
{
    if (examples.empty())
        return 0.0;
    const auto terms = batch_loss_parallel(model, examples, alpha, wf);
    double sum = 0.0;
    for (const auto& t : terms)
        sum += t.total;
    return sum / static_cast<double>(terms.size());
}

TrainResult train(Model& model, std::span<const Example> train_set, std::span<const Example> validation,
                  const TrainingConfig& config, const Waveform& wf, const ProgressFn& progress,
                  const OptimizerState* resume)
{
    config.validate();
    if (train_set.empty())
        throw InputError("training set is empty");
    const auto start = std::chrono::steady_clock::now();
    const AdamConfig adam_cfg{config.lr, config.beta1, config.beta2, config.eps};
    Adam adam = resume ? Adam(adam_cfg, *resume) : Adam(adam_cfg, model.parameters().size());

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(train_set.size());
    std::size_t cursor = order.size();
    auto reshuffle = [&] {
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = i;
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = std::min(i - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i)));
            std::swap(order[i - 1], order[j]);
        }
        cursor = 0;
    };

    ScalingState scale;
    TrainResult result;
    result.alpha = 1.0;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> best_params(model.parameters().values().begin(), model.parameters().values().end());
    std::size_t since_best = 0;
    const double decay_rate =
        config.iterations > 0 ? std::log(config.final_lr_fraction) / static_cast<double>(config.iterations) : 0.0;

    std::vector<const Example*> batch;
    std::vector<std::vector<std::array<double, 2>>> chi;
    for (std::uint64_t it = 0; it < config.iterations; ++it) {
        batch.clear();
        while (batch.size() < std::min(config.batch, train_set.size())) {
            if (cursor >= order.size())
                reshuffle();
            batch.push_back(&train_set[order[cursor++]]);
            if (cursor >= order.size())
                break; // epoch boundary closes the batch
        }
        chi.clear();
        if (config.random_phases) {
            for (const Example* ex : batch) {
                std::vector<std::array<double, 2>> c(ex->paths->paths.size());
                for (auto& p : c)
                    p = {2.0 * kPi * uniform01(rng), 2.0 * kPi * uniform01(rng)};
                chi.push_back(std::move(c));
            }
        }

        BatchInput in;
        in.examples = batch;
        in.chi = chi;
        if (!config.synthetic) {
            in.scale = [&](std::span<const double> meas, std::span<const double> pred) {
                scale = update_scale(scale, estimate_scale_batch(meas, pred), config.ema_decay);
                return scale.alpha;
            };
        }
        const BatchEvaluation ev = batch_gradient_parallel(model, in, wf);
        result.alpha = ev.alpha;
        if (config.lr > 0.0)
            adam.step(model.parameters().values(), ev.gradient, std::exp(decay_rate * static_cast<double>(it)));

        LogRow row;
        row.iteration = it + 1;
        row.loss = ev.loss;
        row.delay = ev.delay;
        row.power = ev.power;
        row.alpha = ev.alpha;
        const bool eval_now = !validation.empty() && ((it + 1) % config.eval_every == 0 || it + 1 == config.iterations);
        if (eval_now) {
            row.validation = mean_loss(model, validation, result.alpha, wf);
            if (row.validation < best_val) {
                best_val = row.validation;
                result.best_iteration = it + 1;
                std::copy(model.parameters().values().begin(), model.parameters().values().end(),
                          best_params.begin());
                since_best = 0;
            } else {
                ++since_best;
            }
        }
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.history.push_back(row);
        if (progress)
            progress(row);
        result.iterations = it + 1;
        if (eval_now && since_best >= config.patience) {
            result.stopped_early = true;
            break;
        }
    }

    if (!validation.empty() && result.iterations > 0 && std::isfinite(best_val))
        std::copy(best_params.begin(), best_params.end(), model.parameters().values().begin());
    result.optimizer = adam.state();
    result.train_loss = mean_loss(model, train_set, result.alpha, wf);
    result.validation_loss = validation.empty() ? -1.0 : mean_loss(model, validation, result.alpha, wf);
    return result;
}

// ---- evaluation --------------------------------------------------------------------------

Summary summarize(std::span<const double> values)
{
    Summary s;
    if (values.empty())
        return s;
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values)
        sum += v;
    s.mean = sum / n;
    double sq = 0.0;
    for (double v : values)
        sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / n);
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    s.median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    s.max = sorted.back();
    return s;
}

MetricsReport evaluate(const Model& model, std::span<const Example> examples, double alpha, const Waveform& wf)
{
    const auto predicted = predict_all(model, examples, wf);
    struct Acc {
        PositionMetrics m;
        double p_meas = 0.0, p_pred = 0.0, t_meas = 0.0, t_pred = 0.0;
        std::size_t count = 0;
    };
    std::vector<Acc> groups;
    std::map<std::array<double, 3>, std::size_t> index;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const Example& ex = examples[i];
        const std::array<double, 3> key{ex.tx.x, ex.tx.y, ex.tx.z};
        auto [pos, inserted] = index.try_emplace(key, groups.size());
        if (inserted) {
            groups.emplace_back();
            groups.back().m.tx = ex.tx;
        }
        Acc& a = groups[pos->second];
        a.m.ids.push_back(ex.id);
        a.p_meas += alpha * channel_gain(ex.measured);
        a.p_pred += channel_gain(predicted[i]);
        a.t_meas += rms_delay_spread(ex.measured, wf.bandwidth());
        a.t_pred += rms_delay_spread(predicted[i], wf.bandwidth());
        ++a.count;
    }
    MetricsReport report;
    report.alpha = alpha;
    auto to_db = [](double p) { return p > 0.0 ? 10.0 * std::log10(p) : -300.0; };
    for (Acc& a : groups) {
        const double inv = 1.0 / static_cast<double>(a.count);
        PositionMetrics m = a.m;
        m.measured_db = to_db(a.p_meas * inv);
        m.predicted_db = to_db(a.p_pred * inv);
        m.measured_rms = a.t_meas * inv;
        m.predicted_rms = a.t_pred * inv;
        m.ale = std::abs(m.measured_db - m.predicted_db);
        m.rae = m.measured_rms > 0.0 ? std::abs(m.measured_rms - m.predicted_rms) / m.measured_rms
                                     : (m.predicted_rms > 0.0 ? 1.0 : 0.0);
        report.ale_cdf.push_back(m.ale);
        report.rae_cdf.push_back(m.rae);
        report.positions.push_back(std::move(m));
    }
    report.ale = summarize(report.ale_cdf);
    report.rae = summarize(report.rae_cdf);
    std::sort(report.ale_cdf.begin(), report.ale_cdf.end());
    std::sort(report.rae_cdf.begin(), report.rae_cdf.end());
    return report;
}

std::string metrics_to_json(const MetricsReport& r)
{
    auto summary = [](const Summary& s) {
        return json{{"mean", s.mean}, {"std", s.std}, {"median", s.median}, {"max", s.max}};
    };
    json positions = json::array();
    for (const auto& p : r.positions)
        positions.push_back({{"tx", vec3_to_json(p.tx)},
                             {"ids", p.ids},
                             {"measured_db", p.measured_db},
                             {"predicted_db", p.predicted_db},
                             {"measured_rms_delay_s", p.measured_rms},
                             {"predicted_rms_delay_s", p.predicted_rms},
                             {"ale_db", p.ale},
                             {"rae", p.rae}});
    json j;
    j["format"] = "raycal-metrics";
    j["version"] = 1;
    j["alpha"] = r.alpha;
    j["tap_index_convention"] =
        "signed delay index l = k - N/2 for centered tap position k (l = 0 is zero delay, negative l are precursor "
        "taps)";
    j["power_convention"] = "channel gain averaged over the receive antennas of each position, then converted to dB";
    j["summary"] = {{"ale_db", summary(r.ale)}, {"rae", summary(r.rae)}, {"positions", r.positions.size()}};
    j["cdf"] = {{"ale_db", r.ale_cdf}, {"rae", r.rae_cdf}};
    j["positions"] = positions;
    return j.dump(1) + "\n";
}

} // namespace raycal
