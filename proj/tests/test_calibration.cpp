// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include <gtest/gtest.h>

#include <random>

#include "problem.hpp"
#include "raycal/calibration.hpp"
#include "raycal/json_util.hpp"
#include "raycal/kernels.hpp"

using namespace raycal;
using namespace raycal::testing;
using ad::Tape;
using ad::Var;
using cd = std::complex<double>;

namespace {

std::vector<cd> random_cir(std::mt19937_64& rng, std::size_t n)
{
    std::normal_distribution<double> g;
    std::vector<cd> h(n);
    for (auto& c : h)
        c = {g(rng), g(rng)};
    return h;
}

// Golden-section search for argmin_a sum (a P - Phat)^2 after a coarse grid
// scan, in quad precision so the flat minimum resolves below 1e-9.
double brute_force_scale(std::span<const double> p, std::span<const double> q)
{
    using Q = __float128;
    auto f = [&](Q a) {
        Q s = 0;
        for (std::size_t i = 0; i < p.size(); ++i)
            s += (a * p[i] - q[i]) * (a * p[i] - q[i]);
        return s;
    };
    double best = 0;
    Q best_f = f(0);
    for (double a = 0; a <= 100; a += 0.01)
        if (f(a) < best_f) {
            best_f = f(a);
            best = a;
        }
    Q lo = best - 0.01, hi = best + 0.01;
    const Q r = 0.6180339887498948482045868343656381Q;
    for (int i = 0; i < 200; ++i) {
        const Q a = hi - r * (hi - lo), b = lo + r * (hi - lo);
        if (f(a) < f(b))
            hi = b;
        else
            lo = a;
    }
    return static_cast<double>(0.5Q * (lo + hi));
}

} // namespace

TEST(ChannelGain, Basics)
{
    const cd h[] = {{1, 0}, {0, 1}};
    EXPECT_EQ(channel_gain(h), 2.0);
    const cd z[] = {{0, 0}, {0, 0}};
    EXPECT_EQ(channel_gain(z), 0.0);
    std::mt19937_64 rng(1);
    auto r = random_cir(rng, 16);
    const cd c{0.3, -1.7};
    auto s = r;
    for (auto& v : s)
        v *= c;
    EXPECT_NEAR(channel_gain(s), std::norm(c) * channel_gain(r), 1e-12 * channel_gain(s));
}

TEST(DelaySpread, SingleTapIsZero)
{
    std::vector<cd> h(64);
    h[40] = {0.5, 0.2};
    EXPECT_EQ(rms_delay_spread(h, 50e6), 0.0);
}

TEST(DelaySpread, TwoEqualTapsTwoApart)
{
    std::vector<cd> h(64);
    h[32] = 1.0; // l = 0
    h[34] = 1.0; // l = 2
    EXPECT_NEAR(rms_delay_spread(h, 50e6), 20e-9, 1e-21);
}

TEST(DelaySpread, ScaleInvariant)
{
    std::mt19937_64 rng(2);
    const auto h = random_cir(rng, 32);
    auto s = h;
    for (auto& v : s)
        v *= cd(-2.5, 0.7);
    EXPECT_NEAR(rms_delay_spread(s, 5e7), rms_delay_spread(h, 5e7), 1e-20);
}

TEST(DelaySpread, ZeroPowerIsFlagged)
{
    const std::vector<cd> h(8);
    bool flag = false;
    EXPECT_EQ(rms_delay_spread(h, 1e6, &flag), 0.0);
    EXPECT_TRUE(flag);
}

TEST(Smape, Values)
{
    EXPECT_EQ(smape(2.0, 2.0), 0.0);
    EXPECT_EQ(smape(3.0, 0.0), 1.0);
    EXPECT_EQ(smape(1.0, 3.0), 0.5);
    EXPECT_EQ(smape(0.0, 0.0), 0.0);
}

TEST(ExampleLoss, IdentityAndDoubledPrediction)
{
    std::mt19937_64 rng(3);
    const auto h = random_cir(rng, 32);
    std::vector<Complex<double>> same, twice;
    for (const auto& c : h) {
        same.push_back(Complex<double>(c));
        twice.push_back(Complex<double>(2.0 * c));
    }
    const auto l0 = example_loss<double>(h, same, 5e7);
    EXPECT_EQ(l0.total, 0.0);
    const auto l2 = example_loss<double>(h, twice, 5e7);
    EXPECT_NEAR(l2.delay, 0.0, 1e-12);
    EXPECT_NEAR(l2.power, 0.6, 1e-12);
    EXPECT_NEAR(l2.total, 0.6, 1e-12);
}

TEST(ExampleLoss, BoundsOnRandomPairs)
{
    std::mt19937_64 rng(4);
    for (int i = 0; i < 200; ++i) {
        const auto h = random_cir(rng, 16), g = random_cir(rng, 16);
        std::vector<Complex<double>> p;
        for (const auto& c : g)
            p.push_back(Complex<double>(c));
        const auto l = example_loss<double>(h, p, 1e7);
        EXPECT_GE(l.delay, 0.0);
        EXPECT_LE(l.delay, 1.0);
        EXPECT_GE(l.power, 0.0);
        EXPECT_LE(l.power, 1.0);
    }
}

TEST(ExampleLoss, GradientMatchesFiniteDifference)
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const auto h = random_cir(rng, 16), g = random_cir(rng, 16);
        std::vector<double> x;
        for (const auto& c : g) {
            x.push_back(c.real());
            x.push_back(c.imag());
        }
        const auto r = ad::finite_diff_check(
            [&](Tape&, std::span<const Var> v) {
                std::vector<Complex<Var>> p;
                for (std::size_t i = 0; i < v.size(); i += 2)
                    p.push_back({v[i], v[i + 1]});
                return example_loss<Var>(h, p, 1e7).total;
            },
            x, 1e-6);
        EXPECT_LE(r.max_relative_error, 1e-4);
    }
}

TEST(ScaleEstimate, ClosedFormCases)
{
    const double p[] = {2.0}, q[] = {4.0};
    EXPECT_EQ(estimate_scale_batch(p, q), 2.0);
    const double pp[] = {1.0, 0.5, 3.0}, qq[] = {1.7, 0.85, 5.1};
    EXPECT_NEAR(estimate_scale_batch(pp, qq), 1.7, 1e-15);
    const double zero[] = {0.0, 0.0, 0.0};
    EXPECT_THROW(estimate_scale_batch(zero, pp), InputError);
}

TEST(ScaleEstimate, MatchesBruteForceMinimizer)
{
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    for (int i = 0; i < 20; ++i) {
        std::vector<double> p(8), q(8);
        for (std::size_t k = 0; k < 8; ++k) {
            p[k] = u(rng);
            q[k] = u(rng) * 3;
        }
        EXPECT_NEAR(estimate_scale_batch(p, q), brute_force_scale(p, q), 1e-9);
    }
}

TEST(ScaleUpdate, InitializationAndSmoothing)
{
    ScalingState s = update_scale({}, 2.0, 0.9);
    EXPECT_EQ(s.alpha, 2.0);
    s = update_scale(s, 4.0, 0.9);
    EXPECT_NEAR(s.alpha, 2.2, 1e-15);
    ScalingState t;
    for (double e : {3.0, 7.0, 1.5}) {
        t = update_scale(t, e, 0.0);
        EXPECT_EQ(t.alpha, e);
    }
}

TEST(ScaleUpdate, FixedPointConvergesWithRatioDecay)
{
    const double decay = 0.8, target = 3.0;
    ScalingState s = update_scale({}, 1.0, decay);
    double err = std::abs(s.alpha - target);
    for (int i = 0; i < 100; ++i) {
        s = update_scale(s, target, decay);
        const double next = std::abs(s.alpha - target);
        if (err > 1e-12)
            EXPECT_NEAR(next / err, decay, 1e-6);
        err = next;
    }
}

TEST(ScaleUpdate, StaysWithinEstimateRange)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.5, 4.0);
    ScalingState s;
    double lo = 1e9, hi = 0;
    for (int i = 0; i < 200; ++i) {
        const double e = u(rng);
        lo = std::min(lo, e);
        hi = std::max(hi, e);
        s = update_scale(s, e, 0.9);
        EXPECT_GE(s.alpha, lo - 1e-12);
        EXPECT_LE(s.alpha, hi + 1e-12);
    }
}

TEST(Alignment, FirstSignificantTapMovesToZeroDelay)
{
    std::vector<cd> h(16);
    h[3] = 0.001; // below 1% of the peak
    h[10] = 0.5;
    h[12] = 1.0;
    const auto a = align_cir(h);
    EXPECT_EQ(a[8], cd(0.5));  // l = 0 sits at centered index N/2
    EXPECT_EQ(a[10], cd(1.0));
}

TEST(AdamOptimizer, ZeroLearningRateLeavesParameters)
{
    Adam opt({0.0}, 3);
    std::vector<double> x{1, 2, 3};
    const double g[] = {0.5, -1, 2};
    opt.step(x, g);
    EXPECT_EQ(x, (std::vector<double>{1, 2, 3}));
}

TEST(AdamOptimizer, ConvexQuadraticDecreasesMonotonically)
{
    Adam opt({0.05}, 4);
    std::vector<double> x{3, -2, 1, 4};
    const double c[] = {1, 2, 0.5, 3};
    auto loss = [&] {
        double s = 0;
        for (std::size_t i = 0; i < 4; ++i)
            s += c[i] * x[i] * x[i];
        return s;
    };
    double prev = loss();
    for (int it = 0; it < 400; ++it) {
        std::vector<double> g(4);
        for (std::size_t i = 0; i < 4; ++i)
            g[i] = 2 * c[i] * x[i];
        opt.step(x, g);
        const double now = loss();
        if (it >= 50 && prev > 1e-3)
            EXPECT_LE(now, prev + 1e-12) << "iteration " << it;
        prev = now;
    }
    EXPECT_LT(prev, 1e-2);
}

TEST(TrainingConfig, ValidationAndJson)
{
    TrainingConfig c;
    c.batch = 0;
    EXPECT_THROW(c.validate(), InputError);
    c = {};
    c.ema_decay = 1.0;
    EXPECT_THROW(c.validate(), InputError);
    c = {};
    c.lr = -0.1;
    EXPECT_THROW(c.validate(), InputError);
    c = {};
    c.batch = 7;
    c.lr = 0.003;
    const auto back = training_config_from_json(training_config_to_json(c), "test");
    EXPECT_EQ(back.batch, 7u);
    EXPECT_EQ(back.lr, 0.003);
}

TEST(LogCsv, RowsMatchHeaderColumns)
{
    const auto count = [](const std::string& s) { return std::count(s.begin(), s.end(), ','); };
    LogRow r;
    r.iteration = 3;
    r.loss = 0.5;
    EXPECT_EQ(count(log_csv_header()), count(log_csv_row(r)));
    r.validation = 0.25;
    EXPECT_EQ(count(log_csv_header()), count(log_csv_row(r)));
}

class TrainingLoop : public ::testing::Test {
  protected:
    static void SetUpTestSuite() { problem_ = make_small_problem(12).release(); }
    static void TearDownTestSuite() { delete problem_; }
    static SmallProblem* problem_;

    std::span<const Example> train_set() const { return std::span<const Example>(problem_->examples).first(9); }
    std::span<const Example> validation() const { return std::span<const Example>(problem_->examples).subspan(9); }
    const Waveform& wf() const { return problem_->data.dataset.manifest.waveform; }
    ModelConfig model_config() const
    {
        ModelConfig mc;
        mc.embedding_dim = 8;
        return mc;
    }
};

SmallProblem* TrainingLoop::problem_ = nullptr;

TEST_F(TrainingLoop, GroundTruthGivesNearZeroLoss)
{
    const Scene truth = ground_truth_scene(problem_->scene, problem_->synth);
    const ModelConfig mc;
    const Model m(truth, mc, 0);
    EXPECT_LE(mean_loss(m, problem_->examples, 1.0, wf()), 1e-9);
}

TEST_F(TrainingLoop, LossDecreases)
{
    Model m(problem_->scene, model_config(), 3);
    TrainingConfig tc;
    tc.batch = 4;
    tc.iterations = 120;
    tc.eval_every = 40;
    const double before = mean_loss(m, train_set(), 1.0, wf());
    const TrainResult r = train(m, train_set(), validation(), tc, wf());
    EXPECT_EQ(r.history.size(), r.iterations);
    EXPECT_LT(r.train_loss, 0.5 * before);
    EXPECT_GE(r.validation_loss, 0.0);
}

TEST_F(TrainingLoop, ZeroLearningRateKeepsParametersAndLoss)
{
    Model m(problem_->scene, model_config(), 3);
    const std::vector<double> init(m.parameters().values().begin(), m.parameters().values().end());
    TrainingConfig tc;
    tc.batch = 9;
    tc.iterations = 5;
    tc.lr = 0.0;
    const TrainResult r = train(m, train_set(), {}, tc, wf());
    for (std::size_t i = 0; i < init.size(); ++i)
        EXPECT_EQ(m.parameters().values()[i], init[i]);
    for (const auto& row : r.history)
        EXPECT_NEAR(row.loss, r.history.front().loss, 1e-14);
}

TEST_F(TrainingLoop, SameSeedSameHistory)
{
    auto run = [&] {
        Model m(problem_->scene, model_config(), 11);
        TrainingConfig tc;
        tc.batch = 3;
        tc.iterations = 30;
        tc.seed = 5;
        const TrainResult r = train(m, train_set(), validation(), tc, wf());
        std::vector<double> losses;
        for (const auto& row : r.history)
            losses.push_back(row.loss);
        return std::make_pair(losses, checkpoint_to_json(m, r.optimizer, {11, r.iterations, r.alpha}));
    };
    const auto a = run(), b = run();
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
}

TEST_F(TrainingLoop, ScaleEstimateRecoversMeasurementFactor)
{
    std::vector<Example> scaled(problem_->examples.begin(), problem_->examples.end());
    for (auto& e : scaled)
        for (auto& c : e.measured)
            c *= std::sqrt(1.0 / 4.0); // measured power = truth / 4
    const Scene truth = ground_truth_scene(problem_->scene, problem_->synth);
    const ModelConfig mc;
    Model m(truth, mc, 0);
    TrainingConfig tc;
    tc.synthetic = false;
    tc.batch = 4;
    tc.iterations = 40;
    tc.ema_decay = 0.5;
    const TrainResult r = train(m, scaled, {}, tc, wf());
    EXPECT_NEAR(r.alpha, 4.0, 1e-6);
    EXPECT_LE(r.train_loss, 1e-9);
}

TEST_F(TrainingLoop, EvaluatePerfectAndOffsetPredictions)
{
    const Scene truth = ground_truth_scene(problem_->scene, problem_->synth);
    const ModelConfig mc;
    const Model m(truth, mc, 0);
    const MetricsReport perfect = evaluate(m, problem_->examples, 1.0, wf());
    EXPECT_EQ(perfect.positions.size(), problem_->examples.size());
    EXPECT_NEAR(perfect.ale.mean, 0.0, 1e-9);
    EXPECT_NEAR(perfect.rae.mean, 0.0, 1e-9);
    EXPECT_EQ(perfect.ale_cdf.size(), perfect.positions.size());

    // Measurements 3 dB below the predictions.
    std::vector<Example> low(problem_->examples.begin(), problem_->examples.end());
    const double f = std::pow(10.0, -3.0 / 20.0);
    for (auto& e : low)
        for (auto& c : e.measured)
            c *= f;
    const MetricsReport high = evaluate(m, low, 1.0, wf());
    EXPECT_NEAR(high.ale.mean, 3.0, 1e-9);
    EXPECT_NEAR(high.ale.std, 0.0, 1e-9);
    EXPECT_NEAR(high.rae.mean, 0.0, 1e-9);
    const auto j = json::parse(metrics_to_json(high));
    EXPECT_EQ(j["cdf"]["ale_db"].size(), problem_->examples.size());
    EXPECT_EQ(j["positions"].size(), problem_->examples.size());
}

TEST(Summary, Statistics)
{
    const double v[] = {1, 2, 3, 4};
    const Summary s = summarize(v);
    EXPECT_EQ(s.mean, 2.5);
    EXPECT_EQ(s.median, 2.5);
    EXPECT_EQ(s.max, 4.0);
    EXPECT_NEAR(s.std, std::sqrt(1.25), 1e-15);
}
