// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "raycal/gradcheck.hpp"

#include <chrono>
#include <cstdio>
#include <random>

#include "raycal/calibration.hpp"
#include "raycal/json_util.hpp"
#include "raycal/model.hpp"
#include "raycal/scenes.hpp"

namespace raycal {

namespace {

using ad::Tape;
using ad::Var;
using Fn = ad::ScalarFunction;

struct Runner {
    std::optional<ad::Op> fault;
    double tolerance;
    GradcheckReport report;

    void run(const std::string& name, const Fn& f, const std::vector<double>& point, double step, double floor,
             const std::function<std::string(std::size_t)>& label = {})
    {
        const auto r = ad::finite_diff_check(f, point, step, fault, floor);
        GradcheckCase c;
        c.name = name;
        c.parameters = point.size();
        c.max_relative_error = r.non_finite ? std::numeric_limits<double>::infinity() : r.max_relative_error;
        if (!r.entries.empty()) {
            const auto& e = r.entries[r.worst_index];
            c.worst_parameter = label ? label(r.worst_index) : "x[" + std::to_string(r.worst_index) + "]";
            c.autodiff = e.autodiff;
            c.finite_difference = e.finite_difference;
        }
        c.passed = c.max_relative_error <= tolerance;
        report.cases.push_back(c);
    }
};

// ---- primitives -----------------------------------------------------------------------

void primitives(Runner& r)
{
    const std::vector<double> x{0.7, -0.4, 1.3};
    auto s = [](std::span<const Var> v, std::size_t a, std::size_t n) { return v.subspan(a, n); };
    const std::vector<std::pair<std::string, Fn>> cases{
        {"add", [](Tape&, std::span<const Var> v) { return (v[0] + v[1]) + v[2]; }},
        {"sub", [](Tape&, std::span<const Var> v) { return (v[0] - v[1]) - v[2]; }},
        {"mul", [](Tape&, std::span<const Var> v) { return (v[0] * v[1]) * v[2]; }},
        {"div", [](Tape&, std::span<const Var> v) { return (v[0] / v[1]) / v[2]; }},
        {"neg", [](Tape&, std::span<const Var> v) { return -v[0]; }},
        {"exp", [](Tape&, std::span<const Var> v) { return ad::exp(v[1]); }},
        {"log", [](Tape&, std::span<const Var> v) { return ad::log(v[2]); }},
        {"sqrt", [](Tape&, std::span<const Var> v) { return ad::sqrt(v[2]); }},
        {"safe_sqrt", [](Tape&, std::span<const Var> v) { return ad::safe_sqrt(v[0]); }},
        {"sin", [](Tape&, std::span<const Var> v) { return ad::sin(v[0]); }},
        {"cos", [](Tape&, std::span<const Var> v) { return ad::cos(v[2]); }},
        {"pow", [](Tape&, std::span<const Var> v) { return ad::pow(v[2], 2.5); }},
        {"sigmoid", [](Tape&, std::span<const Var> v) { return ad::sigmoid(v[1]); }},
        {"abs", [](Tape&, std::span<const Var> v) { return ad::abs(v[1]); }},
        {"relu", [](Tape&, std::span<const Var> v) { return ad::relu(v[0]); }},
        {"abs2", [](Tape&, std::span<const Var> v) { return ad::abs2(v[0], v[1]); }},
        {"dot", [s](Tape&, std::span<const Var> v) {
             const std::vector<double> c{0.3, -1.1};
             return ad::dot(s(v, 0, 2), s(v, 1, 2)) + ad::dot(s(v, 1, 2), std::span<const double>(c));
         }},
        {"affine", [s](Tape& t, std::span<const Var> v) { return t.affine(s(v, 0, 2), s(v, 1, 2), v[2]); }},
    };
    for (const auto& [name, f] : cases)
        r.run("primitive/" + name, f, x, 1e-6, 0.0);
}

// ---- building blocks -------------------------------------------------------------------

void building_blocks(Runner& r)
{
    r.run(
        "field/fresnel",
        [](Tape&, std::span<const Var> v) {
            const auto eta = complex_permittivity<Var>(v[0], v[1], 3.438e9);
            const auto f = fresnel(eta, 0.6);
            return abs2(f.perp) + abs2(f.par) * 0.5 + f.perp.im;
        },
        {4.0, 0.2}, 1e-6, 0.0, [](std::size_t i) { return std::string(i == 0 ? "eps_r" : "sigma"); });

    std::mt19937_64 rng(11);
    const std::size_t dim = 4;
    r.run(
        "material/embedding",
        [dim](Tape&, std::span<const Var> v) {
            const auto m = material_from_embedding<Var>(v, dim);
            return m.eps_r * 0.3 + ad::log(m.sigma) + m.S * m.Kx * 2.0 + m.Kx;
        },
        embedding_init(dim, rng), 1e-6, 1e-6);

    std::vector<double> sg = sg_init_raw(2, 3.0);
    sg[0] = 0.4;
    sg[2] = 0.5;
    r.run(
        "antenna/spherical_gaussian",
        [](Tape&, std::span<const Var> v) {
            return sg_gain<Var>(v, normalized({0.3, -0.2, 0.9})) + sg_gain<Var>(v, normalized({-0.8, 0.1, 0.2})) * 0.5;
        },
        sg, 1e-6, 1e-6);

    for (HgNormalization mode : {HgNormalization::Printed, HgNormalization::AxisElevation}) {
        r.run(
            "pattern/hemispherical_gaussian/" + to_string(mode),
            [mode](Tape&, std::span<const Var> v) {
                const Vec3 n{0, 0, 1};
                const Vec3 ki = normalized({0.5, 0.1, -0.8});
                return hg_pattern<Var>(v, ki, normalized({0.4, 0.3, 0.8}), n, mode) +
                       hg_pattern<Var>(v, ki, normalized({-0.6, 0.0, 0.5}), n, mode);
            },
            {0.2, -0.3, 0.5, std::log(3.0), std::log(12.0)}, 1e-6, 1e-6);
    }

    r.run(
        "pattern/backscatter",
        [](Tape&, std::span<const Var> v) {
            return backscatter_pattern<Var>(normalized({0.5, 0.1, -0.8}), normalized({0.4, 0.3, 0.8}), {0, 0, 1},
                                            {5, 8}, ad::sigmoid(v[0]));
        },
        {0.9}, 1e-6, 0.0, [](std::size_t) { return std::string("lobe_fraction"); });

    MlpShape shape{12, {8, 8}, kMaterialHeads};
    std::mt19937_64 rng2(5);
    auto w = mlp_init(shape, rng2);
    for (std::size_t i = 0; i < w.size(); ++i) // nonzero biases avoid ReLU kinks at 0
        w[i] += 0.05 * std::sin(static_cast<double>(i));
    r.run(
        "network/mlp",
        [shape](Tape&, std::span<const Var> v) {
            const auto enc = positional_encode({0.12, -0.31, 0.27}, 2);
            const auto out = mlp_forward<Var>(shape, v, enc);
            const auto m = material_from_heads<Var>(out);
            return m.eps_r + m.sigma + m.S + m.Kx;
        },
        w, 1e-6, 1e-6);
}

// ---- full pipeline -------------------------------------------------------------------------

// Material values taken directly from the parameter vector.
class DirectSource final : public FieldSource<Var> {
  public:
    explicit DirectSource(std::span<const Var> v) : v_(v) {}
    MaterialValues<Var> material(const Interaction&) override { return {v_[0], v_[1], v_[2], v_[3]}; }
    Var scattering(const Interaction& it, const MaterialValues<Var>&) override
    {
        return backscatter_pattern<Var>(it.k_in, it.k_out, it.normal, {5, 8}, Var(0.8));
    }
    Var tx_gain(const Vec3&) override { return Var(1.0); }
    Var rx_gain(const Vec3&) override { return Var(1.0); }

  private:
    std::span<const Var> v_;
};

std::vector<std::complex<double>> scaled(std::vector<std::complex<double>> h, double s)
{
    for (auto& c : h)
        c *= s;
    return h;
}

void pipelines(Runner& r)
{
    const Waveform wf;
    MaterialSpec ground;
    ground.name = "ground";
    ground.model = MaterialModel::Fixed;
    ground.params = {5.24, 0.121, 0.3, 0.2};
    ground.scattering.kind = ScatteringSpec::Kind::Backscatter;
    ground.scattering.alpha_r = 5;
    ground.scattering.alpha_s = 8;
    ground.scattering.lobe_fraction = 0.8;
    const Scene plane = make_ground_plane(15.0, ground);
    const TraceConfig tc{1, 2000, 24, 3, CandidateMode::Exhaustive};
    const PathSet two_ray = trace_all(plane, {0.0, 0.0, 2.0}, {6.0, 1.0, 1.5}, tc);
    const auto kernel = tap_kernel(path_delays(two_ray), wf);

    // Reference: the same geometry with other material values.
    auto reference = [&](const MaterialParams& m) {
        std::vector<Complex<double>> a;
        class Fixed final : public FieldSource<double> {
          public:
            explicit Fixed(MaterialParams p) : p_(p) {}
            MaterialValues<double> material(const Interaction&) override { return {p_.eps_r, p_.sigma, p_.S, p_.Kx}; }
            double scattering(const Interaction& it, const MaterialValues<double>&) override
            {
                return backscatter_pattern<double>(it.k_in, it.k_out, it.normal, {5, 8}, 0.8);
            }
            double tx_gain(const Vec3&) override { return 1.0; }
            double rx_gain(const Vec3&) override { return 1.0; }

          private:
            MaterialParams p_;
        } src(m);
        for (const auto& p : two_ray.paths)
            a.push_back(path_coefficient<double>(p, src, {}, {}, wf.frequency));
        return to_std(cir_from_kernel<double>(a, kernel, wf.subcarriers));
    };
    const auto measured = scaled(reference({3.0, 0.05, 0.5, 0.4}), 0.8);

    const char* names[] = {"eps_r", "sigma", "S", "Kx"};
    r.run(
        "two_ray/material_values",
        [&](Tape&, std::span<const Var> v) {
            DirectSource src(v);
            std::vector<Complex<Var>> a;
            for (const auto& p : two_ray.paths)
                a.push_back(path_coefficient<Var>(p, src, {}, {}, wf.frequency));
            const auto h = cir_from_kernel<Var>(a, kernel, wf.subcarriers);
            return example_loss<Var>(measured, h, wf.bandwidth()).total;
        },
        {5.24, 0.121, 0.3, 0.2}, 1e-7, 1e-6, [&](std::size_t i) { return std::string(names[i]); });

    auto model_case = [&](const std::string& name, const Model& model, const PathSet& set,
                          const std::vector<std::complex<double>>& meas) {
        const auto k = tap_kernel(path_delays(set), wf);
        r.run(
            name,
            [&, k](Tape&, std::span<const Var> v) {
                const auto h = model.predict_cir<Var>(set, k, wf, v);
                return example_loss<Var>(meas, h, wf.bandwidth()).total;
            },
            std::vector<double>(model.parameters().values().begin(), model.parameters().values().end()), 1e-4, 1e-6,
            [&model](std::size_t i) { return model.parameters().id(i); });
    };

    {
        ModelConfig mc;
        mc.tx.kind = AntennaSpec::Kind::SgMixture;
        mc.tx.trainable = true;
        mc.tx.components = 2;
        mc.tx.init_concentration = 2.0;
        Model model(plane, mc, 3);
        const auto vals = model.parameters().values();
        for (std::size_t i = 0; i < vals.size(); ++i)
            vals[i] += 0.2 * std::cos(1.7 * static_cast<double>(i));
        model_case("two_ray/antenna", model, two_ray, measured);
    }
    {
        Scene neural_plane = plane;
        neural_plane.mutable_materials()[0].model = MaterialModel::Neural;
        ModelConfig mc;
        mc.materials = MaterialModel::Neural;
        mc.encoding_levels = 2;
        mc.hidden = {8, 8};
        Model model(neural_plane, mc, 4);
        const auto vals = model.parameters().values();
        for (std::size_t i = 0; i < vals.size(); ++i)
            vals[i] += 0.05 * std::sin(static_cast<double>(i));
        model_case("two_ray/network", model, two_ray, measured);
    }

    MaterialSpec base;
    base.model = MaterialModel::Embedding;
    base.scattering = ground.scattering;
    const Scene corridor = make_corridor({8.0, 3.0, 2.5, 4.0}, base);
    const TraceConfig ctc{2, 4000, 16, 7, CandidateMode::Sbr};
    const PathSet cset = trace_all(corridor, {6.5, 1.2, 1.4}, {1.0, 1.6, 1.2}, ctc);
    {
        ModelConfig mc;
        mc.embedding_dim = 4;
        Model model(corridor, mc, 9);
        const auto meas = scaled(to_std(model.predict_cir<double>(cset, tap_kernel(path_delays(cset), wf), wf,
                                                                  model.parameters().values())),
                                 1.3);
        const auto vals = model.parameters().values();
        for (std::size_t i = 0; i < vals.size(); ++i)
            vals[i] += 0.1 * std::cos(static_cast<double>(i));
        model_case("corridor/embedding", model, cset, meas);
    }
    {
        Scene patterned = corridor;
        for (auto& m : patterned.mutable_materials()) {
            m.model = MaterialModel::Fixed;
            m.params = {2.73, 0.027, 0.5, 0.4};
            m.scattering.trainable = true;
        }
        ModelConfig mc;
        mc.shared_pattern = true;
        Model model(patterned, mc, 2);
        const auto meas = scaled(to_std(model.predict_cir<double>(cset, tap_kernel(path_delays(cset), wf), wf,
                                                                  model.parameters().values())),
                                 0.7);
        const auto vals = model.parameters().values();
        for (std::size_t i = 0; i < vals.size(); ++i)
            vals[i] += 0.3 * std::sin(1.0 + static_cast<double>(i));
        model_case("corridor/pattern", model, cset, meas);
    }
}

} // namespace

GradcheckReport run_gradcheck(std::optional<ad::Op> fault, double tolerance)
{
    const auto start = std::chrono::steady_clock::now();
    Runner r{fault, tolerance, {}};
    r.report.tolerance = tolerance;
    primitives(r);
    building_blocks(r);
    pipelines(r);
    GradcheckReport rep = std::move(r.report);
    for (const auto& c : rep.cases) {
        if (c.max_relative_error > rep.worst || rep.worst_case.empty()) {
            rep.worst = c.max_relative_error;
            rep.worst_case = c.name;
        }
        rep.passed = rep.passed && c.passed;
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

std::string gradcheck_report_json(const GradcheckReport& rep)
{
    json cases = json::array();
    auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
    for (const auto& c : rep.cases)
        cases.push_back({{"name", c.name},
                         {"parameters", c.parameters},
                         {"max_relative_error", num(c.max_relative_error)},
                         {"worst_parameter", c.worst_parameter},
                         {"autodiff", num(c.autodiff)},
                         {"finite_difference", num(c.finite_difference)},
                         {"passed", c.passed}});
    json j{{"tolerance", rep.tolerance},
           {"passed", rep.passed},
           {"worst_relative_error", num(rep.worst)},
           {"worst_case", rep.worst_case},
           {"cases", cases}};
    return j.dump(1) + "\n";
}

std::string gradcheck_report_text(const GradcheckReport& rep)
{
    std::string out;
    char buf[512];
    for (const auto& c : rep.cases) {
        std::snprintf(buf, sizeof buf, "%-4s %-44s params=%-5zu max_rel_err=%.3e worst=%s\n", c.passed ? "ok" : "FAIL",
                      c.name.c_str(), c.parameters, c.max_relative_error, c.worst_parameter.c_str());
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "worst relative error %.3e (%s), tolerance %.1e: %s\n", rep.worst,
                  rep.worst_case.c_str(), rep.tolerance, rep.passed ? "PASS" : "FAIL");
    out += buf;
    return out;
}

} // namespace raycal
