// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "raycal/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>

#include "raycal/calibration.hpp"
#include "raycal/errors.hpp"
#include "raycal/gradcheck.hpp"
#include "raycal/kernels.hpp"
#include "raycal/svg.hpp"
#include "raycal/synth.hpp"

namespace raycal::cli {

namespace fs = std::filesystem;

namespace {

struct GenerateArgs {
    std::string scene, synth, out, paths_out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> positions;
};

struct TraceArgs {
    std::string scene, out, checkpoint;
    std::vector<double> tx, rx;
    int max_order = 3;
    std::size_t diffuse = 0;
    std::size_t rays = 20000;
    std::uint64_t seed = 0;
    bool exhaustive = false;
    double frequency = Waveform{}.frequency;
};

struct TraceOverrides {
    std::optional<int> max_order;
    std::optional<std::size_t> diffuse;
    std::optional<std::size_t> rays;
    std::optional<std::uint64_t> seed;
};

struct CalibrateArgs {
    std::string scene, data, out = "calibration", model_config, train_config, paths, resume;
    std::optional<std::string> model;
    std::optional<std::uint64_t> iters, seed, eval_every;
    std::optional<double> lr, ema, final_lr_fraction;
    std::optional<std::size_t> batch, enc_levels, embedding_dim, patience;
    std::vector<double> split{0.8, 0.1, 0.1};
    bool measured = false;
    bool random_phases = false;
    TraceOverrides trace;
};

struct EvaluateArgs {
    std::string scene, data, checkpoint, out = "metrics.json", split_file, subset = "all", paths, heatmap, cir_dir;
    std::string grid = "100x100";
    double heatmap_z = 1.5;
    std::size_t heatmap_rx = 0;
    std::vector<std::uint64_t> cir_ids;
    TraceOverrides trace;
};

struct GradcheckArgs {
    bool json = false;
    std::string fault;
    double tolerance = 1e-4;
};

Vec3 to_vec3(const std::vector<double>& v, const char* what)
{
    if (v.size() != 3)
        throw InputError(std::string(what) + " needs three coordinates");
    return {v[0], v[1], v[2]};
}

TraceConfig apply_overrides(TraceConfig c, const TraceOverrides& o)
{
    if (o.max_order)
        c.max_order = *o.max_order;
    if (o.diffuse)
        c.diffuse_samples = *o.diffuse;
    if (o.rays)
        c.ray_count = *o.rays;
    if (o.seed)
        c.seed = *o.seed;
    return c;
}

void add_trace_overrides(CLI::App* sub, TraceOverrides& o)
{
    sub->add_option("--max-order", o.max_order, "Maximum specular order (default: dataset generator setting)");
    sub->add_option("--diffuse", o.diffuse, "Diffuse surface samples");
    sub->add_option("--rays", o.rays, "Launched rays for candidate search");
    sub->add_option("--trace-seed", o.seed, "Seed of ray launch and surface sampling");
}

// Paths for every record of `d`, from a cache file or traced afresh.
PathCache dataset_paths(const Scene& scene, const Dataset& d, const TraceConfig& trace, const std::string& cache_file)
{
    std::vector<Vec3> tx, rx;
    for (const auto& r : d.records) {
        tx.push_back(r.tx);
        rx.push_back(d.manifest.rx_positions.at(r.rx));
    }
    if (!cache_file.empty()) {
        PathCache cache = load_path_cache(cache_file);
        if (cache.geometry_hash != geometry_hash(scene))
            throw IncompatibleError("path cache was traced in a different scene geometry");
        if (cache.tx != tx || cache.rx != rx)
            throw IncompatibleError("path cache positions do not match the dataset");
        return cache;
    }
    PathCache cache;
    cache.geometry_hash = geometry_hash(scene);
    cache.config = trace;
    cache.tx = tx;
    cache.rx = rx;
    cache.sets = trace_positions_parallel(scene, tx, rx, trace);
    return cache;
}

std::vector<Example> make_examples(const Dataset& d, const PathCache& cache, std::ostream& err)
{
    std::vector<Example> out;
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < d.records.size(); ++i) {
        if (d.records[i].no_paths || cache.sets[i].paths.empty()) {
            ++skipped;
            continue;
        }
        out.push_back(make_example(d.records[i], cache.sets[i], d.manifest.waveform));
    }
    if (skipped)
        err << "warning: " << skipped << " record(s) without propagation paths skipped\n";
    return out;
}

json split_to_json(const Split& s, std::span<const Example> examples)
{
    auto ids = [&](const std::vector<std::size_t>& idx) {
        json a = json::array();
        for (std::size_t i : idx)
            a.push_back(examples[i].id);
        return a;
    };
    return {{"train", ids(s.train)}, {"validation", ids(s.validation)}, {"test", ids(s.test)}};
}

std::vector<Example> pick(std::span<const Example> all, const std::vector<std::size_t>& idx)
{
    std::vector<Example> out;
    for (std::size_t i : idx)
        out.push_back(all[i]);
    return out;
}

// ---- subcommands ---------------------------------------------------------------

int cmd_generate(const GenerateArgs& a, std::ostream& out)
{
    const Scene scene = load_scene(a.scene);
    SynthConfig c = a.synth.empty() ? SynthConfig::corridor_defaults() : load_synth_config(a.synth);
    if (a.seed)
        c.seed = *a.seed;
    if (a.positions)
        c.positions = *a.positions;
    const GeneratedData g = generate(scene, c);
    save_dataset(a.out, g.dataset);
    if (!a.paths_out.empty())
        save_path_cache(a.paths_out, g.paths);
    out << "positions: " << c.positions << "\n"
        << "records: " << g.dataset.records.size() << "\n"
        << "mean path count: " << format_double(g.mean_path_count) << "\n";
    if (g.flagged)
        out << "records without paths: " << g.flagged << "\n";
    return kSuccess;
}

// Every material evaluated with its stored parameters and scattering.
Scene frozen_copy(const Scene& scene)
{
    Scene s = scene;
    for (MaterialSpec& m : s.mutable_materials()) {
        m.model = MaterialModel::Fixed;
        m.scattering.trainable = false;
    }
    return s;
}

int cmd_trace(const TraceArgs& a, std::ostream& out)
{
    const Scene scene = load_scene(a.scene);
    const Vec3 tx = to_vec3(a.tx, "--tx"), rx = to_vec3(a.rx, "--rx");
    TraceConfig tc;
    tc.max_order = a.max_order;
    tc.diffuse_samples = a.diffuse;
    tc.ray_count = a.rays;
    tc.seed = a.seed;
    tc.mode = a.exhaustive ? CandidateMode::Exhaustive : CandidateMode::Sbr;
    if (tc.max_order < 0)
        throw InputError("--max-order must be non-negative");
    const PathSet set = trace_all(scene, tx, rx, tc);

    const Scene frozen = frozen_copy(scene);
    std::optional<Model> model;
    if (!a.checkpoint.empty())
        model.emplace(restore_model(scene, load_checkpoint(a.checkpoint)));
    else
        model.emplace(frozen, ModelConfig{}, 0);
    const auto params = model->parameters().values();
    const auto coeff = model->coefficients<double>(set, a.frequency, params);

    json paths = json::array();
    for (std::size_t i = 0; i < set.paths.size(); ++i) {
        const PropagationPath& p = set.paths[i];
        json inter = json::array();
        for (const Interaction& it : p.interactions)
            inter.push_back(json{{"kind", it.kind == InteractionKind::Specular ? "specular" : "diffuse"},
                                 {"triangle", it.triangle_id},
                                 {"point", vec3_to_json(it.point)}});
        const char* kind = p.is_los() ? "los" : p.is_diffuse() ? "diffuse" : "specular";
        paths.push_back(json{{"kind", kind},
                         {"order", p.interactions.size()},
                         {"interactions", inter},
                         {"length", p.length()},
                         {"delay", p.delay},
                         {"magnitude", std::hypot(coeff[i].re, coeff[i].im)},
                         {"departure", json::array({p.theta_tx, p.phi_tx})},
                         {"arrival", json::array({p.theta_rx, p.phi_rx})}});
    }
    json doc = {{"tx", vec3_to_json(tx)},     {"rx", vec3_to_json(rx)},        {"frequency", a.frequency},
                {"trace", trace_config_to_json(tc)}, {"path_count", set.paths.size()}, {"paths", paths}};
    if (a.out.empty())
        out << doc.dump(2) << "\n";
    else
        write_text_file(a.out, doc.dump(2) + "\n");
    return kSuccess;
}

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out, std::ostream& err)
{
    const Scene scene = load_scene(a.scene);
    const Dataset d = load_dataset(a.data);
    if (d.manifest.scene_hash != scene_hash(scene))
        err << "warning: dataset was generated for a different scene\n";
    const Waveform& wf = d.manifest.waveform;
    const TraceConfig trace = apply_overrides(d.manifest.trace.value_or(TraceConfig{}), a.trace);
    const PathCache cache = dataset_paths(scene, d, trace, a.paths);
    const std::vector<Example> all = make_examples(d, cache, err);
    if (all.empty())
        throw InputError("dataset has no usable records");

    TrainingConfig tc;
    if (!a.train_config.empty())
        tc = training_config_from_json(read_json_file(a.train_config, "training config"), a.train_config);
    if (a.iters) tc.iterations = *a.iters;
    if (a.lr) tc.lr = *a.lr;
    if (a.batch) tc.batch = *a.batch;
    if (a.seed) tc.seed = *a.seed;
    if (a.ema) tc.ema_decay = *a.ema;
    if (a.eval_every) tc.eval_every = *a.eval_every;
    if (a.patience) tc.patience = *a.patience;
    if (a.final_lr_fraction) tc.final_lr_fraction = *a.final_lr_fraction;
    if (a.measured) tc.synthetic = false;
    if (a.random_phases) tc.random_phases = true;
    tc.validate();

    ModelConfig mc;
    if (!a.model_config.empty())
        mc = model_config_from_json(read_json_file(a.model_config, "model config"), a.model_config);
    if (a.model) {
        if (*a.model == "embedding")
            mc.materials = MaterialModel::Embedding;
        else if (*a.model == "neural")
            mc.materials = MaterialModel::Neural;
        else
            throw InputError("--model must be 'embedding' or 'neural'");
    }
    if (a.enc_levels) mc.encoding_levels = *a.enc_levels;
    if (a.embedding_dim) mc.embedding_dim = *a.embedding_dim;

    if (a.split.size() != 3)
        throw InputError("--split needs three fractions");
    std::vector<std::string> warnings;
    const Split split = split_indices(all.size(), {a.split[0], a.split[1], a.split[2]}, tc.seed, &warnings);
    for (const auto& w : warnings)
        err << "warning: " << w << "\n";
    const auto train_set = pick(all, split.train);
    const auto val_set = pick(all, split.validation);
    if (train_set.empty())
        throw InputError("training split is empty");

    std::optional<Model> model;
    std::optional<OptimizerState> resume;
    if (!a.resume.empty()) {
        const LoadedCheckpoint ck = load_checkpoint(a.resume);
        model.emplace(restore_model(scene, ck));
        resume = restore_optimizer(*model, ck);
    } else {
        model.emplace(scene, mc, tc.seed);
    }

    fs::create_directories(a.out);
    const TrainResult r = train(*model, train_set, val_set, tc, wf, {}, resume ? &*resume : nullptr);

    std::string log = log_csv_header();
    for (const auto& row : r.history)
        log += log_csv_row(row);
    write_text_file(fs::path(a.out) / "training_log.csv", log);
    write_text_file(fs::path(a.out) / "loss_curve.svg", svg_loss_curve(r.history));
    write_text_file(fs::path(a.out) / "split.json", split_to_json(split, all).dump(1) + "\n");
    CheckpointExtras extras{tc.seed, r.iterations, r.alpha};
    write_text_file(fs::path(a.out) / "checkpoint.json", checkpoint_to_json(*model, r.optimizer, extras));

    out << "iterations: " << r.iterations << (r.stopped_early ? " (early stop)" : "") << "\n"
        << "final train loss: " << format_double(r.train_loss) << "\n";
    if (r.validation_loss >= 0.0)
        out << "final validation loss: " << format_double(r.validation_loss) << "\n";
    out << "alpha: " << format_double(r.alpha) << "\n";
    for (const MaterialSpec& m : scene.materials()) {
        const auto id = *scene.find_material(m.name);
        const MaterialParams p = model->material(id);
        out << "material " << m.name << ": eps_r=" << p.eps_r << " sigma=" << p.sigma << " S=" << p.S
            << " Kx=" << p.Kx << "\n";
    }
    return kSuccess;
}

std::pair<std::size_t, std::size_t> parse_grid(const std::string& g)
{
    const auto x = g.find('x');
    try {
        if (x == std::string::npos)
            throw std::invalid_argument(g);
        const auto nx = std::stoul(g.substr(0, x)), ny = std::stoul(g.substr(x + 1));
        if (nx == 0 || ny == 0)
            throw std::invalid_argument(g);
        return {nx, ny};
    } catch (const std::exception&) {
        throw InputError("--grid must look like 100x100");
    }
}

HeatmapGrid path_loss_grid(const Model& model, const Dataset& d, const TraceConfig& trace, const EvaluateArgs& a)
{
    const auto [nx, ny] = parse_grid(a.grid);
    if (a.heatmap_rx >= d.manifest.rx_positions.size())
        throw InputError("--heatmap-rx out of range");
    const Aabb& box = model.scene().aabb();
    HeatmapGrid g;
    g.nx = nx;
    g.ny = ny;
    const double mx = (box.upper.x - box.lower.x) / (2.0 * nx), my = (box.upper.y - box.lower.y) / (2.0 * ny);
    g.x0 = box.lower.x + mx;
    g.x1 = box.upper.x - mx;
    g.y0 = box.lower.y + my;
    g.y1 = box.upper.y - my;
    std::vector<Vec3> tx, rx;
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
            tx.push_back({box.lower.x + (2 * i + 1) * mx, box.lower.y + (2 * j + 1) * my, a.heatmap_z});
            rx.push_back(d.manifest.rx_positions[a.heatmap_rx]);
        }
    const auto sets = trace_positions_parallel(model.scene(), tx, rx, trace);
    const auto params = model.parameters().values();
    const Waveform& wf = d.manifest.waveform;
    g.values.assign(sets.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < sets.size(); ++k) {
        if (sets[k].paths.empty())
            continue;
        const auto kernel = tap_kernel(path_delays(sets[k]), wf);
        const auto h = to_std(model.predict_cir<double>(sets[k], kernel, wf, params));
        const double p = channel_gain(h);
        if (p > 0.0)
            g.values[k] = -10.0 * std::log10(p);
    }
    return g;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err)
{
    const Scene scene = load_scene(a.scene);
    const LoadedCheckpoint ck = load_checkpoint(a.checkpoint);
    const Model model = restore_model(scene, ck);
    const Dataset d = load_dataset(a.data);
    const Waveform& wf = d.manifest.waveform;
    const TraceConfig trace = apply_overrides(d.manifest.trace.value_or(TraceConfig{}), a.trace);
    const PathCache cache = dataset_paths(scene, d, trace, a.paths);
    std::vector<Example> all = make_examples(d, cache, err);

    std::vector<Example> chosen;
    if (a.subset == "all") {
        chosen = all;
    } else {
        if (a.split_file.empty())
            throw InputError("--subset needs --split-file");
        const json s = read_json_file(a.split_file, "split file");
        if (!s.contains(a.subset))
            throw InputError("split file has no '" + a.subset + "' subset");
        const auto ids = s.at(a.subset).get<std::vector<std::uint64_t>>();
        for (const Example& e : all)
            if (std::binary_search(ids.begin(), ids.end(), e.id))
                chosen.push_back(e);
    }
    if (chosen.empty())
        throw InputError("no records to evaluate");

    const MetricsReport rep = evaluate(model, chosen, ck.extras.alpha, wf);
    write_text_file(a.out, metrics_to_json(rep));
    out << "positions: " << rep.positions.size() << "\n"
        << "mean ALE (dB): " << format_double(rep.ale.mean) << "\n"
        << "mean RAE: " << format_double(rep.rae.mean) << "\n";

    if (!a.heatmap.empty()) {
        const HeatmapGrid g = path_loss_grid(model, d, trace, a);
        write_text_file(a.heatmap, svg_heatmap(g, "path loss", "dB"));
        out << "heatmap: " << a.heatmap << "\n";
    }
    if (!a.cir_dir.empty()) {
        fs::create_directories(a.cir_dir);
        const auto predicted = predict_all(model, chosen, wf);
        const double scale = std::sqrt(ck.extras.alpha);
        std::vector<std::uint64_t> ids = a.cir_ids;
        if (ids.empty())
            for (std::size_t k = 0; k < std::min<std::size_t>(4, chosen.size()); ++k)
                ids.push_back(chosen[k].id);
        for (std::uint64_t id : ids) {
            std::size_t k = 0;
            while (k < chosen.size() && chosen[k].id != id)
                ++k;
            if (k == chosen.size()) {
                err << "warning: record " << id << " not in the evaluated subset\n";
                continue;
            }
            std::vector<std::complex<double>> measured = chosen[k].measured;
            for (auto& c : measured)
                c *= scale;
            const fs::path file = fs::path(a.cir_dir) / ("cir_" + std::to_string(id) + ".svg");
            write_text_file(file, svg_cir_stem(measured, predicted[k], "record " + std::to_string(id)));
        }
    }
    return kSuccess;
}

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream& err)
{
    std::optional<ad::Op> fault;
    if (!a.fault.empty()) {
        fault = ad::op_from_name(a.fault);
        if (!fault)
            throw InputError("unknown primitive '" + a.fault + "'");
    }
    const GradcheckReport rep = run_gradcheck(fault, a.tolerance);
    out << (a.json ? gradcheck_report_json(rep) : gradcheck_report_text(rep));
    if (!rep.passed) {
        for (const auto& c : rep.cases)
            if (!c.passed)
                err << "gradcheck failed: " << c.name << " parameter " << c.worst_parameter
                    << " relative error " << format_double(c.max_relative_error) << "\n";
        return kGradcheckFailure;
    }
    return kSuccess;
}

} // namespace

int resolve_threads(int flag)
{
    if (flag > 0)
        return flag;
    if (const char* env = std::getenv("RAYCAL_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0)
                return n;
        } catch (const std::exception&) {
        }
    }
    return 0;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"raycal: differentiable ray tracing and scene calibration"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (default: RAYCAL_THREADS or hardware)");

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Render a synthetic dataset");
    g->add_option("--scene", gen.scene, "Scene JSON")->required();
    g->add_option("--synth", gen.synth, "Generator config JSON (default: corridor ground truth)");
    g->add_option("--out", gen.out, "Output dataset directory")->required();
    g->add_option("--seed", gen.seed, "Override the generator seed");
    g->add_option("--positions", gen.positions, "Override the number of positions");
    g->add_option("--paths-out", gen.paths_out, "Also write the traced paths");

    TraceArgs tr;
    auto* t = app.add_subcommand("trace", "Trace paths between two points");
    t->add_option("--scene", tr.scene, "Scene JSON")->required();
    t->add_option("--tx", tr.tx, "Transmitter x y z")->required()->expected(3)->delimiter(',');
    t->add_option("--rx", tr.rx, "Receiver x y z")->required()->expected(3)->delimiter(',');
    t->add_option("--max-order", tr.max_order, "Maximum specular order");
    t->add_option("--diffuse", tr.diffuse, "Diffuse surface samples");
    t->add_option("--rays", tr.rays, "Launched rays");
    t->add_option("--seed", tr.seed, "Launch and sampling seed");
    t->add_flag("--exhaustive", tr.exhaustive, "Enumerate all sequences instead of ray launching");
    t->add_option("--frequency", tr.frequency, "Carrier frequency in Hz");
    t->add_option("--checkpoint", tr.checkpoint, "Evaluate coefficients with calibrated parameters");
    t->add_option("--out", tr.out, "Output file (default: stdout)");

    CalibrateArgs cal;
    auto* c = app.add_subcommand("calibrate", "Fit scene parameters to a dataset");
    c->add_option("--scene", cal.scene, "Scene JSON")->required();
    c->add_option("--data", cal.data, "Dataset directory")->required();
    c->add_option("--out", cal.out, "Output directory");
    c->add_option("--model", cal.model, "embedding or neural");
    c->add_option("--model-config", cal.model_config, "Model config JSON");
    c->add_option("--train-config", cal.train_config, "Training config JSON");
    c->add_option("--iters", cal.iters, "Iteration budget");
    c->add_option("--lr", cal.lr, "Learning rate");
    c->add_option("--batch", cal.batch, "Batch size");
    c->add_option("--seed", cal.seed, "Seed for initialization, split and shuffling");
    c->add_option("--ema", cal.ema, "Scale EMA decay");
    c->add_option("--eval-every", cal.eval_every, "Validation cadence");
    c->add_option("--patience", cal.patience, "Validation rounds without improvement before stopping");
    c->add_option("--final-lr-fraction", cal.final_lr_fraction, "Learning rate at the budget, relative");
    c->add_option("--enc-levels", cal.enc_levels, "Positional encoding levels (neural)");
    c->add_option("--embedding-dim", cal.embedding_dim, "Embedding dimension");
    c->add_option("--split", cal.split, "Train, validation, test fractions")->expected(3)->delimiter(',');
    c->add_flag("--measured", cal.measured, "Estimate the power scale instead of fixing it to 1");
    c->add_flag("--random-phases", cal.random_phases, "Resample diffuse phases every iteration");
    c->add_option("--paths", cal.paths, "Precomputed path cache");
    c->add_option("--resume", cal.resume, "Continue from a checkpoint");
    add_trace_overrides(c, cal.trace);

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "Report errors of a calibrated model");
    e->add_option("--scene", ev.scene, "Scene JSON")->required();
    e->add_option("--data", ev.data, "Dataset directory")->required();
    e->add_option("--checkpoint", ev.checkpoint, "Checkpoint JSON")->required();
    e->add_option("--out", ev.out, "Metrics JSON");
    e->add_option("--split-file", ev.split_file, "split.json written by calibrate");
    e->add_option("--subset", ev.subset, "all, train, validation or test")
        ->check(CLI::IsMember({"all", "train", "validation", "test"}));
    e->add_option("--paths", ev.paths, "Precomputed path cache");
    e->add_option("--heatmap", ev.heatmap, "Write a path-loss heatmap SVG");
    e->add_option("--grid", ev.grid, "Heatmap cells, e.g. 100x100");
    e->add_option("--heatmap-z", ev.heatmap_z, "Transmitter height of the heatmap plane");
    e->add_option("--heatmap-rx", ev.heatmap_rx, "Receiver index of the heatmap");
    e->add_option("--cir-plots", ev.cir_dir, "Directory for CIR comparison SVGs");
    e->add_option("--cir-ids", ev.cir_ids, "Record ids to plot (default: first four evaluated)")->delimiter(',');
    add_trace_overrides(e, ev.trace);

    GradcheckArgs gc;
    auto* k = app.add_subcommand("gradcheck", "Compare gradients against finite differences");
    k->add_flag("--json", gc.json, "Machine-readable report");
    k->add_option("--inject-fault", gc.fault, "Corrupt the partials of one primitive");
    k->add_option("--tolerance", gc.tolerance, "Maximum relative error");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::ParseError& ex) {
        err << "error: " << ex.what() << "\n";
        return kInputError;
    }

    set_thread_count(resolve_threads(threads));
    try {
        if (g->parsed())
            return cmd_generate(gen, out);
        if (t->parsed())
            return cmd_trace(tr, out);
        if (c->parsed())
            return cmd_calibrate(cal, out, err);
        if (e->parsed())
            return cmd_evaluate(ev, out, err);
        if (k->parsed())
            return cmd_gradcheck(gc, out, err);
    } catch (const InputError& ex) {
        err << "error: " << ex.what() << "\n";
        return kInputError;
    } catch (const ConfigError& ex) {
        err << "error: " << ex.what() << "\n";
        return kInputError;
    } catch (const NumericalError& ex) {
        err << "numerical abort: " << ex.what() << "\n";
        return kNumericalAbort;
    } catch (const IncompatibleError& ex) {
        err << "incompatible: " << ex.what() << "\n";
        return kIncompatible;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return kFailure;
    }
    return kFailure;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i)
        args.emplace_back(argv[i]);
    return run(args, out, err);
}

} // namespace raycal::cli
