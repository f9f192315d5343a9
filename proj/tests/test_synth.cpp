// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "problem.hpp"
#include "raycal/dataset.hpp"
#include "raycal/synth.hpp"

using namespace raycal;
using namespace raycal::testing;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("raycal_synth_" + name);
    fs::remove_all(dir);
    return dir;
}

} // namespace

TEST(SynthDefaults, GroundTruthTable)
{
    const SynthConfig c = SynthConfig::corridor_defaults();
    const MaterialParams& f = c.materials.at("floor");
    const MaterialParams& w = c.materials.at("walls");
    const MaterialParams& k = c.materials.at("ceiling");
    EXPECT_EQ(f.eps_r, 5.24);
    EXPECT_EQ(f.sigma, 0.121);
    EXPECT_EQ(f.S, 0.3);
    EXPECT_EQ(f.Kx, 0.2);
    EXPECT_EQ(w.eps_r, 2.73);
    EXPECT_EQ(w.sigma, 0.027);
    EXPECT_EQ(w.S, 0.5);
    EXPECT_EQ(w.Kx, 0.4);
    EXPECT_EQ(k.eps_r, 1.48);
    EXPECT_EQ(k.sigma, 0.004);
    EXPECT_EQ(k.S, 0.8);
    EXPECT_EQ(k.Kx, 0.3);
    EXPECT_EQ(c.scattering.alpha_r, 5.0);
    EXPECT_EQ(c.scattering.alpha_s, 8.0);
    EXPECT_EQ(c.scattering.lobe_fraction, 0.8);
    EXPECT_EQ(c.positions, 256u);
    EXPECT_EQ(c.trace.max_order, 3);
    EXPECT_FALSE(c.random_phases);
}

TEST(SynthConfigJson, RoundTripKeepsHash)
{
    const SynthConfig c = SynthConfig::corridor_defaults();
    const SynthConfig r = synth_config_from_json(synth_config_to_json(c), "test");
    EXPECT_EQ(synth_config_hash(r), synth_config_hash(c));
    SynthConfig d = c;
    d.materials["floor"].eps_r = 5.25;
    EXPECT_NE(synth_config_hash(d), synth_config_hash(c));
}

TEST(SynthConfigJson, ShippedFileMatchesDefaults)
{
    const SynthConfig c = load_synth_config(fs::path(RAYCAL_DATA_DIR) / "synth_corridor.json");
    EXPECT_EQ(synth_config_hash(c), synth_config_hash(SynthConfig::corridor_defaults()));
}

TEST(Positions, InsideRegionsAndDeterministic)
{
    const std::vector<Box> regions{{{0, 0, 0}, {1, 2, 3}}, {{5, 5, 1}, {6, 6, 2}}};
    const auto a = sample_positions(regions, 500, 4), b = sample_positions(regions, 500, 4);
    ASSERT_EQ(a.size(), 500u);
    EXPECT_EQ(a, b);
    for (const Vec3& p : a) {
        const bool in0 = p.x >= 0 && p.x <= 1 && p.y >= 0 && p.y <= 2 && p.z >= 0 && p.z <= 3;
        const bool in1 = p.x >= 5 && p.x <= 6 && p.y >= 5 && p.y <= 6 && p.z >= 1 && p.z <= 2;
        EXPECT_TRUE(in0 || in1);
    }
}

TEST(Split, RoundingOfDefaultFractions)
{
    const Split s = split_indices(256, {0.8, 0.1, 0.1}, 3);
    EXPECT_EQ(s.train.size(), 205u);
    EXPECT_EQ(s.validation.size(), 25u);
    EXPECT_EQ(s.test.size(), 26u);
}

TEST(Split, AllTrain)
{
    std::vector<std::string> warnings;
    const Split s = split_indices(40, {1, 0, 0}, 3, &warnings);
    EXPECT_EQ(s.train.size(), 40u);
    EXPECT_TRUE(s.validation.empty());
    EXPECT_TRUE(s.test.empty());
    EXPECT_EQ(warnings.size(), 2u);
}

TEST(Split, PartitionProperty)
{
    for (std::size_t n : {1u, 7u, 100u, 257u})
        for (std::uint64_t seed : {0u, 9u}) {
            const Split s = split_indices(n, {0.7, 0.2, 0.1}, seed);
            std::set<std::size_t> all;
            for (const auto* part : {&s.train, &s.validation, &s.test})
                for (std::size_t i : *part)
                    EXPECT_TRUE(all.insert(i).second) << "index " << i << " appears twice";
            EXPECT_EQ(all.size(), n);
            EXPECT_EQ(split_indices(n, {0.7, 0.2, 0.1}, seed).train, s.train);
        }
    EXPECT_THROW(split_indices(10, {0.8, 0.3, 0.1}, 0), InputError);
}

TEST(Generate, SelfConsistentAndFlagsEmptyPositions)
{
    const auto p = make_small_problem(6, 2);
    EXPECT_EQ(p->data.dataset.records.size(), 6u);
    EXPECT_EQ(p->data.paths.sets.size(), 6u);
    EXPECT_EQ(p->data.flagged, 0u);
    EXPECT_GT(p->data.mean_path_count, 1.0);
    for (const auto& r : p->data.dataset.records)
        for (const auto& c : r.cir)
            EXPECT_TRUE(std::isfinite(c.real()) && std::isfinite(c.imag()));
    const Scene truth = ground_truth_scene(p->scene, p->synth);
    const Model m(truth, ModelConfig{}, 0);
    EXPECT_LE(mean_loss(m, p->examples, 1.0, p->data.dataset.manifest.waveform), 1e-9);
}

TEST(Generate, ReceiverOutsideClosedSceneIsFlagged)
{
    auto p = make_small_problem(2, 2);
    SynthConfig c = p->synth;
    c.rx = {{50.0, 50.0, 50.0}};
    c.positions = 2;
    const GeneratedData d = generate(p->scene, c);
    EXPECT_EQ(d.flagged, 2u);
    for (const auto& r : d.dataset.records) {
        EXPECT_TRUE(r.no_paths);
        for (const auto& v : r.cir)
            EXPECT_EQ(v, std::complex<double>(0.0));
    }
}

TEST(Generate, SameSeedGivesByteIdenticalFiles)
{
    const auto a = make_small_problem(4, 8), b = make_small_problem(4, 8);
    const fs::path da = scratch("a"), db = scratch("b");
    save_dataset(da, a->data.dataset);
    save_dataset(db, b->data.dataset);
    for (const char* f : {"manifest.json", "records.jsonl"})
        EXPECT_EQ(slurp(da / f), slurp(db / f)) << f;
    const auto c = make_small_problem(4, 9);
    EXPECT_NE(record_to_line(c->data.dataset.records[0]), record_to_line(a->data.dataset.records[0]));
    fs::remove_all(da);
    fs::remove_all(db);
}

TEST(DatasetFiles, ReloadIsBitExact)
{
    const auto p = make_small_problem(3, 5);
    const fs::path dir = scratch("reload");
    save_dataset(dir, p->data.dataset);
    const Dataset back = load_dataset(dir);
    EXPECT_EQ(back.records, p->data.dataset.records);
    EXPECT_EQ(manifest_to_json(back.manifest), manifest_to_json(p->data.dataset.manifest));
    fs::remove_all(dir);
}

TEST(DatasetFiles, RecordLineFormat)
{
    DatasetRecord r;
    r.id = 4;
    r.tx = {1, 2, 3};
    r.cir = {{0.1, -0.2}, {0.0, 1.0 / 3.0}};
    const std::string line = record_to_line(r);
    EXPECT_NE(line.find("\"cir\""), std::string::npos);
    EXPECT_EQ(parse_record(line, 2, "x"), r);
    EXPECT_THROW(parse_record(line, 4, "x"), InputError);
}
