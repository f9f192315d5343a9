// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------
//
// On-disk dataset: <dir>/manifest.json + <dir>/records.jsonl, one record per
// line. Floats are written with 17 significant digits, so a re-read dataset
// is bit-identical to the one that was written.

#pragma once

#include <array>
#include <complex>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "raycal/em_field.hpp"
#include "raycal/geometry.hpp"

namespace raycal {

inline constexpr const char* kDatasetFormat = "raycal-dataset";
inline constexpr int kDatasetVersion = 1;

struct DatasetRecord {
    std::uint64_t id = 0;
    Vec3 tx;
    std::uint32_t rx = 0;
    std::vector<std::complex<double>> cir; // centered tap order, length N
    bool no_paths = false;                 // generator found no path; CIR is zero

    bool operator==(const DatasetRecord&) const = default;
};

struct Manifest {
    Waveform waveform;
    std::vector<Vec3> rx_positions;
    std::string scene_hash;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string tracer;
    std::optional<TraceConfig> trace; // tracer settings used by the generator
    std::size_t record_count = 0;
};

struct Dataset {
    Manifest manifest;
    std::vector<DatasetRecord> records;
};

std::string manifest_to_json(const Manifest& m);
Manifest parse_manifest(const std::string& text, const std::string& origin);
std::string record_to_line(const DatasetRecord& r);
// Accepts "cir" or "cfr" (converted to a centered CIR).
DatasetRecord parse_record(const std::string& line, std::size_t subcarriers, const std::string& origin);

void save_dataset(const std::filesystem::path& dir, const Dataset& d);
// Throws InputError("dataset not found: ...") when the manifest is missing.
Dataset load_dataset(const std::filesystem::path& dir);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

// Seeded permutation cut at round(n f_train) and round(n (f_train + f_val));
// the remainder up to round(n (f_train + f_val + f_test)) is the test set.
// Each part is returned in ascending index order.
Split split_indices(std::size_t n, std::array<double, 3> fractions, std::uint64_t seed,
                    std::vector<std::string>* warnings = nullptr);

} // namespace raycal
