// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "raycal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "raycal/errors.hpp"
#include "raycal/json_util.hpp"

namespace raycal {

namespace {

std::string vec3_text(const Vec3& v)
{
    return "[" + format_double(v.x) + "," + format_double(v.y) + "," + format_double(v.z) + "]";
}

std::vector<std::complex<double>> complex_array(const json& j, std::size_t n, const std::string& ctx)
{
    if (!j.is_array() || j.size() != n)
        throw InputError(ctx + ": expected " + std::to_string(n) + " [re, im] pairs");
    std::vector<std::complex<double>> out;
    out.reserve(n);
    for (const json& e : j) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw InputError(ctx + ": entries must be [re, im]");
        const double re = e[0].get<double>(), im = e[1].get<double>();
        if (!std::isfinite(re) || !std::isfinite(im))
            throw InputError(ctx + ": non-finite value");
        out.emplace_back(re, im);
    }
    return out;
}

} // namespace

std::string manifest_to_json(const Manifest& m)
{
    // Field order is fixed by hand so the file is stable across library versions.
    std::ostringstream os;
    os << "{\n";
    os << "  \"format\": \"" << kDatasetFormat << "\",\n";
    os << "  \"version\": " << kDatasetVersion << ",\n";
    os << "  \"carrier_frequency\": " << format_double(m.waveform.frequency) << ",\n";
    os << "  \"subcarriers\": " << m.waveform.subcarriers << ",\n";
    os << "  \"subcarrier_spacing\": " << format_double(m.waveform.spacing) << ",\n";
    os << "  \"rx\": [";
    for (std::size_t i = 0; i < m.rx_positions.size(); ++i)
        os << (i ? ", " : "") << vec3_text(m.rx_positions[i]);
    os << "],\n";
    os << "  \"scene_hash\": " << json(m.scene_hash).dump() << ",\n";
    os << "  \"records\": " << m.record_count << ",\n";
    os << "  \"generator\": {\"config_hash\": " << json(m.config_hash).dump() << ", \"seed\": " << m.seed
       << ", \"tracer\": " << json(m.tracer).dump();
    if (m.trace)
        os << ", \"trace\": " << trace_config_to_json(*m.trace).dump();
    os << "}\n";
    os << "}\n";
    return os.str();
}

Manifest parse_manifest(const std::string& text, const std::string& origin)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(origin + ": " + e.what());
    }
    StrictReader r(j, origin);
    if (r.get<std::string>("format") != kDatasetFormat)
        throw IncompatibleError(origin + ": not a raycal dataset manifest");
    if (r.get<int>("version") != kDatasetVersion)
        throw IncompatibleError(origin + ": unsupported dataset version");
    Manifest m;
    m.waveform.frequency = r.get<double>("carrier_frequency");
    m.waveform.subcarriers = r.get<int>("subcarriers");
    m.waveform.spacing = r.get<double>("subcarrier_spacing");
    m.waveform.validate();
    for (const json& p : r.child("rx"))
        m.rx_positions.push_back(vec3_from_json(p, origin + ".rx"));
    if (m.rx_positions.empty())
        throw InputError(origin + ": at least one rx position is required");
    m.scene_hash = r.get_or<std::string>("scene_hash", "");
    m.record_count = r.get<std::size_t>("records");
    if (r.has("generator")) {
        StrictReader g(r.child("generator"), origin + ".generator");
        m.config_hash = g.get_or<std::string>("config_hash", "");
        m.seed = g.get_or<std::uint64_t>("seed", 0);
        m.tracer = g.get_or<std::string>("tracer", "");
        if (g.has("trace"))
            m.trace = trace_config_from_json(g.child("trace"), origin + ".generator.trace");
        g.finish();
    }
    r.finish();
    return m;
}

std::string record_to_line(const DatasetRecord& r)
{
    std::string s = "{\"id\":" + std::to_string(r.id) + ",\"tx\":" + vec3_text(r.tx) + ",\"rx\":" +
                    std::to_string(r.rx) + ",\"cir\":[";
    for (std::size_t i = 0; i < r.cir.size(); ++i) {
        if (i)
            s += ',';
        s += '[' + format_double(r.cir[i].real()) + ',' + format_double(r.cir[i].imag()) + ']';
    }
    s += ']';
    if (r.no_paths)
        s += ",\"no_paths\":true";
    s += '}';
    return s;
}

DatasetRecord parse_record(const std::string& line, std::size_t subcarriers, const std::string& origin)
{
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw InputError(origin + ": " + e.what());
    }
    StrictReader r(j, origin);
    DatasetRecord rec;
    rec.id = r.get<std::uint64_t>("id");
    rec.tx = vec3_from_json(r.child("tx"), origin + ".tx");
    rec.rx = r.get<std::uint32_t>("rx");
    const bool has_cir = r.has("cir"), has_cfr = r.has("cfr");
    if (has_cir == has_cfr)
        throw InputError(origin + ": exactly one of \"cir\" or \"cfr\" is required");
    if (has_cir) {
        rec.cir = complex_array(r.child("cir"), subcarriers, origin + ".cir");
    } else {
        const auto h = complex_array(r.child("cfr"), subcarriers, origin + ".cfr");
        std::vector<Complex<double>> H;
        H.reserve(h.size());
        for (const auto& c : h)
            H.push_back({c.real(), c.imag()});
        rec.cir = to_std(cir<double>(H));
    }
    rec.no_paths = r.get_or<bool>("no_paths", false);
    r.finish();
    return rec;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& d)
{
    Manifest m = d.manifest;
    m.record_count = d.records.size();
    std::string lines;
    for (const auto& rec : d.records) {
        if (rec.cir.size() != static_cast<std::size_t>(m.waveform.subcarriers))
            throw UsageError("record CIR length does not match the waveform");
        lines += record_to_line(rec);
        lines += '\n';
    }
    write_text_file(dir / "manifest.json", manifest_to_json(m));
    write_text_file(dir / "records.jsonl", lines);
}

Dataset load_dataset(const std::filesystem::path& dir)
{
    Dataset d;
    const auto manifest_path = dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path))
        throw InputError("dataset not found: " + manifest_path.string());
    d.manifest = parse_manifest(read_text_file(manifest_path, "dataset manifest"), manifest_path.string());
    const auto records_path = dir / "records.jsonl";
    std::istringstream in(read_text_file(records_path, "dataset records"));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        auto rec = parse_record(line, static_cast<std::size_t>(d.manifest.waveform.subcarriers),
                                records_path.string() + ":" + std::to_string(line_no));
        if (rec.rx >= d.manifest.rx_positions.size())
            throw InputError(records_path.string() + ":" + std::to_string(line_no) + ": rx index out of range");
        d.records.push_back(std::move(rec));
    }
    if (d.records.size() != d.manifest.record_count)
        throw InputError(records_path.string() + ": manifest announces " + std::to_string(d.manifest.record_count) +
                         " records, found " + std::to_string(d.records.size()));
    return d;
}

Split split_indices(std::size_t n, std::array<double, 3> fractions, std::uint64_t seed,
                    std::vector<std::string>* warnings)
{
    double total = 0.0;
    for (double f : fractions) {
        if (!(f >= 0.0))
            throw InputError("split fractions must be non-negative");
        total += f;
    }
    if (total > 1.0 + 1e-12)
        throw InputError("split fractions sum to more than 1");

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i)
        perm[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
        std::swap(perm[i - 1], perm[std::min(j, i - 1)]);
    }

    const double dn = static_cast<double>(n);
    const auto c1 = static_cast<std::size_t>(std::llround(dn * fractions[0]));
    const auto c2 = std::max(c1, static_cast<std::size_t>(std::llround(dn * (fractions[0] + fractions[1]))));
    const auto c3 = std::min(n, std::max(c2, static_cast<std::size_t>(std::llround(dn * std::min(1.0, total)))));

    Split s;
    s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(std::min(c1, n)));
    s.validation.assign(perm.begin() + static_cast<std::ptrdiff_t>(std::min(c1, n)),
                        perm.begin() + static_cast<std::ptrdiff_t>(std::min(c2, n)));
    s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(std::min(c2, n)),
                  perm.begin() + static_cast<std::ptrdiff_t>(c3));
    for (auto* part : {&s.train, &s.validation, &s.test})
        std::sort(part->begin(), part->end());
    if (warnings) {
        const char* names[] = {"train", "validation", "test"};
        const std::vector<std::size_t>* parts[] = {&s.train, &s.validation, &s.test};
        for (int k = 0; k < 3; ++k)
            if (parts[k]->empty())
                warnings->push_back(std::string(names[k]) + " split is empty");
    }
    return s;
}

} // namespace raycal
