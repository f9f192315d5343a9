// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#pragma once

#include <filesystem>
#include <set>
#include <string>

#include <json.hpp>

#include "raycal/errors.hpp"
#include "raycal/geometry.hpp"
#include "raycal/path_tracer.hpp"

namespace raycal {

using json = nlohmann::json;

// Reads an object and rejects keys that were never asked for. Unknown keys
// in configs are typos more often than not.
class StrictReader {
  public:
    StrictReader(const json& j, std::string context);

    bool has(const std::string& key) const { return j_.contains(key); }
    const json& child(const std::string& key);
    const json* optional_child(const std::string& key);

    template <class T>
    T get(const std::string& key)
    {
        const json& c = child(key);
        try {
            return c.get<T>();
        } catch (const json::exception& e) {
            throw InputError(context_ + "." + key + ": " + e.what());
        }
    }

    template <class T>
    T get_or(const std::string& key, T fallback)
    {
        if (!has(key))
            return fallback;
        return get<T>(key);
    }

    // Throws InputError naming every key that was not consumed.
    void finish() const;

    const std::string& context() const { return context_; }

  private:
    const json& j_;
    std::string context_;
    std::set<std::string> seen_;
};

json read_json_file(const std::filesystem::path& path, const std::string& what);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path, const std::string& what);

// "%.17g": enough digits for a bit-exact round trip.
std::string format_double(double x);

Vec3 vec3_from_json(const json& j, const std::string& context);
json vec3_to_json(const Vec3& v);

// FNV-1a, used for config provenance hashes.
std::uint64_t fnv1a64(const std::string& data);
std::string hex64(std::uint64_t v);

} // namespace raycal

namespace raycal {

ScatteringSpec parse_scattering_spec(const json& j, const std::string& context);
json scattering_spec_to_json(const ScatteringSpec& s);

json trace_config_to_json(const TraceConfig& c);
// Missing keys keep their defaults.
TraceConfig trace_config_from_json(const json& j, const std::string& context);

} // namespace raycal
