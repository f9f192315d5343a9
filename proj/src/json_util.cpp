// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "raycal/json_util.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace raycal {

StrictReader::StrictReader(const json& j, std::string context) : j_(j), context_(std::move(context))
{
    if (!j_.is_object())
        throw InputError(context_ + ": expected a JSON object");
}

const json& StrictReader::child(const std::string& key)
{
    auto it = j_.find(key);
    if (it == j_.end())
        throw InputError(context_ + ": missing required key '" + key + "'");
    seen_.insert(key);
    return *it;
}

const json* StrictReader::optional_child(const std::string& key)
{
    auto it = j_.find(key);
    if (it == j_.end())
        return nullptr;
    seen_.insert(key);
    return &*it;
}

void StrictReader::finish() const
{
    std::string unknown;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
        if (!seen_.count(it.key()))
            unknown += (unknown.empty() ? "'" : ", '") + it.key() + "'";
    }
    if (!unknown.empty())
        throw InputError(context_ + ": unknown key(s) " + unknown);
}

std::string read_text_file(const std::filesystem::path& path, const std::string& what)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError(what + " not found: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json_file(const std::filesystem::path& path, const std::string& what)
{
    const std::string text = read_text_file(path, what);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(what + " is not valid JSON (" + path.string() + "): " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw InputError("cannot write " + path.string());
    out << text;
    if (!out)
        throw InputError("write failed: " + path.string());
}

std::string format_double(double x)
{
    if (!std::isfinite(x))
        throw NumericalError("non-finite value cannot be serialized");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

Vec3 vec3_from_json(const json& j, const std::string& context)
{
    if (!j.is_array() || j.size() != 3)
        throw InputError(context + ": expected [x, y, z]");
    for (const auto& c : j)
        if (!c.is_number())
            throw InputError(context + ": coordinates must be numbers");
    Vec3 v{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
    if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z))
        throw InputError(context + ": non-finite coordinate");
    return v;
}

json vec3_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

std::uint64_t fnv1a64(const std::string& data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace raycal
