// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "raycal/parameters.hpp"

#include "raycal/errors.hpp"

namespace raycal {

std::size_t ParameterStore::add_block(const std::string& name, std::span<const double> init)
{
    if (find(name))
        throw UsageError("parameter block '" + name + "' already exists");
    blocks_.push_back({name, values_.size(), init.size()});
    values_.insert(values_.end(), init.begin(), init.end());
    return blocks_.size() - 1;
}

std::optional<std::size_t> ParameterStore::find(const std::string& name) const
{
    for (std::size_t i = 0; i < blocks_.size(); ++i)
        if (blocks_[i].name == name)
            return i;
    return std::nullopt;
}

std::span<const double> ParameterStore::block_values(std::size_t index) const
{
    const Block& b = blocks_.at(index);
    return std::span<const double>(values_).subspan(b.offset, b.size);
}

std::string ParameterStore::id(std::size_t flat_index) const
{
    for (const Block& b : blocks_)
        if (flat_index >= b.offset && flat_index < b.offset + b.size)
            return b.name + "[" + std::to_string(flat_index - b.offset) + "]";
    throw UsageError("parameter index out of range");
}

std::vector<ad::Var> ParameterStore::bind(ad::Tape& tape) const { return tape.parameters(values_); }

} // namespace raycal
