// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "raycal/autodiff.hpp"

namespace raycal {

// Flat vector of raw (unconstrained) trainable scalars, organised in named
// blocks. The flat order is the tape root order, so gradients returned by
// Tape::backward line up with values().
class ParameterStore {
  public:
    struct Block {
        std::string name;
        std::size_t offset = 0;
        std::size_t size = 0;
    };

    // Returns the block index. Throws UsageError on duplicate names.
    std::size_t add_block(const std::string& name, std::span<const double> init);

    std::optional<std::size_t> find(const std::string& name) const;
    const Block& block(std::size_t index) const { return blocks_.at(index); }
    std::span<const Block> blocks() const { return blocks_; }

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    std::span<const double> block_values(std::size_t index) const;
    std::size_t size() const { return values_.size(); }

    // Stable identifier "block[k]" for a flat index.
    std::string id(std::size_t flat_index) const;

    // Registers every value as a tape parameter, in flat order.
    std::vector<ad::Var> bind(ad::Tape& tape) const;

  private:
    std::vector<Block> blocks_;
    std::vector<double> values_;
};

} // namespace raycal
