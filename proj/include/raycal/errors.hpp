// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>

namespace raycal {

// Misuse of an API (mixed tapes, malformed bases, ...).
class UsageError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

// Bad or missing input data (files, configs, schema violations).
class InputError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Non-finite values during forward/backward evaluation.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Checkpoint, scene and dataset do not fit together.
class IncompatibleError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Invalid model/trainer configuration detected at run time.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace raycal
