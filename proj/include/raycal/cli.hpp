// SPDX-License-Identifier: Apache-2.0
//
// raycal: differentiable radio ray tracing calibration toolkit
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace raycal::cli {

enum ExitCode : int {
    kSuccess = 0,
    kFailure = 1,
    kInputError = 2,
    kNumericalAbort = 3,
    kIncompatible = 4,
    kGradcheckFailure = 5,
};

// Subcommands: generate, trace, calibrate, evaluate, gradcheck.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

// --threads when > 0, else RAYCAL_THREADS, else 0 (hardware default).
int resolve_threads(int flag);

} // namespace raycal::cli
