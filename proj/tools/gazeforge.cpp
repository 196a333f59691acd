// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "gazeforge/cli/cli.hpp"

int main(int argc, char** argv) { return gazeforge::cli::run(argc, argv, std::cout, std::cerr); }
