// Copyright 2026 The SINQ Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "sinq/cli.hpp"

int main(int argc, char** argv) { return sinq::cli::run(argc, argv, std::cout, std::cerr); }
