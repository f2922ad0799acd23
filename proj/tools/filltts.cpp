// Copyright 2026 The filltts Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "filltts/cli.hpp"

int main(int argc, char** argv) { return filltts::cli::run(argc, argv, std::cout, std::cerr); }
