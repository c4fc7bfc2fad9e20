// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return clearstream::cli::run(argc, argv, std::cout, std::cerr); }
