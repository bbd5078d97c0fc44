// Copyright 2026 The zoomcot Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "zoomcot/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return zoomcot::run_cli(args, std::cout, std::cerr);
}
