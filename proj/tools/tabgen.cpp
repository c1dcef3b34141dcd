// SPDX-License-Identifier: Apache-2.0
#include "tabgen/cli/cli.hpp"

int main(int argc, char** argv) { return tabgen::run_cli(argc, argv); }
