#pragma once

#include <iosfwd>

namespace stpsm {

enum ExitCode : int {
  exit_ok = 0,
  exit_config = 2,
  exit_optimizer = 3,
  exit_em = 4,
  exit_metric = 5,
};

/// Entry point of the `stpsm` command line tool.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stpsm
