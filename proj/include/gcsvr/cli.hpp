#pragma once

#include <string>
#include <vector>

namespace gcsvr {

/// Entry point behind the gcsvr binary. Subcommands: synth, build-graph,
/// train, forecast, evaluate, mcb, conformal. Returns 0 on success, 1 on
/// validation errors (bad flags, malformed files), 2 on runtime failures.
int run_cli(const std::vector<std::string>& args);

}  // namespace gcsvr
