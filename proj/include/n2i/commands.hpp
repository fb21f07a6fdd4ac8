#pragma once

#include <string>

#include "n2i/config.hpp"

namespace n2i {

// CLI commands over a resolved key=value config. Paths: `in` (input image
// folder), `out` (output folder), `clean` (reference folder), `checkpoint`.
// Every output file is written atomically; re-running a command with the
// same config and seed reproduces outputs byte for byte (train logs differ
// only in the wall-time column).
void cmd_synth(const KvConfig& cfg);
void cmd_train(const KvConfig& cfg);
void cmd_denoise(const KvConfig& cfg);
void cmd_eval(const KvConfig& cfg);
void cmd_compare(const KvConfig& cfg);

void run_command(const std::string& command, const KvConfig& cfg);

}  // namespace n2i
