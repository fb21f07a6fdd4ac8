// n2i: self-supervised image denoising toolkit.
//
// Commands: synth | train | denoise | eval | compare. Settings come from a
// key=value config file plus command-line overrides; precedence is
// defaults < --config file < --set key=value < dedicated flags.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "n2i/commands.hpp"
#include "n2i/config.hpp"
#include "n2i/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"self-supervised image denoising via unrolled inpainting"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::string in_dir, out_dir, clean_dir, checkpoint;
  std::string seed;

  const std::vector<std::string> commands = {"synth", "train", "denoise", "eval",
                                             "compare"};
  for (const auto& name : commands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "key=value config file");
    sub->add_option("--seed", seed, "global seed (overrides config)");
    sub->add_option("--in", in_dir, "input image folder");
    sub->add_option("--out", out_dir, "output folder");
    sub->add_option("--clean", clean_dir, "clean reference folder");
    sub->add_option("--checkpoint", checkpoint, "checkpoint file");
    sub->add_option("--set", sets, "extra key=value override (repeatable)");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    n2i::KvConfig cfg;
    if (!config_path.empty()) cfg = n2i::KvConfig::parse_file(config_path);
    for (const auto& kv : sets) {
      size_t eq = kv.find('=');
      if (eq == std::string::npos)
        throw n2i::ConfigError("--set expects key=value, got: " + kv);
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!seed.empty()) cfg.set("seed", seed);
    if (!in_dir.empty()) cfg.set("in", in_dir);
    if (!out_dir.empty()) cfg.set("out", out_dir);
    if (!clean_dir.empty()) cfg.set("clean", clean_dir);
    if (!checkpoint.empty()) cfg.set("checkpoint", checkpoint);

    n2i::run_command(app.get_subcommands().front()->get_name(), cfg);
    return 0;
  } catch (const n2i::Error& e) {
    std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
}
