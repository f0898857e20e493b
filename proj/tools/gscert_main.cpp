// SPDX-License-Identifier: Apache-2.0
// gscert: render, certify, verify and sweep Gaussian-splat inverse problems.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gscert.h"

namespace {

struct Flags {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "Config file (TOML subset); defaults apply when omitted");
  sub->add_option("--out", f.out, "Output directory (created if missing)")->capture_default_str();
  sub->add_option("--seed", f.seed, "Run seed; overrides `seed` in the config");
  sub->add_option("--threads", f.threads, "Worker cap, 0 = all cores; results do not depend on it")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified stability checks for additive Gaussian-splat rendering"};
  app.set_version_flag("--version", std::string(gscert_version()));
  app.footer(std::string("Exit codes: 0 success, 1 internal error, 2 config/IO/precondition error,\n"
                         "3 certification failure, 4 verification failure.\n\n"
                         "Config keys and defaults:\n") +
             gscert_config_reference());
  app.require_subcommand(1);

  Flags flags;
  using Cmd = int (*)(const gscert_command_options*);
  const struct {
    const char* name;
    const char* help;
    Cmd fn;
  } commands[] = {
      {"render", "Render the scene to PPM and CSV, print ||A(Z)|| and the bound B", gscert_cmd_render},
      {"certify", "Compute and certify Lipschitz constants and local identifiability",
       gscert_cmd_certify},
      {"verify", "Run the moment, concentration and bound-coverage experiments", gscert_cmd_verify},
      {"sweep", "Resolution and complexity sweeps plus the tradeoff floor table", gscert_cmd_sweep},
  };
  Cmd selected = nullptr;
  CLI::App* chosen = nullptr;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_flags(sub, flags);
    sub->callback([&selected, &chosen, sub, fn = c.fn] {
      selected = fn;
      chosen = sub;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  gscert_command_options opt{};
  opt.config_path = flags.config.c_str();
  opt.out_dir = flags.out.c_str();
  opt.has_seed = chosen->count("--seed") > 0;
  opt.seed = flags.seed;
  opt.threads = flags.threads;
  return selected(&opt);
}
