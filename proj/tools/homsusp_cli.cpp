#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "homsusp/homsusp.h"

int main(int argc, char** argv) {
  CLI::App app{"Homogenized rigid-particle suspensions: cell problems, effective viscosity, eps-sweeps"};
  std::string command, config, out;
  std::uint64_t seed = 0;
  int jobs = 0, dim = 0;
  bool quiet = false;
  app.add_option("command", command, "cell | tensor | fstar | ergodic | macro | micro | converge | dilute")
      ->required()
      ->check(CLI::IsMember({"cell", "tensor", "fstar", "ergodic", "macro", "micro", "converge", "dilute"}));
  app.add_option("--config", config, "TOML run configuration");
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "output directory");
  app.add_option("--dim", dim, "spatial dimension")->check(CLI::IsMember({2, 3}));
  app.add_flag("--quiet", quiet, "warnings and errors only");
  app.add_flag_callback("--version", [] {
    std::printf("homsusp %s\n", homsusp_version());
    throw CLI::Success();
  });
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success&) {
    return 0;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  homsusp_run_options opts{};
  opts.config_path = config.c_str();
  opts.has_seed = seed_opt->count() > 0;
  opts.seed = seed;
  opts.jobs = jobs;
  opts.out_dir = out.empty() ? nullptr : out.c_str();
  opts.dim = dim;
  opts.quiet = quiet;
  int exit_code = 0;
  if (homsusp_run(command.c_str(), &opts, &exit_code) != HOMSUSP_OK) {
    std::fprintf(stderr, "{\"error\": \"%s\"}\n", homsusp_last_error());
    return 3;
  }
  return exit_code;
}
