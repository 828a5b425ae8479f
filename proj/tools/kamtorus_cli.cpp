// kamtorus command-line tool. Talks to the core exclusively through the
// shared-library C API (kamtorus.h).

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "kamtorus.h"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::string torus_path;
  unsigned seed = 1;
  int threads = 1;
};

int run(const std::string& command, const CommonArgs& args) {
  kam_config* cfg = nullptr;
  kam_status st = kam_config_open(args.config_path.c_str(), &cfg);
  if (st != KAM_OK) {
    std::fprintf(stderr, "kamtorus: %s\n", kam_last_error());
    return 3;
  }
  int code = kam_run(cfg, command.c_str(), args.out_dir.c_str(),
                     args.torus_path.empty() ? nullptr : args.torus_path.c_str(), args.seed,
                     args.threads);
  if (code != 0) std::fprintf(stderr, "kamtorus %s: %s\n", command.c_str(), kam_last_error());
  kam_config_free(cfg);
  return code;
}

void add_common(CLI::App* sub, CommonArgs& args, bool needs_torus) {
  sub->add_option("--config", args.config_path, "run configuration file")->required();
  sub->add_option("--out", args.out_dir, "output directory");
  sub->add_option("--seed", args.seed, "seed for randomized inputs");
  sub->add_option("--threads", args.threads, "worker threads for sweeps");
  if (needs_torus)
    sub->add_option("--torus", args.torus_path, "torus coefficient artifact (.fmd or .csv)")
        ->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("kamtorus ") + kam_version() +
               " - quasi-periodic invariant torus solver and a-posteriori certifier"};
  app.set_version_flag("--version", kam_version());
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App* solve = app.add_subcommand("solve", "run the quasi-Newton solver");
  add_common(solve, args, false);
  CLI::App* certify = app.add_subcommand("certify", "evaluate the KAM certificate for a torus");
  add_common(certify, args, true);
  CLI::App* lift = app.add_subcommand("lift", "lift a torus along the moment flow");
  add_common(lift, args, true);
  CLI::App* bench = app.add_subcommand("bench", "method comparison and bite-scan sweeps");
  add_common(bench, args, false);
  CLI::App* constants = app.add_subcommand("constants", "emit the certificate constant ledger");
  add_common(constants, args, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;  // argument problems are configuration errors
  }

  if (solve->parsed()) return run("solve", args);
  if (certify->parsed()) return run("certify", args);
  if (lift->parsed()) return run("lift", args);
  if (bench->parsed()) return run("bench", args);
  if (constants->parsed()) return run("constants", args);
  return 3;
}
