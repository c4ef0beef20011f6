#include <CLI11.hpp>

#include "qpt/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bayesian channel tomography with quantum error bars and confidence intervals"};
  app.require_subcommand(1);

  qpt::CliOptions opts;
  std::string out;
  std::uint64_t seed = 0;
  for (const char* name : {"simulate", "sample", "fit", "region", "analyze"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", opts.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_flag("--paper-compat", opts.paper_compat, "reproduce the published delta and threshold conventions");
    sub->add_option("--out", out, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "walker seed (overrides the config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : qpt::kExitConfig;
  }
  auto* sub = app.get_subcommands().front();
  if (sub->count("--out")) opts.out = out;
  if (sub->count("--seed")) opts.seed = seed;
  return qpt::run_command(sub->get_name(), opts);
}
