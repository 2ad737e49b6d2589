// Command-line front end over the C interface.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "causalcast/causalcast.h"

namespace {

void print_line(const char* line, void*) { std::printf("%s\n", line); }

int report(cc_status status) {
  std::fprintf(stderr, "error: %s: %s\n", cc_status_name(status), cc_last_error_message());
  return static_cast<int>(status);
}

struct Options {
  std::string config;
  std::optional<std::string> variant;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal feature discovery and recurrent forecasting pipeline"};
  app.set_version_flag("--version", std::string(cc_version()));
  app.require_subcommand(1);

  Options opt;
  const char* commands[][2] = {
      {"preprocess", "Load, impute and normalize the configured datasets"},
      {"discover", "Run causal discovery and write graphs and feature lists"},
      {"train", "Train one forecaster per variant and horizon"},
      {"evaluate", "Score checkpoints on the test split and write reports"},
      {"forecast", "Predict beyond the end of each dataset"},
      {"synth", "Generate a synthetic frame and its ground-truth graph"},
      {"run", "preprocess, discover, train and evaluate in sequence"},
  };
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c[0], c[1]);
    sub->add_option("--config", opt.config, "Pipeline configuration (JSON)")->required();
    sub->add_option("--seed", opt.seed, "Override the configured seed");
    sub->add_option("--out", opt.out, "Override the output directory");
    const std::string name = c[0];
    if (name == "train" || name == "forecast") {
      sub->add_option("--variant", opt.variant, "Variant name, optionally name@dataset");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: config: %s\n", e.what());
    return CC_ERROR_CONFIG;
  }

  const std::string command = app.get_subcommands().front()->get_name();

  cc_pipeline* pipeline = nullptr;
  if (cc_status s = cc_pipeline_open(opt.config.c_str(), &pipeline); s != CC_OK) return report(s);
  cc_pipeline_set_log(pipeline, print_line, nullptr);

  cc_status s = CC_OK;
  if (opt.seed) s = cc_pipeline_set_seed(pipeline, *opt.seed);
  if (s == CC_OK && opt.out) s = cc_pipeline_set_output_dir(pipeline, opt.out->c_str());
  if (s == CC_OK) s = cc_pipeline_run(pipeline, command.c_str(), opt.variant ? opt.variant->c_str() : nullptr);
  cc_pipeline_free(pipeline);
  return s == CC_OK ? 0 : report(s);
}
