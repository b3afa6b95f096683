#include "kcode/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <functional>

int main(int argc, char** argv) {
  CLI::App app{"kcode - coding, dictionary and kernel learning in RKHS"};
  app.require_subcommand(1);

  struct SubSpec {
    const char* name;
    const char* help;
    std::function<void(const kcode::CliRun&)> fn;
  };
  const SubSpec subs[] = {
      {"gen", "generate synthetic data", kcode::cmd_gen},
      {"gram", "precompute kernel matrices", kcode::cmd_gram},
      {"encode", "encode queries against a dictionary", kcode::cmd_encode},
      {"learn-dict", "unsupervised dictionary learning",
       kcode::cmd_learn_dict},
      {"learn-kernel", "learn kernel parameters on a fixed dictionary",
       kcode::cmd_learn_kernel},
      {"learn-mkl", "learn multiple-kernel weights", kcode::cmd_learn_mkl},
      {"train-supervised", "joint dictionary + classifier training",
       kcode::cmd_train_supervised},
      {"classify", "residual / nearest-neighbor / model classification",
       kcode::cmd_classify},
      {"eval", "accuracy, per-class accuracy and confusion matrix",
       kcode::cmd_eval},
      {"pipeline", "config-driven end-to-end experiment",
       kcode::cmd_pipeline},
  };

  struct SubState {
    kcode::CliRun run;
    std::uint64_t seed = 0;
    bool seedSet = false;
  };
  std::vector<std::shared_ptr<SubState>> states;
  for (const SubSpec& spec : subs) {
    auto state = std::make_shared<SubState>();
    states.push_back(state);
    CLI::App* sub = app.add_subcommand(spec.name, spec.help);
    sub->add_option("--config", state->run.configPath,
                    "configuration file (key = value lines)")
        ->required();
    sub->add_option("--out", state->run.outDir, "output directory")
        ->required();
    sub->add_option("--seed", state->seed,
                    "seed override (takes precedence over the config)")
        ->each([state](const std::string&) { state->seedSet = true; });
    auto fn = spec.fn;
    sub->callback([state, fn] {
      if (state->seedSet) state->run.seedOverride = state->seed;
      fn(state->run);
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const kcode::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
