#ifndef KCODE_PIPELINE_HPP
#define KCODE_PIPELINE_HPP

#include "kcode/classify.hpp"
#include "kcode/io.hpp"
#include "kcode/kernellearn.hpp"
#include "kcode/supervised.hpp"
#include "kcode/synth.hpp"

#include <optional>

namespace kcode {

// One CLI invocation: every subcommand takes --config, --out and an
// optional --seed override.
struct CliRun {
  std::string configPath;
  std::string outDir;
  std::optional<std::uint64_t> seedOverride;
};

// Kernel description from flat config keys under the given prefix:
//   <prefix> = linear|gaussian|polynomial|sigmoid|logeuclidean_rbf|combination
//   <prefix>.beta / .degree / .scale / .offset
//   <prefix>.bases = L, <prefix>.base<i> = family (+ .base<i>.beta ...),
//   <prefix>.weights = w0 w1 ...
KernelSpec kernel_from_config(const Config& cfg,
                              const std::string& prefix = "kernel");

// Train/test data resolved from config: generated (circles, blobs, spd) or
// loaded from files with a seeded shuffle split.
struct Dataset {
  SampleSet train;
  std::vector<int> trainLabels;
  SampleSet test;
  std::vector<int> testLabels;
};
Dataset dataset_from_config(const Config& cfg, std::uint64_t seed);

void write_model(const std::string& path, const SupervisedModel& model);
SupervisedModel read_model(const std::string& path);

void cmd_gen(const CliRun& run);
void cmd_gram(const CliRun& run);
void cmd_encode(const CliRun& run);
void cmd_learn_dict(const CliRun& run);
void cmd_learn_kernel(const CliRun& run);
void cmd_learn_mkl(const CliRun& run);
void cmd_train_supervised(const CliRun& run);
void cmd_classify(const CliRun& run);
void cmd_eval(const CliRun& run);
void cmd_pipeline(const CliRun& run);

}  // namespace kcode

#endif
