#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "garnet/dataset.hpp"
#include "garnet/pipeline.hpp"

namespace garnet::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNoKnownClass = 2;

// Everything a command needs to build a dataset and run the pipeline. Loaded
// from an optional JSON config file, then overridden by flags.
struct Setup {
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> manifest;  // unset means synthetic
  SynthSpec synth;
  RunConfig run;
  // Train only on the training split of this test group.
  std::optional<std::uint32_t> fold;
};

// Strict: unknown keys are a ConfigError.
Setup load_setup(const std::optional<std::filesystem::path>& config_file);

// The synthetic generator is seeded with derive_seed(seed, kSynthStream).
Dataset load_dataset(const Setup& setup);

// Runs the `garnet` command line. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace garnet::cli
