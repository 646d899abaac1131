#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "umc/dataio/dataset.hpp"
#include "umc/dataio/transform.hpp"
#include "umc/trainer/trainer.hpp"

namespace umc::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericError = 3 };

struct DataSection {
  std::filesystem::path manifest;  // absolute once parsed
  dataio::ScaleMethod scale = dataio::ScaleMethod::MinMax;
  std::uint64_t unpair_seed = 0;
  dataio::UnpairStrategy unpair_strategy = dataio::UnpairStrategy::StratifiedRoundRobin;
};

struct SyntheticSection {
  dataio::SyntheticSpec spec;
  std::uint64_t seed = 0;
};

struct RunSection {
  int checkpoint_every = 0;
};

// Values per loss weight; an empty axis keeps the train value.
struct SweepSection {
  std::map<std::string, std::vector<double>> axes;  // keys lambda1..lambda4
};

struct Config {
  std::optional<DataSection> data;
  std::optional<SyntheticSection> synthetic;
  trainer::TrainConfig train;
  std::uint64_t seed = 0;  // base of the train seeds
  RunSection run;
  SweepSection sweep;

  void set_seed(std::uint64_t s);
};

/// Parses a JSON config. Relative paths resolve against `base_dir`. Unknown
/// keys and wrongly typed values raise ConfigError naming the key.
Config parse_config(const std::string& text, const std::filesystem::path& base_dir);
Config load_config(const std::filesystem::path& path);
/// Every setting with defaults materialized; parse_config(to_json(c)) == c.
std::string to_json(const Config& c);

/// Training data: the manifest (unpaired as recorded, or unpaired by the
/// recipe when paired) or the synthetic spec, then feature scaling.
dataio::MultiViewDataset load_data(const Config& c);

/// Sweep grid in row-major order over lambda1..lambda4.
std::vector<losses::LossWeights> sweep_grid(const Config& c);

/// Entry point of the `umc` tool; returns the process exit code.
int run(int argc, char** argv);

}  // namespace umc::cli
