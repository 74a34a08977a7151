#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "roughcount/contrastive_loss.hpp"
#include "roughcount/progressive_decoder.hpp"
#include "roughcount/rough_labels.hpp"
#include "roughcount/toy/dataset.hpp"
#include "roughcount/toy/encoder.hpp"
#include "roughcount/toy/trainer.hpp"
#include "roughcount/vlma_adapter.hpp"

namespace roughcount {

inline constexpr std::string_view kToolVersion = "roughcount 0.3.0";

/// Where samples come from.
///   toy:        generated from `toy` and the top-level seed
///   features:   FEATURES/COUNTS/EXPERTS containers (see gen-data); trained
///   embeddings: EMB_IMG/COUNTS(/EXPERTS) containers from an external
///               encoder; no training, text side read from `text.container`
enum class DataSource { kToy, kFeatures, kEmbeddings };

std::string_view to_string(DataSource s);

struct DataConfig {
  DataSource source = DataSource::kToy;
  std::size_t train_size = 5000;
  std::size_t test_size = 1000;
  toy::DatasetSpec toy;  // toy.world_seed is overwritten by the top-level seed
  std::string train_path;
  std::string test_path;
};

struct TextConfig {
  std::string prompt_template = std::string(kDefaultPromptTemplate);
  bool trainable = false;
  std::string container;  // EMB_TXT + LABELS; only for the embeddings source
};

struct DecoderConfig {
  DecodeMode mode = DecodeMode::kProgressive;
  int flat_range = kFlatRange;
  double query_noise = 0.0;  // std of Gaussian noise added after normalization
  unsigned workers = 1;
};

struct AdapterSection {
  bool enabled = true;
  AdapterConfig config;
};

struct OutputConfig {
  std::string dir = "out";
  std::string report = "report.yaml";
  std::string predictions = "predictions.csv";
  std::string checkpoint = "model.prcc";
  std::string adapter = "adapter.prcc";
};

/// Fully resolved experiment description. Every field has a default, so an
/// empty document is a valid config.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  DataConfig data;
  RoughLabelSpec rough_labels;  // rough_labels.seed mirrors the top-level seed
  LossConfig loss;
  toy::EncoderShape model;
  double init_gain = 1.0;
  TextConfig text;
  toy::TrainConfig train;
  DecoderConfig decoder;
  AdapterSection adapter;
  std::vector<double> band_edges = {0, 100, 200, 300, 500, 800};
  OutputConfig output;

  /// Reapplies the top-level seed to every derived seed field.
  void set_seed(std::uint64_t s);
};

void validate(const ExperimentConfig& cfg);

/// Parses a YAML document. Unknown keys, wrong types and invalid values
/// raise ErrorCode::kConfig with "<source>:<line>:<col>" in the message.
ExperimentConfig parse_config(std::string_view text, std::string_view source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical YAML for a resolved config; parse_config(emit_config(c)) == c.
std::string emit_config(const ExperimentConfig& cfg);

}  // namespace roughcount
