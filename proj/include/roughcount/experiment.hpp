#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roughcount/eval_metrics.hpp"
#include "roughcount/exchange_io.hpp"
#include "roughcount/experiment_config.hpp"
#include "roughcount/text_provider.hpp"
#include "roughcount/toy/numeric_text_embedder.hpp"
#include "roughcount/vlma_adapter.hpp"

namespace roughcount {

/// One pipeline split: annotations plus either raw features (toy and
/// features sources) or ready-made embeddings (embeddings source).
struct Split {
  std::vector<toy::CountSample> samples;
  std::vector<Embedding> embeddings;  // filled for the embeddings source only
};

struct Splits {
  Split train;
  Split test;
};

/// EMB_IMG + COUNTS (+ EXPERTS) container as a split of ready embeddings.
Split load_embedding_split(const std::filesystem::path& path);

/// EMB_TXT + LABELS container as a lookup table provider.
TableTextProvider load_text_table(const std::filesystem::path& path,
                                  std::string prompt_template = std::string(kDefaultPromptTemplate));

/// MODEL plus EMB_TXT/LABELS rows for every label 0..999, so a checkpoint
/// decodes without knowing how its text side was built.
std::vector<io::Section> checkpoint_sections(const toy::ToyImageEncoder& encoder,
                                             const TextEmbeddingProvider& text);

/// Generates or loads both splits. Toy data is annotated with the configured
/// rough-label spec; container data keeps its stored EXPERTS rows.
Splits prepare_data(const ExperimentConfig& cfg);

struct TrainedModel {
  toy::ToyImageEncoder encoder;
  toy::NumericTextEmbedder text;
  toy::TrainResult curve;
  double untrained_mae = 0.0;  // progressive decode of the test split before training
};

/// Initializes encoder and text embedder from the config seed and runs PEL
/// training. `test` is only used to measure the untrained baseline.
TrainedModel train_model(const ExperimentConfig& cfg, std::span<const toy::CountSample> train,
                         std::span<const toy::CountSample> test);

/// Populates a store over the training split: one update per sample, with u
/// the text embedding of one rough-label draw for that sample.
AdapterStore build_adapter(const AdapterConfig& cfg, std::span<const Embedding> embeddings,
                           std::span<const toy::CountSample> samples,
                           const TextEmbeddingProvider& text, std::uint64_t seed);

/// Normalizes each embedding and, when sigma > 0, adds N(0, sigma^2) noise
/// per component. Noise for a sample depends only on (seed, sample id).
std::vector<Embedding> perturb_queries(std::span<const Embedding> embeddings,
                                       std::span<const toy::CountSample> samples, double sigma,
                                       std::uint64_t seed);

/// Per-sample CSV row. pred_prog_adapter is absent when the adapter is off;
/// evals counts similarity evaluations of the configured decoder mode.
struct PredictionRow {
  std::uint64_t sample_id = 0;
  int gt = 0;
  int rough_lo = 0;
  int rough_hi = 0;
  int pred_flat = 0;
  int pred_prog = 0;
  std::optional<int> pred_prog_adapter;
  int evals = 0;
};

inline constexpr std::string_view kPredictionsHeader =
    "sample_id,gt,rough_lo,rough_hi,pred_flat,pred_prog,pred_prog_adapter,evals";

std::string predictions_csv(std::span<const PredictionRow> rows);

struct DecodeOutcome {
  std::map<std::string, EvalReport> variants;
  std::string primary_variant;
  std::vector<PredictionRow> rows;
};

/// Perturbs the test embeddings per `decoder.query_noise`, decodes them flat,
/// progressively and (with `adapter`) progressively after refinement, and
/// scores every variant against the true counts.
DecodeOutcome decode_and_score(std::span<const Embedding> test_embeddings,
                               std::span<const toy::CountSample> test,
                               const TextEmbeddingProvider& text, const AdapterStore* adapter,
                               const DecoderConfig& decoder, std::span<const double> band_edges,
                               std::uint64_t seed);

struct ExperimentResult {
  ExperimentConfig config;
  /// Metrics of the configured decoder (flat, progressive, or progressive
  /// with adapter refinement when the adapter is enabled).
  EvalReport report;
  std::string primary_variant;
  /// "flat", "progressive" and, with the adapter on, "progressive+adapter".
  std::map<std::string, EvalReport> variants;
  std::vector<PredictionRow> rows;
  std::optional<double> untrained_mae;
  std::vector<double> epoch_loss;
  std::vector<double> epoch_eval_loss;
  std::size_t adapter_entries = 0;
  double train_seconds = 0.0;

  // Artifacts kept for writing checkpoints.
  std::optional<toy::ToyImageEncoder> encoder;
  std::optional<AdapterStore> adapter;
  std::optional<toy::NumericTextEmbedder> text;
};

/// gen, train, populate adapter, decode, evaluate. Errors are re-raised with
/// the failing stage in the message.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Structured-text (YAML) report embedding the resolved config and version.
std::string report_yaml(const ExperimentResult& result);

/// Writes report, predictions and checkpoints under cfg.output.dir.
/// Returns the paths written.
std::vector<std::filesystem::path> write_artifacts(const ExperimentResult& result);

struct AblationRow {
  std::string sweep;    // "rough_labels" or "decoder"
  std::string setting;  // e.g. "p=0.05" or "progressive+adapter"
  double error_pct = 0.0;
  std::string decoder;
  double mae = 0.0;
  double mse = 0.0;
  double evals_per_sample = 0.0;
  double decodes_per_sec = 0.0;
};

inline constexpr double kRoughLabelSweep[] = {0.05, 0.10, 0.15, 0.20, 0.30, 0.40, 0.50};

/// One row per error range, using the configured decoder.
std::vector<AblationRow> rough_label_sweep(const ExperimentConfig& cfg,
                                           std::span<const double> error_pcts = kRoughLabelSweep);

/// Three rows: a flat baseline trained with units-stage weights only
/// (0, 0, 1) and decoded over all labels, then the PEL model decoded
/// progressively without and with the adapter.
std::vector<AblationRow> decoder_sweep(const ExperimentConfig& cfg);

std::string ablation_csv(std::span<const AblationRow> rows);
std::string ablation_yaml(std::span<const AblationRow> rows, const ExperimentConfig& cfg);

}  // namespace roughcount
