#include "roughcount/experiment.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "roughcount/artifacts.hpp"
#include "roughcount/error.hpp"
#include "roughcount/rng.hpp"
#include "roughcount/toy/trainer.hpp"

namespace roughcount {
namespace {

// Stream tags for seeds derived from the top-level experiment seed.
constexpr std::uint64_t kTrainDataStream = 1;
constexpr std::uint64_t kTestDataStream = 2;
constexpr std::uint64_t kAdapterLabelStream = 99;
constexpr std::uint64_t kQueryNoiseStream = 0x9015E;
constexpr std::uint64_t kTestIdOffset = 1'000'000;

using Clock = std::chrono::steady_clock;

template <typename F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("[") + name + "] " + e.detail());
  }
}

std::vector<double> to_doubles(const std::vector<int>& xs) { return {xs.begin(), xs.end()}; }

std::vector<int> final_counts(const BatchDecode& batch) {
  std::vector<int> out;
  out.reserve(batch.traces.size());
  for (const DecodeTrace& t : batch.traces) out.push_back(t.final_count);
  return out;
}

void emit_report(YAML::Emitter& out, const EvalReport& r) {
  out << YAML::BeginMap;
  out << YAML::Key << "mae" << YAML::Value << r.mae;
  out << YAML::Key << "mse" << YAML::Value << r.mse;
  out << YAML::Key << "raw_mse" << YAML::Value << r.raw_mse;
  out << YAML::Key << "similarity_evals_per_sample" << YAML::Value << r.similarity_evals_per_sample;
  out << YAML::Key << "decodes_per_sec" << YAML::Value << r.decodes_per_sec;
  out << YAML::Key << "per_interval" << YAML::Value << YAML::BeginSeq;
  for (const IntervalMetrics& m : r.per_interval) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "lo" << YAML::Value << m.band.lo;
    out << YAML::Key << "hi" << YAML::Value;
    if (std::isinf(m.band.hi)) {
      out << ".inf";
    } else {
      out << m.band.hi;
    }
    out << YAML::Key << "n" << YAML::Value << m.n;
    for (const auto& [key, value] : {std::pair{"mae", m.mae}, {"mse", m.mse}, {"raw_mse", m.raw_mse}}) {
      out << YAML::Key << key << YAML::Value;
      if (value) {
        out << *value;
      } else {
        out << YAML::Null;
      }
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
}

void emit_sequence(YAML::Emitter& out, const std::vector<double>& xs) {
  out << YAML::Flow << YAML::BeginSeq;
  for (double x : xs) out << x;
  out << YAML::EndSeq;
}

std::string fixed(double x, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << x;
  return s.str();
}

}  // namespace

Split load_embedding_split(const std::filesystem::path& path) {
  const io::Container c = io::read_container(path);
  Split split;
  split.embeddings = io::embeddings_from(c.require(io::tags::kEmbImg));
  const std::vector<int> counts = io::integers_from(c.require(io::tags::kCounts));
  if (counts.size() != split.embeddings.size()) {
    throw Error(ErrorCode::kLengthMismatch, path.string() + ": EMB_IMG and COUNTS row counts differ");
  }
  std::vector<io::ExpertRecord> experts;
  if (const io::Section* e = c.find(io::tags::kExperts)) {
    experts = io::experts_from(*e);
    if (experts.size() != counts.size()) {
      throw Error(ErrorCode::kLengthMismatch, path.string() + ": EXPERTS and COUNTS row counts differ");
    }
  }
  split.samples.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    toy::CountSample& s = split.samples[i];
    s.true_count = counts[i];
    if (experts.empty()) {
      s.id = i;
      s.annotation = RoughAnnotation{counts[i], {counts[i]}, counts[i], counts[i]};
    } else {
      s.id = experts[i].id;
      s.annotation = experts[i].annotation;
    }
  }
  return split;
}

TableTextProvider load_text_table(const std::filesystem::path& path, std::string prompt_template) {
  const io::Container c = io::read_container(path);
  const std::vector<int> labels = io::integers_from(c.require(io::tags::kLabels));
  return TableTextProvider(labels, io::embeddings_from(c.require(io::tags::kEmbTxt)),
                           std::move(prompt_template));
}

std::vector<io::Section> checkpoint_sections(const toy::ToyImageEncoder& encoder,
                                             const TextEmbeddingProvider& text) {
  std::vector<int> labels(kMaxCount + 1);
  std::vector<Embedding> rows;
  rows.reserve(labels.size());
  for (int l = 0; l <= kMaxCount; ++l) {
    labels[static_cast<std::size_t>(l)] = l;
    rows.push_back(text.embed(l));
  }
  std::vector<io::Section> out;
  out.push_back(io::model_section(encoder));
  out.push_back(io::embeddings_section(std::string(io::tags::kEmbTxt), rows));
  out.push_back(io::integers_section(std::string(io::tags::kLabels), labels));
  return out;
}

Splits prepare_data(const ExperimentConfig& cfg) {
  Splits out;
  switch (cfg.data.source) {
    case DataSource::kToy: {
      out.train.samples = toy::gen_dataset(cfg.data.toy, cfg.data.train_size,
                                           derive_seed(cfg.seed, {kTrainDataStream}));
      out.test.samples = toy::gen_dataset(cfg.data.toy, cfg.data.test_size,
                                          derive_seed(cfg.seed, {kTestDataStream}), kTestIdOffset);
      toy::annotate(out.train.samples, cfg.rough_labels);
      toy::annotate(out.test.samples, cfg.rough_labels);
      break;
    }
    case DataSource::kFeatures:
      out.train.samples = io::dataset_from(io::read_container(cfg.data.train_path));
      out.test.samples = io::dataset_from(io::read_container(cfg.data.test_path));
      break;
    case DataSource::kEmbeddings:
      out.train = load_embedding_split(cfg.data.train_path);
      out.test = load_embedding_split(cfg.data.test_path);
      break;
  }
  if (out.test.samples.empty()) throw Error(ErrorCode::kEmpty, "test split is empty");
  return out;
}

TrainedModel train_model(const ExperimentConfig& cfg, std::span<const toy::CountSample> train,
                         std::span<const toy::CountSample> test) {
  if (train.empty()) throw Error(ErrorCode::kEmpty, "training split is empty");
  toy::EncoderShape shape = cfg.model;
  shape.input_dim = train.front().features.size();
  TrainedModel m{toy::ToyImageEncoder::initialize(shape, cfg.seed, cfg.init_gain),
                 toy::NumericTextEmbedder(cfg.model.output_dim, cfg.seed, cfg.text.prompt_template),
                 {}, 0.0};
  if (!test.empty()) {
    const PromptCache cache(m.text);
    const auto emb = toy::embed_samples(m.encoder, test);
    const auto batch = decode_batch(emb, cache, DecodeMode::kProgressive, kFlatRange, cfg.decoder.workers);
    std::vector<double> gts;
    for (const auto& s : test) gts.push_back(s.true_count);
    m.untrained_mae = mae(to_doubles(final_counts(batch)), gts);
  }
  toy::TrainConfig tc = cfg.train;
  tc.train_text = cfg.text.trainable;
  if (tc.batch_size > train.size()) tc.batch_size = train.size();
  m.curve = toy::train(train, m.encoder, m.text, tc, cfg.loss);
  return m;
}

AdapterStore build_adapter(const AdapterConfig& cfg, std::span<const Embedding> embeddings,
                           std::span<const toy::CountSample> samples,
                           const TextEmbeddingProvider& text, std::uint64_t seed) {
  if (embeddings.size() != samples.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one embedding per training sample is required");
  }
  AdapterStore store(cfg);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const int label = sample_training_label(samples[i].annotation,
                                            derive_seed(seed, {kAdapterLabelStream, samples[i].id}));
    store.update(embeddings[i], text.embed(label));
  }
  return store;
}

std::vector<Embedding> perturb_queries(std::span<const Embedding> embeddings,
                                       std::span<const toy::CountSample> samples, double sigma,
                                       std::uint64_t seed) {
  if (embeddings.size() != samples.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one embedding per test sample is required");
  }
  std::vector<Embedding> out;
  out.reserve(embeddings.size());
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    const Embedding unit = l2_normalize(embeddings[i]);
    if (sigma == 0.0) {
      out.push_back(unit);
      continue;
    }
    SplitMix64 rng(derive_seed(seed, {kQueryNoiseStream, samples[i].id}));
    std::vector<double> v(unit.values().begin(), unit.values().end());
    for (double& x : v) x += sigma * rng.normal();
    out.emplace_back(std::move(v));
  }
  return out;
}

std::string predictions_csv(std::span<const PredictionRow> rows) {
  std::ostringstream s;
  s << kPredictionsHeader << '\n';
  for (const PredictionRow& r : rows) {
    s << r.sample_id << ',' << r.gt << ',' << r.rough_lo << ',' << r.rough_hi << ',' << r.pred_flat
      << ',' << r.pred_prog << ',';
    if (r.pred_prog_adapter) s << *r.pred_prog_adapter;
    s << ',' << r.evals << '\n';
  }
  return s.str();
}

DecodeOutcome decode_and_score(std::span<const Embedding> test_embeddings,
                               std::span<const toy::CountSample> test,
                               const TextEmbeddingProvider& text, const AdapterStore* adapter,
                               const DecoderConfig& decoder, std::span<const double> band_edges,
                               std::uint64_t seed) {
  const std::vector<Embedding> queries =
      perturb_queries(test_embeddings, test, decoder.query_noise, seed);
  PromptCache cache(text);
  const int range = decoder.flat_range;
  cache.warm_range(0, range - 1);
  const BatchDecode flat = decode_batch(queries, cache, DecodeMode::kFlat, range, decoder.workers);
  const BatchDecode prog =
      decode_batch(queries, cache, DecodeMode::kProgressive, range, decoder.workers);
  std::optional<BatchDecode> prog_adapter;
  double adapter_elapsed = 0.0;
  if (adapter != nullptr) {
    const auto t0 = Clock::now();
    std::vector<Embedding> refined;
    refined.reserve(queries.size());
    for (const Embedding& q : queries) refined.push_back(adapter->refine(q));
    const double refine_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    prog_adapter = decode_batch(refined, cache, DecodeMode::kProgressive, range, decoder.workers);
    adapter_elapsed = refine_seconds + prog_adapter->elapsed_seconds;
  }

  DecodeOutcome out;
  std::vector<double> gts;
  gts.reserve(test.size());
  for (const auto& s : test) gts.push_back(eval_label(s.annotation));
  const auto bands = bands_from_edges(band_edges);
  auto score = [&](const BatchDecode& b, double elapsed) {
    return evaluate(to_doubles(final_counts(b)), gts, bands, efficiency_stats(b.traces, elapsed));
  };
  out.variants["flat"] = score(flat, flat.elapsed_seconds);
  out.variants["progressive"] = score(prog, prog.elapsed_seconds);
  if (prog_adapter) out.variants["progressive+adapter"] = score(*prog_adapter, adapter_elapsed);

  if (decoder.mode == DecodeMode::kFlat) {
    out.primary_variant = "flat";
  } else {
    out.primary_variant = prog_adapter ? "progressive+adapter" : "progressive";
  }

  out.rows.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    PredictionRow row;
    row.sample_id = test[i].id;
    row.gt = test[i].true_count;
    row.rough_lo = test[i].annotation.lo;
    row.rough_hi = test[i].annotation.hi;
    row.pred_flat = flat.traces[i].final_count;
    row.pred_prog = prog.traces[i].final_count;
    if (prog_adapter) row.pred_prog_adapter = prog_adapter->traces[i].final_count;
    row.evals = decoder.mode == DecodeMode::kFlat ? flat.traces[i].similarity_evaluations
                                                  : prog.traces[i].similarity_evaluations;
    out.rows.push_back(row);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  stage("config", [&] { validate(cfg); });
  ExperimentResult res;
  res.config = cfg;

  Splits data = stage("data", [&] { return prepare_data(cfg); });

  std::optional<TableTextProvider> table;
  std::vector<Embedding> train_emb;
  std::vector<Embedding> test_emb;
  if (cfg.data.source == DataSource::kEmbeddings) {
    table.emplace(stage("data", [&] { return load_text_table(cfg.text.container, cfg.text.prompt_template); }));
    train_emb = std::move(data.train.embeddings);
    test_emb = std::move(data.test.embeddings);
  } else {
    const auto t0 = Clock::now();
    TrainedModel m = stage("train", [&] { return train_model(cfg, data.train.samples, data.test.samples); });
    res.train_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    res.untrained_mae = m.untrained_mae;
    res.epoch_loss = m.curve.epoch_loss;
    res.epoch_eval_loss = m.curve.epoch_eval_loss;
    train_emb = toy::embed_samples(m.encoder, data.train.samples);
    test_emb = toy::embed_samples(m.encoder, data.test.samples);
    res.encoder.emplace(std::move(m.encoder));
    res.text.emplace(std::move(m.text));
  }
  const TextEmbeddingProvider& text =
      table ? static_cast<const TextEmbeddingProvider&>(*table) : *res.text;

  if (cfg.adapter.enabled) {
    res.adapter.emplace(stage("adapter", [&] {
      return build_adapter(cfg.adapter.config, train_emb, data.train.samples, text, cfg.seed);
    }));
    res.adapter_entries = res.adapter->size();
  }

  DecodeOutcome outcome = stage("decode", [&] {
    return decode_and_score(test_emb, data.test.samples, text, res.adapter ? &*res.adapter : nullptr,
                            cfg.decoder, cfg.band_edges, cfg.seed);
  });
  res.variants = std::move(outcome.variants);
  res.primary_variant = std::move(outcome.primary_variant);
  res.rows = std::move(outcome.rows);
  res.report = res.variants.at(res.primary_variant);
  return res;
}

std::string report_yaml(const ExperimentResult& r) {
  YAML::Emitter out;
  out.SetDoublePrecision(10);
  out << YAML::BeginMap;
  out << YAML::Key << "tool_version" << YAML::Value << std::string(kToolVersion);
  out << YAML::Key << "config" << YAML::Value << YAML::Load(emit_config(r.config));
  out << YAML::Key << "primary" << YAML::Value << r.primary_variant;
  out << YAML::Key << "metrics" << YAML::Value;
  emit_report(out, r.report);
  out << YAML::Key << "variants" << YAML::Value << YAML::BeginMap;
  for (const auto& [name, rep] : r.variants) {
    out << YAML::Key << name << YAML::Value;
    emit_report(out, rep);
  }
  out << YAML::EndMap;
  out << YAML::Key << "untrained_mae" << YAML::Value;
  if (r.untrained_mae) {
    out << *r.untrained_mae;
  } else {
    out << YAML::Null;
  }
  out << YAML::Key << "training" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "seconds" << YAML::Value << r.train_seconds;
  out << YAML::Key << "epoch_loss" << YAML::Value;
  emit_sequence(out, r.epoch_loss);
  out << YAML::Key << "epoch_eval_loss" << YAML::Value;
  emit_sequence(out, r.epoch_eval_loss);
  out << YAML::EndMap;
  out << YAML::Key << "adapter_entries" << YAML::Value << r.adapter_entries;
  out << YAML::Key << "test_samples" << YAML::Value << r.rows.size();
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::vector<std::filesystem::path> write_artifacts(const ExperimentResult& r) {
  const std::filesystem::path dir(r.config.output.dir);
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto write_text = [&](const std::string& name, const std::string& body) {
    const auto path = dir / name;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    f << body;
    written.push_back(path);
  };
  write_text(r.config.output.report, report_yaml(r));
  write_text(r.config.output.predictions, predictions_csv(r.rows));
  if (r.encoder && r.text) {
    const auto path = dir / r.config.output.checkpoint;
    io::write_container(path, checkpoint_sections(*r.encoder, *r.text));
    written.push_back(path);
  }
  if (r.adapter) {
    const auto path = dir / r.config.output.adapter;
    const io::Section s = io::adapter_section(*r.adapter);
    io::write_container(path, std::span<const io::Section>(&s, 1));
    written.push_back(path);
  }
  return written;
}

std::vector<AblationRow> rough_label_sweep(const ExperimentConfig& cfg,
                                           std::span<const double> error_pcts) {
  if (cfg.data.source != DataSource::kToy) {
    throw Error(ErrorCode::kConfig, "the rough-label sweep re-annotates toy data; set data.source: toy");
  }
  std::vector<AblationRow> rows;
  for (double p : error_pcts) {
    ExperimentConfig c = cfg;
    c.rough_labels.error_pct = p;
    const ExperimentResult r = run_experiment(c);
    rows.push_back(AblationRow{"rough_labels", "p=" + fixed(p, 2), p, r.primary_variant, r.report.mae,
                               r.report.mse, r.report.similarity_evals_per_sample,
                               r.report.decodes_per_sec});
  }
  return rows;
}

std::vector<AblationRow> decoder_sweep(const ExperimentConfig& cfg) {
  ExperimentConfig baseline = cfg;
  baseline.loss.stage_weights = {0.0, 0.0, 1.0};
  baseline.decoder.mode = DecodeMode::kFlat;
  baseline.adapter.enabled = false;
  const ExperimentResult b = run_experiment(baseline);

  ExperimentConfig pel = cfg;
  pel.decoder.mode = DecodeMode::kProgressive;
  pel.adapter.enabled = true;
  const ExperimentResult p = run_experiment(pel);

  auto row = [&](const std::string& name, const EvalReport& r) {
    return AblationRow{"decoder", name, cfg.rough_labels.error_pct, name, r.mae, r.mse,
                       r.similarity_evals_per_sample, r.decodes_per_sec};
  };
  return {row("flat", b.variants.at("flat")), row("progressive", p.variants.at("progressive")),
          row("progressive+adapter", p.variants.at("progressive+adapter"))};
}

std::string ablation_csv(std::span<const AblationRow> rows) {
  std::ostringstream s;
  s << "sweep,setting,error_pct,decoder,mae,mse,evals_per_sample,decodes_per_sec\n";
  for (const AblationRow& r : rows) {
    s << r.sweep << ',' << r.setting << ',' << fixed(r.error_pct, 2) << ',' << r.decoder << ','
      << fixed(r.mae, 4) << ',' << fixed(r.mse, 4) << ',' << fixed(r.evals_per_sample, 1) << ','
      << fixed(r.decodes_per_sec, 1) << '\n';
  }
  return s.str();
}

std::string ablation_yaml(std::span<const AblationRow> rows, const ExperimentConfig& cfg) {
  YAML::Emitter out;
  out.SetDoublePrecision(10);
  out << YAML::BeginMap;
  out << YAML::Key << "tool_version" << YAML::Value << std::string(kToolVersion);
  out << YAML::Key << "config" << YAML::Value << YAML::Load(emit_config(cfg));
  out << YAML::Key << "rows" << YAML::Value << YAML::BeginSeq;
  for (const AblationRow& r : rows) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "sweep" << YAML::Value << r.sweep;
    out << YAML::Key << "setting" << YAML::Value << r.setting;
    out << YAML::Key << "error_pct" << YAML::Value << r.error_pct;
    out << YAML::Key << "decoder" << YAML::Value << r.decoder;
    out << YAML::Key << "mae" << YAML::Value << r.mae;
    out << YAML::Key << "mse" << YAML::Value << r.mse;
    out << YAML::Key << "evals_per_sample" << YAML::Value << r.evals_per_sample;
    out << YAML::Key << "decodes_per_sec" << YAML::Value << r.decodes_per_sec;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace roughcount
