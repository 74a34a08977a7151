#include "roughcount/experiment_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "roughcount/error.hpp"
#include "roughcount/eval_metrics.hpp"

namespace roughcount {
namespace {

class Reader {
 public:
  explicit Reader(std::string_view source) : source_(source) {}

  [[noreturn]] void fail(const YAML::Mark& mark, const std::string& msg) const {
    std::ostringstream s;
    s << source_;
    if (!mark.is_null()) s << ':' << mark.line + 1 << ':' << mark.column + 1;
    s << ": " << msg;
    throw Error(ErrorCode::kConfig, s.str());
  }

  /// `node` must be a map whose keys all appear in `allowed`.
  void expect_map(const YAML::Node& node, std::string_view where,
                  std::initializer_list<std::string_view> allowed) const {
    if (!node.IsMap()) fail(node.Mark(), std::string(where) + " must be a mapping");
    for (auto it = node.begin(); it != node.end(); ++it) {
      const std::string key = it->first.Scalar();
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        std::string hint;
        for (auto a : allowed) hint += (hint.empty() ? "" : ", ") + std::string(a);
        fail(it->first.Mark(), "unknown key '" + key + "' in " + std::string(where) +
                                   " (allowed: " + hint + ")");
      }
    }
  }

  template <typename T>
  bool get(const YAML::Node& map, const char* key, T& out, const char* type_name) const {
    const YAML::Node v = map[key];
    if (!v) return false;
    if (!v.IsScalar()) fail(v.Mark(), std::string("'") + key + "' must be a " + type_name);
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      fail(v.Mark(), std::string("'") + key + "' must be a " + type_name + ", got '" + v.Scalar() +
                         "'");
    }
    return true;
  }

  void get_count(const YAML::Node& map, const char* key, std::size_t& out) const {
    std::uint64_t v = 0;
    if (get(map, key, v, "non-negative integer")) out = static_cast<std::size_t>(v);
  }

  void get_real(const YAML::Node& map, const char* key, double& out) const {
    if (get(map, key, out, "number") && !std::isfinite(out)) {
      fail(map[key].Mark(), std::string("'") + key + "' must be finite");
    }
  }

  template <typename E>
  void get_enum(const YAML::Node& map, const char* key, E& out,
                std::initializer_list<std::pair<std::string_view, E>> names) const {
    std::string s;
    if (!get(map, key, s, "string")) return;
    for (const auto& [name, value] : names) {
      if (name == s) {
        out = value;
        return;
      }
    }
    std::string hint;
    for (const auto& n : names) hint += (hint.empty() ? "" : ", ") + std::string(n.first);
    fail(map[key].Mark(), std::string("'") + key + "' must be one of: " + hint);
  }

  std::vector<double> get_reals(const YAML::Node& map, const char* key) const {
    const YAML::Node v = map[key];
    if (!v.IsSequence()) fail(v.Mark(), std::string("'") + key + "' must be a list of numbers");
    std::vector<double> out;
    for (const auto& item : v) {
      try {
        out.push_back(item.as<double>());
      } catch (const YAML::Exception&) {
        fail(item.Mark(), std::string("'") + key + "' entries must be numbers");
      }
    }
    return out;
  }

  /// Runs a module validator and re-raises its message at `node`.
  template <typename F>
  void check(const YAML::Node& node, std::string_view where, F&& validator) const {
    try {
      validator();
    } catch (const Error& e) {
      fail(node.Mark(), std::string(where) + ": " + e.what());
    }
  }

 private:
  std::string source_;
};

constexpr std::pair<std::string_view, DataSource> kSources[] = {
    {"toy", DataSource::kToy}, {"features", DataSource::kFeatures}, {"embeddings", DataSource::kEmbeddings}};

}  // namespace

std::string_view to_string(DataSource s) {
  for (const auto& [name, value] : kSources) {
    if (value == s) return name;
  }
  return "?";
}

void ExperimentConfig::set_seed(std::uint64_t s) {
  seed = s;
  data.toy.world_seed = s;
  rough_labels.seed = s;
  train.seed = s;
}

void validate(const ExperimentConfig& cfg) {
  validate(cfg.data.toy);
  validate(cfg.rough_labels);
  validate(cfg.loss);
  validate(cfg.train);
  validate(cfg.adapter.config);
  (void)bands_from_edges(cfg.band_edges);  // throws unless the edges partition [0, inf)
  if (cfg.data.source == DataSource::kToy) {
    if (cfg.data.train_size == 0 || cfg.data.test_size == 0) {
      throw Error(ErrorCode::kConfig, "data: train_size and test_size must be >= 1");
    }
    if (cfg.train.batch_size > cfg.data.train_size) {
      throw Error(ErrorCode::kConfig, "train: batch_size exceeds data.train_size");
    }
  } else if (cfg.data.train_path.empty() || cfg.data.test_path.empty()) {
    throw Error(ErrorCode::kConfig, "data: train_path and test_path are required for source " +
                                        std::string(to_string(cfg.data.source)));
  }
  if (cfg.data.source == DataSource::kEmbeddings && cfg.text.container.empty()) {
    throw Error(ErrorCode::kConfig, "text: container is required for the embeddings source");
  }
  if (cfg.decoder.flat_range < 1 || cfg.decoder.flat_range > kFlatRange) {
    throw Error(ErrorCode::kConfig, "decoder: flat_range must be in [1, 1000]");
  }
  if (!(cfg.decoder.query_noise >= 0.0)) {
    throw Error(ErrorCode::kConfig, "decoder: query_noise must be >= 0");
  }
  if (cfg.decoder.workers < 1) throw Error(ErrorCode::kConfig, "decoder: workers must be >= 1");
  if (!(cfg.init_gain > 0.0)) throw Error(ErrorCode::kConfig, "model: init_gain must be > 0");
}

ExperimentConfig parse_config(std::string_view text, std::string_view source) {
  const Reader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    r.fail(e.mark, e.msg);
  }

  ExperimentConfig cfg;
  if (!root || root.IsNull()) {
    cfg.set_seed(cfg.seed);
    return cfg;
  }
  r.expect_map(root, "config", {"seed", "data", "rough_labels", "loss", "model", "text", "train",
                                "decoder", "adapter", "eval", "output"});

  std::uint64_t seed = cfg.seed;
  r.get(root, "seed", seed, "non-negative integer");
  cfg.set_seed(seed);

  if (const YAML::Node n = root["data"]) {
    r.expect_map(n, "data", {"source", "train_size", "test_size", "count_min", "count_max",
                             "input_dim", "noise_scale", "object_scale", "object_jitter",
                             "object_pool", "train_path", "test_path"});
    auto& d = cfg.data;
    r.get_enum(n, "source", d.source,
               {kSources[0], kSources[1], kSources[2]});
    r.get_count(n, "train_size", d.train_size);
    r.get_count(n, "test_size", d.test_size);
    r.get(n, "count_min", d.toy.count_min, "integer");
    r.get(n, "count_max", d.toy.count_max, "integer");
    r.get_count(n, "input_dim", d.toy.input_dim);
    r.get_real(n, "noise_scale", d.toy.noise_scale);
    r.get_real(n, "object_scale", d.toy.object_scale);
    r.get_real(n, "object_jitter", d.toy.object_jitter);
    r.get_count(n, "object_pool", d.toy.object_pool);
    r.get(n, "train_path", d.train_path, "string");
    r.get(n, "test_path", d.test_path, "string");
    r.check(n, "data", [&] { validate(d.toy); });
  }
  cfg.model.input_dim = cfg.data.toy.input_dim;

  if (const YAML::Node n = root["rough_labels"]) {
    r.expect_map(n, "rough_labels", {"error_pct", "experts"});
    r.get_real(n, "error_pct", cfg.rough_labels.error_pct);
    r.get(n, "experts", cfg.rough_labels.experts, "integer");
    r.check(n, "rough_labels", [&] { validate(cfg.rough_labels); });
  }

  if (const YAML::Node n = root["loss"]) {
    r.expect_map(n, "loss", {"temperature", "stage_weights", "multi_positive_mask"});
    r.get_real(n, "temperature", cfg.loss.temperature);
    if (n["stage_weights"]) {
      const auto w = r.get_reals(n, "stage_weights");
      if (w.size() != kStageCount) {
        r.fail(n["stage_weights"].Mark(), "'stage_weights' needs exactly 3 entries");
      }
      std::copy(w.begin(), w.end(), cfg.loss.stage_weights.begin());
    }
    r.get(n, "multi_positive_mask", cfg.loss.multi_positive_mask, "boolean");
    r.check(n, "loss", [&] { validate(cfg.loss); });
  }

  if (const YAML::Node n = root["model"]) {
    r.expect_map(n, "model", {"kind", "hidden_dim", "output_dim", "activation", "init_gain"});
    r.get_enum(n, "kind", cfg.model.kind,
               {{"affine", toy::EncoderKind::kAffine}, {"mlp", toy::EncoderKind::kMlp}});
    r.get_count(n, "hidden_dim", cfg.model.hidden_dim);
    r.get_count(n, "output_dim", cfg.model.output_dim);
    r.get_enum(n, "activation", cfg.model.activation, {{"tanh", toy::Activation::kTanh}});
    r.get_real(n, "init_gain", cfg.init_gain);
    if (cfg.model.output_dim == 0 ||
        (cfg.model.kind == toy::EncoderKind::kMlp && cfg.model.hidden_dim == 0)) {
      r.fail(n.Mark(), "model: dimensions must be >= 1");
    }
  }

  if (const YAML::Node n = root["text"]) {
    r.expect_map(n, "text", {"template", "trainable", "container"});
    r.get(n, "template", cfg.text.prompt_template, "string");
    r.get(n, "trainable", cfg.text.trainable, "boolean");
    r.get(n, "container", cfg.text.container, "string");
  }
  cfg.train.train_text = cfg.text.trainable;

  if (const YAML::Node n = root["train"]) {
    r.expect_map(n, "train", {"batch_size", "learning_rate", "epochs", "optimizer", "cosine_decay"});
    r.get_count(n, "batch_size", cfg.train.batch_size);
    r.get_real(n, "learning_rate", cfg.train.learning_rate);
    r.get(n, "epochs", cfg.train.epochs, "integer");
    r.get_enum(n, "optimizer", cfg.train.optimizer,
               {{"sgd", toy::OptimizerKind::kSgd}, {"adam", toy::OptimizerKind::kAdam}});
    r.get(n, "cosine_decay", cfg.train.cosine_decay, "boolean");
    r.check(n, "train", [&] { validate(cfg.train); });
  }

  if (const YAML::Node n = root["decoder"]) {
    r.expect_map(n, "decoder", {"mode", "flat_range", "query_noise", "workers"});
    r.get_enum(n, "mode", cfg.decoder.mode,
               {{"flat", DecodeMode::kFlat}, {"progressive", DecodeMode::kProgressive}});
    r.get(n, "flat_range", cfg.decoder.flat_range, "integer");
    r.get_real(n, "query_noise", cfg.decoder.query_noise);
    r.get(n, "workers", cfg.decoder.workers, "positive integer");
  }

  if (const YAML::Node n = root["adapter"]) {
    r.expect_map(n, "adapter", {"enabled", "capacity", "delta", "lambda"});
    r.get(n, "enabled", cfg.adapter.enabled, "boolean");
    r.get_count(n, "capacity", cfg.adapter.config.capacity);
    r.get_real(n, "delta", cfg.adapter.config.delta);
    r.get_real(n, "lambda", cfg.adapter.config.lambda);
    r.check(n, "adapter", [&] { validate(cfg.adapter.config); });
  }

  if (const YAML::Node n = root["eval"]) {
    r.expect_map(n, "eval", {"bands"});
    if (n["bands"]) {
      cfg.band_edges = r.get_reals(n, "bands");
      r.check(n["bands"], "eval.bands", [&] { (void)bands_from_edges(cfg.band_edges); });
    }
  }

  if (const YAML::Node n = root["output"]) {
    r.expect_map(n, "output", {"dir", "report", "predictions", "checkpoint", "adapter"});
    r.get(n, "dir", cfg.output.dir, "string");
    r.get(n, "report", cfg.output.report, "string");
    r.get(n, "predictions", cfg.output.predictions, "string");
    r.get(n, "checkpoint", cfg.output.checkpoint, "string");
    r.get(n, "adapter", cfg.output.adapter, "string");
  }

  try {
    validate(cfg);
  } catch (const Error& e) {
    r.fail(YAML::Mark::null_mark(), e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

std::string emit_config(const ExperimentConfig& cfg) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << cfg.seed;

  const auto& d = cfg.data;
  out << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "source" << YAML::Value << std::string(to_string(d.source));
  out << YAML::Key << "train_size" << YAML::Value << d.train_size;
  out << YAML::Key << "test_size" << YAML::Value << d.test_size;
  out << YAML::Key << "count_min" << YAML::Value << d.toy.count_min;
  out << YAML::Key << "count_max" << YAML::Value << d.toy.count_max;
  out << YAML::Key << "input_dim" << YAML::Value << d.toy.input_dim;
  out << YAML::Key << "noise_scale" << YAML::Value << d.toy.noise_scale;
  out << YAML::Key << "object_scale" << YAML::Value << d.toy.object_scale;
  out << YAML::Key << "object_jitter" << YAML::Value << d.toy.object_jitter;
  out << YAML::Key << "object_pool" << YAML::Value << d.toy.object_pool;
  out << YAML::Key << "train_path" << YAML::Value << d.train_path;
  out << YAML::Key << "test_path" << YAML::Value << d.test_path;
  out << YAML::EndMap;

  out << YAML::Key << "rough_labels" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "error_pct" << YAML::Value << cfg.rough_labels.error_pct;
  out << YAML::Key << "experts" << YAML::Value << cfg.rough_labels.experts;
  out << YAML::EndMap;

  out << YAML::Key << "loss" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "temperature" << YAML::Value << cfg.loss.temperature;
  out << YAML::Key << "stage_weights" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double w : cfg.loss.stage_weights) out << w;
  out << YAML::EndSeq;
  out << YAML::Key << "multi_positive_mask" << YAML::Value << cfg.loss.multi_positive_mask;
  out << YAML::EndMap;

  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << std::string(toy::to_string(cfg.model.kind));
  out << YAML::Key << "hidden_dim" << YAML::Value << cfg.model.hidden_dim;
  out << YAML::Key << "output_dim" << YAML::Value << cfg.model.output_dim;
  out << YAML::Key << "activation" << YAML::Value << "tanh";
  out << YAML::Key << "init_gain" << YAML::Value << cfg.init_gain;
  out << YAML::EndMap;

  out << YAML::Key << "text" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "template" << YAML::Value << YAML::DoubleQuoted << cfg.text.prompt_template;
  out << YAML::Key << "trainable" << YAML::Value << cfg.text.trainable;
  out << YAML::Key << "container" << YAML::Value << cfg.text.container;
  out << YAML::EndMap;

  out << YAML::Key << "train" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "batch_size" << YAML::Value << cfg.train.batch_size;
  out << YAML::Key << "learning_rate" << YAML::Value << cfg.train.learning_rate;
  out << YAML::Key << "epochs" << YAML::Value << cfg.train.epochs;
  out << YAML::Key << "optimizer" << YAML::Value
      << (cfg.train.optimizer == toy::OptimizerKind::kAdam ? "adam" : "sgd");
  out << YAML::Key << "cosine_decay" << YAML::Value << cfg.train.cosine_decay;
  out << YAML::EndMap;

  out << YAML::Key << "decoder" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mode" << YAML::Value
      << (cfg.decoder.mode == DecodeMode::kFlat ? "flat" : "progressive");
  out << YAML::Key << "flat_range" << YAML::Value << cfg.decoder.flat_range;
  out << YAML::Key << "query_noise" << YAML::Value << cfg.decoder.query_noise;
  out << YAML::Key << "workers" << YAML::Value << cfg.decoder.workers;
  out << YAML::EndMap;

  out << YAML::Key << "adapter" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "enabled" << YAML::Value << cfg.adapter.enabled;
  out << YAML::Key << "capacity" << YAML::Value << cfg.adapter.config.capacity;
  out << YAML::Key << "delta" << YAML::Value << cfg.adapter.config.delta;
  out << YAML::Key << "lambda" << YAML::Value << cfg.adapter.config.lambda;
  out << YAML::EndMap;

  out << YAML::Key << "eval" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "bands" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double e : cfg.band_edges) out << e;
  out << YAML::EndSeq << YAML::EndMap;

  out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dir" << YAML::Value << cfg.output.dir;
  out << YAML::Key << "report" << YAML::Value << cfg.output.report;
  out << YAML::Key << "predictions" << YAML::Value << cfg.output.predictions;
  out << YAML::Key << "checkpoint" << YAML::Value << cfg.output.checkpoint;
  out << YAML::Key << "adapter" << YAML::Value << cfg.output.adapter;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace roughcount
