// roughcount: command-line front end for the counting toolkit.
//
//   roughcount [--config PATH] [--seed N] [--out DIR] [--format csv|structured-text] <command>
//
// Commands: gen-data, train, build-adapter, decode, eval, ablate, inspect-container.
// Exit status: 0 on success, 1 on a library error, 2 on bad usage.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include "roughcount/artifacts.hpp"
#include "roughcount/error.hpp"
#include "roughcount/exchange_io.hpp"
#include "roughcount/experiment.hpp"
#include "roughcount/experiment_config.hpp"
#include "roughcount/toy/trainer.hpp"

namespace fs = std::filesystem;
using namespace roughcount;

namespace {

enum class Format { kCsv, kStructured };

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  Format format = Format::kStructured;
};

ExperimentConfig resolve(const Globals& g) {
  ExperimentConfig cfg = g.config_path.empty() ? parse_config("") : load_config(g.config_path);
  if (g.seed) cfg.set_seed(*g.seed);
  if (!g.out_dir.empty()) cfg.output.dir = g.out_dir;
  validate(cfg);
  return cfg;
}

fs::path out_dir(const ExperimentConfig& cfg) {
  fs::path dir(cfg.output.dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  f << body;
}

std::string metrics_csv(const std::map<std::string, EvalReport>& variants) {
  std::ostringstream s;
  s << "variant,mae,mse,raw_mse,evals_per_sample,decodes_per_sec\n";
  for (const auto& [name, r] : variants) {
    s << name << ',' << r.mae << ',' << r.mse << ',' << r.raw_mse << ','
      << r.similarity_evals_per_sample << ',' << r.decodes_per_sec << '\n';
  }
  return s.str();
}

std::string metrics_yaml(const std::map<std::string, EvalReport>& variants, const std::string& primary) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "tool_version" << YAML::Value << std::string(kToolVersion);
  out << YAML::Key << "primary" << YAML::Value << primary;
  out << YAML::Key << "variants" << YAML::Value << YAML::BeginMap;
  for (const auto& [name, r] : variants) {
    out << YAML::Key << name << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "mae" << YAML::Value << r.mae;
    out << YAML::Key << "mse" << YAML::Value << r.mse;
    out << YAML::Key << "evals_per_sample" << YAML::Value << r.similarity_evals_per_sample;
    out << YAML::EndMap;
  }
  out << YAML::EndMap << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

// ---- gen-data -------------------------------------------------------------

int cmd_gen_data(const Globals& g) {
  ExperimentConfig cfg = resolve(g);
  cfg.data.source = DataSource::kToy;
  const Splits data = prepare_data(cfg);
  const fs::path dir = out_dir(cfg);
  const auto train_bytes = io::write_container(dir / "train.prcc", io::dataset_sections(data.train.samples));
  const auto test_bytes = io::write_container(dir / "test.prcc", io::dataset_sections(data.test.samples));
  if (g.format == Format::kCsv) {
    std::cout << "split,path,samples,bytes\n"
              << "train," << (dir / "train.prcc").string() << ',' << data.train.samples.size() << ','
              << train_bytes << '\n'
              << "test," << (dir / "test.prcc").string() << ',' << data.test.samples.size() << ','
              << test_bytes << '\n';
  } else {
    std::cout << "train: {path: " << (dir / "train.prcc").string() << ", samples: "
              << data.train.samples.size() << ", bytes: " << train_bytes << "}\n"
              << "test: {path: " << (dir / "test.prcc").string() << ", samples: "
              << data.test.samples.size() << ", bytes: " << test_bytes << "}\n";
  }
  return 0;
}

// ---- train ----------------------------------------------------------------

int cmd_train(const Globals& g) {
  const ExperimentConfig cfg = resolve(g);
  if (cfg.data.source == DataSource::kEmbeddings) {
    throw Error(ErrorCode::kConfig, "train needs raw features; data.source is embeddings");
  }
  const Splits data = prepare_data(cfg);
  const TrainedModel m = train_model(cfg, data.train.samples, data.test.samples);
  const fs::path path = out_dir(cfg) / cfg.output.checkpoint;
  io::write_container(path, checkpoint_sections(m.encoder, m.text));
  if (g.format == Format::kCsv) {
    std::cout << "epoch,loss,eval_loss\n";
    for (std::size_t e = 0; e < m.curve.epoch_loss.size(); ++e) {
      std::cout << e << ',' << m.curve.epoch_loss[e] << ',' << m.curve.epoch_eval_loss[e] << '\n';
    }
  } else {
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "checkpoint" << YAML::Value << path.string();
    out << YAML::Key << "steps" << YAML::Value << m.curve.steps;
    out << YAML::Key << "untrained_mae" << YAML::Value << m.untrained_mae;
    out << YAML::Key << "epoch_loss" << YAML::Value << YAML::Flow << m.curve.epoch_loss;
    out << YAML::Key << "epoch_eval_loss" << YAML::Value << YAML::Flow << m.curve.epoch_eval_loss;
    out << YAML::EndMap;
    std::cout << out.c_str() << '\n';
  }
  return 0;
}

// ---- shared loading for build-adapter and decode --------------------------

struct Loaded {
  Split split;
  std::unique_ptr<TableTextProvider> text;
};

// Embeddings come straight from an EMB_IMG container, or from FEATURES run
// through the checkpoint's encoder. Text comes from --text, else the
// checkpoint's EMB_TXT rows.
Loaded load_split(const std::string& data_path, const std::string& model_path,
                  const std::string& text_path, const std::string& prompt_template) {
  const io::Container data = io::read_container(data_path);
  Loaded out;
  std::optional<io::Container> model;
  if (!model_path.empty()) model = io::read_container(model_path);

  if (data.find(io::tags::kEmbImg) != nullptr) {
    out.split = load_embedding_split(data_path);
  } else {
    if (!model) {
      throw Error(ErrorCode::kInvalidArgument,
                  data_path + " holds raw features; pass --model to embed them");
    }
    const toy::ToyImageEncoder encoder = io::model_from(model->require(io::tags::kModel));
    out.split.samples = io::dataset_from(data);
    out.split.embeddings = toy::embed_samples(encoder, out.split.samples);
  }

  if (!text_path.empty()) {
    out.text = std::make_unique<TableTextProvider>(load_text_table(text_path, prompt_template));
  } else if (model) {
    out.text = std::make_unique<TableTextProvider>(
        io::integers_from(model->require(io::tags::kLabels)),
        io::embeddings_from(model->require(io::tags::kEmbTxt)), prompt_template);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "no text embeddings: pass --text or --model");
  }
  return out;
}

// ---- build-adapter --------------------------------------------------------

struct AdapterArgs {
  std::string data;
  std::string model;
  std::string text;
};

int cmd_build_adapter(const Globals& g, const AdapterArgs& a) {
  const ExperimentConfig cfg = resolve(g);
  const Loaded in = load_split(a.data, a.model, a.text, cfg.text.prompt_template);
  const AdapterStore store =
      build_adapter(cfg.adapter.config, in.split.embeddings, in.split.samples, *in.text, cfg.seed);
  const fs::path path = out_dir(cfg) / cfg.output.adapter;
  const io::Section s = io::adapter_section(store);
  const auto bytes = io::write_container(path, std::span<const io::Section>(&s, 1));
  if (g.format == Format::kCsv) {
    std::cout << "path,entries,step_counter,bytes\n"
              << path.string() << ',' << store.size() << ',' << store.step_counter() << ',' << bytes
              << '\n';
  } else {
    std::cout << "adapter: {path: " << path.string() << ", entries: " << store.size()
              << ", step_counter: " << store.step_counter() << ", bytes: " << bytes << "}\n";
  }
  return 0;
}

// ---- decode ---------------------------------------------------------------

struct DecodeArgs {
  std::string data;
  std::string model;
  std::string text;
  std::string adapter;
  std::optional<std::string> mode;
  std::optional<double> noise;
};

int cmd_decode(const Globals& g, const DecodeArgs& a) {
  ExperimentConfig cfg = resolve(g);
  if (a.mode) cfg.decoder.mode = *a.mode == "flat" ? DecodeMode::kFlat : DecodeMode::kProgressive;
  if (a.noise) cfg.decoder.query_noise = *a.noise;
  const Loaded in = load_split(a.data, a.model, a.text, cfg.text.prompt_template);
  std::optional<AdapterStore> store;
  if (!a.adapter.empty()) {
    store = io::adapter_from(io::read_container(a.adapter).require(io::tags::kAdapter));
  }
  const DecodeOutcome out = decode_and_score(in.split.embeddings, in.split.samples, *in.text,
                                             store ? &*store : nullptr, cfg.decoder,
                                             cfg.band_edges, cfg.seed);
  const fs::path path = out_dir(cfg) / cfg.output.predictions;
  write_text(path, predictions_csv(out.rows));
  std::cout << (g.format == Format::kCsv ? metrics_csv(out.variants)
                                         : metrics_yaml(out.variants, out.primary_variant));
  return 0;
}

// ---- eval -----------------------------------------------------------------

int cmd_eval(const Globals& g) {
  const ExperimentConfig cfg = resolve(g);
  const ExperimentResult r = run_experiment(cfg);
  const auto written = write_artifacts(r);
  if (g.format == Format::kCsv) {
    std::cout << metrics_csv(r.variants);
  } else {
    std::cout << report_yaml(r);
  }
  for (const auto& p : written) std::cerr << "wrote " << p.string() << '\n';
  return 0;
}

// ---- ablate ---------------------------------------------------------------

int cmd_ablate(const Globals& g, const std::string& sweep) {
  const ExperimentConfig cfg = resolve(g);
  std::vector<AblationRow> rows;
  if (sweep == "rough-labels" || sweep == "all") {
    const auto r = rough_label_sweep(cfg);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (sweep == "decoder" || sweep == "all") {
    const auto r = decoder_sweep(cfg);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  const fs::path dir = out_dir(cfg);
  write_text(dir / "ablation.csv", ablation_csv(rows));
  write_text(dir / "ablation.yaml", ablation_yaml(rows, cfg));
  std::cout << (g.format == Format::kCsv ? ablation_csv(rows) : ablation_yaml(rows, cfg));
  return 0;
}

// ---- inspect-container ----------------------------------------------------

int cmd_inspect(const Globals& g, const std::string& path) {
  const std::vector<std::byte> bytes = io::read_file(path);
  const io::Container c = io::decode(bytes);
  if (g.format == Format::kCsv) {
    std::cout << "tag,dtype,rows,dim,payload_bytes\n";
    for (const io::Section& s : c.sections) {
      std::cout << s.tag << ',' << io::to_string(s.dtype) << ',' << s.rows << ',' << s.dim << ','
                << s.payload.size() << '\n';
    }
    for (const std::string& t : c.skipped_tags) std::cout << t << ",skipped,,,\n";
    return 0;
  }
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "path" << YAML::Value << path;
  out << YAML::Key << "bytes" << YAML::Value << bytes.size();
  out << YAML::Key << "version" << YAML::Value << io::kFormatVersion;
  out << YAML::Key << "sections" << YAML::Value << YAML::BeginSeq;
  for (const io::Section& s : c.sections) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "tag" << YAML::Value << s.tag;
    out << YAML::Key << "dtype" << YAML::Value << std::string(io::to_string(s.dtype));
    out << YAML::Key << "rows" << YAML::Value << s.rows;
    out << YAML::Key << "dim" << YAML::Value << s.dim;
    out << YAML::Key << "payload_bytes" << YAML::Value << s.payload.size();
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "skipped" << YAML::Value << YAML::Flow << c.skipped_tags;
  out << YAML::EndMap;
  std::cout << out.c_str() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Progressive digit-wise crowd counting toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kToolVersion));

  Globals g;
  std::string format = "structured-text";
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "Experiment config (YAML)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Override the top-level seed");
  app.add_option("--out", g.out_dir, "Output directory (overrides output.dir)");
  app.add_option("--format", format, "Console output format")
      ->check(CLI::IsMember({"csv", "structured-text"}));

  auto* gen = app.add_subcommand("gen-data", "Write toy train/test splits as containers");
  auto* train = app.add_subcommand("train", "Train the toy encoder and write a checkpoint");

  AdapterArgs adapter_args;
  auto* build = app.add_subcommand("build-adapter", "Populate an adapter store from a train split");
  build->add_option("--data", adapter_args.data, "Train split container")->required()->check(CLI::ExistingFile);
  build->add_option("--model", adapter_args.model, "Checkpoint container")->check(CLI::ExistingFile);
  build->add_option("--text", adapter_args.text, "EMB_TXT + LABELS container")->check(CLI::ExistingFile);

  DecodeArgs decode_args;
  auto* decode = app.add_subcommand("decode", "Decode a split and write per-sample predictions");
  decode->add_option("--data", decode_args.data, "Test split container")->required()->check(CLI::ExistingFile);
  decode->add_option("--model", decode_args.model, "Checkpoint container")->check(CLI::ExistingFile);
  decode->add_option("--text", decode_args.text, "EMB_TXT + LABELS container")->check(CLI::ExistingFile);
  decode->add_option("--adapter", decode_args.adapter, "Adapter container")->check(CLI::ExistingFile);
  decode->add_option("--mode", decode_args.mode, "Primary decoder")->check(CLI::IsMember({"flat", "progressive"}));
  decode->add_option("--noise", decode_args.noise, "Query noise sigma");

  auto* eval = app.add_subcommand("eval", "Run the full experiment and write its report");

  std::string sweep = "all";
  auto* ablate = app.add_subcommand("ablate", "Rough-label and decoder ablation sweeps");
  ablate->add_option("--sweep", sweep, "Which sweep to run")
      ->check(CLI::IsMember({"rough-labels", "decoder", "all"}));

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect-container", "List the sections of a container");
  inspect->add_option("path", inspect_path, "Container file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (*seed_opt) g.seed = seed;
  g.format = format == "csv" ? Format::kCsv : Format::kStructured;

  try {
    if (*gen) return cmd_gen_data(g);
    if (*train) return cmd_train(g);
    if (*build) return cmd_build_adapter(g, adapter_args);
    if (*decode) return cmd_decode(g, decode_args);
    if (*eval) return cmd_eval(g);
    if (*ablate) return cmd_ablate(g, sweep);
    if (*inspect) return cmd_inspect(g, inspect_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
