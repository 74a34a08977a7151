#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "roughcount/artifacts.hpp"
#include "roughcount/error.hpp"
#include "roughcount/experiment.hpp"

using namespace roughcount;
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kSmall = R"(seed: 3
data:
  train_size: 400
  test_size: 150
  input_dim: 32
model:
  hidden_dim: 64
  output_dim: 32
train:
  batch_size: 64
  epochs: 4
adapter:
  capacity: 200
)";

ExperimentConfig small_config() { return parse_config(kSmall, "small.yaml"); }

std::string config_error(std::string_view text) {
  try {
    (void)parse_config(text, "bad.yaml");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
    return e.detail();
  }
  FAIL("config accepted: " << text);
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("empty document gives the defaults") {
    const ExperimentConfig cfg = parse_config("", "empty.yaml");
    CHECK(cfg.seed == 1);
    CHECK(cfg.data.train_size == 5000);
    CHECK(cfg.data.toy.count_max == 299);
    CHECK(cfg.loss.temperature == 0.07);
    CHECK(cfg.adapter.config.capacity == 3000);
    CHECK(cfg.rough_labels.experts == 10);
    CHECK(cfg.decoder.mode == DecodeMode::kProgressive);
  }
  SUBCASE("values land in the right fields") {
    const ExperimentConfig cfg = small_config();
    CHECK(cfg.seed == 3);
    CHECK(cfg.train.seed == 3);
    CHECK(cfg.rough_labels.seed == 3);
    CHECK(cfg.data.toy.world_seed == 3);
    CHECK(cfg.data.toy.input_dim == 32);
    CHECK(cfg.model.output_dim == 32);
    CHECK(cfg.train.epochs == 4);
    CHECK(cfg.adapter.config.capacity == 200);
  }
  SUBCASE("unknown keys carry their location") {
    const std::string msg = config_error("data:\n  trian_size: 5\n");
    CHECK(msg.find("bad.yaml:2:3") == 0);
    CHECK(msg.find("unknown key 'trian_size'") != std::string::npos);
    CHECK(msg.find("train_size") != std::string::npos);
    CHECK(config_error("sede: 4\n").find("bad.yaml:1:1") == 0);
  }
  SUBCASE("wrong types and bad values carry their location") {
    CHECK(config_error("train:\n  epochs: many\n").find("bad.yaml:2:11") == 0);
    CHECK(config_error("decoder:\n  mode: sideways\n").find("bad.yaml:2:9") == 0);
    CHECK(config_error("loss:\n  stage_weights: [1, 1]\n").find("bad.yaml:2") == 0);
    CHECK(config_error("adapter:\n  lambda: 2\n").find("bad.yaml") == 0);
    CHECK(config_error("data: 5\n").find("bad.yaml:1:7") == 0);
  }
  SUBCASE("cross-field checks") {
    CHECK_THROWS_AS(parse_config("data:\n  source: features\n"), Error);
    CHECK_THROWS_AS(parse_config("data:\n  train_size: 10\ntrain:\n  batch_size: 20\n"), Error);
  }
  SUBCASE("emit and parse agree") {
    const ExperimentConfig cfg = small_config();
    const std::string once = emit_config(cfg);
    CHECK(emit_config(parse_config(once, "emitted.yaml")) == once);
    ExperimentConfig other;
    other.set_seed(42);
    other.loss.stage_weights = {0.25, 0.5, 1.0 / 3.0};
    other.decoder.mode = DecodeMode::kFlat;
    other.adapter.enabled = false;
    const std::string emitted = emit_config(other);
    const ExperimentConfig back = parse_config(emitted, "emitted.yaml");
    CHECK(back.loss.stage_weights == other.loss.stage_weights);
    CHECK(back.decoder.mode == DecodeMode::kFlat);
    CHECK_FALSE(back.adapter.enabled);
    CHECK(back.seed == 42);
  }
}

TEST_CASE("predictions csv") {
  std::vector<PredictionRow> rows(2);
  rows[0] = {7, 120, 114, 126, 118, 121, 120, 30};
  rows[1] = {8, 5, 5, 5, 5, 5, std::nullopt, 30};
  const std::string csv = predictions_csv(rows);
  CHECK(csv == std::string(kPredictionsHeader) + "\n7,120,114,126,118,121,120,30\n8,5,5,5,5,5,,30\n");
}

TEST_CASE("small experiment end to end") {
  const ExperimentConfig cfg = small_config();
  const ExperimentResult a = run_experiment(cfg);
  CHECK(a.primary_variant == "progressive+adapter");
  CHECK(a.variants.size() == 3);
  CHECK(a.rows.size() == 150);
  CHECK(a.epoch_loss.size() == 4);
  CHECK(a.epoch_eval_loss.size() == 4);
  CHECK(a.adapter_entries > 0);
  CHECK(a.adapter_entries <= 200);
  CHECK(a.untrained_mae.has_value());
  CHECK(a.report.mae <= a.report.mse);
  CHECK(a.variants.at("progressive").similarity_evals_per_sample == 30.0);
  CHECK(a.variants.at("flat").similarity_evals_per_sample == 1000.0);
  for (const auto& r : a.rows) {
    CHECK(r.rough_lo <= r.gt);
    CHECK(r.gt <= r.rough_hi);
    CHECK(r.pred_prog_adapter.has_value());
    CHECK(r.evals == 30);
  }

  // Same config, same seeds: identical CSV bytes.
  const ExperimentResult b = run_experiment(cfg);
  CHECK(predictions_csv(a.rows) == predictions_csv(b.rows));

  SUBCASE("artifacts") {
    ExperimentResult r = a;
    const fs::path dir = fs::temp_directory_path() / ("roughcount_exp_" + std::to_string(::getpid()));
    r.config.output.dir = dir.string();
    const auto written = write_artifacts(r);
    CHECK(written.size() == 4);
    CHECK(slurp(dir / "predictions.csv") == predictions_csv(a.rows));
    const std::string report = slurp(dir / "report.yaml");
    CHECK(report.find(std::string(kToolVersion)) != std::string::npos);
    CHECK(report.find("train_size: 400") != std::string::npos);

    const io::Container ckpt = io::read_container(dir / "model.prcc");
    const auto enc = io::model_from(ckpt.require(io::tags::kModel));
    CHECK(std::equal(enc.params().begin(), enc.params().end(), a.encoder->params().begin()));
    CHECK(ckpt.require(io::tags::kEmbTxt).rows == 1000);
    const AdapterStore store =
        io::adapter_from(io::read_container(dir / "adapter.prcc").require(io::tags::kAdapter));
    CHECK(store == *a.adapter);
    fs::remove_all(dir);
  }
}

TEST_CASE("adapter off and flat mode") {
  ExperimentConfig cfg = small_config();
  cfg.adapter.enabled = false;
  cfg.decoder.mode = DecodeMode::kFlat;
  const ExperimentResult r = run_experiment(cfg);
  CHECK(r.primary_variant == "flat");
  CHECK(r.variants.count("progressive+adapter") == 0);
  for (const auto& row : r.rows) {
    CHECK_FALSE(row.pred_prog_adapter.has_value());
    CHECK(row.evals == 1000);
  }
  CHECK(predictions_csv(r.rows).find(",,1000\n") != std::string::npos);
}

TEST_CASE("stage errors name the stage") {
  ExperimentConfig cfg = small_config();
  cfg.data.source = DataSource::kEmbeddings;
  cfg.data.train_path = "/nonexistent/train.prcc";
  cfg.data.test_path = "/nonexistent/test.prcc";
  cfg.text.container = "/nonexistent/text.prcc";
  try {
    (void)run_experiment(cfg);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
    CHECK(e.detail().find("[data]") == 0);
  }
}

TEST_CASE("ablations") {
  const ExperimentConfig cfg = small_config();
  SUBCASE("rough-label sweep gives one row per error range") {
    const auto rows = rough_label_sweep(cfg);
    REQUIRE(rows.size() == 7);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(rows[i].sweep == "rough_labels");
      CHECK(rows[i].error_pct == kRoughLabelSweep[i]);
      CHECK(rows[i].mae <= rows[i].mse);
    }
    const std::string csv = ablation_csv(rows);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 8);
  }
  SUBCASE("decoder sweep gives flat, progressive and adapter rows") {
    const auto rows = decoder_sweep(cfg);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].decoder == "flat");
    CHECK(rows[1].decoder == "progressive");
    CHECK(rows[2].decoder == "progressive+adapter");
    CHECK(rows[0].evals_per_sample == 1000.0);
    CHECK(rows[1].evals_per_sample == 30.0);
    CHECK(rows[2].evals_per_sample == 30.0);
    const std::string yaml = ablation_yaml(rows, cfg);
    CHECK(yaml.find(std::string(kToolVersion)) != std::string::npos);
  }
}
