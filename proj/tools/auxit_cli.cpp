// Experiment harness: alpha sweeps, model comparison, learning curves,
// cost generation, and single-model train/eval.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "auxit/costs.hpp"
#include "auxit/error.hpp"
#include "auxit/experiments.hpp"
#include "auxit/io.hpp"
#include "auxit/json_io.hpp"
#include "auxit/models.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
  std::string preset = "synthetic";
  std::string train_images, train_labels, test_images, test_labels;
  std::string train_csv, test_csv;
  std::size_t label_column = 0;
  std::optional<std::size_t> train_limit, test_limit;
  bool imbalanced = false;
  bool balanced = false;
  std::optional<std::uint64_t> data_seed;
  std::optional<long> width;
  std::optional<int> epochs;
  std::optional<double> lr, momentum, beta;
  std::optional<std::size_t> batch_size;
  std::optional<int> pretrain_epochs;
  std::optional<long> synth_classes, synth_dim;
  std::optional<std::size_t> synth_count;
  std::optional<double> synth_spread;
  unsigned workers = 1;
};

void add_common_options(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--preset", o.preset, "Preset: synthetic or mnist")
      ->check(CLI::IsMember({"synthetic", "mnist"}))
      ->capture_default_str();
  cmd->add_option("--train-images", o.train_images, "IDX training images");
  cmd->add_option("--train-labels", o.train_labels, "IDX training labels");
  cmd->add_option("--test-images", o.test_images, "IDX test images");
  cmd->add_option("--test-labels", o.test_labels, "IDX test labels");
  cmd->add_option("--train-csv", o.train_csv, "CSV training set");
  cmd->add_option("--test-csv", o.test_csv, "CSV test set");
  cmd->add_option("--label-column", o.label_column, "Label column of CSV files (labels 1..K)");
  cmd->add_option("--train-limit", o.train_limit, "Keep only the first N training examples");
  cmd->add_option("--test-limit", o.test_limit, "Keep only the first N test examples");
  cmd->add_flag("--imbalanced", o.imbalanced, "Build the imbalanced variant (40% classes, -70%)");
  cmd->add_flag("--balanced", o.balanced, "Do not build the imbalanced variant");
  cmd->add_option("--synth-classes", o.synth_classes, "Synthetic class count");
  cmd->add_option("--synth-dim", o.synth_dim, "Synthetic feature count");
  cmd->add_option("--synth-count", o.synth_count, "Synthetic examples per class");
  cmd->add_option("--synth-spread", o.synth_spread, "Synthetic cluster standard deviation");
  cmd->add_option("--data-seed", o.data_seed, "Seed for synthetic data and class removal");
  cmd->add_option("--width", o.width, "Hidden layer width");
  cmd->add_option("--epochs", o.epochs, "Training epochs");
  cmd->add_option("--lr", o.lr, "Learning rate");
  cmd->add_option("--momentum", o.momentum, "SGD momentum");
  cmd->add_option("--batch-size", o.batch_size, "Mini-batch size");
  cmd->add_option("--beta", o.beta, "CSAE reconstruction/cost balance");
  cmd->add_option("--pretrain-epochs", o.pretrain_epochs, "CSAE epochs per stage");
  cmd->add_option("--workers", o.workers, "Parallel training runs")->capture_default_str();
}

auxit::Preset resolve(const CommonOptions& o) {
  auxit::Preset p = auxit::preset(o.preset);
  auto& s = p.source;
  if (!o.train_csv.empty() || !o.test_csv.empty()) {
    s.kind = auxit::DataSource::Kind::Csv;
    s.train_csv = o.train_csv;
    s.test_csv = o.test_csv;
    s.label_column = o.label_column;
  } else if (!o.train_images.empty() || p.source.kind == auxit::DataSource::Kind::Idx) {
    s.kind = auxit::DataSource::Kind::Idx;
    s.train_images = o.train_images;
    s.train_labels = o.train_labels;
    s.test_images = o.test_images;
    s.test_labels = o.test_labels;
    if (o.train_images.empty() || o.train_labels.empty() || o.test_images.empty() ||
        o.test_labels.empty()) {
      throw auxit::Error(auxit::ErrorCode::InvalidArgument,
                         "IDX input needs --train-images, --train-labels, --test-images and "
                         "--test-labels");
    }
  }
  if (o.train_limit) s.train_limit = *o.train_limit;
  if (o.test_limit) s.test_limit = *o.test_limit;
  if (o.imbalanced) s.imbalanced = true;
  if (o.balanced) s.imbalanced = false;
  if (o.data_seed) s.data_seed = *o.data_seed;
  if (o.synth_classes) s.synth_classes = *o.synth_classes;
  if (o.synth_dim) s.synth_dim = *o.synth_dim;
  if (o.synth_spread) s.synth_spread = *o.synth_spread;
  if (o.synth_classes || o.synth_count) {
    const std::size_t per_class = o.synth_count ? *o.synth_count : s.synth_counts.front();
    s.synth_counts.assign(static_cast<std::size_t>(s.synth_classes), per_class);
  }

  auto& t = p.settings.train;
  if (o.width) p.settings.width = *o.width;
  if (o.epochs) t.epochs = *o.epochs;
  if (o.lr) t.learning_rate = *o.lr;
  if (o.momentum) t.momentum = *o.momentum;
  if (o.beta) t.beta = *o.beta;
  if (o.batch_size) t.batch_size = *o.batch_size;
  if (o.pretrain_epochs) t.pretrain_epochs = *o.pretrain_epochs;
  p.settings.workers = o.workers;
  return p;
}

json flags_json(const auxit::Preset& p, const std::string& preset_name) {
  const auto& s = p.source;
  json data = {{"preset", preset_name},
               {"imbalanced", s.imbalanced},
               {"data_seed", s.data_seed},
               {"train_limit", s.train_limit},
               {"test_limit", s.test_limit}};
  switch (s.kind) {
    case auxit::DataSource::Kind::Synthetic:
      data["kind"] = "synthetic";
      data["classes"] = s.synth_classes;
      data["dim"] = s.synth_dim;
      data["counts"] = s.synth_counts;
      data["spread"] = s.synth_spread;
      break;
    case auxit::DataSource::Kind::Idx:
      data["kind"] = "idx";
      data["train_images"] = s.train_images.string();
      data["train_labels"] = s.train_labels.string();
      data["test_images"] = s.test_images.string();
      data["test_labels"] = s.test_labels.string();
      break;
    case auxit::DataSource::Kind::Csv:
      data["kind"] = "csv";
      data["train_csv"] = s.train_csv.string();
      data["test_csv"] = s.test_csv.string();
      data["label_column"] = s.label_column;
      break;
  }
  return {{"data", data}, {"width", p.settings.width}, {"train", auxit::to_json(p.settings.train)}};
}

std::vector<Eigen::Index> to_depths(const std::vector<long>& v) {
  return {v.begin(), v.end()};
}

std::vector<double> default_alphas() {
  std::vector<double> a;
  for (int i = 0; i <= 10; ++i) a.push_back(i / 10.0);
  return a;
}

void print_summary(const auxit::SweepResult& result) {
  for (const auto& p : result.grid) {
    std::cout << p.model << " depth=" << p.depth << " alpha=" << auxit::format_real(p.alpha)
              << " seeds=" << p.seeds << " mean_cost=" << auxit::format_real(p.mean_cost)
              << " stddev=" << auxit::format_real(p.stddev_cost) << '\n';
  }
}

/// Relative loss decrease per head, first to last epoch.
void report_learning_speed(const auxit::RunMetrics& m) {
  if (m.epochs() < 2) return;
  auto drop = [](double first, double last) { return first > 0 ? (first - last) / first : 0.0; };
  const std::size_t last = m.epochs() - 1;
  for (std::size_t i = 0; i < m.aux_losses.front().size(); ++i) {
    std::cout << "aux_" << (i + 1) << " relative_decrease="
              << auxit::format_real(drop(m.aux_losses[0][i], m.aux_losses[last][i])) << '\n';
  }
  std::cout << "main relative_decrease="
            << auxit::format_real(drop(m.main_losses[0], m.main_losses[last])) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cost-sensitive deep networks with auxiliary internal targets"};
  app.require_subcommand(1);

  CommonOptions common;
  std::vector<long> depths = {1, 2, 3, 4, 5};
  std::vector<double> alphas = default_alphas();
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string out;
  long depth = 3;
  double alpha = auxit::kComparisonAlpha;
  std::uint64_t seed = 1;
  std::string model = "auxdnn";
  std::string generator, tree_path, checkpoint_path, costs_path;

  auto* sweep = app.add_subcommand("sweep-alpha", "AuxDNN over depth x alpha x seed");
  add_common_options(sweep, common);
  sweep->add_option("--depths", depths, "Hidden layer counts")->capture_default_str();
  sweep->add_option("--alphas", alphas, "Uniform aux weights in [0, 1]");
  sweep->add_option("--seeds", seeds, "Run seeds")->capture_default_str();
  sweep->add_option("--out", out, "Output directory")->required();

  auto* compare = app.add_subcommand("compare", "AuxDNN vs NaiveDNN vs CSDNN per depth");
  add_common_options(compare, common);
  compare->add_option("--depths", depths, "Hidden layer counts")->capture_default_str();
  compare->add_option("--seeds", seeds, "Run seeds")->capture_default_str();
  compare->add_option("--out", out, "Output directory")->required();

  auto* gen = app.add_subcommand("gen-costs", "Generate a cost matrix CSV");
  add_common_options(gen, common);
  gen->add_option("generator", generator, "proportional or tree")
      ->required()
      ->check(CLI::IsMember({"proportional", "tree"}));
  gen->add_option("--tree", tree_path, "child,parent CSV for the tree generator");
  gen->add_option("--seed", seed, "Generator seed")->capture_default_str();
  gen->add_option("--out", out, "Output CSV")->required();

  auto* curves = app.add_subcommand("curves", "Per-epoch head losses of one AuxDNN run");
  add_common_options(curves, common);
  curves->add_option("--depth", depth, "Hidden layers")->capture_default_str();
  curves->add_option("--alpha", alpha, "Uniform aux weight")->capture_default_str();
  curves->add_option("--seed", seed, "Run seed")->capture_default_str();
  curves->add_option("--out", out, "Output CSV")->required();

  auto* train_cmd = app.add_subcommand("train", "Train one model and save a checkpoint");
  add_common_options(train_cmd, common);
  train_cmd->add_option("--model", model, "auxdnn, naivednn or csdnn")
      ->check(CLI::IsMember({"auxdnn", "naivednn", "csdnn"}))
      ->capture_default_str();
  train_cmd->add_option("--depth", depth, "Hidden layers")->capture_default_str();
  train_cmd->add_option("--alpha", alpha, "Uniform aux weight (auxdnn)")->capture_default_str();
  train_cmd->add_option("--seed", seed, "Run seed")->capture_default_str();
  train_cmd->add_option("--out", out, "Checkpoint path")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  add_common_options(eval_cmd, common);
  eval_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint path")->required();
  eval_cmd->add_option("--costs", costs_path, "Cost matrix CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0) {
      std::cerr << json{{"error", {{"code", "usage"}, {"message", e.what()}}}}.dump() << '\n';
    }
    return code;
  }

  try {
    const auxit::Preset p = resolve(common);
    const json flags = flags_json(p, common.preset);

    if (sweep->parsed() || compare->parsed()) {
      json f = flags;
      f["depths"] = depths;
      f["seeds"] = seeds;
      auxit::SweepResult result;
      if (sweep->parsed()) {
        f["alphas"] = alphas;
        result = auxit::run_alpha_sweep(p.source, to_depths(depths), alphas, seeds, p.settings);
      } else {
        f["alpha"] = auxit::kComparisonAlpha;
        result = auxit::run_comparison(p.source, to_depths(depths), seeds, p.settings);
      }
      auxit::write_sweep_outputs(out, result, sweep->parsed() ? "sweep-alpha" : "compare", f.dump());
      print_summary(result);
    } else if (gen->parsed()) {
      const auto kind =
          generator == "tree" ? auxit::CostGenerator::Tree : auxit::CostGenerator::Proportional;
      if (kind == auxit::CostGenerator::Tree && tree_path.empty()) {
        throw auxit::Error(auxit::ErrorCode::InvalidArgument, "tree generator needs --tree");
      }
      const auto generated = auxit::gen_costs(kind, p.source, tree_path, seed, out);
      std::cout << "K=" << generated.costs.num_classes()
                << " min=" << auxit::format_real(generated.summary.min)
                << " max=" << auxit::format_real(generated.summary.max)
                << " mean=" << auxit::format_real(generated.summary.mean) << '\n';
    } else if (curves->parsed()) {
      const auxit::PreparedData data = auxit::prepare_data(p.source, seed);
      const auto record = auxit::run_single("auxdnn", data, depth, alpha, seed, p.settings);
      if (!auxit::emit_learning_curves(record.metrics, out)) {
        std::cerr << "warning: run has no aux heads; only main and total losses written\n";
      }
      report_learning_speed(record.metrics);
    } else if (train_cmd->parsed()) {
      const auxit::PreparedData data = auxit::prepare_data(p.source, seed);
      auxit::Net net;
      const auto record = auxit::run_single(model, data, depth, alpha, seed, p.settings, &net);
      auxit::save_checkpoint(out, {net, record.metrics.config, model, data.train.data.scaling});
      auxit::save_cost_matrix(out + ".costs.csv", data.costs);
      auxit::emit_learning_curves(record.metrics, out + ".curves.csv");
      std::cout << auxit::to_json(*record.metrics.evaluation).dump() << '\n';
    } else if (eval_cmd->parsed()) {
      const auxit::Checkpoint cp = auxit::load_checkpoint(checkpoint_path);
      const auxit::DatasetPair pair = auxit::load_source(p.source);
      if (cp.scaling && !(pair.test.scaling && *pair.test.scaling == *cp.scaling)) {
        throw auxit::Error(auxit::ErrorCode::InvalidArgument,
                           "data flags do not reproduce the checkpoint's input scaling");
      }
      const auxit::CostMatrix costs = auxit::load_cost_matrix(costs_path);
      const auto test = auxit::cast_matrix_to_vectors(pair.test, costs);
      const auto report = auxit::evaluate(auxit::predict(cp.net, test.data.inputs), test);
      std::cout << auxit::to_json(report).dump() << '\n';
    }
  } catch (const auxit::Error& e) {
    std::cerr << json{{"error", {{"code", std::string(auxit::to_string(e.code()))}, {"message", e.what()}}}}.dump()
              << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump() << '\n';
    return 1;
  }
  return 0;
}
