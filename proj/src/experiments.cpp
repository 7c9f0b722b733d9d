#include "auxit/experiments.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "auxit/error.hpp"
#include "auxit/io.hpp"
#include "auxit/json_io.hpp"

namespace auxit {

std::string library_version() { return "0.1.0"; }

// ---------------------------------------------------------------------------
// Data preparation
// ---------------------------------------------------------------------------

DatasetPair load_source(const DataSource& source) {
  DatasetPair pair;
  switch (source.kind) {
    case DataSource::Kind::Synthetic:
      pair = synth_blobs(source.synth_classes, source.synth_dim, source.synth_counts,
                         source.synth_spread, source.data_seed);
      break;
    case DataSource::Kind::Idx:
      pair.train = load_idx(source.train_images, source.train_labels);
      pair.test = load_idx(source.test_images, source.test_labels);
      break;
    case DataSource::Kind::Csv:
      pair.train = load_csv(source.train_csv, source.label_column);
      pair.test = load_csv(source.test_csv, source.label_column);
      break;
  }
  pair.train.split = Split::Train;
  pair.test.split = Split::Test;
  pair.train = take_first(pair.train, source.train_limit);
  pair.test = take_first(pair.test, source.test_limit);
  const Eigen::Index K = std::max(pair.train.num_classes, pair.test.num_classes);
  pair.train.num_classes = K;
  pair.test.num_classes = K;

  if (source.imbalanced) {
    pair.train = make_imbalanced(pair.train, source.class_fraction, source.removal_fraction,
                                 source.data_seed);
    pair.test = make_imbalanced(pair.test, source.class_fraction, source.removal_fraction,
                                source.data_seed);
  }
  return scale_unit(pair.train, pair.test);
}

PreparedData prepare_data(const DataSource& source, std::uint64_t cost_seed) {
  DatasetPair pair = load_source(source);
  CostMatrix costs = randomized_proportional(pair.train, cost_seed);
  return {cast_matrix_to_vectors(pair.train, costs), cast_matrix_to_vectors(pair.test, costs),
          std::move(costs)};
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

Preset preset(const std::string& name) {
  Preset p;
  if (name == "synthetic") {
    p.source.kind = DataSource::Kind::Synthetic;
    p.source.synth_classes = 10;
    p.source.synth_dim = 20;
    p.source.synth_counts.assign(10, 300);
    p.source.synth_spread = 1.5;
    p.source.data_seed = 7;
    p.source.imbalanced = true;
    p.settings.width = 64;
    p.settings.train.epochs = 30;
    return p;
  }
  if (name == "mnist") {
    p.source.kind = DataSource::Kind::Idx;
    p.source.train_limit = 5000;
    p.source.test_limit = 1000;
    p.settings.width = 64;
    p.settings.train.epochs = 30;
    return p;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown preset '" + name + "'");
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

RunRecord run_single(const std::string& model, const PreparedData& data, Eigen::Index depth,
                     double alpha, std::uint64_t seed, const ExperimentSettings& settings,
                     Net* trained) {
  const bool is_csdnn = model == "csdnn";
  if (model != "auxdnn" && model != "naivednn" && !is_csdnn) {
    throw Error(ErrorCode::InvalidArgument, "unknown model '" + model + "'");
  }
  const NetworkSpec spec = NetworkSpec::uniform(
      data.train.data.dim(), depth, settings.width, data.train.data.num_classes,
      is_csdnn ? Activation::Sigmoid : Activation::ReLU, model == "auxdnn");
  TrainConfig config = settings.train;
  config.alphas.clear();
  config.alpha = model == "auxdnn" ? alpha : 0.0;
  config.seed = seed;

  RunRecord record{model, depth, config.alpha, seed, {}};
  Net net;
  if (is_csdnn) {
    CsdnnResult result = train_csdnn(spec, data.train, config);
    net = std::move(result.net);
    record.metrics = std::move(result.metrics);
  } else {
    net = model == "auxdnn" ? build_auxdnn(spec, seed) : build_naivednn(spec, seed);
    record.metrics = train(net, data.train, config);
    record.metrics.model = model;
  }
  record.metrics.evaluation = evaluate(predict(net, data.test.data.inputs), data.test);
  if (trained != nullptr) *trained = std::move(net);
  return record;
}

namespace {

struct Task {
  std::string model;
  Eigen::Index depth;
  double alpha;
  std::uint64_t seed;
};

std::vector<RunRecord> run_tasks(const DataSource& source, const std::vector<Task>& tasks,
                                 const std::vector<std::uint64_t>& seeds,
                                 const ExperimentSettings& settings) {
  std::map<std::uint64_t, PreparedData> prepared;
  for (std::uint64_t seed : seeds) {
    if (!prepared.count(seed)) prepared.emplace(seed, prepare_data(source, seed));
  }

  std::vector<RunRecord> records(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& t = tasks[i];
      try {
        records[i] = run_single(t.model, prepared.at(t.seed), t.depth, t.alpha, t.seed, settings);
      } catch (const Error& e) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          std::ostringstream context;
          context << "grid point model=" << t.model << " depth=" << t.depth
                  << " alpha=" << format_real(t.alpha) << " seed=" << t.seed << ": " << e.what();
          failure = std::make_exception_ptr(Error(e.code(), context.str()));
        }
        next = tasks.size();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = tasks.size();
      }
    }
  };

  const unsigned n_workers = std::max(1u, std::min<unsigned>(settings.workers, static_cast<unsigned>(tasks.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

void check_seeds(const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw Error(ErrorCode::InvalidArgument, "at least one seed is required");
}

void check_depths(const std::vector<Eigen::Index>& depths) {
  if (depths.empty()) throw Error(ErrorCode::InvalidArgument, "at least one depth is required");
  for (auto d : depths) {
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "depths must be >= 1");
  }
}

}  // namespace

SweepResult run_alpha_sweep(const DataSource& source, const std::vector<Eigen::Index>& depths,
                            const std::vector<double>& alphas,
                            const std::vector<std::uint64_t>& seeds,
                            const ExperimentSettings& settings) {
  check_depths(depths);
  check_seeds(seeds);
  if (alphas.empty()) throw Error(ErrorCode::InvalidArgument, "at least one alpha is required");
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "alpha " + format_real(a) + " outside [0, 1]");
    }
  }
  std::vector<Task> tasks;
  for (auto depth : depths) {
    for (double alpha : alphas) {
      for (auto seed : seeds) tasks.push_back({"auxdnn", depth, alpha, seed});
    }
  }
  SweepResult result;
  result.runs = run_tasks(source, tasks, seeds, settings);
  result.grid = aggregate(result.runs);
  return result;
}

SweepResult run_comparison(const DataSource& source, const std::vector<Eigen::Index>& depths,
                           const std::vector<std::uint64_t>& seeds,
                           const ExperimentSettings& settings) {
  check_depths(depths);
  check_seeds(seeds);
  std::vector<Task> tasks;
  for (auto depth : depths) {
    for (const char* model : {"auxdnn", "naivednn", "csdnn"}) {
      for (auto seed : seeds) tasks.push_back({model, depth, kComparisonAlpha, seed});
    }
  }
  SweepResult result;
  result.runs = run_tasks(source, tasks, seeds, settings);
  result.grid = aggregate(result.runs);
  return result;
}

std::vector<SweepPoint> aggregate(const std::vector<RunRecord>& runs) {
  std::vector<SweepPoint> grid;
  std::vector<std::vector<double>> costs;
  for (const auto& r : runs) {
    if (!r.metrics.evaluation) {
      throw Error(ErrorCode::InvalidArgument, "run has no evaluation to aggregate");
    }
    std::size_t i = 0;
    while (i < grid.size() && !(grid[i].model == r.model && grid[i].depth == r.depth &&
                                grid[i].alpha == r.alpha)) {
      ++i;
    }
    if (i == grid.size()) {
      grid.push_back({r.model, r.depth, r.alpha, 0.0, 0.0, 0});
      costs.emplace_back();
    }
    costs[i].push_back(r.metrics.evaluation->average_cost);
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& c = costs[i];
    const auto n = static_cast<double>(c.size());
    double mean = 0.0;
    for (double v : c) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : c) ss += (v - mean) * (v - mean);
    grid[i].mean_cost = mean;
    grid[i].stddev_cost = c.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    grid[i].seeds = c.size();
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& runs) {
  out << "model,depth,alpha,seed,average_cost,error_rate,final_main_loss,final_total_loss\n";
  for (const auto& r : runs) {
    const auto& m = r.metrics;
    out << r.model << ',' << r.depth << ',' << format_real(r.alpha) << ',' << r.seed << ','
        << format_real(m.evaluation ? m.evaluation->average_cost : 0.0) << ','
        << format_real(m.evaluation ? m.evaluation->error_rate : 0.0) << ','
        << format_real(m.main_losses.empty() ? 0.0 : m.main_losses.back()) << ','
        << format_real(m.total_losses.empty() ? 0.0 : m.total_losses.back()) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SweepPoint>& grid) {
  out << "model,depth,alpha,seeds,mean_cost,stddev_cost\n";
  for (const auto& p : grid) {
    out << p.model << ',' << p.depth << ',' << format_real(p.alpha) << ',' << p.seeds << ','
        << format_real(p.mean_cost) << ',' << format_real(p.stddev_cost) << '\n';
  }
}

bool write_learning_curves(std::ostream& out, const RunMetrics& metrics) {
  const std::size_t n_aux = metrics.aux_losses.empty() ? 0 : metrics.aux_losses.front().size();
  out << "epoch";
  for (std::size_t i = 0; i < n_aux; ++i) out << ",loss_aux_" << (i + 1);
  out << ",loss_main,loss_total\n";
  for (std::size_t e = 0; e < metrics.epochs(); ++e) {
    out << (e + 1);
    for (std::size_t i = 0; i < n_aux; ++i) out << ',' << format_real(metrics.aux_losses[e][i]);
    out << ',' << format_real(metrics.main_losses[e]) << ',' << format_real(metrics.total_losses[e])
        << '\n';
  }
  return n_aux > 0;
}

bool emit_learning_curves(const RunMetrics& metrics, const std::filesystem::path& path) {
  std::ostringstream os;
  const bool has_aux = write_learning_curves(os, metrics);
  write_text_file(path, os.str());
  return has_aux;
}

namespace {

std::string run_stem(const RunRecord& r) {
  return r.model + "_d" + std::to_string(r.depth) + "_a" + format_real(r.alpha) + "_s" +
         std::to_string(r.seed);
}

void write_pretrain_curves(std::ostream& out, const RunMetrics& metrics) {
  out << "epoch";
  std::size_t epochs = 0;
  for (std::size_t s = 0; s < metrics.pretrain_losses.size(); ++s) {
    out << ",stage_" << (s + 1);
    epochs = std::max(epochs, metrics.pretrain_losses[s].size());
  }
  out << '\n';
  for (std::size_t e = 0; e < epochs; ++e) {
    out << (e + 1);
    for (const auto& stage : metrics.pretrain_losses) {
      out << ',' << (e < stage.size() ? format_real(stage[e]) : std::string());
    }
    out << '\n';
  }
}

}  // namespace

void write_sweep_outputs(const std::filesystem::path& dir, const SweepResult& result,
                         const std::string& verb, const std::string& flags_json) {
  std::filesystem::create_directories(dir / "curves");
  std::ostringstream runs, summary;
  write_runs_csv(runs, result.runs);
  write_summary_csv(summary, result.grid);
  write_text_file(dir / "runs.csv", runs.str());
  write_text_file(dir / "summary.csv", summary.str());

  nlohmann::json files = nlohmann::json::array({"runs.csv", "summary.csv"});
  for (const auto& r : result.runs) {
    const std::string stem = run_stem(r);
    std::ostringstream curves;
    write_learning_curves(curves, r.metrics);
    write_text_file(dir / "curves" / (stem + ".csv"), curves.str());
    files.push_back("curves/" + stem + ".csv");
    if (!r.metrics.pretrain_losses.empty()) {
      std::ostringstream pre;
      write_pretrain_curves(pre, r.metrics);
      write_text_file(dir / "curves" / (stem + "_pretrain.csv"), pre.str());
      files.push_back("curves/" + stem + "_pretrain.csv");
    }
  }

  nlohmann::json manifest = {{"verb", verb},
                             {"version", library_version()},
                             {"flags", nlohmann::json::parse(flags_json.empty() ? "{}" : flags_json)},
                             {"runs", result.runs.size()},
                             {"files", files}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Cost generation
// ---------------------------------------------------------------------------

GeneratedCosts gen_costs(CostGenerator generator, const DataSource& source,
                         const std::filesystem::path& tree_path, std::uint64_t seed,
                         const std::filesystem::path& out_path) {
  CostMatrix costs = generator == CostGenerator::Tree
                         ? tree_distance_costs(load_tree_csv(tree_path))
                         : randomized_proportional(load_source(source).train, seed);
  save_cost_matrix(out_path, costs);
  const CostSummary summary = off_diagonal_summary(costs);
  return {std::move(costs), summary};
}

}  // namespace auxit
