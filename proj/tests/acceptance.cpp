// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. argv[1] is the path of the auxit CLI.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "auxit/costs.hpp"
#include "auxit/data.hpp"
#include "auxit/experiments.hpp"
#include "auxit/io.hpp"
#include "auxit/losses.hpp"
#include "auxit/models.hpp"
#include "support/gradient_oracle.hpp"
#include "support/synthetic.hpp"
#include "support/tree_oracle.hpp"

using namespace auxit;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = AUXIT_FIXTURE_DIR;
std::string g_cli;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// ---------------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20160);
  std::uniform_int_distribution<int> dim(1, 8), depth(1, 3), width(1, 6), classes(2, 4);
  double worst[2] = {0.0, 0.0};
  std::size_t checked = 0, skipped = 0;
  for (int n = 0; n < 50; ++n) {
    const auto act = n % 2 == 0 ? Activation::Sigmoid : Activation::ReLU;
    NetworkSpec spec;
    spec.input_dim = dim(rng);
    for (int h = depth(rng); h > 0; --h) spec.hidden_widths.push_back(width(rng));
    spec.num_classes = classes(rng);
    spec.activation = act;
    const auto net = init_params<double>(spec, rng());
    const auto problem = testkit::random_problem(rng, 5, spec.input_dim, spec.num_classes,
                                                 static_cast<std::size_t>(spec.num_aux_heads()));
    const auto trace = forward(net, problem.inputs);
    const auto obj = auxit_objective(trace, problem.costs, problem.labels, problem.weights);
    const auto check = testkit::check_gradients(net, backward(net, trace, obj.head_gradients), problem);
    auto& w = worst[act == Activation::ReLU];
    w = std::max(w, check.max_relative_error);
    checked += check.checked;
    skipped += check.skipped;
  }
  const double elapsed = seconds_since(t0);
  const bool pass = worst[0] <= 1e-4 && worst[1] <= 1e-3 && elapsed < 60.0;
  return {pass, "max rel err sigmoid=" + fmt(worst[0]) + " relu=" + fmt(worst[1]) + ", " +
                    std::to_string(checked) + " entries checked, " + std::to_string(skipped) +
                    " at kinks skipped, " + fmt(elapsed) + "s"};
}

Outcome alpha_zero_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  // 4 classes x 157 examples leaves 4 x 125 = 500 training examples.
  auto pair = synth_blobs(4, 10, {157, 157, 157, 157}, 1.0, 3);
  pair = scale_unit(pair.train, pair.test);
  const auto train_set = cast_matrix_to_vectors(pair.train, randomized_proportional(pair.train, 3));
  const auto spec = NetworkSpec::uniform(10, 3, 16, 4, Activation::ReLU, true);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.alpha = 0.0;
  cfg.seed = 11;
  Net aux = build_auxdnn(spec, cfg.seed);
  Net naive = build_naivednn(spec, cfg.seed);
  train(aux, train_set, cfg);
  train(naive, train_set, cfg);
  const bool same = aux.trunk == naive.trunk && aux.main_head == naive.main_head;
  const double elapsed = seconds_since(t0);
  return {same && train_set.size() == 500 && elapsed < 30.0,
          std::string(same ? "trunk and main head bit-identical" : "parameters differ") +
              " after 5 epochs on " + std::to_string(train_set.size()) + " examples, " +
              fmt(elapsed) + "s"};
}

Outcome osr_convexity() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> kdist(2, 6);
  double worst_gap = -1.0;
  int violations = 0;
  for (int probe = 0; probe < 1000; ++probe) {
    const int K = kdist(rng);
    const int y = static_cast<int>(rng() % static_cast<unsigned>(K));
    Matrix<double> a(1, K), b(1, K), c(1, K);
    for (int k = 0; k < K; ++k) {
      a(0, k) = 20.0 * u(rng) - 10.0;
      b(0, k) = 20.0 * u(rng) - 10.0;
      c(0, k) = k == y ? 0.0 : 10.0 * u(rng);
    }
    const double lambda = u(rng);
    const Matrix<double> mix = lambda * a + (1.0 - lambda) * b;
    const double lhs = osr_loss(mix, c, {y}).value;
    const double rhs = lambda * osr_loss(a, c, {y}).value + (1.0 - lambda) * osr_loss(b, c, {y}).value;
    worst_gap = std::max(worst_gap, lhs - rhs);
    if (lhs > rhs + 1e-12) ++violations;
  }
  int nonzero = 0;
  for (int probe = 0; probe < 100; ++probe) {
    const int K = kdist(rng);
    const int y = static_cast<int>(rng() % static_cast<unsigned>(K));
    Matrix<double> r(1, K), c(1, K);
    for (int k = 0; k < K; ++k) {
      c(0, k) = k == y ? 0.0 : 10.0 * u(rng);
      // True class at or below 0, every other class at or above its cost.
      r(0, k) = k == y ? -5.0 * u(rng) * (probe % 3 != 0) : c(0, k) + 5.0 * u(rng) * (probe % 4 != 0);
    }
    if (osr_loss(r, c, {y}).value != 0.0) ++nonzero;
  }
  return {violations == 0 && nonzero == 0,
          std::to_string(violations) + "/1000 convexity violations (max gap " + fmt(worst_gap) +
              "), " + std::to_string(nonzero) + "/100 zero-set cases nonzero"};
}

Outcome proportional_setup() {
  Dataset fixture;
  const std::vector<int> counts{50, 10, 30, 5};
  fixture.num_classes = 4;
  for (int k = 0; k < 4; ++k) {
    for (int i = 0; i < counts[static_cast<std::size_t>(k)]; ++i) fixture.labels.push_back(k);
  }
  fixture.inputs = MatrixXd::Zero(static_cast<Eigen::Index>(fixture.labels.size()), 1);

  MatrixXd sum = MatrixXd::Zero(4, 4);
  int bad_diag = 0, out_of_bound = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    const auto c = randomized_proportional(fixture, seed);
    for (int y = 0; y < 4; ++y) {
      for (int k = 0; k < 4; ++k) {
        const double bound = 10.0 * counts[static_cast<std::size_t>(k)] / counts[static_cast<std::size_t>(y)];
        if (y == k) {
          bad_diag += c(y, k) != 0.0;
        } else {
          out_of_bound += c(y, k) < 0.0 || c(y, k) > bound;
        }
      }
    }
    sum += c.entries();
  }
  double worst = 0.0;
  for (int y = 0; y < 4; ++y) {
    for (int k = 0; k < 4; ++k) {
      if (y == k) continue;
      const double half = 5.0 * counts[static_cast<std::size_t>(k)] / counts[static_cast<std::size_t>(y)];
      worst = std::max(worst, std::abs(sum(y, k) / 1000.0 - half) / half);
    }
  }
  return {bad_diag == 0 && out_of_bound == 0 && worst <= 0.05,
          std::to_string(bad_diag) + " nonzero diagonals, " + std::to_string(out_of_bound) +
              " entries out of bound, worst mean deviation " + fmt(100.0 * worst) + "% of half-bound"};
}

Outcome tree_costs() {
  const auto tree = load_tree_csv(kFixtures / "sports_tree.csv");
  const auto c = tree_distance_costs(tree);
  auto cls = [&](const std::string& name) {
    for (Eigen::Index k = 0; k < tree.num_classes(); ++k) {
      if (tree.names[static_cast<std::size_t>(tree.class_leaves[static_cast<std::size_t>(k)])] == name) return k;
    }
    return Eigen::Index{-1};
  };
  const double glove = c(cls("baseball-bat"), cls("baseball-glove"));
  const double racket = c(cls("baseball-bat"), cls("tennis-racket"));

  std::mt19937_64 rng(32);
  int mismatches = 0;
  for (int t = 0; t < 100; ++t) {
    const auto edges = testkit::random_tree(rng, 1 + static_cast<int>(rng() % 32));
    if (tree_distance_costs(HierarchyTree::from_edges(edges)).entries() !=
        testkit::bfs_leaf_distances(edges)) {
      ++mismatches;
    }
  }
  return {glove == 2.0 && racket == 4.0 && mismatches == 0,
          "bat->glove=" + fmt(glove) + " bat->racket=" + fmt(racket) + ", " +
              std::to_string(mismatches) + "/100 random trees differ from BFS"};
}

Outcome structure() {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> width(1, 12);
  int failures = 0;
  std::string counts;
  for (int H = 1; H <= 5; ++H) {
    NetworkSpec spec;
    spec.input_dim = 7;
    spec.num_classes = 5;
    for (int h = 0; h < H; ++h) spec.hidden_widths.push_back(width(rng));
    const auto net = build_auxdnn(spec, static_cast<std::uint64_t>(H));
    Eigen::Index expected = 0, fan_in = spec.input_dim;
    for (auto w : spec.hidden_widths) {
      expected += (fan_in + 1) * w;
      fan_in = w;
    }
    expected += (fan_in + 1) * spec.num_classes;
    for (int i = 0; i + 1 < H; ++i) expected += (spec.hidden_widths[static_cast<std::size_t>(i)] + 1) * spec.num_classes;

    bool ok = net.num_aux_heads() == H - 1 && net.parameter_count() == expected &&
              spec.parameter_count() == expected;
    for (int i = 0; i + 1 < H; ++i) {
      const auto& head = net.aux_heads[static_cast<std::size_t>(i)];
      ok = ok && head.outputs() == spec.num_classes &&
           head.inputs() == spec.hidden_widths[static_cast<std::size_t>(i)];
    }
    ok = ok && build_naivednn(spec, 1).num_aux_heads() == 0;
    failures += !ok;
    counts += (H > 1 ? "," : "") + std::to_string(expected);
  }
  return {failures == 0, std::to_string(failures) + "/5 depths wrong; parameter counts " + counts};
}

Outcome desk_trend() {
  const auto t0 = std::chrono::steady_clock::now();
  Preset p = preset("synthetic");
  p.settings.workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  const auto result = run_comparison(p.source, {3}, {1, 2, 3, 4, 5}, p.settings);
  double aux = 0.0, naive = 0.0, csdnn = 0.0;
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    double a = 0.0, n = 0.0;
    for (const auto& r : result.runs) {
      if (r.seed != seed) continue;
      const double cost = r.metrics.evaluation->average_cost;
      if (r.model == "auxdnn") a = cost;
      if (r.model == "naivednn") n = cost;
      if (r.model == "csdnn") csdnn += cost / 5.0;
    }
    aux += a / 5.0;
    naive += n / 5.0;
    wins += a < n;
  }
  const double elapsed = seconds_since(t0);
  return {aux <= naive && wins >= 3 && elapsed < 300.0,
          "mean test cost auxdnn(0.2)=" + fmt(aux) + " naivednn=" + fmt(naive) + ", auxdnn better in " +
              std::to_string(wins) + "/5 seeds; csdnn=" + fmt(csdnn) + " (reported only), " +
              fmt(elapsed) + "s"};
}

Outcome csae_degeneration() {
  const auto data = testkit::synthetic_cs(4, 9, 40, 1.0, 5, 6);
  std::mt19937_64 rng(8);
  const std::vector<Eigen::Index> widths{7, 5, 6};
  MatrixXd x = data.train.data.inputs;
  double worst = 0.0;
  for (std::size_t s = 0; s < widths.size(); ++s) {
    CsaeStage stage{make_dense<double>(x.cols(), widths[s], Activation::Sigmoid),
                    make_dense<double>(widths[s], x.cols(), Activation::Sigmoid),
                    make_dense<double>(widths[s], 4, Activation::Identity)};
    for (auto* l : stage.layers()) glorot_fill(*l, rng);
    for (auto* l : stage.layers()) l->bias.setRandom();
    const double csae = evaluate_csae_stage(stage, x, data.train.costs, data.train.data.labels, 0.0).total;

    // Plain auto-encoder, written out independently.
    auto sigmoid = [](const MatrixXd& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix().eval(); };
    const MatrixXd h = sigmoid((x * stage.encoder.weights.transpose()).rowwise() + stage.encoder.bias.transpose());
    const MatrixXd r = sigmoid((h * stage.decoder.weights.transpose()).rowwise() + stage.decoder.bias.transpose());
    const double plain =
        -(x.array() * r.array().log() + (1.0 - x.array()) * (1.0 - r.array()).log()).sum() /
        static_cast<double>(x.rows());
    worst = std::max(worst, std::abs(csae - plain));
    x = h;
  }
  return {worst <= 1e-12, "max |CSAE(beta=0) - plain AE| over 3 stages = " + fmt(worst)};
}

Outcome determinism() {
  const fs::path root = testkit::scratch_dir("acceptance_determinism");
  const std::string flags =
      " --synth-classes 3 --synth-dim 5 --synth-count 40 --width 8 --epochs 3 --depths 1 2 "
      "--alphas 0 0.3 --seeds 1 2 --workers 2";
  std::vector<std::string> problems;
  for (const char* run : {"a", "b"}) {
    const std::string cmd = "\"" + g_cli + "\" sweep-alpha" + flags + " --out \"" + (root / run).string() +
                            "\" > \"" + (root / (std::string(run) + ".log")).string() + "\" 2>&1";
    if (std::system(cmd.c_str()) != 0) problems.push_back(std::string("run ") + run + " failed");
  }
  std::size_t files = 0;
  if (problems.empty()) {
    for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
      if (!entry.is_regular_file()) continue;
      const auto rel = fs::relative(entry.path(), root / "a");
      ++files;
      if (slurp(entry.path()) != slurp(root / "b" / rel)) problems.push_back(rel.string() + " differs");
    }
  }

  // In-memory round trips.
  auto pair = synth_blobs(3, 4, {20, 20, 20}, 1.0, 2);
  pair = scale_unit(pair.train, pair.test);
  const auto cs = cast_matrix_to_vectors(pair.train, randomized_proportional(pair.train, 1));
  save_dataset(root / "data.axds", cs);
  const bool data_ok = load_dataset(root / "data.axds") == cs;

  Net net = build_auxdnn(NetworkSpec::uniform(4, 3, 5, 3, Activation::ReLU, true), 9);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.alpha = 0.2;
  train(net, cs, cfg);
  save_checkpoint(root / "net.axck", {net, cfg, "auxdnn", pair.train.scaling});
  const auto back = load_checkpoint(root / "net.axck");
  const bool ckpt_ok = back.net == net && back.config == cfg && back.scaling == pair.train.scaling;
  if (!data_ok) problems.push_back("dataset round trip");
  if (!ckpt_ok) problems.push_back("checkpoint round trip");

  std::string detail = std::to_string(files) + " metrics files byte-identical across reruns, dataset and "
                       "checkpoint round trips exact";
  if (!problems.empty()) {
    detail = "problems:";
    for (const auto& p : problems) detail += " [" + p + "]";
  }
  return {problems.empty() && files > 0, detail};
}

Outcome learning_curves() {
  Preset p = preset("synthetic");
  const auto data = prepare_data(p.source, 1);
  const auto record = run_single("auxdnn", data, 3, 0.2, 1, p.settings);
  const fs::path path = testkit::scratch_dir("acceptance_curves") / "curves.csv";
  const bool has_aux = emit_learning_curves(record.metrics, path);

  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  const bool header_ok = header == "epoch,loss_aux_1,loss_aux_2,loss_main,loss_total";
  std::vector<std::vector<double>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<double> v;
    for (const auto& cell : split_csv_line(line)) v.push_back(parse_real(cell, "curves"));
    rows.push_back(v);
  }
  double worst = 0.0;
  bool shape_ok = !rows.empty();
  for (const auto& r : rows) {
    if (r.size() != 5) {
      shape_ok = false;
      continue;
    }
    worst = std::max(worst, std::abs(r[4] - (0.2 * r[1] + 0.2 * r[2] + r[3])));
  }
  std::string decrease;
  if (shape_ok) {
    const char* names[] = {"aux_1", "aux_2", "main"};
    for (int c = 1; c <= 3; ++c) {
      const double rel = (rows.front()[static_cast<std::size_t>(c)] - rows.back()[static_cast<std::size_t>(c)]) /
                         rows.front()[static_cast<std::size_t>(c)];
      decrease += std::string(c > 1 ? " " : "") + names[c - 1] + "=" + fmt(100.0 * rel) + "%";
    }
    const double d1 = 1.0 - rows.back()[1] / rows.front()[1];
    const double d3 = 1.0 - rows.back()[3] / rows.front()[3];
    decrease += d1 < d3 ? " (earlier heads decrease slower)" : " (earlier heads do not decrease slower)";
  }
  return {has_aux && header_ok && shape_ok && worst <= 1e-9 && rows.size() == record.metrics.epochs(),
          std::to_string(rows.size()) + " epochs, max |total - recomputed| = " + fmt(worst) +
              "; relative decrease " + decrease + " (reported only)"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path-to-auxit-cli>\n";
    return 2;
  }
  g_cli = argv[1];

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradient_correctness},
      {"alpha=0 equivalence", alpha_zero_equivalence},
      {"OSR convexity and zero set", osr_convexity},
      {"randomized proportional costs", proportional_setup},
      {"tree-distance costs", tree_costs},
      {"network structure", structure},
      {"desk-scale trend", desk_trend},
      {"CSAE degeneration", csae_degeneration},
      {"determinism and round trips", determinism},
      {"learning-curve emission", learning_curves},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << (i + 1) << "] " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
