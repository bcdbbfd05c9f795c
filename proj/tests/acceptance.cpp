// Acceptance checks. Run without arguments for every criterion, or pass
// criterion numbers. Prints one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>

#include "commands.hpp"
#include "oracles.hpp"
#include "tropicnet/approx.hpp"
#include "tropicnet/init.hpp"
#include "tropicnet/metrics.hpp"
#include "tropicnet/sct.hpp"
#include "tropicnet/subgrad.hpp"
#include "tropicnet/trainer.hpp"

using namespace tropicnet;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class... Args>
std::string fmt(const char* pattern, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double value_at(const SparseGrad& g, Layer layer, std::size_t row, std::size_t col) {
  for (const auto& e : g.entries()) {
    if (e.layer == layer && e.row == row && e.col == col) return e.value;
  }
  return 0.0;
}

bool matches_fd(double reported, double fd) {
  return std::abs(reported - fd) <= 1e-5 * std::max(std::abs(fd), 1e-3);
}

Config iris_config() {
  Config c;
  c.set("dataset", "iris");
  c.set("workers", "1");
  c.set("log_every", "50000");
  return c;
}

struct RunResult {
  double train_max_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double initial_train_accuracy = 0.0;
  double initial_max_loss = 0.0;
  double seconds = 0.0;
};

RunResult train_run(const Config& config) {
  const TrainConfig tc = to_train_config(config);
  const cli::ExperimentData data = cli::load_experiment(config);
  const LmmModel model = make_lmm(InitSpec{tc.init, tc.k, std::nullopt, tc.seed}, *data.train, tc.hidden);
  RunResult r;
  r.initial_train_accuracy = accuracy(model, *data.train);
  TrainState state = init_state(model, data.train, tc);
  r.initial_max_loss = state.loss_tree.root().value;
  const auto start = Clock::now();
  train_max(state, tc);
  r.seconds = seconds_since(start);
  r.train_max_loss = state.loss_tree.root().value;
  r.train_accuracy = accuracy(state.model, *data.train);
  r.test_accuracy = data.test.size() > 0 ? accuracy(state.model, data.test) : 0.0;
  return r;
}

// 1. Tournament trees against a linear scan.
Outcome sct_oracle() {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> size_dist(1, 4097);
  std::normal_distribution<double> nd(0.0, 10.0);
  const auto start = Clock::now();
  std::size_t ops = 0, mismatches = 0, bad_counts = 0;
  auto check = [&](const auto& tree, const std::vector<double>& values, bool maximum) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (maximum ? values[i] > values[best] : values[i] < values[best]) best = i;
    }
    if (tree.root().leaf != best || tree.root().value != values[best]) ++mismatches;
  };
  auto run = [&](auto tree, bool maximum) {
    const std::size_t n = ops % 50 == 0 ? 4097 - ops % 7 : size_dist(rng);
    std::vector<double> values(n);
    for (double& v : values) v = std::round(nd(rng));  // rounding forces ties
    tree.assign(values);
    ++ops;
    check(tree, values, maximum);
    std::uniform_int_distribution<std::size_t> leaf(0, n - 1);
    for (int u = 0; u < 99; ++u) {
      const std::size_t i = leaf(rng);
      values[i] = std::round(nd(rng));
      const UpdateResult res = tree.update(i, values[i]);
      ++ops;
      if (res.nodes_touched != tree.height() + 1) ++bad_counts;
      check(tree, values, maximum);
    }
  };
  for (int round = 0; ops < 100000; ++round) {
    if (round % 2 == 0) {
      run(MaxTree{}, true);
    } else {
      run(MinTree{}, false);
    }
  }
  const double secs = seconds_since(start);
  return {mismatches == 0 && bad_counts == 0 && secs < 30.0,
          fmt("%zu operations, %zu root mismatches, %zu wrong node counts, %.2f s", ops, mismatches, bad_counts, secs)};
}

// 2. Reported subgradient entries against central differences.
Outcome finite_differences() {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  const auto start = Clock::now();
  std::size_t instances = 0, entries = 0, zeros = 0, failures = 0;
  double worst_zero = 0.0;

  // LMM instances.
  for (std::size_t t = 0; instances < 100; ++t) {
    const std::size_t p = 1 + t % 8, h = 1 + t % 6, c = 2 + t % 3;
    const LmmModel m = oracle::random_lmm(rng, p, h, c);
    std::vector<double> x(p);
    for (double& v : x) v = nd(rng);
    if (oracle::winner_margin(m, x) < 1e-4) continue;
    ++instances;
    const std::size_t label = t % c;
    const ForwardTrace tr = forward_lmm(m, x, label);
    const SparseGrad g = subgrad_lmm(m, tr, x, active_set_of(tr, 0));
    auto probe = [&](Layer layer, oracle::Param param, std::size_t row, std::size_t col, std::size_t fd_col) {
      const double reported = value_at(g, layer, row, col);
      const double fd = oracle::central_difference(m, x, label, param, row, fd_col);
      if (reported != 0.0) {
        ++entries;
        if (!matches_fd(reported, fd)) ++failures;
      } else {
        ++zeros;
        worst_zero = std::max(worst_zero, std::abs(fd));
        if (std::abs(fd) >= 1e-7) ++failures;
      }
    };
    for (std::size_t i = 0; i < 2 * p; ++i) probe(Layer::W0, oracle::Param::w0, i, pattern_column(i), 0);
    for (std::size_t i = 0; i < 2 * p; ++i) {
      for (std::size_t k = 0; k < h; ++k) probe(Layer::W1, oracle::Param::w1, i, k, k);
    }
    for (std::size_t k = 0; k < h; ++k) {
      for (std::size_t d = 0; d < c; ++d) probe(Layer::W2, oracle::Param::w2, k, d, d);
    }
  }

  // Zero-hidden instances over small datasets.
  std::size_t zh = 0;
  for (std::size_t t = 0; zh < 100; ++t) {
    const std::size_t p = 1 + t % 8, c = 2 + t % 3, n = 1 + t % 4;
    ZeroHiddenModel m{Matrix(c, p)};
    for (double& v : m.w.data()) v = nd(rng);
    Matrix x(n, p);
    for (double& v : x.data()) v = nd(rng);
    std::vector<std::size_t> y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = k % c;
    // Unique worst sample and unique per-class winners at it.
    std::vector<double> losses(n);
    for (std::size_t k = 0; k < n; ++k) losses[k] = oracle::zero_hidden_loss(m.w, x.row(k), y[k]);
    std::vector<double> sorted = losses;
    std::sort(sorted.rbegin(), sorted.rend());
    if (n > 1 && sorted[0] - sorted[1] < 1e-4) continue;
    const std::size_t worst = static_cast<std::size_t>(std::max_element(losses.begin(), losses.end()) - losses.begin());
    bool unique = true;
    for (std::size_t d = 0; d < c && p > 1; ++d) {
      std::vector<double> v(p);
      for (std::size_t q = 0; q < p; ++q) v[q] = x(worst, q) + m.w(d, q);
      std::sort(v.rbegin(), v.rend());
      unique = unique && v[0] - v[1] >= 1e-4;
    }
    if (!unique) continue;
    ++zh;
    ++instances;
    const ActiveSet a = active_set_zero_hidden(m, x, y);
    const SparseGrad g = subgrad_zero_hidden(m, x, y, a);
    for (std::size_t d = 0; d < c; ++d) {
      for (std::size_t q = 0; q < p; ++q) {
        ZeroHiddenModel up = m, down = m;
        up.w(d, q) += 1e-6;
        down.w(d, q) -= 1e-6;
        const double fd = (oracle::zero_hidden_loss(up.w, x.row(worst), y[worst]) -
                           oracle::zero_hidden_loss(down.w, x.row(worst), y[worst])) / 2e-6;
        const double reported = value_at(g, Layer::W, d, q);
        if (reported != 0.0) {
          ++entries;
          if (!matches_fd(reported, fd)) ++failures;
        } else {
          ++zeros;
          worst_zero = std::max(worst_zero, std::abs(fd));
          if (std::abs(fd) >= 1e-7) ++failures;
        }
      }
    }
  }
  const double secs = seconds_since(start);
  return {failures == 0 && secs < 60.0,
          fmt("%zu instances, %zu entries and %zu zero coordinates checked, %zu failures, largest zero-coordinate "
              "difference %.2e, %.2f s",
              instances, entries, zeros, failures, worst_zero, secs)};
}

// 3. At most C nonzero entries per layer.
Outcome sparsity_theorem() {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pd(1, 20), hd(1, 30), cd(2, 10), nd(1, 20);
  std::size_t violations = 0, largest_ratio_hits = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t p = pd(rng), h = hd(rng), c = cd(rng), n = nd(rng);
    const auto data = std::make_shared<const Dataset>(oracle::random_dataset(rng, n, p, c));
    TrainConfig tc;
    tc.hidden = h;
    const TrainState s = init_state(oracle::random_lmm(rng, p, h, c), data, tc);
    const ActiveSet a = active_set(s.traces, s.loss_tree);
    const SparseGrad g = subgrad_lmm(s.model, s.traces[a.n_star], data->sample(a.n_star), a);
    for (Layer l : {Layer::W0, Layer::W1, Layer::W2}) {
      if (g.nnz(l) > c) ++violations;
      if (g.nnz(l) == c) ++largest_ratio_hits;
    }
    ZeroHiddenModel z{Matrix(c, p)};
    std::normal_distribution<double> w;
    for (double& v : z.w.data()) v = w(rng);
    const SparseGrad gz = subgrad_zero_hidden(z, data->x, data->y, active_set_zero_hidden(z, data->x, data->y));
    if (gz.nnz(Layer::W) > c) ++violations;
  }
  return {violations == 0, fmt("1000 configurations, %zu layers over C, %zu layers exactly at C", violations,
                               largest_ratio_hits)};
}

// 4. Incremental state against rebuilds, and dense against sparse.
Outcome cascade_soundness() {
  std::mt19937_64 rng(4);
  Dataset d = oracle::random_dataset(rng, 64, 8, 3);
  for (std::size_t k = 0; k < d.x.size(); k += 7) d.x.data()[k] = 0.0;
  const auto data = std::make_shared<const Dataset>(std::move(d));
  TrainConfig tc;
  tc.hidden = 8;
  tc.iterations = 1000;
  tc.log_every = 1000;
  const LmmModel initial = structured_init(*data, 8, 4.0, 4);

  TrainState sparse = init_state(initial, data, tc);
  double worst = 0.0;
  std::vector<double> path;
  while (sparse.iter < tc.iterations) {
    path.push_back(step_max(sparse, tc).max_loss);
    worst = std::max(worst, max_divergence(sparse));
  }
  path.push_back(sparse.loss_tree.root().value);

  TrainConfig dense_tc = tc;
  dense_tc.mode = UpdateMode::dense;
  TrainState dense = init_state(initial, data, dense_tc);
  std::size_t k = 0;
  double gap = 0.0;
  while (dense.iter < dense_tc.iterations) gap = std::max(gap, std::abs(step_max(dense, dense_tc).max_loss - path[k++]));
  gap = std::max(gap, std::abs(dense.loss_tree.root().value - path[k]));
  return {worst <= 1e-8 && gap <= 1e-8,
          fmt("1000 steps, largest divergence from rebuild %.2e, largest dense/sparse loss gap %.2e, final max loss %.4f",
              worst, gap, path.back())};
}

// 5. Max loss below log 2 implies 100% training accuracy.
Outcome log2_proposition() {
  std::mt19937_64 rng(5);
  std::size_t below = 0, counterexamples = 0;
  std::uniform_real_distribution<double> scale(0.5, 8.0);
  for (int t = 0; t < 10000; ++t) {
    const std::size_t c = 2 + t % 5, p = 1 + t % 4, h = 1 + t % 5, n = 1 + t % 6;
    const LmmModel m = oracle::random_lmm(rng, p, h, c, scale(rng));
    const Dataset data = oracle::random_dataset(rng, n, p, c);
    double worst = 0.0;
    bool all_correct = true;
    for (std::size_t k = 0; k < n; ++k) {
      const oracle::Forward f = oracle::lmm(m, std::vector<double>(data.sample(k).begin(), data.sample(k).end()), data.y[k]);
      worst = std::max(worst, f.loss);
      const std::size_t pred = static_cast<std::size_t>(std::max_element(f.z.begin(), f.z.end()) - f.z.begin());
      all_correct = all_correct && pred == data.y[k];
    }
    if (worst < std::log(2.0)) {
      ++below;
      if (!all_correct) ++counterexamples;
    }
  }
  return {counterexamples == 0 && below > 0,
          fmt("10000 draws, %zu with max loss below log 2, %zu counterexamples", below, counterexamples)};
}

// 6. Iris, H = 20, 50,000 iterations.
Outcome iris_reproduction() {
  Config c = iris_config();
  c.set("phase_switch", "0");
  c.set("epsilon", "0.1");
  const RunResult r = train_run(c);
  const bool pass = r.train_max_loss >= 0.3 && r.train_max_loss <= 0.6 && r.train_accuracy == 1.0 &&
                    r.test_accuracy >= 0.9;
  return {pass, fmt("train max loss %.4f, train accuracy %.4f, test accuracy %.4f, %.1f s", r.train_max_loss,
                    r.train_accuracy, r.test_accuracy, r.seconds)};
}

// 7. H = N_train interpolates at iteration 0 and training drives the max loss below 0.1.
// Runs with slope k = 8; the k = 4 run is reported alongside.
Outcome interpolation() {
  Config c = iris_config();
  const cli::ExperimentData data = cli::load_experiment(c);
  c.set("H", std::to_string(data.train->size()));
  c.set("k", "8");
  const RunResult r = train_run(c);
  c.set("k", "4");
  const RunResult r4 = train_run(c);
  return {r.initial_train_accuracy == 1.0 && r.initial_max_loss > 0.1 && r.train_max_loss < 0.1,
          fmt("H = %zu, k = 8: accuracy at iteration 0 %.4f, max loss %.4f -> %.4f, %.1f s; k = 4: accuracy at "
              "iteration 0 %.4f, max loss %.4f -> %.4f",
              data.train->size(), r.initial_train_accuracy, r.initial_max_loss, r.train_max_loss, r.seconds,
              r4.initial_train_accuracy, r4.initial_max_loss, r4.train_max_loss)};
}

// 8. Structured against Gaussian and uniform initialization over 10 seeds.
Outcome init_comparison() {
  std::map<std::string, std::vector<double>> finals;
  for (const char* init : {"structured", "gaussian", "uniform"}) {
    for (int seed = 0; seed < 10; ++seed) {
      Config c = iris_config();
      c.set("phase_switch", "0");
      c.set("epsilon", "0.1");
      c.set("init", init);
      c.set("seed", std::to_string(seed));
      finals[init].push_back(train_run(c).train_max_loss);
    }
  }
  auto lo = [](const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); };
  auto hi = [](const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); };
  const double worst_structured = hi(finals["structured"]);
  const double best_random = std::min(lo(finals["gaussian"]), lo(finals["uniform"]));
  return {worst_structured < best_random,
          fmt("structured [%.4f, %.4f], gaussian [%.4f, %.4f], uniform [%.4f, %.4f]", lo(finals["structured"]),
              worst_structured, lo(finals["gaussian"]), hi(finals["gaussian"]), lo(finals["uniform"]),
              hi(finals["uniform"]))};
}

// 9. Subgradient sparsity on 1,000 MNIST samples.
Outcome sparsity_study_mnist() {
  Config c;
  c.set("dataset", "mnist");
  const Dataset data = sample_subset(cli::load_all(c), 1000, 0);
  const SparsityReport lmp = sparsity_study(data, 0, SparsityProbe::linear_maxplus);
  const SparsityReport mp = sparsity_study(data, 0, SparsityProbe::morph_perceptron);
  const bool pass = lmp.gamma_of_avg > 0.5 && lmp.avg_of_gamma < 0.1 && mp.avg_of_gamma < 0.1 &&
                    lmp.gamma_of_avg > 3.0 * lmp.avg_of_gamma && mp.gamma_of_avg > 3.0 * mp.avg_of_gamma;
  return {pass, fmt("linear max-plus: gamma of average %.4f, average gamma %.4f; morphological perceptron: gamma of "
                    "average %.4f, average gamma %.5f",
                    lmp.gamma_of_avg, lmp.avg_of_gamma, mp.gamma_of_avg, mp.avg_of_gamma)};
}

// 10. Per-iteration time of the three update modes.
Outcome benchmark_ordering() {
  Config c;
  c.set("dataset", "mnist");
  const Dataset base = cli::load_all(c);
  TrainConfig tc;
  tc.hidden = 100;
  tc.iterations = 300;
  tc.phase_switch = 300;
  tc.workers = 1;
  const std::vector<UpdateMode> modes{UpdateMode::sparse_skip_w0, UpdateMode::sparse, UpdateMode::dense};
  std::map<std::size_t, std::vector<BenchRow>> runs;
  for (std::size_t n : {1000, 10000}) {
    const auto data = std::make_shared<const Dataset>(cli::tile(base, n));
    runs[n] = benchmark(structured_init(*data, tc.hidden, tc.k, 0), data, tc, modes);
  }
  const auto& big = runs[10000];
  const auto& small = runs[1000];
  const double skip = big[0].seconds_per_iter, sparse = big[1].seconds_per_iter, dense = big[2].seconds_per_iter;
  const bool ordered = skip < sparse && sparse < dense && dense / sparse >= 3.0;
  const double small_ratio = small[2].seconds_per_iter / small[1].seconds_per_iter;
  bool grows = dense / sparse > small_ratio;
  for (std::size_t m = 0; m < 3; ++m) grows = grows && big[m].seconds_per_iter > small[m].seconds_per_iter;
  return {ordered && grows,
          fmt("P=%zu, N=10000 ms/iter: skip %.3f, sparse %.3f, dense %.3f (dense/sparse %.2fx, sparse/skip %.1fx); "
              "N=1000: skip %.3f, sparse %.3f, dense %.3f (dense/sparse %.2fx); forest %.0f MB at N=10000",
              base.features(), 1e3 * skip, 1e3 * sparse, 1e3 * dense, dense / sparse, sparse / skip,
              1e3 * small[0].seconds_per_iter, 1e3 * small[1].seconds_per_iter, 1e3 * small[2].seconds_per_iter,
              small_ratio, static_cast<double>(big[1].forest_bytes) / 1e6)};
}

// 11. Pyramid bank for |x - 0.3|.
Outcome approximation_bound() {
  auto f = [](double x) { return std::abs(x - 0.3); };
  Matrix grid(101, 1);
  Vector fv(101);
  for (std::size_t i = 0; i < 101; ++i) {
    grid(i, 0) = static_cast<double>(i) / 100.0;
    fv[i] = f(grid(i, 0));
  }
  PyramidBank bank = build_bank(grid, fv, 1.0);
  double grid_error = 0.0;
  for (std::size_t i = 0; i < 101; ++i) grid_error = std::max(grid_error, std::abs(eval_h(bank, grid.row(i)) - fv[i]));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix queries(10000, 1);
  for (double& v : queries.data()) v = u(rng);
  bank.delta = covering_radius(grid, queries);
  double sup = 0.0;
  for (std::size_t q = 0; q < queries.rows(); ++q) sup = std::max(sup, std::abs(eval_h(bank, queries.row(q)) - f(queries(q, 0))));
  return {grid_error <= 1e-15 && sup <= 0.02 && sup <= 2.0 * bank.delta + 1e-15,
          fmt("grid error %.1e, sampled delta %.5f, sup error %.2e, bound 2K*0.01 = 0.02", grid_error, bank.delta, sup)};
}

// 12. MNIST subset, N = 2,000, H = 100, 20,000 iterations.
Outcome mnist_subset() {
  Config c;
  c.set("dataset", "mnist");
  c.set("train_fraction", "0.8");
  c.set("train_samples", "2000");
  c.set("test_samples", "1000");
  c.set("H", "100");
  c.set("k", "4");
  c.set("iterations", "20000");
  c.set("mode", "sparse_skip_w0");
  c.set("log_every", "20000");
  const RunResult r = train_run(c);
  return {r.train_max_loss < std::log(10.0) && r.test_accuracy > 0.7,
          fmt("train max loss %.4f (log 10 = %.4f), train accuracy %.4f, test accuracy %.4f, %.1f s", r.train_max_loss,
              std::log(10.0), r.train_accuracy, r.test_accuracy, r.seconds)};
}

const std::map<int, std::pair<const char*, std::function<Outcome()>>>& criteria() {
  static const std::map<int, std::pair<const char*, std::function<Outcome()>>> all{
      {1, {"tournament trees vs linear scan", sct_oracle}},
      {2, {"subgradients vs central differences", finite_differences}},
      {3, {"at most C nonzeros per layer", sparsity_theorem}},
      {4, {"cascade soundness", cascade_soundness}},
      {5, {"max loss below log 2", log2_proposition}},
      {6, {"Iris reproduction", iris_reproduction}},
      {7, {"interpolation with H = N", interpolation}},
      {8, {"initialization comparison", init_comparison}},
      {9, {"MNIST subgradient sparsity", sparsity_study_mnist}},
      {10, {"update mode timing", benchmark_ordering}},
      {11, {"approximation bound", approximation_bound}},
      {12, {"MNIST subset training", mnist_subset}},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int a = 1; a < argc; ++a) selected.push_back(std::stoi(argv[a]));
  if (selected.empty()) {
    for (const auto& [id, entry] : criteria()) selected.push_back(id);
  }
  int failed = 0;
  for (int id : selected) {
    const auto it = criteria().find(id);
    if (it == criteria().end()) {
      std::cerr << "unknown criterion " << id << '\n';
      return 2;
    }
    Outcome o;
    try {
      o = it->second.second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << id << " (" << it->second.first << "): " << (o.pass ? "PASS" : "FAIL") << ": "
              << o.detail << std::endl;
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
