#include "tropicnet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>

#include "tropicnet/errors.hpp"
#include "tropicnet/parallel.hpp"

namespace tropicnet {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Touched {
  std::vector<std::size_t> w0;                               // effective indices
  std::vector<std::pair<std::size_t, std::size_t>> w1, w2;  // (row, col)
  std::vector<char> w1_grew;                                 // per w1 entry: not decreased
};

// W <- W - alpha * g on the stored coordinates. Records which coordinates
// actually moved.
Touched apply_weights(LmmModel& model, const SparseGrad& grad, double alpha, bool update_w0) {
  Touched touched;
  for (const GradEntry& e : grad.entries()) {
    const double delta = alpha * e.value;
    if (delta == 0.0) continue;
    if (!std::isfinite(delta)) throw NumericalError("non-finite weight update");
    switch (e.layer) {
      case Layer::W0:
        if (!update_w0) break;
        model.w0[e.row] -= delta;
        touched.w0.push_back(e.row);
        break;
      case Layer::W1:
        model.w1(e.row, e.col) -= delta;
        touched.w1.emplace_back(e.row, e.col);
        touched.w1_grew.push_back(!(delta > 0.0));
        break;
      case Layer::W2:
        model.w2(e.row, e.col) -= delta;
        touched.w2.emplace_back(e.row, e.col);
        break;
      case Layer::W: throw InvalidArgument("apply_sparse_update: zero-hidden entry in an LMM gradient");
    }
  }
  return touched;
}

void accumulate(UpdateReport& into, const UpdateReport& part) {
  into.trees_touched += part.trees_touched;
  into.leaves_updated += part.leaves_updated;
  into.nodes_touched += part.nodes_touched;
  into.w0_cascades += part.w0_cascades;
  into.losses_changed += part.losses_changed;
}

std::vector<double> all_losses(const LmmModel& model, const Dataset& data, std::size_t workers) {
  std::vector<double> losses(data.size());
  parallel_for(data.size(), workers, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t n = begin; n < end; ++n) {
      const double loss = lmm_scores(model, data.sample(n), data.y[n]).loss;
      if (!std::isfinite(loss)) throw NumericalError("non-finite loss at sample " + std::to_string(n));
      losses[n] = loss;
    }
  });
  return losses;
}

void build_traces(TrainState& state) {
  const Dataset& data = *state.data;
  state.traces.resize(data.size());
  parallel_for(data.size(), state.workers, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t n = begin; n < end; ++n) {
      forward_lmm_into(state.model, data.sample(n), data.y[n], state.traces[n]);
    }
  });
  std::vector<double> losses(data.size());
  for (std::size_t n = 0; n < data.size(); ++n) losses[n] = state.traces[n].loss;
  state.loss_tree.assign(losses);
}

void diff(double& worst, double a, double b) {
  worst = std::max(worst, std::abs(a - b));
  if (std::isnan(a) != std::isnan(b)) worst = std::numeric_limits<double>::infinity();
}

void diff(double& worst, std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    worst = std::numeric_limits<double>::infinity();
    return;
  }
  for (std::size_t i = 0; i < a.size(); ++i) diff(worst, a[i], b[i]);
}

bool mode_updates_w0(UpdateMode mode, std::size_t iter, std::size_t skip_ratio) {
  return mode != UpdateMode::sparse_skip_w0 || iter % skip_ratio == 0;
}

}  // namespace

Objective parse_objective(const std::string& name) {
  if (name == "avg") return Objective::avg;
  if (name == "max") return Objective::max;
  throw InvalidArgument("unknown objective '" + name + "'");
}

UpdateMode parse_update_mode(const std::string& name) {
  if (name == "dense") return UpdateMode::dense;
  if (name == "sparse") return UpdateMode::sparse;
  if (name == "sparse_skip_w0") return UpdateMode::sparse_skip_w0;
  throw InvalidArgument("unknown update mode '" + name + "'");
}

std::string to_string(Objective objective) { return objective == Objective::avg ? "avg" : "max"; }

std::string to_string(UpdateMode mode) {
  switch (mode) {
    case UpdateMode::dense: return "dense";
    case UpdateMode::sparse: return "sparse";
    case UpdateMode::sparse_skip_w0: return "sparse_skip_w0";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be positive");
  if (!(target_loss >= 0.0) || !std::isfinite(target_loss)) throw ConfigError("target_loss must be >= 0");
  if (skip_ratio == 0) throw ConfigError("skip_ratio must be >= 1");
  if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError("k must be positive");
  if (hidden == 0) throw ConfigError("hidden must be >= 1");
  if (log_every == 0) throw ConfigError("log_every must be >= 1");
  if (history_capacity == 0) throw ConfigError("history_capacity must be >= 1");
  if (phase_switch && *phase_switch > iterations) throw ConfigError("phase_switch exceeds iterations");
}

LossHistory::LossHistory(std::size_t capacity) : buffer_(std::max<std::size_t>(capacity, 1)) {}

void LossHistory::push(double value) {
  buffer_[head_] = value;
  head_ = (head_ + 1) % buffer_.size();
  size_ = std::min(size_ + 1, buffer_.size());
}

double LossHistory::back() const {
  if (size_ == 0) throw IndexError("LossHistory: empty");
  return buffer_[(head_ + buffer_.size() - 1) % buffer_.size()];
}

std::vector<double> LossHistory::values() const {
  std::vector<double> out;
  out.reserve(size_);
  const std::size_t start = (head_ + buffer_.size() - size_) % buffer_.size();
  for (std::size_t k = 0; k < size_; ++k) out.push_back(buffer_[(start + k) % buffer_.size()]);
  return out;
}

std::size_t TrainState::forest_bytes() const noexcept {
  std::size_t bytes = loss_tree.memory_bytes() + traces.capacity() * sizeof(ForwardTrace);
  for (const auto& t : traces) bytes += t.memory_bytes() - sizeof(ForwardTrace);
  return bytes;
}

TrainState init_state(LmmModel model, std::shared_ptr<const Dataset> data, const TrainConfig& config) {
  config.validate();
  if (!data) throw InvalidArgument("init_state: no dataset");
  data->validate();
  model.validate();
  if (model.features() != data->features()) throw InvalidArgument("init_state: feature count mismatch");
  if (model.classes() != data->classes) throw InvalidArgument("init_state: class count mismatch");

  TrainState state{std::move(model), std::move(data), config.mode, {}, {}, 0, 0.0, 0,
                   LossHistory(config.history_capacity), resolve_workers(config.workers)};
  if (config.objective == Objective::max && config.mode != UpdateMode::dense) {
    build_traces(state);
  } else {
    state.loss_tree.assign(all_losses(state.model, *state.data, state.workers));
  }
  return state;
}

double polyak_step(double loss, double target, const SparseGrad& grad) {
  const double norm2 = grad.squared_norm();
  if (norm2 < 1e-18) return 0.0;
  return std::max(0.0, loss - target) / norm2;
}

double constant_step(double epsilon, std::size_t classes) {
  if (classes == 0) throw InvalidArgument("constant_step: no classes");
  return epsilon / (2.0 * std::sqrt(2.0 * static_cast<double>(classes)));
}

UpdateReport apply_sparse_update(TrainState& state, const SparseGrad& grad, double alpha, bool update_w0) {
  UpdateReport report;
  if (alpha == 0.0) return report;
  LmmModel& model = state.model;
  const Touched touched = apply_weights(model, grad, alpha, update_w0);
  report.weights_changed = touched.w0.size() + touched.w1.size() + touched.w2.size();
  if (report.weights_changed == 0 || state.traces.empty()) return report;

  const Dataset& data = *state.data;
  const std::size_t n_samples = data.size();
  const std::size_t hidden = model.hidden();
  const std::size_t classes = model.classes();
  const std::size_t inputs = model.w0.size();
  using MinForest = ForwardTrace::MinForest;
  using MaxForest = ForwardTrace::MaxForest;
  std::vector<char> loss_changed(n_samples, 0);
  std::vector<UpdateReport> parts(state.workers);

  // Leaf replays of each min tree: the W0 entries (any tree) and the W1
  // entries of its column. They all land before the first replay.
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  struct Replay {
    std::size_t leaf;
    std::size_t w0_slot;  // npos for W1 entries
    bool grew;            // W1 entries only
  };
  std::vector<std::vector<Replay>> min_replays(hidden);
  std::vector<std::size_t> min_rows;
  for (std::size_t h = 0; h < hidden; ++h) {
    if (!touched.w0.empty()) {
      for (std::size_t k = 0; k < touched.w0.size(); ++k) min_replays[h].push_back({touched.w0[k], k, true});
    }
  }
  for (std::size_t k = 0; k < touched.w1.size(); ++k) {
    const auto [i, h] = touched.w1[k];
    min_replays[h].push_back({i, npos, touched.w1_grew[k] != 0});
  }
  for (std::size_t h = 0; h < hidden; ++h) {
    if (!min_replays[h].empty()) min_rows.push_back(h);
  }
  std::vector<std::vector<std::size_t>> w2_rows(classes);
  // W1 by column, so that min tree h reads its leaves contiguously.
  Matrix w1_columns(hidden, inputs);
  for (std::size_t i = 0; i < inputs; ++i) {
    for (std::size_t h = 0; h < hidden; ++h) w1_columns(h, i) = model.w1(i, h);
  }
  const auto column_leaf = [&](const ForwardTrace& t, std::size_t h) {
    return MinLeaf{t.lambda.data(), w1_columns.row(h).data(), 1};
  };
  for (auto [h, d] : touched.w2) w2_rows[d].push_back(h);

  parallel_for(n_samples, state.workers, [&](std::size_t begin, std::size_t end, std::size_t worker) {
    UpdateReport& part = parts[worker];
    std::vector<char> h_dirty(hidden, 0);
    std::vector<std::size_t> dirty_h;
    std::vector<char> moved(touched.w0.size(), 0);
    std::vector<char> grew(touched.w0.size(), 0);
    bool any_d = false;
    auto mark_h = [&](std::size_t h) {
      if (!h_dirty[h]) {
        h_dirty[h] = 1;
        dirty_h.push_back(h);
      }
    };

    for (std::size_t n = begin; n < end; ++n) {
      ForwardTrace& t = state.traces[n];
      const auto x = data.sample(n);
      dirty_h.clear();
      any_d = false;

      bool lambda_moved = false;
      for (std::size_t k = 0; k < touched.w0.size(); ++k) {
        const std::size_t i = touched.w0[k];
        const double xv = x[pattern_column(i)];
        moved[k] = xv != 0.0;  // otherwise lambda_i stays 0
        if (!moved[k]) continue;
        const double lambda = model.w0[i] * xv;
        if (!std::isfinite(lambda)) throw NumericalError("non-finite lambda at sample " + std::to_string(n));
        grew[k] = !(lambda < t.lambda[i]);
        t.lambda[i] = lambda;
        lambda_moved = true;
      }
      if (lambda_moved) ++part.w0_cascades;

      for (std::size_t h : min_rows) {
        const MinLeaf leaf = column_leaf(t, h);
        const auto tree = t.min_tree(h);
        const std::size_t root_before = MinForest::root(tree);
        const auto& list = min_replays[h];
        std::size_t replays = 0;
        for (std::size_t k = 0; k < list.size(); ++k) {
          const std::size_t slot = list[k].w0_slot;
          if (slot != npos && !moved[slot]) continue;
          const auto pending = [&](std::size_t i) {
            for (std::size_t j = k + 1; j < list.size(); ++j) {
              if (list[j].leaf == i) return true;
            }
            return false;
          };
          const bool may_worsen = slot == npos ? list[k].grew : grew[slot] != 0;
          part.nodes_touched += MinForest::update_pruned(tree, inputs, list[k].leaf, leaf, pending, may_worsen);
          ++replays;
        }
        if (replays == 0) continue;
        ++part.trees_touched;
        part.leaves_updated += replays;
        // g[h] can only move if the root winner moved or is a changed leaf.
        const std::size_t root = MinForest::root(tree);
        bool suspect = root != root_before;
        for (std::size_t k = 0; !suspect && k < min_replays[h].size(); ++k) suspect = min_replays[h][k].leaf == root;
        if (suspect && leaf(root) != t.g[h]) mark_h(h);
      }

      for (std::size_t h : dirty_h) {
        h_dirty[h] = 0;
        t.g[h] = column_leaf(t, h)(t.min_winner(h));
      }
      for (std::size_t d = 0; d < classes; ++d) {
        if (dirty_h.empty() && w2_rows[d].empty()) continue;
        const MaxLeaf leaf = max_leaf(t, model, d);
        const auto tree = t.max_tree(d);
        for (std::size_t h : dirty_h) part.nodes_touched += MaxForest::update_pruned(tree, hidden, h, leaf);
        for (std::size_t h : w2_rows[d]) part.nodes_touched += MaxForest::update_pruned(tree, hidden, h, leaf);
        ++part.trees_touched;
        part.leaves_updated += dirty_h.size() + w2_rows[d].size();
        if (leaf(t.max_winner(d)) != t.z[d]) any_d = true;
      }

      if (!any_d) continue;
      const double before = t.loss;
      refresh_outputs(t, model);
      if (!std::isfinite(t.loss)) throw NumericalError("non-finite loss at sample " + std::to_string(n));
      if (t.loss != before) {
        loss_changed[n] = 1;
        ++part.losses_changed;
      }
    }
  });

  for (const auto& part : parts) accumulate(report, part);
  for (std::size_t n = 0; n < n_samples; ++n) {
    if (loss_changed[n]) state.loss_tree.update_pruned(n, state.traces[n].loss);
  }
  return report;
}

UpdateReport apply_dense_update(TrainState& state, const DenseLmmGrad& grad, double alpha) {
  UpdateReport report;
  if (alpha == 0.0) return report;
  LmmModel& model = state.model;
  if (grad.w0.size() != model.w0.size() || grad.w1.rows() != model.w1.rows() ||
      grad.w1.cols() != model.w1.cols() || grad.w2.rows() != model.w2.rows() ||
      grad.w2.cols() != model.w2.cols()) {
    throw InvalidArgument("apply_dense_update: gradient shape mismatch");
  }
  auto step = [&](std::span<double> w, std::span<const double> g) {
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= alpha * g[j];
  };
  step(model.w0, grad.w0);
  step(model.w1.data(), grad.w1.data());
  step(model.w2.data(), grad.w2.data());
  report.weights_changed = model.parameter_count();
  if (!state.traces.empty()) {
    build_traces(state);
  } else {
    recompute_losses(state);
  }
  report.losses_changed = state.data->size();
  return report;
}

StepInfo step_max(TrainState& state, const TrainConfig& config) {
  const Dataset& data = *state.data;
  StepInfo info;
  const Winner worst = state.loss_tree.root();
  info.max_loss = worst.value;
  info.worst_sample = worst.leaf;
  if (!std::isfinite(info.max_loss)) throw NumericalError("non-finite maximum loss");
  state.loss_history.push(info.max_loss);

  const auto x = data.sample(worst.leaf);
  SparseGrad grad;
  if (!state.traces.empty()) {
    const ActiveSet active = active_set(state.traces, state.loss_tree);
    grad = subgrad_lmm(state.model, state.traces[active.n_star], x, active);
  } else {
    const ForwardTrace trace = forward_lmm(state.model, x, data.y[worst.leaf]);
    grad = subgrad_lmm(state.model, trace, x, active_set_of(trace, worst.leaf));
  }

  info.updated_w0 = mode_updates_w0(state.mode, state.iter, config.skip_ratio);
  if (!info.updated_w0) grad = grad.without(Layer::W0);
  info.step_size = state.iter < config.switch_iteration() ? polyak_step(info.max_loss, config.target_loss, grad)
                                                          : constant_step(config.epsilon, data.classes);

  if (state.mode == UpdateMode::dense) {
    info.report = apply_dense_update(state, densify(grad, state.model), info.step_size);
  } else {
    info.report = apply_sparse_update(state, grad, info.step_size, info.updated_w0);
  }
  if (info.updated_w0 && grad.nnz(Layer::W0) > 0 && info.step_size > 0.0) ++state.w0_updates;
  ++state.iter;
  if (config.audit_every != 0 && state.iter % config.audit_every == 0) audit(state);
  return info;
}

void write_train_log(std::ostream& out, const TrainLog& log) {
  out << "iter,max_loss,avg_loss,step_size,ms_per_iter\n";
  out.precision(10);
  for (const LogRow& row : log.rows) {
    out << row.iter << ',' << row.max_loss << ',' << row.avg_loss << ',' << row.step_size << ','
        << row.ms_per_iter << '\n';
  }
}

TrainLog train_max(TrainState& state, const TrainConfig& config) {
  config.validate();
  TrainLog log;
  const auto start = Clock::now();
  auto last_time = start;
  std::size_t last_iter = state.iter;
  auto record = [&](double max_loss, double step) {
    const auto now = Clock::now();
    const std::size_t done = state.iter - last_iter;
    const double ms = done == 0 ? 0.0 : std::chrono::duration<double, std::milli>(now - last_time).count() / done;
    log.rows.push_back({state.iter, max_loss, avg_loss(state.losses()), step, ms});
    last_time = now;
    last_iter = state.iter;
  };

  while (state.iter < config.iterations) {
    const bool log_now = state.iter % config.log_every == 0;
    const double avg_before = log_now ? avg_loss(state.losses()) : 0.0;
    const std::size_t iter_before = state.iter;
    const StepInfo info = step_max(state, config);
    if (log_now) {
      const auto now = Clock::now();
      const std::size_t done = iter_before - last_iter;
      const double ms =
          done == 0 ? 0.0 : std::chrono::duration<double, std::milli>(now - last_time).count() / done;
      log.rows.push_back({iter_before, info.max_loss, avg_before, info.step_size, ms});
      last_time = now;
      last_iter = iter_before;
    }
  }
  record(state.loss_tree.root().value, 0.0);
  log.total_seconds = seconds_since(start);
  state.elapsed_seconds += log.total_seconds;
  return log;
}

void recompute_losses(TrainState& state) {
  state.loss_tree.assign(all_losses(state.model, *state.data, state.workers));
}

TrainLog train_avg_sgd(TrainState& state, const TrainConfig& config) {
  config.validate();
  const Dataset& data = *state.data;
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  const double alpha = constant_step(config.epsilon, data.classes);
  state.traces.clear();

  TrainLog log;
  const auto start = Clock::now();
  auto last_time = start;
  std::size_t last_iter = state.iter;
  auto record = [&](double step) {
    recompute_losses(state);
    const auto now = Clock::now();
    const std::size_t done = state.iter - last_iter;
    const double ms = done == 0 ? 0.0 : std::chrono::duration<double, std::milli>(now - last_time).count() / done;
    log.rows.push_back({state.iter, state.loss_tree.root().value, avg_loss(state.losses()), step, ms});
    last_time = Clock::now();
    last_iter = state.iter;
  };

  while (state.iter < config.iterations) {
    if (state.iter % config.log_every == 0) record(alpha);
    const std::size_t n = pick(rng);
    const auto x = data.sample(n);
    const ForwardTrace trace = forward_lmm(state.model, x, data.y[n]);
    const SparseGrad grad = subgrad_lmm(state.model, trace, x, active_set_of(trace, n));
    apply_weights(state.model, grad, alpha, true);
    ++state.iter;
  }
  record(0.0);
  log.total_seconds = seconds_since(start);
  state.elapsed_seconds += log.total_seconds;
  return log;
}

double max_divergence(const TrainState& state) {
  const Dataset& data = *state.data;
  double worst = 0.0;
  if (state.loss_tree.size() != data.size()) return std::numeric_limits<double>::infinity();

  if (state.traces.empty()) {
    const auto losses = all_losses(state.model, data, state.workers);
    diff(worst, state.losses(), losses);
  } else {
    if (state.traces.size() != data.size()) return std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < data.size(); ++n) {
      const ForwardTrace& t = state.traces[n];
      const ForwardTrace fresh = forward_lmm(state.model, data.sample(n), data.y[n]);
      diff(worst, t.lambda, fresh.lambda);
      diff(worst, t.g, fresh.g);
      diff(worst, t.z, fresh.z);
      diff(worst, t.lse, fresh.lse);
      diff(worst, t.loss, fresh.loss);
      // Trees hold indices only: any disagreement is a structural error.
      if (t.min_nodes != fresh.min_nodes || t.max_nodes != fresh.max_nodes) {
        return std::numeric_limits<double>::infinity();
      }
      diff(worst, state.loss_tree.leaf_value(n), fresh.loss);
    }
  }
  diff(worst, state.loss_tree.root().value, max_loss(state.losses()).first);
  return worst;
}

void audit(const TrainState& state, double tolerance) {
  if (!state.loss_tree.check_invariants()) throw ConsistencyError("loss tree violates the heap invariant");
  for (std::size_t n = 0; n < state.traces.size(); ++n) {
    const ForwardTrace& t = state.traces[n];
    const std::size_t inputs = state.model.w0.size();
    const std::size_t hidden = state.model.hidden();
    bool ok = t.min_nodes.size() == hidden * t.min_capacity && t.g.size() == hidden &&
              t.max_nodes.size() == state.model.classes() * t.max_capacity;
    for (std::size_t h = 0; ok && h < hidden; ++h) {
      ok = ForwardTrace::MinForest::check(t.min_tree(h), inputs, min_leaf(t, state.model, h));
    }
    for (std::size_t d = 0; ok && d < t.z.size(); ++d) {
      ok = ForwardTrace::MaxForest::check(t.max_tree(d), hidden, max_leaf(t, state.model, d));
    }
    if (!ok) throw ConsistencyError("trace of sample " + std::to_string(n) + " violates the heap invariant");
  }
  const double gap = max_divergence(state);
  if (!(gap <= tolerance)) {
    throw ConsistencyError("incremental state diverged from a rebuild by " + std::to_string(gap) +
                           " at iteration " + std::to_string(state.iter));
  }
}

std::vector<BenchRow> benchmark(const LmmModel& initial, std::shared_ptr<const Dataset> data,
                                const TrainConfig& config, std::span<const UpdateMode> modes) {
  std::vector<BenchRow> rows;
  for (UpdateMode mode : modes) {
    TrainConfig run = config;
    run.mode = mode;
    run.objective = Objective::max;
    run.audit_every = 0;
    TrainState state = init_state(initial, data, run);
    BenchRow row{mode};
    row.forest_bytes = state.forest_bytes();
    const auto start = Clock::now();
    while (state.iter < run.iterations) step_max(state, run);
    row.total_seconds = seconds_since(start);
    row.iterations = state.iter;
    row.seconds_per_iter = row.iterations == 0 ? 0.0 : row.total_seconds / static_cast<double>(row.iterations);
    row.w0_updates = state.w0_updates;
    row.final_max_loss = state.loss_tree.root().value;
    rows.push_back(row);
  }
  return rows;
}

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows) {
  out << "mode,iterations,total_seconds,seconds_per_iter,forest_bytes,w0_updates,final_max_loss\n";
  out.precision(10);
  for (const BenchRow& row : rows) {
    out << to_string(row.mode) << ',' << row.iterations << ',' << row.total_seconds << ','
        << row.seconds_per_iter << ',' << row.forest_bytes << ',' << row.w0_updates << ','
        << row.final_max_loss << '\n';
  }
}

}  // namespace tropicnet
