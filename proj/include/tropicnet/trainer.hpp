#ifndef TROPICNET_TRAINER_HPP
#define TROPICNET_TRAINER_HPP

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tropicnet/data.hpp"
#include "tropicnet/init.hpp"
#include "tropicnet/model.hpp"
#include "tropicnet/sct.hpp"
#include "tropicnet/subgrad.hpp"

namespace tropicnet {

enum class Objective { avg, max };
enum class UpdateMode { dense, sparse, sparse_skip_w0 };

Objective parse_objective(const std::string& name);
UpdateMode parse_update_mode(const std::string& name);
std::string to_string(Objective objective);
std::string to_string(UpdateMode mode);

struct TrainConfig {
  Objective objective = Objective::max;
  UpdateMode mode = UpdateMode::sparse;
  std::size_t iterations = 50000;
  std::optional<std::size_t> phase_switch;  // Polyak before, constant after; default iterations / 2
  double epsilon = 0.1;
  double target_loss = 0.0;  // L*
  std::size_t skip_ratio = 100;
  double k = 4.0;
  std::size_t hidden = 20;
  InitKind init = InitKind::structured;
  std::uint64_t seed = 0;
  std::size_t log_every = 100;
  std::size_t audit_every = 0;  // 0 disables the periodic rebuild audit
  std::size_t workers = 1;
  std::size_t history_capacity = 4096;

  void validate() const;
  std::size_t switch_iteration() const noexcept { return phase_switch.value_or(iterations / 2); }
};

/// Fixed-capacity ring buffer of the most recent max-loss values.
class LossHistory {
 public:
  explicit LossHistory(std::size_t capacity = 4096);
  void push(double value);
  std::size_t size() const noexcept { return size_; }
  double back() const;
  std::vector<double> values() const;  // oldest first

 private:
  std::vector<double> buffer_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

/// Counters of one weight application.
struct UpdateReport {
  std::size_t weights_changed = 0;
  std::size_t trees_touched = 0;
  std::size_t leaves_updated = 0;
  std::size_t nodes_touched = 0;
  std::size_t w0_cascades = 0;  // samples whose lambda changed
  std::size_t losses_changed = 0;
};

struct TrainState {
  LmmModel model;
  std::shared_ptr<const Dataset> data;
  UpdateMode mode = UpdateMode::sparse;
  std::vector<ForwardTrace> traces;  // empty in dense mode and for SGD
  MaxTree loss_tree;                 // leaf n holds the loss of sample n
  std::size_t iter = 0;
  double elapsed_seconds = 0.0;
  std::size_t w0_updates = 0;  // iterations that applied W0 entries
  LossHistory loss_history;
  std::size_t workers = 1;

  std::span<const double> losses() const noexcept { return loss_tree.leaves(); }
  /// Bytes held by the trace forest and the loss tree.
  std::size_t forest_bytes() const noexcept;
};

/// Full forward pass over the dataset. Sparse modes keep one ForwardTrace per
/// sample, dense mode only the losses.
TrainState init_state(LmmModel model, std::shared_ptr<const Dataset> data, const TrainConfig& config);

/// max(0, L - L*) / |g|^2, or 0 when |g|^2 < 1e-18.
double polyak_step(double loss, double target, const SparseGrad& grad);

/// epsilon / (2 sqrt(2 C)).
double constant_step(double epsilon, std::size_t classes);

/// W <- W - alpha * grad on the touched coordinates only, then propagates the
/// changes through every sample's trees: W0 entries refresh lambda_i and leaf i
/// of all H min trees, W1 entries one min-tree leaf, and changed hidden
/// outputs or W2 entries the max-tree leaves. Loss and log-sum-exp are
/// refreshed only for samples whose class scores moved.
UpdateReport apply_sparse_update(TrainState& state, const SparseGrad& grad, double alpha, bool update_w0);

/// W <- W - alpha * grad over every parameter, then recomputes all N forward
/// passes from scratch.
UpdateReport apply_dense_update(TrainState& state, const DenseLmmGrad& grad, double alpha);

struct StepInfo {
  double max_loss = 0.0;
  std::size_t worst_sample = 0;
  double step_size = 0.0;
  bool updated_w0 = false;
  UpdateReport report;
};

/// One iteration of sparse subgradient descent on the maximum loss.
StepInfo step_max(TrainState& state, const TrainConfig& config);

struct LogRow {
  std::size_t iter = 0;
  double max_loss = 0.0;
  double avg_loss = 0.0;
  double step_size = 0.0;
  double ms_per_iter = 0.0;
};

struct TrainLog {
  std::vector<LogRow> rows;
  double total_seconds = 0.0;
};

void write_train_log(std::ostream& out, const TrainLog& log);

TrainLog train_max(TrainState& state, const TrainConfig& config);

/// Stochastic subgradient descent on the average loss: one uniformly drawn
/// sample per iteration, fixed step constant_step(epsilon, C). Losses are
/// recomputed for the whole set only at logging points.
TrainLog train_avg_sgd(TrainState& state, const TrainConfig& config);

/// Recomputes every loss with a tree-free forward pass and rebuilds the loss
/// tree (used after SGD).
void recompute_losses(TrainState& state);

/// Largest absolute difference between the incremental state and a
/// from-scratch rebuild at the current weights (lambda, g, z, lse, losses,
/// tree leaves and loss tree).
double max_divergence(const TrainState& state);

/// Throws ConsistencyError when max_divergence exceeds `tolerance` or a tree
/// violates its heap invariant.
void audit(const TrainState& state, double tolerance = 1e-6);

struct BenchRow {
  UpdateMode mode;
  std::size_t iterations = 0;
  double total_seconds = 0.0;
  double seconds_per_iter = 0.0;
  std::size_t forest_bytes = 0;
  std::size_t w0_updates = 0;
  double final_max_loss = 0.0;
};

/// Runs every mode for config.iterations steps from the same initial model.
std::vector<BenchRow> benchmark(const LmmModel& initial, std::shared_ptr<const Dataset> data,
                                const TrainConfig& config, std::span<const UpdateMode> modes);

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows);

}  // namespace tropicnet

#endif  // TROPICNET_TRAINER_HPP
