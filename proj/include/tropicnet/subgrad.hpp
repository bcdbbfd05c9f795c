#ifndef TROPICNET_SUBGRAD_HPP
#define TROPICNET_SUBGRAD_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tropicnet/matrix.hpp"
#include "tropicnet/model.hpp"
#include "tropicnet/sct.hpp"

namespace tropicnet {

enum class Layer : std::uint8_t { W0, W1, W2, W };

/// One coordinate of a sparse subgradient. For W0 the row is the effective
/// index i and the column is its pattern column.
struct GradEntry {
  Layer layer;
  std::size_t row;
  std::size_t col;
  double value;
};

/// Sparse element of the conservative field of the max-loss objective.
/// Entries hitting the same coordinate are summed on insertion.
class SparseGrad {
 public:
  void add(Layer layer, std::size_t row, std::size_t col, double value);

  const std::vector<GradEntry>& entries() const noexcept { return entries_; }
  double squared_norm() const noexcept { return squared_norm_; }

  /// Number of stored coordinates in `layer` (whether or not their value is 0).
  std::size_t count(Layer layer) const noexcept;
  /// Number of coordinates in `layer` with a nonzero value.
  std::size_t nnz(Layer layer) const noexcept;

  /// Copy without the entries of `layer`.
  SparseGrad without(Layer layer) const;

  bool empty() const noexcept { return entries_.empty(); }

 private:
  void recompute_norm();

  std::vector<GradEntry> entries_;
  double squared_norm_ = 0.0;
};

double squared_norm(const SparseGrad& grad);

/// Indices through which the max loss depends on the weights.
struct ActiveSet {
  std::size_t n_star = 0;
  std::size_t d_star = 0;
  std::vector<std::size_t> h_star;  // LMM: winning hidden neuron per class
  std::vector<std::size_t> i_star;  // LMM: winning min-layer input per class
  std::vector<std::size_t> p_star;  // zero-hidden: winning feature per class
};

/// Reads n* from the loss tree and the per-class winners from the trace of n*.
/// Throws InternalError when the loss tree and the traces disagree.
ActiveSet active_set(std::span<const ForwardTrace> traces, const MaxTree& loss_tree);

/// Per-class winners of a single trace, with n* set to `sample`.
ActiveSet active_set_of(const ForwardTrace& trace, std::size_t sample);

/// Worst sample and per-class winning features of a zero-hidden model.
ActiveSet active_set_zero_hidden(const ZeroHiddenModel& model, const Matrix& x,
                                 std::span<const std::size_t> labels);

/// Nonzero candidates: (d, p*_d) for every class; the true class carries
/// yhat_{d*} - 1, every other class carries yhat_d.
SparseGrad subgrad_zero_hidden(const ZeroHiddenModel& model, const Matrix& x,
                               std::span<const std::size_t> labels, const ActiveSet& active);

/// Sparse subgradient of the loss of the trace's sample with respect to
/// (W0, W1, W2). `x` is the feature vector of that sample. W0 entries stay on
/// the fixed pattern: effective index i*_d receives x_{col(i*_d)} times the
/// class-d output gradient.
SparseGrad subgrad_lmm(const LmmModel& model, const ForwardTrace& trace, std::span<const double> x,
                       const ActiveSet& active);

/// Dense materialization of an LMM subgradient.
struct DenseLmmGrad {
  Vector w0;
  Matrix w1;
  Matrix w2;
};

DenseLmmGrad densify(const SparseGrad& grad, const LmmModel& shape);
Matrix densify_zero_hidden(const SparseGrad& grad, const ZeroHiddenModel& shape);

}  // namespace tropicnet

#endif  // TROPICNET_SUBGRAD_HPP
