#include "tropicnet/subgrad.hpp"

#include <algorithm>
#include <string>

#include "tropicnet/errors.hpp"

namespace tropicnet {

void SparseGrad::add(Layer layer, std::size_t row, std::size_t col, double value) {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const GradEntry& e) {
    return e.layer == layer && e.row == row && e.col == col;
  });
  if (it != entries_.end()) {
    it->value += value;
  } else {
    entries_.push_back({layer, row, col, value});
  }
  recompute_norm();
}

void SparseGrad::recompute_norm() {
  squared_norm_ = 0.0;
  for (const auto& e : entries_) squared_norm_ += e.value * e.value;
}

std::size_t SparseGrad::count(Layer layer) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [&](const GradEntry& e) { return e.layer == layer; }));
}

std::size_t SparseGrad::nnz(Layer layer) const noexcept {
  return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(), [&](const GradEntry& e) {
    return e.layer == layer && e.value != 0.0;
  }));
}

SparseGrad SparseGrad::without(Layer layer) const {
  SparseGrad out;
  for (const auto& e : entries_) {
    if (e.layer != layer) out.entries_.push_back(e);
  }
  out.recompute_norm();
  return out;
}

double squared_norm(const SparseGrad& grad) { return grad.squared_norm(); }

ActiveSet active_set_of(const ForwardTrace& trace, std::size_t sample) {
  ActiveSet active;
  active.n_star = sample;
  active.d_star = trace.label;
  const std::size_t classes = trace.z.size();
  active.h_star.resize(classes);
  active.i_star.resize(classes);
  for (std::size_t d = 0; d < classes; ++d) {
    const std::size_t h = trace.max_winner(d);
    active.h_star[d] = h;
    active.i_star[d] = trace.min_winner(h);
  }
  return active;
}

ActiveSet active_set(std::span<const ForwardTrace> traces, const MaxTree& loss_tree) {
  if (loss_tree.size() != traces.size() || traces.empty()) {
    throw InternalError("active_set: loss tree covers " + std::to_string(loss_tree.size()) +
                        " samples, forest has " + std::to_string(traces.size()));
  }
  const Winner worst = loss_tree.root();
  if (worst.value != traces[worst.leaf].loss) {
    throw InternalError("active_set: loss tree root disagrees with trace " + std::to_string(worst.leaf));
  }
  return active_set_of(traces[worst.leaf], worst.leaf);
}

ActiveSet active_set_zero_hidden(const ZeroHiddenModel& model, const Matrix& x,
                                 std::span<const std::size_t> labels) {
  if (x.rows() == 0 || x.rows() != labels.size()) throw InvalidArgument("active_set_zero_hidden: bad data");
  ActiveSet active;
  double worst = 0.0;
  for (std::size_t n = 0; n < x.rows(); ++n) {
    auto out = forward_zero_hidden(model, x.row(n), labels[n]);
    if (n == 0 || out.loss > worst) {
      worst = out.loss;
      active.n_star = n;
      active.p_star = std::move(out.winners);
    }
  }
  active.d_star = labels[active.n_star];
  return active;
}

SparseGrad subgrad_zero_hidden(const ZeroHiddenModel& model, const Matrix& x,
                               std::span<const std::size_t> labels, const ActiveSet& active) {
  const auto out = forward_zero_hidden(model, x.row(active.n_star), labels[active.n_star]);
  SparseGrad grad;
  for (std::size_t d = 0; d < model.classes(); ++d) {
    const double v = out.yhat[d] - (d == active.d_star ? 1.0 : 0.0);
    grad.add(Layer::W, d, active.p_star[d], v);
  }
  return grad;
}

SparseGrad subgrad_lmm(const LmmModel& model, const ForwardTrace& trace, std::span<const double> x,
                       const ActiveSet& active) {
  const std::size_t classes = model.classes();
  if (active.h_star.size() != classes || active.i_star.size() != classes) {
    throw InvalidArgument("subgrad_lmm: active set does not match class count");
  }
  if (x.size() != model.features()) throw InvalidArgument("subgrad_lmm: dimension mismatch");
  const Vector yhat = softmax(trace.z, trace.lse);
  SparseGrad grad;
  for (std::size_t d = 0; d < classes; ++d) {
    const double v = yhat[d] - (d == active.d_star ? 1.0 : 0.0);
    const std::size_t h = active.h_star[d];
    const std::size_t i = active.i_star[d];
    grad.add(Layer::W2, h, d, v);
    grad.add(Layer::W1, i, h, v);
    grad.add(Layer::W0, i, pattern_column(i), x[pattern_column(i)] * v);
  }
  return grad;
}

DenseLmmGrad densify(const SparseGrad& grad, const LmmModel& shape) {
  DenseLmmGrad dense{Vector(shape.w0.size(), 0.0), Matrix(shape.w1.rows(), shape.w1.cols()),
                     Matrix(shape.w2.rows(), shape.w2.cols())};
  for (const auto& e : grad.entries()) {
    switch (e.layer) {
      case Layer::W0: dense.w0[e.row] += e.value; break;
      case Layer::W1: dense.w1(e.row, e.col) += e.value; break;
      case Layer::W2: dense.w2(e.row, e.col) += e.value; break;
      case Layer::W: throw InvalidArgument("densify: zero-hidden entry in LMM gradient");
    }
  }
  return dense;
}

Matrix densify_zero_hidden(const SparseGrad& grad, const ZeroHiddenModel& shape) {
  Matrix dense(shape.w.rows(), shape.w.cols());
  for (const auto& e : grad.entries()) {
    if (e.layer != Layer::W) throw InvalidArgument("densify_zero_hidden: LMM entry in gradient");
    dense(e.row, e.col) += e.value;
  }
  return dense;
}

}  // namespace tropicnet
