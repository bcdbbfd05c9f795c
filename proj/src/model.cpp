#include "tropicnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tropicnet/errors.hpp"

namespace tropicnet {
namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_input(const LmmModel& model, std::span<const double> x, std::size_t label) {
  if (x.size() != model.features()) {
    throw InvalidArgument("LMM forward: expected " + std::to_string(model.features()) +
                          " features, got " + std::to_string(x.size()));
  }
  if (label >= model.classes()) throw InvalidArgument("LMM forward: label out of range");
}

void finish_outputs(Vector& z, double& lse, double& loss, std::size_t label) {
  lse = logsumexp(z);
  loss = lse - z[label];
  if (!std::isfinite(loss)) throw NumericalError("LMM forward: non-finite loss");
}

}  // namespace

void ZeroHiddenModel::validate() const {
  if (classes() < 2 || features() < 1) throw InvalidArgument("ZeroHiddenModel: need C >= 2, P >= 1");
  if (!all_finite(w.data())) throw InvalidArgument("ZeroHiddenModel: non-finite weight");
}

void LmmModel::validate() const {
  if (w0.empty() || w0.size() % 2 != 0) throw InvalidArgument("LmmModel: w0 must have length 2P");
  if (w1.rows() != w0.size()) throw InvalidArgument("LmmModel: W1 must have 2P rows");
  if (w1.cols() == 0) throw InvalidArgument("LmmModel: need at least one hidden neuron");
  if (w2.rows() != w1.cols()) throw InvalidArgument("LmmModel: W2 rows must equal H");
  if (w2.cols() < 2) throw InvalidArgument("LmmModel: need at least two classes");
  if (!all_finite(w0) || !all_finite(w1.data()) || !all_finite(w2.data())) {
    throw InvalidArgument("LmmModel: non-finite weight");
  }
}

std::size_t ForwardTrace::memory_bytes() const noexcept {
  std::size_t bytes = sizeof(*this) + (lambda.capacity() + g.capacity() + z.capacity()) * sizeof(double);
  return bytes + (min_nodes.capacity() + max_nodes.capacity()) * sizeof(Node);
}

double morph_perceptron(std::span<const double> x, std::span<const double> w, double bias) {
  if (x.size() != w.size()) throw InvalidArgument("morph_perceptron: length mismatch");
  double best = bias;
  for (std::size_t i = 0; i < x.size(); ++i) best = std::max(best, x[i] + w[i]);
  return best;
}

double logsumexp(std::span<const double> z) {
  if (z.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - m);
  return m + std::log(sum);
}

Vector softmax(std::span<const double> z, double lse) {
  Vector p(z.size());
  for (std::size_t d = 0; d < z.size(); ++d) p[d] = std::exp(z[d] - lse);
  return p;
}

Vector softmax(std::span<const double> z) { return softmax(z, logsumexp(z)); }

std::size_t argmax(std::span<const double> z) {
  return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

Vector lambda_eval(const LmmModel& model, std::span<const double> x) {
  if (x.size() != model.features()) throw InvalidArgument("lambda_eval: dimension mismatch");
  Vector lambda(model.w0.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) lambda[i] = model.w0[i] * x[pattern_column(i)];
  return lambda;
}

void forward_lmm_into(const LmmModel& model, std::span<const double> x, std::size_t label,
                      ForwardTrace& trace) {
  check_input(model, x, label);
  trace.label = label;
  trace.lambda = lambda_eval(model, x);
  if (!all_finite(trace.lambda)) throw NumericalError("LMM forward: non-finite lambda");

  build_forests(trace, model);
  if (!all_finite(trace.g)) throw NumericalError("LMM forward: non-finite min-layer output");
  if (!all_finite(trace.z)) throw NumericalError("LMM forward: non-finite max-layer output");
  finish_outputs(trace.z, trace.lse, trace.loss, label);
}

MinLeaf min_leaf(const ForwardTrace& trace, const LmmModel& model, std::size_t h) {
  return {trace.lambda.data(), model.w1.data().data() + h, model.hidden()};
}

MaxLeaf max_leaf(const ForwardTrace& trace, const LmmModel& model, std::size_t d) {
  return {trace.g.data(), model.w2.data().data() + d, model.classes()};
}

void build_forests(ForwardTrace& trace, const LmmModel& model) {
  using Forest = ForwardTrace;
  const std::size_t inputs = model.w0.size();
  const std::size_t hidden = model.hidden();
  const std::size_t classes = model.classes();
  if (inputs > Forest::MinForest::max_size() || hidden > Forest::MaxForest::max_size()) throw InvalidArgument("LMM forward: layer too wide for the trace trees");

  trace.min_capacity = Forest::MinForest::storage_for(inputs);
  trace.min_nodes.resize(hidden * trace.min_capacity);
  trace.g.resize(hidden);
  for (std::size_t h = 0; h < hidden; ++h) {
    const MinLeaf leaf = min_leaf(trace, model, h);
    Forest::MinForest::build(trace.min_tree(h), inputs, leaf);
    trace.g[h] = leaf(trace.min_winner(h));
  }

  trace.max_capacity = Forest::MaxForest::storage_for(hidden);
  trace.max_nodes.resize(classes * trace.max_capacity);
  trace.z.resize(classes);
  for (std::size_t d = 0; d < classes; ++d) {
    const MaxLeaf leaf = max_leaf(trace, model, d);
    Forest::MaxForest::build(trace.max_tree(d), hidden, leaf);
    trace.z[d] = leaf(trace.max_winner(d));
  }
}

ForwardTrace forward_lmm(const LmmModel& model, std::span<const double> x, std::size_t label) {
  ForwardTrace trace;
  forward_lmm_into(model, x, label, trace);
  return trace;
}

Scores lmm_scores(const LmmModel& model, std::span<const double> x, std::size_t label) {
  check_input(model, x, label);
  const std::size_t inputs = model.w0.size();
  const std::size_t hidden = model.hidden();
  const std::size_t classes = model.classes();

  Vector g(hidden, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < inputs; ++i) {
    const double lambda = model.w0[i] * x[pattern_column(i)];
    const auto row = model.w1.row(i);
    for (std::size_t h = 0; h < hidden; ++h) g[h] = std::min(g[h], lambda + row[h]);
  }
  Scores out;
  out.z.assign(classes, -std::numeric_limits<double>::infinity());
  for (std::size_t h = 0; h < hidden; ++h) {
    const auto row = model.w2.row(h);
    for (std::size_t d = 0; d < classes; ++d) out.z[d] = std::max(out.z[d], g[h] + row[d]);
  }
  finish_outputs(out.z, out.lse, out.loss, label);
  return out;
}

void refresh_outputs(ForwardTrace& trace, const LmmModel& model) {
  for (std::size_t d = 0; d < trace.z.size(); ++d) {
    trace.z[d] = max_leaf(trace, model, d)(trace.max_winner(d));
  }
  finish_outputs(trace.z, trace.lse, trace.loss, trace.label);
}

ZeroHiddenOutput forward_zero_hidden(const ZeroHiddenModel& model, std::span<const double> x,
                                     std::size_t label) {
  if (x.size() != model.features()) throw InvalidArgument("forward_zero_hidden: dimension mismatch");
  if (label >= model.classes()) throw InvalidArgument("forward_zero_hidden: label out of range");
  ZeroHiddenOutput out;
  out.z.resize(model.classes());
  out.winners.resize(model.classes());
  for (std::size_t d = 0; d < model.classes(); ++d) {
    const auto row = model.w.row(d);
    std::size_t best = 0;
    double value = x[0] + row[0];
    for (std::size_t p = 1; p < x.size(); ++p) {
      const double v = x[p] + row[p];
      if (v > value) {
        value = v;
        best = p;
      }
    }
    out.z[d] = value;
    out.winners[d] = best;
  }
  const double lse = logsumexp(out.z);
  out.yhat = softmax(out.z, lse);
  out.loss = lse - out.z[label];
  if (!std::isfinite(out.loss)) throw NumericalError("forward_zero_hidden: non-finite loss");
  return out;
}

double sample_loss(const ForwardTrace& trace) { return trace.loss; }

double avg_loss(std::span<const double> losses) {
  if (losses.empty()) throw InvalidArgument("avg_loss: empty set");
  double sum = 0.0;
  for (double l : losses) sum += l;
  return sum / static_cast<double>(losses.size());
}

std::pair<double, std::size_t> max_loss(std::span<const double> losses) {
  if (losses.empty()) throw InvalidArgument("max_loss: empty set");
  std::size_t best = 0;
  for (std::size_t n = 1; n < losses.size(); ++n) {
    if (losses[n] > losses[best]) best = n;
  }
  return {losses[best], best};
}

double avg_loss(std::span<const ForwardTrace> traces) {
  if (traces.empty()) throw InvalidArgument("avg_loss: empty set");
  double sum = 0.0;
  for (const auto& t : traces) sum += t.loss;
  return sum / static_cast<double>(traces.size());
}

std::pair<double, std::size_t> max_loss(std::span<const ForwardTrace> traces) {
  if (traces.empty()) throw InvalidArgument("max_loss: empty set");
  std::size_t best = 0;
  for (std::size_t n = 1; n < traces.size(); ++n) {
    if (traces[n].loss > traces[best].loss) best = n;
  }
  return {traces[best].loss, best};
}

}  // namespace tropicnet
