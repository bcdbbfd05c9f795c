#ifndef TROPICNET_MODEL_HPP
#define TROPICNET_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "tropicnet/matrix.hpp"
#include "tropicnet/sct.hpp"

namespace tropicnet {

/// Single max-plus layer: z_d = max_p (x_p + W(d, p)).
struct ZeroHiddenModel {
  Matrix w;  // classes x features

  std::size_t classes() const noexcept { return w.rows(); }
  std::size_t features() const noexcept { return w.cols(); }
  void validate() const;
};

/// Linear-min-max network.
///
///   lambda(x) = W0 x            (2P outputs, fixed sparsity pattern)
///   g_h(x)    = min_i (lambda_i(x) + W1(i, h))
///   z_d(x)    = max_h (g_h(x) + W2(h, d))
///
/// W0 is kept as its 2P effective entries: entry i multiplies feature
/// pattern_column(i), so the pair (2p, 2p + 1) acts on feature p. The
/// structured initialization sets them to (+k, -k).
struct LmmModel {
  Vector w0;  // 2P
  Matrix w1;  // 2P x H
  Matrix w2;  // H x C

  std::size_t features() const noexcept { return w0.size() / 2; }
  std::size_t hidden() const noexcept { return w1.cols(); }
  std::size_t classes() const noexcept { return w2.cols(); }
  std::size_t parameter_count() const noexcept { return w0.size() + w1.size() + w2.size(); }

  /// Throws InvalidArgument on inconsistent shapes or non-finite weights.
  void validate() const;

  friend bool operator==(const LmmModel&, const LmmModel&) = default;
};

constexpr std::size_t pattern_column(std::size_t effective_index) noexcept {
  return effective_index / 2;
}

/// Per-sample cache of every intermediate of the LMM forward pass, with one
/// min tree per hidden neuron and one max tree per class so that single
/// weight changes can be propagated in logarithmic time. The trees keep only
/// winner indices; leaf values are read back from lambda, g and the weights.
struct ForwardTrace {
  using Node = std::uint16_t;
  using MinForest = ImplicitTournament<MinOrder, 16, Node>;
  using MaxForest = ImplicitTournament<MaxOrder, 1, Node>;

  Vector lambda;                // 2P
  std::size_t min_capacity = 0;  // entries per min tree
  std::vector<Node> min_nodes;  // H blocks
  Vector g;                     // H
  std::size_t max_capacity = 0;  // entries per max tree
  std::vector<Node> max_nodes;  // C blocks
  Vector z;                     // C
  double lse = 0.0;
  double loss = 0.0;
  std::size_t label = 0;

  std::span<Node> min_tree(std::size_t h) noexcept {
    return {min_nodes.data() + h * min_capacity, min_capacity};
  }
  std::span<const Node> min_tree(std::size_t h) const noexcept {
    return {min_nodes.data() + h * min_capacity, min_capacity};
  }
  std::span<Node> max_tree(std::size_t d) noexcept {
    return {max_nodes.data() + d * max_capacity, max_capacity};
  }
  std::span<const Node> max_tree(std::size_t d) const noexcept {
    return {max_nodes.data() + d * max_capacity, max_capacity};
  }
  /// Index i attaining g[h].
  std::size_t min_winner(std::size_t h) const noexcept { return MinForest::root(min_tree(h)); }
  /// Hidden unit attaining z[d].
  std::size_t max_winner(std::size_t d) const noexcept { return MaxForest::root(max_tree(d)); }

  std::size_t memory_bytes() const noexcept;
};

/// Leaf reader of min tree h: lambda_i + W1(i, h).
struct MinLeaf {
  const double* lambda;
  const double* w1;  // row-major 2P x H, offset to column h
  std::size_t stride;
  double operator()(std::size_t i) const noexcept { return lambda[i] + w1[i * stride]; }
};

/// Leaf reader of max tree d: g_h + W2(h, d).
struct MaxLeaf {
  const double* g;
  const double* w2;  // row-major H x C, offset to column d
  std::size_t stride;
  double operator()(std::size_t h) const noexcept { return g[h] + w2[h * stride]; }
};

MinLeaf min_leaf(const ForwardTrace& trace, const LmmModel& model, std::size_t h);
MaxLeaf max_leaf(const ForwardTrace& trace, const LmmModel& model, std::size_t d);

/// Rebuilds both forests of `trace` from its lambda and the model, keeping the
/// storage. Updates g and z but not lse or loss.
void build_forests(ForwardTrace& trace, const LmmModel& model);

/// Tree-free forward result.
struct Scores {
  Vector z;
  double lse = 0.0;
  double loss = 0.0;
};

/// max(bias, max_i (x_i + w_i)).
double morph_perceptron(std::span<const double> x, std::span<const double> w, double bias);

/// max(z) + log(sum(exp(z - max(z)))).
double logsumexp(std::span<const double> z);

/// Softmax of `z` given its precomputed log-sum-exp.
Vector softmax(std::span<const double> z, double lse);
Vector softmax(std::span<const double> z);

/// Smallest index attaining the maximum.
std::size_t argmax(std::span<const double> z);

Vector lambda_eval(const LmmModel& model, std::span<const double> x);

ForwardTrace forward_lmm(const LmmModel& model, std::span<const double> x, std::size_t label);

/// Same as forward_lmm but reuses the storage already held by `trace`.
void forward_lmm_into(const LmmModel& model, std::span<const double> x, std::size_t label,
                      ForwardTrace& trace);

/// Plain nested-loop forward pass without trees.
Scores lmm_scores(const LmmModel& model, std::span<const double> x, std::size_t label);

/// Recomputes z, lse and loss of a trace from its max-tree roots.
void refresh_outputs(ForwardTrace& trace, const LmmModel& model);

struct ZeroHiddenOutput {
  Vector z;
  Vector yhat;
  double loss = 0.0;
  std::vector<std::size_t> winners;  // per class: argmax_p (x_p + W(d, p))
};

ZeroHiddenOutput forward_zero_hidden(const ZeroHiddenModel& model, std::span<const double> x,
                                     std::size_t label);

double sample_loss(const ForwardTrace& trace);
double avg_loss(std::span<const ForwardTrace> traces);
/// Maximum loss and the smallest index attaining it.
std::pair<double, std::size_t> max_loss(std::span<const ForwardTrace> traces);

double avg_loss(std::span<const double> losses);
std::pair<double, std::size_t> max_loss(std::span<const double> losses);

}  // namespace tropicnet

#endif  // TROPICNET_MODEL_HPP
