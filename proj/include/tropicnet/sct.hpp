#ifndef TROPICNET_SCT_HPP
#define TROPICNET_SCT_HPP

// Short computational trees: tournament trees over the extended reals that
// keep the extremum of N leaves (and the leaf realizing it) under O(log N)
// single-leaf updates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tropicnet/errors.hpp"

namespace tropicnet {

struct MaxOrder {
  static constexpr double sentinel() noexcept { return -std::numeric_limits<double>::infinity(); }
  static constexpr bool better(double a, double b) noexcept { return a > b; }
};

struct MinOrder {
  static constexpr double sentinel() noexcept { return std::numeric_limits<double>::infinity(); }
  static constexpr bool better(double a, double b) noexcept { return a < b; }
};

struct Winner {
  double value;
  std::size_t leaf;
};

struct UpdateResult {
  double old_root;
  double new_root;
  std::size_t nodes_touched;
};

/// Tournament tree with heap layout: node 1 is the root, leaf i lives at node
/// capacity + i. Internal nodes store only the index of their winning leaf,
/// the winning value is read back from the leaf array. Leaves past the logical
/// size hold the order's sentinel, which loses to every finite value.
///
/// Ties resolve to the smallest leaf index.
template <class Order>
class TournamentTree {
 public:
  TournamentTree() = default;

  explicit TournamentTree(std::span<const double> values) { assign(values); }

  /// Rebuilds the tree over `values` in O(N), reusing storage when possible.
  void assign(std::span<const double> values) {
    if (values.empty()) throw InvalidArgument("TournamentTree: empty input");
    size_ = static_cast<std::uint32_t>(values.size());
    capacity_ = 1;
    height_ = 0;
    while (capacity_ < size_) {
      capacity_ <<= 1;
      ++height_;
    }
    leaves_.assign(capacity_, Order::sentinel());
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i])) throw InvalidArgument("TournamentTree: non-finite leaf value");
      leaves_[i] = values[i];
    }
    winners_.assign(capacity_, 0);
    for (std::size_t node = capacity_ - 1; node >= 1; --node) {
      winners_[node] = pick(winner_of(2 * node), winner_of(2 * node + 1));
    }
  }

  std::size_t size() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t height() const noexcept { return height_; }
  bool empty() const noexcept { return size_ == 0; }

  Winner root() const noexcept {
    const std::uint32_t leaf = winner_of(1);
    return {leaves_[leaf], leaf};
  }

  double leaf_value(std::size_t leaf) const {
    check_leaf(leaf);
    return leaves_[leaf];
  }

  std::span<const double> leaves() const noexcept { return {leaves_.data(), size_}; }

  /// Sets one leaf and replays the matches on its root path. Touches exactly
  /// height() + 1 nodes.
  UpdateResult update(std::size_t leaf, double value) {
    check_leaf(leaf);
    if (!std::isfinite(value)) throw InvalidArgument("TournamentTree: non-finite leaf value");
    const double old_root = leaves_[winner_of(1)];
    leaves_[leaf] = value;
    std::size_t node = (capacity_ + leaf) >> 1;
    std::size_t touched = 1;
    while (node >= 1) {
      winners_[node] = pick(winner_of(2 * node), winner_of(2 * node + 1));
      node >>= 1;
      ++touched;
    }
    return {old_root, leaves_[winner_of(1)], touched};
  }

  /// Same postcondition as update(), but stops climbing once a node's winner
  /// and its value are unchanged, since no ancestor can change past that
  /// point. Returns the number of nodes touched (between 1 and height() + 1).
  /// The leaf index must be valid and the value finite.
  std::size_t update_pruned(std::size_t leaf, double value) noexcept {
    leaves_[leaf] = value;
    std::size_t node = (capacity_ + leaf) >> 1;
    std::size_t touched = 1;
    while (node >= 1) {
      const std::uint32_t before = winners_[node];
      const std::uint32_t after = pick(winner_of(2 * node), winner_of(2 * node + 1));
      ++touched;
      if (after == before && before != leaf) break;
      winners_[node] = after;
      node >>= 1;
    }
    return touched;
  }

  /// Full traversal check of the heap property. Intended for tests and audits.
  bool check_invariants() const {
    if (size_ == 0) return true;
    for (std::size_t node = capacity_ - 1; node >= 1; --node) {
      if (winners_[node] != pick(winner_of(2 * node), winner_of(2 * node + 1))) return false;
    }
    for (std::size_t i = size_; i < capacity_; ++i) {
      if (leaves_[i] != Order::sentinel()) return false;
    }
    return true;
  }

  /// Winner leaf stored at internal node `node` (1 <= node < capacity()).
  std::size_t internal_winner(std::size_t node) const { return winners_.at(node); }

  std::size_t memory_bytes() const noexcept {
    return sizeof(*this) + leaves_.capacity() * sizeof(double) +
           winners_.capacity() * sizeof(std::uint32_t);
  }

 private:
  std::uint32_t winner_of(std::size_t node) const noexcept {
    return node >= capacity_ ? static_cast<std::uint32_t>(node - capacity_) : winners_[node];
  }

  // Strict comparison keeps the left (lower-index) contender on ties.
  std::uint32_t pick(std::uint32_t left, std::uint32_t right) const noexcept {
    return Order::better(leaves_[right], leaves_[left]) ? right : left;
  }

  void check_leaf(std::size_t leaf) const {
    if (leaf >= size_) {
      throw IndexError("TournamentTree: leaf " + std::to_string(leaf) + " out of range (size " +
                       std::to_string(size_) + ")");
    }
  }

  std::uint32_t size_ = 0;
  std::uint32_t capacity_ = 0;
  std::uint32_t height_ = 0;
  std::vector<double> leaves_;
  std::vector<std::uint32_t> winners_;  // index 0 unused
};

/// Tournament over leaves held elsewhere. Only winner indices are stored, in
/// caller-owned storage of storage_for(size) entries; `leaf(i)` returns the
/// current value of leaf i for i < size, anything past it counts as the
/// sentinel. Same tie rule as TournamentTree.
///
/// With Block > 1 the bottom level is made of blocks of Block consecutive
/// leaves: only each block's winner is kept, and a block is rescanned when the
/// leaf that held it changes. Storage is then twice the padded block count,
/// internal nodes first, block winners after.
///
/// Several leaves may change before any replay, as long as each changed leaf
/// is replayed afterwards and `pending(i)` tells which changed leaves have not
/// been replayed yet. A block whose stored winner is pending gets rescanned;
/// otherwise that winner still beats every unchanged leaf of the block and one
/// comparison against it is enough. Callers that know the changed leaf did
/// not get worse may pass `may_worsen = false` to skip the rescan of a block
/// it already wins.
template <class Order, std::size_t Block = 1, class Index = std::uint16_t>
struct ImplicitTournament {
  static_assert(Block >= 1);
  static constexpr std::size_t block = Block;

  static std::size_t capacity_for(std::size_t size) noexcept {
    const std::size_t units = (size + Block - 1) / Block;
    std::size_t cap = 1;
    while (cap < units) cap <<= 1;
    return cap;
  }

  static std::size_t storage_for(std::size_t size) noexcept {
    return Block == 1 ? capacity_for(size) : 2 * capacity_for(size);
  }

  /// Largest size whose indices fit in Index.
  static constexpr std::size_t max_size() noexcept { return std::numeric_limits<Index>::max() / 2; }

  static std::size_t root(std::span<const Index> nodes) noexcept {
    if constexpr (Block == 1) {
      return nodes.size() == 1 ? 0 : nodes[1];
    } else {
      return nodes[1];
    }
  }

  template <class Leaf>
  static void build(std::span<Index> nodes, std::size_t size, const Leaf& leaf) {
    const std::size_t cap = capacity(nodes);
    if constexpr (Block > 1) {
      for (std::size_t b = 0; b < cap; ++b) nodes[cap + b] = scan_block(b, size, leaf);
    }
    for (std::size_t node = cap - 1; node >= 1; --node) {
      nodes[node] = pick(size, winner_of(nodes, cap, 2 * node), winner_of(nodes, cap, 2 * node + 1), leaf);
    }
  }

  /// Replays the matches above `changed`, stopping once a node keeps a winner
  /// other than `changed`. Returns the number of nodes and block leaves read.
  template <class Leaf>
  static std::size_t update_pruned(std::span<Index> nodes, std::size_t size, std::size_t changed, const Leaf& leaf) {
    return update_pruned(nodes, size, changed, leaf, [](std::size_t) { return false; }, true);
  }

  template <class Leaf, class Pending>
  static std::size_t update_pruned(std::span<Index> nodes, std::size_t size, std::size_t changed, const Leaf& leaf,
                                   const Pending& pending, bool may_worsen) {
    const std::size_t cap = capacity(nodes);
    std::size_t touched = 1;
    std::size_t node;
    if constexpr (Block == 1) {
      node = (cap + changed) >> 1;
    } else {
      const std::size_t b = changed / Block;
      const Index before = nodes[cap + b];
      Index after;
      if (before == changed && !may_worsen) {
        after = before;
      } else if (before == changed || pending(before)) {
        after = scan_block(b, size, leaf);
        touched += Block;
      } else {
        after = pick(size, before, static_cast<Index>(changed), leaf);
        ++touched;
      }
      if (after == before && before != changed) return touched;
      nodes[cap + b] = after;
      node = (cap + b) >> 1;
    }
    while (node >= 1) {
      const Index before = nodes[node];
      const Index after = pick(size, winner_of(nodes, cap, 2 * node), winner_of(nodes, cap, 2 * node + 1), leaf);
      ++touched;
      if (after == before && before != changed) break;
      nodes[node] = after;
      node >>= 1;
    }
    return touched;
  }

  template <class Leaf>
  static bool check(std::span<const Index> nodes, std::size_t size, const Leaf& leaf) {
    const std::size_t cap = capacity(nodes);
    if constexpr (Block > 1) {
      for (std::size_t b = 0; b < cap; ++b) {
        if (nodes[cap + b] != scan_block(b, size, leaf)) return false;
      }
    }
    for (std::size_t node = cap - 1; node >= 1; --node) {
      if (nodes[node] != pick(size, winner_of(nodes, cap, 2 * node), winner_of(nodes, cap, 2 * node + 1), leaf)) {
        return false;
      }
    }
    return true;
  }

  template <class Leaf>
  static double value(std::size_t size, std::size_t i, const Leaf& leaf) {
    return i < size ? leaf(i) : Order::sentinel();
  }

 private:
  static std::size_t capacity(std::span<const Index> nodes) noexcept {
    return Block == 1 ? nodes.size() : nodes.size() / 2;
  }

  static Index winner_of(std::span<const Index> nodes, std::size_t cap, std::size_t node) noexcept {
    if (node < cap) return nodes[node];
    if constexpr (Block == 1) {
      return static_cast<Index>(node - cap);
    } else {
      return nodes[node];
    }
  }

  // First index of a block that lies wholly past `size` stands for the padding.
  template <class Leaf>
  static Index scan_block(std::size_t b, std::size_t size, const Leaf& leaf) {
    const std::size_t first = b * Block;
    if (first >= size) return static_cast<Index>(std::min(first, max_size()));
    const std::size_t last = std::min(first + Block, size);
    std::size_t best = first;
    double best_value = leaf(first);
    for (std::size_t i = first + 1; i < last; ++i) {
      const double v = leaf(i);
      if (Order::better(v, best_value)) {
        best_value = v;
        best = i;
      }
    }
    return static_cast<Index>(best);
  }

  // On equal values the smaller index wins.
  template <class Leaf>
  static Index pick(std::size_t size, Index left, Index right, const Leaf& leaf) {
    const double l = value(size, left, leaf);
    const double r = value(size, right, leaf);
    if (Order::better(r, l)) return right;
    if (Order::better(l, r)) return left;
    return std::min(left, right);
  }
};

using MaxTree = TournamentTree<MaxOrder>;
using MinTree = TournamentTree<MinOrder>;

}  // namespace tropicnet

#endif  // TROPICNET_SCT_HPP
