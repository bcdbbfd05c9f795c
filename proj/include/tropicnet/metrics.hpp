#ifndef TROPICNET_METRICS_HPP
#define TROPICNET_METRICS_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tropicnet/data.hpp"
#include "tropicnet/model.hpp"

namespace tropicnet {

/// Fraction of exactly nonzero entries. Throws InvalidArgument on empty input.
double gamma(std::span<const double> x);

/// Model used to draw the per-sample subgradients of the sparsity study.
enum class SparsityProbe {
  morph_perceptron,  // z_d = max_p (x_p + W(d, p)), Glorot uniform W
  linear_maxplus,    // z_d = max_j (relu(A x + b)_j + W(d, j)), Glorot A and W, b = 0
};

SparsityProbe parse_sparsity_probe(const std::string& name);
std::string to_string(SparsityProbe probe);

struct SparsityReport {
  SparsityProbe probe = SparsityProbe::morph_perceptron;
  std::size_t samples = 0;
  std::size_t parameters = 0;
  double gamma_of_avg = 0.0;  // gamma of the averaged subgradient
  double avg_of_gamma = 0.0;  // average of the per-sample gammas
};

/// Per-sample loss subgradients at a seeded Glorot initialization. `hidden` is
/// the width of the linear layer of the linear_maxplus probe (0 means C).
SparsityReport sparsity_study(const Dataset& data, std::uint64_t seed,
                              SparsityProbe probe = SparsityProbe::morph_perceptron, std::size_t hidden = 0);

inline constexpr std::size_t kConfidenceBins = 20;

struct EvalReport {
  std::size_t samples = 0;
  double max_loss = 0.0;
  double avg_loss = 0.0;
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  double macro_f1 = 0.0;
  std::vector<double> f1;                     // per class, 0 for excluded classes
  std::vector<std::size_t> excluded_classes;  // zero support
  std::array<std::size_t, kConfidenceBins> confidence_bins{};  // predicted probability of the true class
};

EvalReport evaluate(const LmmModel& model, const Dataset& data, std::size_t workers = 1);
EvalReport evaluate(const ZeroHiddenModel& model, const Dataset& data);

/// Mean per-class F1 over classes with nonzero support. Classes without
/// support are appended to `excluded` when given.
double macro_f1_from_confusion(const std::vector<std::vector<std::size_t>>& confusion,
                               std::vector<double>* per_class = nullptr,
                               std::vector<std::size_t>* excluded = nullptr);

double accuracy(const LmmModel& model, const Dataset& data, std::size_t workers = 1);

/// Three CSV blocks separated by blank lines: metrics, confusion matrix,
/// confidence histogram.
void write_eval_csv(std::ostream& out, const EvalReport& report, std::span<const std::string> class_names = {});
void write_sparsity_csv(std::ostream& out, std::span<const SparsityReport> reports);

}  // namespace tropicnet

#endif  // TROPICNET_METRICS_HPP
