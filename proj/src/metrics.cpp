#include "tropicnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tropicnet/errors.hpp"
#include "tropicnet/init.hpp"
#include "tropicnet/parallel.hpp"
#include "tropicnet/subgrad.hpp"

namespace tropicnet {
namespace {

std::size_t count_nonzero(std::span<const double> x) {
  return static_cast<std::size_t>(std::count_if(x.begin(), x.end(), [](double v) { return v != 0.0; }));
}

SparsityReport study_perceptron(const Dataset& data, std::uint64_t seed) {
  const ZeroHiddenModel model = glorot_uniform_init(data.classes, data.features(), seed);
  Matrix sum(data.classes, data.features());
  double gamma_sum = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const ZeroHiddenOutput out = forward_zero_hidden(model, data.sample(n), data.y[n]);
    ActiveSet active;
    active.n_star = n;
    active.d_star = data.y[n];
    active.p_star = out.winners;
    const SparseGrad grad = subgrad_zero_hidden(model, data.x, data.y, active);
    gamma_sum += static_cast<double>(grad.nnz(Layer::W)) / static_cast<double>(sum.size());
    for (const GradEntry& e : grad.entries()) sum(e.row, e.col) += e.value;
  }
  SparsityReport report{SparsityProbe::morph_perceptron, data.size(), sum.size()};
  report.gamma_of_avg = gamma(sum.data());
  report.avg_of_gamma = gamma_sum / static_cast<double>(data.size());
  return report;
}

SparsityReport study_linear_maxplus(const Dataset& data, std::uint64_t seed, std::size_t hidden) {
  const std::size_t features = data.features();
  const std::size_t classes = data.classes;
  std::mt19937_64 rng(seed);
  Matrix a(hidden, features);
  Matrix w(classes, hidden);
  std::uniform_real_distribution<double> da(-glorot_bound(features, hidden), glorot_bound(features, hidden));
  for (double& v : a.data()) v = da(rng);
  std::uniform_real_distribution<double> dw(-glorot_bound(hidden, classes), glorot_bound(hidden, classes));
  for (double& v : w.data()) v = dw(rng);

  // Gradient layout: A (hidden x features), b (hidden), W (classes x hidden).
  const std::size_t total = a.size() + hidden + w.size();
  Vector sum(total, 0.0);
  Vector grad(total);
  Vector pre(hidden), u(hidden), du(hidden), z(classes);
  std::vector<std::size_t> winner(classes);
  double gamma_sum = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto x = data.sample(n);
    for (std::size_t j = 0; j < hidden; ++j) {
      double s = 0.0;
      const auto row = a.row(j);
      for (std::size_t p = 0; p < features; ++p) s += row[p] * x[p];
      pre[j] = s;
      u[j] = std::max(s, 0.0);
    }
    for (std::size_t d = 0; d < classes; ++d) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < hidden; ++j) {
        if (u[j] + w(d, j) > u[best] + w(d, best)) best = j;
      }
      winner[d] = best;
      z[d] = u[best] + w(d, best);
    }
    const Vector yhat = softmax(z);
    std::fill(grad.begin(), grad.end(), 0.0);
    std::fill(du.begin(), du.end(), 0.0);
    double* gw = grad.data() + a.size() + hidden;
    for (std::size_t d = 0; d < classes; ++d) {
      const double v = yhat[d] - (d == data.y[n] ? 1.0 : 0.0);
      gw[d * hidden + winner[d]] += v;
      du[winner[d]] += v;
    }
    double* gb = grad.data() + a.size();
    for (std::size_t j = 0; j < hidden; ++j) {
      const double dpre = pre[j] > 0.0 ? du[j] : 0.0;
      gb[j] = dpre;
      if (dpre == 0.0) continue;
      for (std::size_t p = 0; p < features; ++p) grad[j * features + p] = dpre * x[p];
    }
    gamma_sum += gamma(grad);
    for (std::size_t t = 0; t < total; ++t) sum[t] += grad[t];
  }
  SparsityReport report{SparsityProbe::linear_maxplus, data.size(), total};
  report.gamma_of_avg = gamma(sum);
  report.avg_of_gamma = gamma_sum / static_cast<double>(data.size());
  return report;
}

void add_confidence(EvalReport& report, double p) {
  const auto bin = static_cast<std::size_t>(std::floor(p * static_cast<double>(kConfidenceBins)));
  ++report.confidence_bins[std::min(bin, kConfidenceBins - 1)];
}

void finish(EvalReport& report, double loss_sum, std::size_t correct) {
  const auto n = static_cast<double>(report.samples);
  report.avg_loss = loss_sum / n;
  report.accuracy = static_cast<double>(correct) / n;
  report.macro_f1 = macro_f1_from_confusion(report.confusion, &report.f1, &report.excluded_classes);
}

}  // namespace

double gamma(std::span<const double> x) {
  if (x.empty()) throw InvalidArgument("gamma: empty vector");
  return static_cast<double>(count_nonzero(x)) / static_cast<double>(x.size());
}

SparsityProbe parse_sparsity_probe(const std::string& name) {
  if (name == "morph_perceptron") return SparsityProbe::morph_perceptron;
  if (name == "linear_maxplus") return SparsityProbe::linear_maxplus;
  throw InvalidArgument("unknown sparsity probe '" + name + "'");
}

std::string to_string(SparsityProbe probe) {
  return probe == SparsityProbe::morph_perceptron ? "morph_perceptron" : "linear_maxplus";
}

SparsityReport sparsity_study(const Dataset& data, std::uint64_t seed, SparsityProbe probe, std::size_t hidden) {
  data.validate();
  if (data.classes < 2) throw InvalidArgument("sparsity_study: need at least two classes");
  if (probe == SparsityProbe::morph_perceptron) return study_perceptron(data, seed);
  return study_linear_maxplus(data, seed, hidden == 0 ? data.classes : hidden);
}

double macro_f1_from_confusion(const std::vector<std::vector<std::size_t>>& confusion, std::vector<double>* per_class,
                               std::vector<std::size_t>* excluded) {
  const std::size_t classes = confusion.size();
  std::vector<double> f1(classes, 0.0);
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (confusion[c].size() != classes) throw InvalidArgument("macro_f1: confusion matrix is not square");
    std::size_t support = 0, predicted = 0;
    for (std::size_t k = 0; k < classes; ++k) {
      support += confusion[c][k];
      predicted += confusion[k][c];
    }
    if (support == 0) {
      if (excluded) excluded->push_back(c);
      continue;
    }
    const double tp = static_cast<double>(confusion[c][c]);
    f1[c] = 2.0 * tp / static_cast<double>(support + predicted);
    sum += f1[c];
    ++counted;
  }
  if (per_class) *per_class = f1;
  return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

EvalReport evaluate(const LmmModel& model, const Dataset& data, std::size_t workers) {
  data.validate();
  if (model.features() != data.features() || model.classes() != data.classes) {
    throw InvalidArgument("evaluate: model does not match the dataset");
  }
  std::vector<Scores> scores(data.size());
  parallel_for(data.size(), workers, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t n = begin; n < end; ++n) scores[n] = lmm_scores(model, data.sample(n), data.y[n]);
  });

  EvalReport report;
  report.samples = data.size();
  report.confusion.assign(data.classes, std::vector<std::size_t>(data.classes, 0));
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const Scores& s = scores[n];
    const std::size_t pred = argmax(s.z);
    ++report.confusion[data.y[n]][pred];
    correct += pred == data.y[n];
    loss_sum += s.loss;
    report.max_loss = n == 0 ? s.loss : std::max(report.max_loss, s.loss);
    add_confidence(report, std::exp(s.z[data.y[n]] - s.lse));
  }
  finish(report, loss_sum, correct);
  return report;
}

EvalReport evaluate(const ZeroHiddenModel& model, const Dataset& data) {
  data.validate();
  EvalReport report;
  report.samples = data.size();
  report.confusion.assign(data.classes, std::vector<std::size_t>(data.classes, 0));
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const ZeroHiddenOutput out = forward_zero_hidden(model, data.sample(n), data.y[n]);
    const std::size_t pred = argmax(out.z);
    ++report.confusion[data.y[n]][pred];
    correct += pred == data.y[n];
    loss_sum += out.loss;
    report.max_loss = n == 0 ? out.loss : std::max(report.max_loss, out.loss);
    add_confidence(report, out.yhat[data.y[n]]);
  }
  finish(report, loss_sum, correct);
  return report;
}

double accuracy(const LmmModel& model, const Dataset& data, std::size_t workers) {
  return evaluate(model, data, workers).accuracy;
}

void write_eval_csv(std::ostream& out, const EvalReport& report, std::span<const std::string> class_names) {
  const std::size_t classes = report.confusion.size();
  auto name = [&](std::size_t c) { return c < class_names.size() ? class_names[c] : std::to_string(c); };
  out.precision(10);
  out << "metric,value\n"
      << "samples," << report.samples << '\n'
      << "max_loss," << report.max_loss << '\n'
      << "avg_loss," << report.avg_loss << '\n'
      << "accuracy," << report.accuracy << '\n'
      << "macro_f1," << report.macro_f1 << '\n';
  for (std::size_t c = 0; c < classes; ++c) out << "f1_" << name(c) << ',' << report.f1[c] << '\n';
  out << "excluded_classes,";
  for (std::size_t k = 0; k < report.excluded_classes.size(); ++k) {
    out << (k ? ";" : "") << name(report.excluded_classes[k]);
  }
  out << "\n\ntrue\\predicted";
  for (std::size_t c = 0; c < classes; ++c) out << ',' << name(c);
  out << '\n';
  for (std::size_t r = 0; r < classes; ++r) {
    out << name(r);
    for (std::size_t c = 0; c < classes; ++c) out << ',' << report.confusion[r][c];
    out << '\n';
  }
  out << "\nbin_low,bin_high,count\n";
  for (std::size_t b = 0; b < kConfidenceBins; ++b) {
    out << static_cast<double>(b) / kConfidenceBins << ',' << static_cast<double>(b + 1) / kConfidenceBins << ','
        << report.confidence_bins[b] << '\n';
  }
}

void write_sparsity_csv(std::ostream& out, std::span<const SparsityReport> reports) {
  out << "probe,samples,parameters,gamma_of_avg,avg_of_gamma\n";
  out.precision(10);
  for (const auto& r : reports) {
    out << to_string(r.probe) << ',' << r.samples << ',' << r.parameters << ',' << r.gamma_of_avg << ','
        << r.avg_of_gamma << '\n';
  }
}

}  // namespace tropicnet
