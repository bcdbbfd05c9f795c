#include "tropicnet/approx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "tropicnet/errors.hpp"

namespace tropicnet {
namespace {

double linf(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) d = std::max(d, std::abs(a[p] - b[p]));
  return d;
}

// Row of biases making pyramid i peak at f(x^i): f(x^i) - lambda_j(x^i).
Vector pyramid_biases(double lipschitz, std::span<const double> center, double f_value) {
  Vector b = bank_lambda(lipschitz, center);
  for (double& v : b) v = -v + f_value;
  return b;
}

void check_point(const PyramidBank& bank, std::span<const double> x) {
  if (x.size() != bank.features()) throw InvalidArgument("pyramid bank: dimension mismatch");
}

}  // namespace

Vector bank_lambda(double lipschitz, std::span<const double> x) {
  Vector out(2 * x.size());
  for (std::size_t p = 0; p < x.size(); ++p) {
    out[2 * p] = lipschitz * x[p];
    out[2 * p + 1] = -lipschitz * x[p];
  }
  return out;
}

PyramidBank build_bank(const Matrix& grid, std::span<const double> f_values, double lipschitz) {
  if (!(lipschitz > 0.0)) throw InvalidArgument("build_bank: K must be positive");
  if (grid.rows() == 0 || grid.cols() == 0) throw InvalidArgument("build_bank: empty grid");
  if (f_values.size() != grid.rows()) throw InvalidArgument("build_bank: one f value per grid point");
  std::set<std::vector<double>> seen;
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    const auto row = grid.row(i);
    if (!seen.emplace(row.begin(), row.end()).second) throw InvalidArgument("build_bank: duplicate grid point");
  }

  PyramidBank bank{grid, Vector(f_values.begin(), f_values.end()), lipschitz, 0.0,
                   Matrix(grid.rows(), 2 * grid.cols())};
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    const Vector b = pyramid_biases(lipschitz, grid.row(i), f_values[i]);
    std::copy(b.begin(), b.end(), bank.biases.row(i).begin());
  }
  return bank;
}

double eval_pyramid(const PyramidBank& bank, std::size_t i, std::span<const double> x) {
  check_point(bank, x);
  if (i >= bank.size()) throw IndexError("eval_pyramid: pyramid index out of range");
  const Vector lambda = bank_lambda(bank.lipschitz, x);
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < lambda.size(); ++j) g = std::min(g, lambda[j] + bank.biases(i, j));
  return g;
}

double eval_pyramid_closed(const PyramidBank& bank, std::size_t i, std::span<const double> x) {
  check_point(bank, x);
  if (i >= bank.size()) throw IndexError("eval_pyramid_closed: pyramid index out of range");
  return bank.f_values[i] - bank.lipschitz * linf(x, bank.grid.row(i));
}

double eval_h(const PyramidBank& bank, std::span<const double> x) {
  double h = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < bank.size(); ++i) h = std::max(h, eval_pyramid(bank, i, x));
  return h;
}

double covering_radius(const Matrix& grid, const Matrix& queries) {
  if (grid.rows() == 0) throw InvalidArgument("covering_radius: empty grid");
  if (queries.cols() != grid.cols()) throw InvalidArgument("covering_radius: dimension mismatch");
  double radius = 0.0;
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.rows(); ++i) nearest = std::min(nearest, linf(queries.row(q), grid.row(i)));
    radius = std::max(radius, nearest);
  }
  return radius;
}

LmmModel build_classifier_bank(const Dataset& samples, double k) {
  if (!(k > 0.0)) throw InvalidArgument("build_classifier_bank: k must be positive");
  if (samples.size() == 0 || samples.classes < 2) throw InvalidArgument("build_classifier_bank: need samples and two classes");
  const std::size_t features = samples.features();
  const std::size_t m = samples.size();

  LmmModel model{bank_lambda(k, std::vector<double>(features, 1.0)), Matrix(2 * features, m),
                 Matrix(m, samples.classes)};
  for (std::size_t j = 0; j < m; ++j) {
    const Vector b = pyramid_biases(k, samples.sample(j), 0.0);
    for (std::size_t i = 0; i < 2 * features; ++i) model.w1(i, j) = b[i];
    for (std::size_t d = 0; d < samples.classes; ++d) model.w2(j, d) = k * (d == samples.y[j] ? 1.0 : -1.0);
  }
  return model;
}

}  // namespace tropicnet
