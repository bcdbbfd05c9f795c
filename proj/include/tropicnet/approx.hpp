#ifndef TROPICNET_APPROX_HPP
#define TROPICNET_APPROX_HPP

#include <cstddef>
#include <span>

#include "tropicnet/data.hpp"
#include "tropicnet/matrix.hpp"
#include "tropicnet/model.hpp"

namespace tropicnet {

/// Bank of pyramids g_i(x) = f(x^i) - K |x - x^i|_inf, one per grid point,
/// written as min-plus neurons over lambda(x) = [K x_1, -K x_1, ...].
struct PyramidBank {
  Matrix grid;      // m x P
  Vector f_values;  // m
  double lipschitz = 1.0;
  double delta = 0.0;  // covering radius, set by covering_radius()
  Matrix biases;       // m x 2P, biases(i, j) = f(x^i) - lambda_j(x^i)

  std::size_t size() const noexcept { return grid.rows(); }
  std::size_t features() const noexcept { return grid.cols(); }
};

/// Throws InvalidArgument when K <= 0, shapes disagree or two grid points
/// coincide.
PyramidBank build_bank(const Matrix& grid, std::span<const double> f_values, double lipschitz);

/// lambda(x) = [K x_1, -K x_1, ..., K x_P, -K x_P].
Vector bank_lambda(double lipschitz, std::span<const double> x);

/// min_j (lambda_j(x) + biases(i, j)).
double eval_pyramid(const PyramidBank& bank, std::size_t i, std::span<const double> x);

/// f(x^i) - K |x - x^i|_inf.
double eval_pyramid_closed(const PyramidBank& bank, std::size_t i, std::span<const double> x);

/// Upper envelope max_i g_i(x).
double eval_h(const PyramidBank& bank, std::span<const double> x);

/// max over query rows of the l_inf distance to the nearest grid point.
double covering_radius(const Matrix& grid, const Matrix& queries);

/// Classification bank: one shared pyramid per sample (f = 0, slope k) and
/// class scores h^d(x) = max_j (g_j(x) + k (2 [d == y_j] - 1)), written as an
/// LMM with H = number of samples.
LmmModel build_classifier_bank(const Dataset& samples, double k);

}  // namespace tropicnet

#endif  // TROPICNET_APPROX_HPP
