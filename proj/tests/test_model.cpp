#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "tropicnet/errors.hpp"
#include "tropicnet/init.hpp"
#include "tropicnet/model.hpp"

using namespace tropicnet;

namespace {

LmmModel one_anchor_model() {
  // P=1, H=1, C=2, k=2, anchor x=3 with label 0.
  return LmmModel{{2, -2}, Matrix(2, 1, {-6, 6}), Matrix(1, 2, {2, -2})};
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("morphological perceptron") {
    CHECK(morph_perceptron(std::vector<double>{0, 0}, std::vector<double>{1, 2}, -10) == 2);
    CHECK(morph_perceptron(std::vector<double>{5}, std::vector<double>{0}, 7) == 7);
    CHECK_THROWS_AS(morph_perceptron(std::vector<double>{1, 2}, std::vector<double>{1}, 0), InvalidArgument);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 100; ++t) {
      std::vector<double> x(9), w(9);
      double best = -3.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = nd(rng);
        w[i] = nd(rng);
        best = std::max(best, x[i] + w[i]);
      }
      CHECK(morph_perceptron(x, w, -3.0) == best);
    }
  }

  TEST_CASE("lambda under the fixed pattern") {
    LmmModel m{{2, -2}, Matrix(2, 1), Matrix(1, 2)};
    const Vector l = lambda_eval(m, std::vector<double>{3});
    CHECK(l == Vector{6, -6});
    std::mt19937_64 rng(2);
    const LmmModel r = oracle::random_lmm(rng, 5, 3, 2);
    CHECK(lambda_eval(r, std::vector<double>(5, 0.0)) == Vector(10, 0.0));
    const std::vector<double> x{0.5, -1, 2, 3, -0.25};
    const Vector got = lambda_eval(r, x);
    const Vector want = oracle::lmm(r, x, 0).lambda;
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-15));
    CHECK_THROWS_AS(lambda_eval(r, std::vector<double>{1, 2}), InvalidArgument);
  }

  TEST_CASE("forward at a structured anchor") {
    const LmmModel m = one_anchor_model();
    const ForwardTrace t = forward_lmm(m, std::vector<double>{3}, 0);
    CHECK(t.g[0] == 0.0);
    CHECK(t.z == Vector{2, -2});
    const Vector yhat = softmax(t.z, t.lse);
    CHECK(yhat[0] == doctest::Approx(0.9820137900379085).epsilon(1e-14));
    CHECK(t.loss == doctest::Approx(-std::log(0.9820137900379085)).epsilon(1e-12));
  }

  TEST_CASE("all-zero weights give the uniform prediction") {
    LmmModel m{Vector(6, 0.0), Matrix(6, 4), Matrix(4, 5)};
    const ForwardTrace t = forward_lmm(m, std::vector<double>{1.5, -2, 7}, 3);
    for (double z : t.z) CHECK(z == 0.0);
    CHECK(t.loss == doctest::Approx(std::log(5.0)).epsilon(1e-14));
    for (double p : softmax(t.z, t.lse)) CHECK(p == doctest::Approx(0.2).epsilon(1e-14));
  }

  TEST_CASE("random forwards agree with the nested-loop oracle") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t p = 1 + trial % 7, h = 1 + trial % 5, c = 2 + trial % 4;
      const LmmModel m = oracle::random_lmm(rng, p, h, c, 3.0);
      std::vector<double> x(p);
      std::normal_distribution<double> nd;
      for (double& v : x) v = nd(rng);
      const std::size_t label = trial % c;
      const ForwardTrace t = forward_lmm(m, x, label);
      const oracle::Forward o = oracle::lmm(m, x, label);
      REQUIRE(t.g.size() == h);
      for (std::size_t k = 0; k < h; ++k) {
        CHECK(t.g[k] == o.g[k]);
        CHECK(min_leaf(t, m, k)(t.min_winner(k)) == t.g[k]);
      }
      for (std::size_t d = 0; d < c; ++d) {
        CHECK(t.z[d] == o.z[d]);
        CHECK(t.max_winner(d) == o.h_star[d]);
        CHECK(t.min_winner(o.h_star[d]) == o.i_star[d]);
      }
      CHECK(t.loss == doctest::Approx(o.loss).epsilon(1e-12));
      CHECK(t.loss == doctest::Approx(t.lse - t.z[label]).epsilon(1e-15));
      const double zmax = *std::max_element(t.z.begin(), t.z.end());
      CHECK(t.lse >= zmax);
      CHECK(t.lse <= zmax + std::log(static_cast<double>(c)) + 1e-15);
      const Vector yhat = softmax(t.z, t.lse);
      CHECK(std::accumulate(yhat.begin(), yhat.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
      const Scores s = lmm_scores(m, x, label);
      CHECK(s.z == t.z);
      CHECK(s.loss == t.loss);
    }
  }

  TEST_CASE("forward_lmm_into reuses a trace") {
    std::mt19937_64 rng(4);
    const LmmModel a = oracle::random_lmm(rng, 3, 4, 3), b = oracle::random_lmm(rng, 3, 4, 3);
    const std::vector<double> x{1, 2, 3};
    ForwardTrace t = forward_lmm(a, x, 1);
    forward_lmm_into(b, x, 2, t);
    const ForwardTrace fresh = forward_lmm(b, x, 2);
    CHECK(t.z == fresh.z);
    CHECK(t.loss == fresh.loss);
    CHECK(t.label == 2);
  }

  TEST_CASE("non-finite intermediates raise NumericalError") {
    LmmModel m{{1e308, -1e308}, Matrix(2, 1), Matrix(1, 2)};
    CHECK_THROWS_AS(forward_lmm(m, std::vector<double>{10}, 0), NumericalError);
  }

  TEST_CASE("zero-hidden forward") {
    ZeroHiddenModel m{Matrix(2, 1)};
    const auto out = forward_zero_hidden(m, std::vector<double>{0}, 0);
    CHECK(out.yhat[0] == doctest::Approx(0.5));
    CHECK(out.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    ZeroHiddenModel s{Matrix(3, 2, {0, 1, 0, 0, 2, -1})};
    const std::vector<double> x{0.5, 0.25};
    const auto before = forward_zero_hidden(s, x, 1);
    for (std::size_t p = 0; p < 2; ++p) s.w(1, p) += 10.0;
    const auto after = forward_zero_hidden(s, x, 1);
    CHECK(after.z[1] == doctest::Approx(before.z[1] + 10.0));
    CHECK(argmax(after.z) == 1);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 50; ++t) {
      ZeroHiddenModel r{Matrix(4, 6)};
      for (double& v : r.w.data()) v = nd(rng);
      std::vector<double> xr(6);
      for (double& v : xr) v = nd(rng);
      CHECK(forward_zero_hidden(r, xr, 2).loss == doctest::Approx(oracle::zero_hidden_loss(r.w, xr, 2)).epsilon(1e-12));
    }
  }

  TEST_CASE("loss aggregates") {
    const std::vector<double> losses{1, 3, 2};
    CHECK(avg_loss(losses) == 2.0);
    CHECK(max_loss(losses) == std::pair<double, std::size_t>{3.0, 1});
    CHECK(max_loss(std::vector<double>{0.1, 0.9, 0.9}).second == 1);
    CHECK(avg_loss(std::vector<double>{0.7}) == max_loss(std::vector<double>{0.7}).first);
    CHECK_THROWS_AS(avg_loss(std::vector<double>{}), InvalidArgument);
    CHECK_THROWS_AS(max_loss(std::vector<double>{}), InvalidArgument);
  }

  TEST_CASE("logsumexp") {
    CHECK(logsumexp(std::vector<double>{0, 0}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(logsumexp(std::vector<double>{1000, 1000}) == doctest::Approx(1000 + std::log(2.0)).epsilon(1e-15));
    std::mt19937_64 rng(6);
    std::normal_distribution<double> nd(0.0, 5.0);
    for (int t = 0; t < 100; ++t) {
      std::vector<double> z(1 + t % 12);
      long double s = 0.0L;
      for (double& v : z) {
        v = nd(rng);
        s += std::exp(static_cast<long double>(v));
      }
      CHECK(logsumexp(z) == doctest::Approx(static_cast<double>(std::log(s))).epsilon(1e-12));
    }
  }

  TEST_CASE("shift invariance of softmax and loss") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd(0.0, 3.0);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> z(4), shifted(4);
      const double c = nd(rng) * 100.0;
      for (std::size_t d = 0; d < 4; ++d) {
        z[d] = nd(rng);
        shifted[d] = z[d] + c;
      }
      const Vector a = softmax(z), b = softmax(shifted);
      for (std::size_t d = 0; d < 4; ++d) CHECK(a[d] == doctest::Approx(b[d]).epsilon(1e-10));
      CHECK(logsumexp(z) - z[1] == doctest::Approx(logsumexp(shifted) - shifted[1]).epsilon(1e-10));
    }
  }

  TEST_CASE("max loss below log 2 implies every sample is classified correctly") {
    std::mt19937_64 rng(8);
    int below = 0;
    for (int t = 0; t < 2000; ++t) {
      const std::size_t c = 2 + t % 3;
      const LmmModel m = oracle::random_lmm(rng, 2, 3, c, 4.0);
      const Dataset data = oracle::random_dataset(rng, 1 + t % 4, 2, c);
      double worst = 0.0;
      bool all_correct = true;
      for (std::size_t n = 0; n < data.size(); ++n) {
        const ForwardTrace tr = forward_lmm(m, data.sample(n), data.y[n]);
        worst = std::max(worst, tr.loss);
        all_correct = all_correct && argmax(tr.z) == data.y[n];
      }
      if (worst < std::log(2.0)) {
        ++below;
        REQUIRE(all_correct);
      }
    }
    CHECK(below > 20);
  }

  TEST_CASE("validate rejects bad shapes") {
    LmmModel m{{1, -1, 2}, Matrix(3, 2), Matrix(2, 2)};
    CHECK_THROWS_AS(m.validate(), InvalidArgument);
    LmmModel ok = one_anchor_model();
    ok.w1(0, 0) = std::nan("");
    CHECK_THROWS_AS(ok.validate(), InvalidArgument);
  }
}
