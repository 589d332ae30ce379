#include <cmath>
#include <vector>

#include "doctest.h"
#include "dpl/rng.hpp"
#include "dpl/stats.hpp"

using namespace dpl;
using V = std::vector<double>;

TEST_CASE("spearman examples") {
  CHECK(spearman(V{1, 2, 3, 4}, V{1, 2, 3, 4}) == doctest::Approx(1.0));
  CHECK(spearman(V{1, 2, 3, 4}, V{4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman(V{1, 2, 3}, V{1, 3, 2}) == doctest::Approx(0.5));
  CHECK_THROWS(spearman(V{1, 2}, V{1}));
  CHECK_THROWS(spearman(V{1}, V{1}));
  CHECK_THROWS(spearman(V{1, 1, 1}, V{1, 2, 3}));
}

TEST_CASE("average ranks share ties") {
  CHECK(average_ranks(V{10, 20, 20, 5}) == V{2, 3.5, 3.5, 1});
}

TEST_CASE("spearman is invariant under monotone transforms") {
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    V x, y, fx, gy;
    for (int i = 0; i < 15; ++i) {
      x.push_back(uniform(rng, 0.1, 2));
      y.push_back(uniform(rng, 0.1, 2));
      fx.push_back(std::exp(3 * x.back()));
      gy.push_back(-1.0 / y.back());
    }
    const double r = spearman(x, y);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
    CHECK(spearman(fx, gy) == doctest::Approx(r).epsilon(1e-12));
  }
}

TEST_CASE("normal distribution helpers") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_pdf(0.0) == doctest::Approx(0.3989422804014327));
  // erfc keeps the far tail: Phi(-37) ~ 5.7e-300 rather than 0
  CHECK(normal_cdf(-37.0) == doctest::Approx(5.725571222524e-300).epsilon(1e-9));
  CHECK(normal_cdf(-40.0) == 0.0);
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
}

TEST_CASE("mean and standard error") {
  CHECK(mean(V{0.2, 0.4}) == doctest::Approx(0.3));
  CHECK(standard_error(V{0.2, 0.4}) == doctest::Approx(0.1));
  CHECK(standard_error(V{0.7}) == 0.0);
}
