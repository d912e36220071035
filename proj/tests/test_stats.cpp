#include <cmath>
#include <random>
#include <vector>

#include "autopref/error.hpp"
#include "autopref/stats.hpp"
#include "doctest.h"

using namespace autopref;

namespace {

// Textbook definitions, kept deliberately naive.
double naive_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double cov = 0, vx = 0, vy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cov += (x[i] - mx) * (y[i] - my);
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
  }
  return cov / std::sqrt(vx * vy);
}

std::vector<double> naive_ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double below = 0, equal = 0;
    for (double v : x) {
      if (v < x[i]) ++below;
      if (v == x[i]) ++equal;
    }
    r[i] = below + (equal + 1) / 2.0;
  }
  return r;
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("hand examples") {
  const std::vector<double> x{1, 2, 3}, y{2, 4, 6}, rev{6, 4, 2};
  CHECK(pearson(x, y) == doctest::Approx(1.0));
  CHECK(spearman(x, rev) == doctest::Approx(-1.0));
  CHECK(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}) ==
        doctest::Approx(0.8));
  CHECK(average_ranks(std::vector<double>{10, 20, 20, 5}) == std::vector<double>{2, 3.5, 3.5, 1});
}

TEST_CASE("errors") {
  const std::vector<double> x{1, 2, 3}, flat{2, 2, 2}, two{1, 2};
  CHECK_THROWS_AS(pearson(x, two), UsageError);
  CHECK_THROWS_AS(pearson(x, flat), UsageError);
  CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{1}), UsageError);
  CHECK_THROWS_AS(spearman(flat, x), UsageError);
  CHECK_THROWS_AS(fit_line(flat, x), UsageError);
}

TEST_CASE("agreement with the textbook definitions") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> coarse(0, 5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + trial % 40;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Every other trial uses integer data so ties show up.
      x[i] = trial % 2 ? g(rng) : coarse(rng);
      y[i] = trial % 2 ? 0.3 * x[i] + g(rng) : coarse(rng);
    }
    const auto rx = naive_ranks(x), ry = naive_ranks(y);
    CHECK(average_ranks(x) == rx);
    const double nvx = naive_pearson(x, x);
    if (!std::isfinite(nvx) || !std::isfinite(naive_pearson(y, y))) continue;
    CHECK(std::abs(pearson(x, y) - naive_pearson(x, y)) < 1e-12);
    CHECK(std::abs(spearman(x, y) - naive_pearson(rx, ry)) < 1e-12);
  }
}

TEST_CASE("summaries") {
  const std::vector<double> v{4, 1, 3, 2};
  CHECK(mean(v) == 2.5);
  CHECK(median(v) == 2.5);
  CHECK(median({5, 1, 3}) == 3);
  CHECK(stddev(v) == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(stddev(std::vector<double>{7}) == 0.0);

  const auto fit = fit_line(std::vector<double>{0, 1, 2, 3}, std::vector<double>{1, 3, 5, 7});
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
}

}  // TEST_SUITE
