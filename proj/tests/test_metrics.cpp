#include <doctest.h>

#include <random>

#include "lace/error.hpp"
#include "lace/metrics.hpp"
#include "oracles.hpp"

using namespace lace;
using namespace lace::testing;

namespace {

std::vector<int> random_labels(Rng& rng, size_t n, int k) {
  std::uniform_int_distribution<int> pick(0, k - 1);
  std::vector<int> v(n);
  for (int& x : v) x = pick(rng);
  return v;
}

std::vector<int> relabel(const std::vector<int>& v, const std::vector<int>& map) {
  std::vector<int> out;
  for (int x : v) out.push_back(map[x]);
  return out;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("BCubed examples") {
  const std::vector<int> same{0, 1, 1, 2};
  const BCubed perfect = bcubed(same, same);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  const BCubed b = bcubed(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 0, 0, 1});
  CHECK(b.precision == doctest::Approx(0.75));
  CHECK(b.recall == doctest::Approx(2.0 / 3.0));
  CHECK(b.f1 == doctest::Approx(12.0 / 17.0));

  std::vector<int> one(7, 0), singletons{0, 1, 2, 3, 4, 5, 6};
  const BCubed c = bcubed(one, singletons);
  CHECK(c.precision == doctest::Approx(1.0 / 7.0));
  CHECK(c.recall == 1.0);
  CHECK_THROWS_AS(bcubed(one, std::vector<int>{0}), ArgumentError);
}

TEST_CASE("ARI examples") {
  CHECK(ari(std::vector<int>{0, 1, 0, 1}, std::vector<int>{0, 0, 1, 1}) == doctest::Approx(-0.5));
  CHECK(ari(std::vector<int>{3, 3, 1, 2}, std::vector<int>{0, 0, 5, 6}) == doctest::Approx(1.0));
  CHECK(ari(std::vector<int>{0, 1, 2}, std::vector<int>{0, 1, 2}) == 1.0);
  CHECK(ari(std::vector<int>{0, 0, 0}, std::vector<int>{1, 1, 1}) == 1.0);
  CHECK_THROWS_AS(ari(std::vector<int>{0}, std::vector<int>{0}), ArgumentError);
  CHECK_THROWS_AS(ari(std::vector<int>{0, 1}, std::vector<int>{0}), ArgumentError);
}

TEST_CASE("ARI of random labelings is near zero") {
  Rng rng(21);
  const auto truth = random_labels(rng, 200, 5);
  double sum = 0;
  for (int t = 0; t < 1000; ++t) sum += ari(random_labels(rng, 200, 5), truth);
  CHECK(std::abs(sum / 1000) <= 0.02);
}

TEST_CASE("NMI examples") {
  CHECK(nmi(std::vector<int>{0, 0, 1, 1, 2}, std::vector<int>{4, 4, 0, 0, 1}) == doctest::Approx(1.0));
  std::vector<int> a, b;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      a.push_back(i);
      b.push_back(j);
    }
  CHECK(nmi(a, b) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(nmi(std::vector<int>{2, 2, 2}, std::vector<int>{0, 0, 0}) == 1.0);
}

TEST_CASE("metrics agree with brute-force oracles") {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const size_t n = 2 + t % 40;
    const auto p = random_labels(rng, n, 1 + t % 6);
    const auto q = random_labels(rng, n, 1 + (t / 6) % 5);
    const auto [bp, br] = bcubed_items(p, q);
    const BCubed b = bcubed(p, q);
    CHECK(b.precision == doctest::Approx(bp).epsilon(1e-12));
    CHECK(b.recall == doctest::Approx(br).epsilon(1e-12));
    CHECK(ari(p, q) == doctest::Approx(ari_pairs(p, q)).epsilon(1e-9));
    CHECK(nmi(p, q) == doctest::Approx(nmi_table(p, q)).epsilon(1e-9));
  }
}

TEST_CASE("invariances and symmetries") {
  Rng rng(6);
  for (int t = 0; t < 50; ++t) {
    const auto p = random_labels(rng, 60, 4);
    const auto q = random_labels(rng, 60, 3);
    const auto p2 = relabel(p, {3, 0, 2, 1});
    const auto q2 = relabel(q, {1, 2, 0});
    const MetricsReport a = evaluate_labels(p, q);
    const MetricsReport b = evaluate_labels(p2, q2);
    CHECK(a.bcubed_p == doctest::Approx(b.bcubed_p));
    CHECK(a.bcubed_r == doctest::Approx(b.bcubed_r));
    CHECK(a.ari == doctest::Approx(b.ari));
    CHECK(a.nmi == doctest::Approx(b.nmi));
    CHECK(bcubed(p, q).precision == doctest::Approx(bcubed(q, p).recall));
    CHECK(ari(p, q) == doctest::Approx(ari(q, p)));
    CHECK(nmi(p, q) == doctest::Approx(nmi(q, p)));
    CHECK(a.bcubed_f1 >= 0.0);
    CHECK(a.bcubed_f1 <= 1.0);
    CHECK(a.nmi >= 0.0);
    CHECK(a.nmi <= 1.0);
  }
}

TEST_CASE("report formatting") {
  const MetricsReport r = evaluate_labels(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 0, 0, 1});
  CHECK(r.to_json() == "{\"bcubed_p\":0.75,\"bcubed_r\":0.6667,\"bcubed_f1\":0.7059,\"ari\":0.0,\"nmi\":0.3437}\n");
  CHECK(r.table_row("x").find("75.0") != std::string::npos);
}

}  // TEST_SUITE
