#include "qcat/partitions.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace qcat;

namespace {

MapSpec cat_map() {
  MapSpec spec;
  spec.linear = SymplecticMatrix{2, 1, 3, 2};
  return spec;
}

}  // namespace

TEST_CASE("strip partition geometry") {
  PartitionSpec part = PartitionSpec::strips(2);
  CHECK(part.K == 2);
  CHECK_NOTHROW(part.validate());
  CHECK(part.position_strips());
  CHECK(part.min_side() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(part.cell_of(TorusPoint(0.25, 0.9)) == 0);
  CHECK(part.cell_of(TorusPoint(0.5, 0.0)) == 1);   // half-open boundary
  CHECK(part.cell_of(TorusPoint(0.999, 0.5)) == 1);
}

TEST_CASE("grid partition geometry") {
  PartitionSpec part = PartitionSpec::grid(4, 4);
  CHECK(part.K == 16);
  CHECK_NOTHROW(part.validate());
  CHECK_FALSE(part.position_strips());
  // row from xi, column from x
  CHECK(part.cell_of(TorusPoint(0.26, 0.51)) == 2 * 4 + 1);
  CHECK(part.cell_of(TorusPoint(0.0, 0.0)) == 0);
  CHECK(part.cell_of(TorusPoint(0.99, 0.99)) == 15);
}

TEST_CASE("word rendering is 1-based") {
  Word w;
  w.symbols = {1, 0, 2};
  CHECK(w.length() == 3);
  CHECK(w.str() == "2.1.3");
}

TEST_CASE("word codec packing") {
  WordCodec c2(2);
  CHECK(c2.bits == 1);
  CHECK(c2.max_depth() == 62);

  WordCodec c3(3);
  CHECK(c3.bits == 2);
  CHECK(c3.max_depth() == 31);

  std::uint64_t w = 0;
  w = c3.push(w, 0, 2);
  w = c3.push(w, 1, 0);
  w = c3.push(w, 2, 1);
  CHECK(c3.symbol_at(w, 0) == 2);
  CHECK(c3.symbol_at(w, 1) == 0);
  CHECK(c3.symbol_at(w, 2) == 1);
  Word back = c3.unpack(w, 3);
  CHECK(back.symbols == std::vector<int>{2, 0, 1});
}

TEST_CASE("itinerary of a point") {
  // (0.2, 0.3) -> (0.7, 0.2) -> (0.6, 0.5) -> (0.7, 0.8) under the cat map
  Word w = word_of_point(PartitionSpec::strips(2), cat_map(),
                         TorusPoint(0.2, 0.3), 4);
  CHECK(w.symbols == std::vector<int>{0, 1, 1, 1});
  CHECK(w.str() == "1.2.2.2");
}

TEST_CASE("cylinder measures are normalized and compatible") {
  MapSpec spec = cat_map();
  PartitionSpec part = PartitionSpec::strips(2);
  std::vector<TorusPoint> samples =
      sample_invariant_measure(MeasureKind::lebesgue(), spec, 20000, 3);
  ClassicalSymbolicMeasure m = cylinder_measures(samples, part, spec, 3, 3);
  CHECK(m.depth == 3);
  CHECK(m.K == 2);
  CHECK(m.samples == 20000);

  for (int n = 1; n <= 3; ++n) {
    double total = 0;
    for (const auto& [w, mass] : m.weights(n)) total += mass;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }

  // marginalizing the last symbol reproduces the shallower level exactly
  WordCodec codec(2);
  for (const auto& [w, mass] : m.weights(2)) {
    double sum = 0;
    for (int s = 0; s < 2; ++s) {
      auto it = m.weights(3).find(codec.push(w, 2, s));
      if (it != m.weights(3).end()) sum += it->second;
    }
    CHECK(sum == doctest::Approx(mass).epsilon(1e-12));
  }

  CHECK(m.stderr_of(0.5) ==
        doctest::Approx(std::sqrt(0.25 / 20000.0)).epsilon(1e-12));
}

TEST_CASE("shannon entropy") {
  CHECK(shannon_entropy({0.5, 0.5}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(shannon_entropy({1.0, 0.0}) == doctest::Approx(0.0).epsilon(1e-14));
  std::vector<double> u(8, 1.0 / 8.0);
  CHECK(shannon_entropy(u) == doctest::Approx(std::log(8.0)).epsilon(1e-13));
  CHECK_THROWS_AS(shannon_entropy({1.5, -0.5}), ConfigError);
}

TEST_CASE("classical pressure reduces to entropy for unit weights") {
  MapSpec spec = cat_map();
  std::vector<TorusPoint> samples =
      sample_invariant_measure(MeasureKind::lebesgue(), spec, 10000, 4);
  ClassicalSymbolicMeasure m =
      cylinder_measures(samples, PartitionSpec::strips(2), spec, 3, 4);

  double H = classical_entropy(m, 3);
  CHECK(classical_pressure(m, {1.0, 1.0}, 3) ==
        doctest::Approx(H).epsilon(1e-12));
  // equal weights w in every cell: p = H - 2 n log w
  CHECK(classical_pressure(m, {2.0, 2.0}, 3) ==
        doctest::Approx(H - 6.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(classical_entropy(m) == doctest::Approx(classical_entropy(m, 3))
                                    .epsilon(1e-15));
}

TEST_CASE("entropy rate report structure") {
  MapSpec spec = cat_map();
  std::vector<TorusPoint> samples =
      sample_invariant_measure(MeasureKind::lebesgue(), spec, 50000, 9);
  EntropyRateReport rep =
      ks_entropy_rate(spec, PartitionSpec::strips(2), samples, 4, 9);
  REQUIRE(rep.rows.size() == 4);

  // symmetric strips split mass evenly at depth 1
  CHECK(rep.rows[0].H == doctest::Approx(std::log(2.0)).epsilon(5e-3));
  for (int i = 0; i < 4; ++i) {
    const EntropyRateRow& r = rep.rows[i];
    CHECK(r.n == i + 1);
    CHECK(r.rate == doctest::Approx(r.H / r.n).epsilon(1e-12));
    if (i > 0) {
      CHECK(r.increment ==
            doctest::Approx(r.H - rep.rows[i - 1].H).epsilon(1e-10));
      // the bias correction grows with the observed word count
      CHECK(r.increment_mm >= r.increment - 1e-12);
    }
    CHECK(r.words > 0);
  }
  CHECK(rep.subadditive_within_tol);
}

TEST_CASE("entropy rate pinned regression") {
  // the classical-entropy runner path at its smoke-test settings
  MapSpec spec = cat_map();
  std::vector<TorusPoint> samples =
      sample_invariant_measure(MeasureKind::lebesgue(), spec, 100000, 20260816);
  EntropyRateReport rep =
      ks_entropy_rate(spec, PartitionSpec::grid(4, 4), samples, 6, 20260816);
  REQUIRE(rep.rows.size() == 6);
  CHECK(rep.rows[5].rate ==
        doctest::Approx(1.6731232602446584).epsilon(1e-12));
  CHECK(rep.rows[5].increment_mm ==
        doctest::Approx(1.2829173713317399).epsilon(1e-12));
}

TEST_CASE("smooth partition of unity") {
  CHECK_THROWS_AS(smooth_partition(PartitionSpec::strips(2), 0.2),
                  ConfigError);  // width must stay under min_side / 4

  SmoothPartition sm = smooth_partition(PartitionSpec::strips(2), 0.1);
  CHECK(sm.K == 2);
  CHECK(sm.resolution == 256);
  REQUIRE(sm.grids.size() == 2);
  REQUIRE(sm.sqrt_coeffs.size() == 2);

  for (int ix : {0, 17, 100, 255}) {
    for (int ixi : {0, 203}) {
      double total = 0;
      for (int k = 0; k < sm.K; ++k) {
        double v = sm.value(k, ix, ixi);
        CHECK(v >= -1e-12);
        total += v;
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
    }
  }

  // sqrt(pi_k) is real, so coefficients come in conjugate pairs
  for (const auto& [mn, c] : sm.sqrt_coeffs[0]) {
    auto it = sm.sqrt_coeffs[0].find({-mn.first, -mn.second});
    REQUIRE(it != sm.sqrt_coeffs[0].end());
    CHECK(std::abs(std::conj(it->second) - c) < 1e-12);
  }
}
