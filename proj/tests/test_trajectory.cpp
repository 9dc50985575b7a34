#include "rc4d/trajectory.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace rc4d;
using Catch::Approx;

namespace {

double max_gap_ratio(std::vector<double> angles)
{
  std::sort(angles.begin(), angles.end());
  double max_gap = 180.0 - angles.back() + angles.front();
  for (std::size_t i = 1; i < angles.size(); i++) max_gap = std::max(max_gap, angles[i] - angles[i - 1]);
  return max_gap / (180.0 / static_cast<double>(angles.size()));
}

} // namespace

TEST_CASE("golden-angle ordering", "[trajectory]")
{
  CHECK(plan({64, 1}).angles == std::vector<double>{0.0});

  // 180/phi = 90 (sqrt 5 - 1), evaluated in long double
  long double const ga = 90.0L * (std::sqrt(5.0L) - 1.0L);
  auto const        p = plan({64, 3});
  CHECK(p.angles[0] == 0.0);
  CHECK(p.angles[1] == Approx(static_cast<double>(ga)).margin(1e-10));
  CHECK(p.angles[2] == Approx(static_cast<double>(2.0L * ga - 180.0L)).margin(1e-10));
  CHECK(p.angles[1] == Approx(111.246117974981).margin(1e-9));
  CHECK(p.angles[2] == Approx(42.492235949962).margin(1e-9));

  for (double a : plan({64, 3000}).angles) {
    CHECK(a >= 0.0);
    CHECK(a < 180.0);
  }
}

TEST_CASE("timestamps", "[trajectory]")
{
  auto const p = plan({288, 3000, 2.0, 3e-3});
  REQUIRE(p.n_spokes() == 3000);
  CHECK(p.timestamps.back() == Approx(8.997).margin(1e-12));
  for (std::size_t i = 1; i < p.timestamps.size(); i++) {
    CHECK(p.timestamps[i] - p.timestamps[i - 1] == Approx(3e-3).margin(1e-12));
  }
}

TEST_CASE("readout passes through the k-space centre", "[trajectory]")
{
  for (double os : {1.0, 1.5, 2.0, 2.3}) {
    auto const p = plan({64, 5, os});
    int const  m = p.samples_per_spoke();
    CHECK(m % 2 == 1);
    CHECK(p.readout[static_cast<std::size_t>(m / 2)] == 0.0);
    CHECK(p.readout.front() == Approx(-32.0));
    CHECK(p.readout.back() == Approx(32.0));
  }
  CHECK(plan({64, 1, 2.0}).samples_per_spoke() == 129);
}

TEST_CASE("Nyquist spoke count", "[trajectory]")
{
  CHECK(nyquist_spokes(288) == 452);
  CHECK(nyquist_spokes(64) == 101);
  CHECK(nyquist_spokes(2) == 3);
  for (int n = 2; n <= 512; n++) CHECK(std::abs(nyquist_spokes(n) - n * std::numbers::pi / 2) <= 0.5);
}

TEST_CASE("keep-first undersampling", "[trajectory]")
{
  auto const p = plan({64, 3000});
  CHECK(undersample(p, 1000).acceleration() == 3.0);
  CHECK(undersample(p, 500).acceleration() == 6.0);
  CHECK(undersample(p, 300).acceleration() == 10.0);
  auto const same = undersample(p, 3000);
  CHECK(same.acceleration() == 1.0);
  CHECK(same.angles == p.angles);
  CHECK_THROWS(undersample(p, 0));
  CHECK_THROWS(undersample(p, 3001));

  for (int k : {1, 7, 452, 2999}) {
    auto const u = undersample(p, k);
    REQUIRE(u.n_spokes() == k);
    CHECK(std::equal(u.angles.begin(), u.angles.end(), p.angles.begin()));
    CHECK(std::equal(u.timestamps.begin(), u.timestamps.end(), p.timestamps.begin()));
  }
}

TEST_CASE("golden-angle prefixes cover the half circle nearly uniformly", "[trajectory]")
{
  for (int n : {100, 452, 3000}) {
    INFO("n = " << n);
    CHECK(max_gap_ratio(plan({64, n}).angles) <= 3.0);
  }
  // any prefix, not just the full plan
  auto const p = plan({64, 3000});
  for (int k : {100, 101, 250, 1000, 1597}) CHECK(max_gap_ratio(undersample(p, k).angles) <= 3.0);
}

TEST_CASE("plan is deterministic", "[trajectory]")
{
  auto const a = plan({64, 500, 2.0, 0.01});
  auto const b = plan({64, 500, 2.0, 0.01});
  CHECK(a.angles == b.angles);
  CHECK(a.timestamps == b.timestamps);
  CHECK(a.readout == b.readout);
}
