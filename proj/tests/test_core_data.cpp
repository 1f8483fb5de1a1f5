#include "doctest.h"
#include "oracles.hpp"

#include "hcast/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

using namespace hcast;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

ForecastMatrix random_fm(std::mt19937& gen, Index n, const std::vector<int>& horizons,
                         double missing_rate = 0.0) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ForecastMatrix m;
  m.horizons = horizons;
  m.values.resize(n, static_cast<Index>(horizons.size()));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m.values(i, j) = u(gen) < missing_rate ? kMissing : d(gen);
  return m;
}

}  // namespace

TEST_CASE("load_dataset groups horizon columns into forecast matrices") {
  const std::string path = temp_path("hcast_load.csv");
  write_file(path,
             "t,heatload,Ta.k1,Ta.k2,Ta.k3\n"
             "2010-12-15 01:00:00,5.916667,-2.8234,-3.20275,-3.1185\n"
             "2010-12-15 02:00:00,5.850000,-2.90405,-3.1185,-3.0896\n"
             "2010-12-15 03:00:00,5.850000,-2.9359,-3.0896,-3.132\n"
             "2010-12-15 04:00:00,5.883333,-2.89315,-3.11285,-3.0484\n");
  const DataSet ds = load_dataset(path);
  CHECK(ds.rows() == 4);
  CHECK(ds.observations.size() == 1);
  CHECK(ds.forecasts.size() == 1);
  const auto& ta = ds.forecast("Ta");
  CHECK(ta.horizons == std::vector<int>{1, 2, 3});
  CHECK(ta.values(0, 0) == doctest::Approx(-2.8234).epsilon(1e-12));
  // first output values survive the parse unchanged
  const auto& y = ds.observation("heatload");
  CHECK(y[0] == doctest::Approx(5.916667).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(5.850000).epsilon(1e-15));
  CHECK(y[3] == doctest::Approx(5.883333).epsilon(1e-15));
  std::remove(path.c_str());
}

TEST_CASE("load_dataset accepts a lone t column") {
  const std::string path = temp_path("hcast_lone_t.csv");
  write_file(path, "t\n1\n2\n3\n");
  const DataSet ds = load_dataset(path);
  CHECK(ds.rows() == 3);
  CHECK(ds.observations.empty());
  CHECK(ds.forecasts.empty());
  CHECK_FALSE(ds.iso_time);
  std::remove(path.c_str());
}

TEST_CASE("load_dataset rejections") {
  const std::string path = temp_path("hcast_bad.csv");

  SUBCASE("non-equidistant time names the first offending gap") {
    write_file(path, "t,y\n1,0\n2,0\n4,0\n");
    CHECK_THROWS_WITH_AS(load_dataset(path),
                         doctest::Contains("first offending gap at row 4"), DataError);
  }
  SUBCASE("duplicate column") {
    write_file(path, "t,y,y\n1,0,0\n");
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("duplicate column"), DataError);
  }
  SUBCASE("duplicate horizon column") {
    write_file(path, "t,u.k1,u.k01\n1,0,0\n");
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("duplicate column"), DataError);
  }
  SUBCASE("non-numeric cell names row and column") {
    write_file(path, "t,y\n1,0\n2,abc\n");
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("row 3, column y"), DataError);
  }
  SUBCASE("missing t column") {
    write_file(path, "x,y\n1,0\n");
    CHECK_THROWS_AS(load_dataset(path), DataError);
  }
  std::remove(path.c_str());
}

TEST_CASE("save then load is the identity on finite values") {
  auto gen = oracles::rng(11);
  DataSet ds;
  ds.t = {3600, 7200, 10800, 14400, 18000};
  ds.iso_time = true;
  ds.observations["y"] = Vector::Random(5);
  ds.observations["y"][2] = kMissing;
  ds.forecasts["u"] = random_fm(gen, 5, {1, 2, 5}, 0.2);
  // awkward magnitudes that need all 17 digits
  ds.observations["y"][0] = 0.1 + 0.2;
  ds.forecasts["u"].values(0, 0) = 1.0 / 3.0;

  const std::string path = temp_path("hcast_roundtrip.csv");
  save_dataset(ds, path);
  const DataSet back = load_dataset(path);
  REQUIRE(back.rows() == 5);
  CHECK(back.t == ds.t);
  for (Index i = 0; i < 5; ++i) {
    if (is_missing(ds.observations["y"][i]))
      CHECK(is_missing(back.observation("y")[i]));
    else
      CHECK(back.observation("y")[i] == ds.observations["y"][i]);
  }
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 3; ++j) {
      const Scalar a = ds.forecasts["u"].values(i, j);
      const Scalar b = back.forecast("u").values(i, j);
      if (is_missing(a))
        CHECK(is_missing(b));
      else
        CHECK(a == b);  // bit-exact through 17 significant digits
    }
  std::remove(path.c_str());
}

TEST_CASE("complete_cases") {
  SUBCASE("no missing -> all true") {
    auto gen = oracles::rng(1);
    ForecastMatrix m = random_fm(gen, 6, {1, 2});
    const Mask mask = complete_cases({{"m", &m}}, {1, 2});
    CHECK(count_true(mask) == 6);
  }

  SUBCASE("single missing row flips only that entry") {
    auto gen = oracles::rng(2);
    ForecastMatrix a = random_fm(gen, 3, {1});
    ForecastMatrix b = random_fm(gen, 3, {1});
    b.values(1, 0) = kMissing;
    const Mask mask = complete_cases({{"a", &a}, {"b", &b}}, {1});
    CHECK(mask[0]);
    CHECK_FALSE(mask[1]);
    CHECK(mask[2]);
  }

  SUBCASE("random matrices agree with a brute-force scan") {
    auto gen = oracles::rng(3);
    std::vector<ForecastMatrix> ms;
    for (int i = 0; i < 5; ++i) ms.push_back(random_fm(gen, 40, {1, 3, 7}, 0.15));
    std::vector<std::pair<std::string, const ForecastMatrix*>> named;
    for (auto& m : ms) named.emplace_back("m", &m);
    const Mask mask = complete_cases(named, {1, 3, 7});
    for (Index t = 0; t < 40; ++t) {
      bool expect = true;
      for (const auto& m : ms)
        for (Index j = 0; j < m.cols(); ++j)
          if (is_missing(m.values(t, j))) expect = false;
      CHECK(mask[t] == expect);
    }
  }

  SUBCASE("mask is monotone: adding a matrix can only turn entries false") {
    auto gen = oracles::rng(4);
    ForecastMatrix a = random_fm(gen, 30, {1, 2}, 0.2);
    ForecastMatrix b = random_fm(gen, 30, {1, 2}, 0.2);
    const Mask one = complete_cases({{"a", &a}}, {1, 2});
    const Mask both = complete_cases({{"a", &a}, {"b", &b}}, {1, 2});
    for (Index t = 0; t < 30; ++t)
      if (both[t]) CHECK(one[t]);
  }

  SUBCASE("absent horizon names matrix and horizon") {
    auto gen = oracles::rng(5);
    ForecastMatrix a = random_fm(gen, 3, {1, 2});
    CHECK_THROWS_WITH_AS(complete_cases({{"Ta", &a}}, {1, 9}),
                         doctest::Contains("'Ta' lacks horizon k9"), DataError);
  }
}

TEST_CASE("residuals alignment") {
  SUBCASE("perfect forecast gives zero residuals") {
    Vector y(4);
    y << 1, 2, 3, 4;
    ForecastMatrix yhat;
    yhat.horizons = {1};
    yhat.values.resize(4, 1);
    for (Index t = 0; t + 1 < 4; ++t) yhat.values(t, 0) = y[t + 1];
    yhat.values(3, 0) = 9.0;  // beyond the data, never referenced
    const ResidualMatrix r = residuals(yhat, y);
    for (Index s = 1; s < 4; ++s) CHECK(r.values(s, 0) == 0.0);
    CHECK(is_missing(r.values(0, 0)));
  }

  SUBCASE("hand-aligned example") {
    Vector y(3);
    y << 1, 2, 3;
    ForecastMatrix yhat;
    yhat.horizons = {1};
    yhat.values.resize(3, 1);
    yhat.values << 1.5, 2.5, kMissing;
    const ResidualMatrix r = residuals(yhat, y);
    CHECK(is_missing(r.values(0, 0)));
    CHECK(r.values(1, 0) == doctest::Approx(0.5));
    CHECK(r.values(2, 0) == doctest::Approx(0.5));
  }

  SUBCASE("missing observation hits every column at that time") {
    auto gen = oracles::rng(6);
    ForecastMatrix yhat = random_fm(gen, 6, {1, 2});
    Vector y = Vector::Random(6);
    y[4] = kMissing;
    const ResidualMatrix r = residuals(yhat, y);
    for (Index j = 0; j < 2; ++j) CHECK(is_missing(r.values(4, j)));
  }

  SUBCASE("row/column read-out reproduces the alignment on random data") {
    auto gen = oracles::rng(7);
    ForecastMatrix yhat = random_fm(gen, 25, {1, 4});
    Vector y = Vector::Random(25);
    const ResidualMatrix r = residuals(yhat, y);
    for (int k : {1, 4}) {
      // write yhat[t, k] onto a series aligned at t+k, then subtract
      Vector aligned = Vector::Constant(25, kMissing);
      const Index j = yhat.col_index(k);
      for (Index t = 0; t + k < 25; ++t) aligned[t + k] = yhat.values(t, j);
      for (Index s = 0; s < 25; ++s) {
        if (is_missing(aligned[s]))
          CHECK(is_missing(r.values(s, r.col_index(k))));
        else
          CHECK(r.values(s, r.col_index(k)) == y[s] - aligned[s]);
      }
    }
  }
}

TEST_CASE("in_range and subset") {
  DataSet ds;
  ds.t = {10, 20, 30, 40};
  ds.iso_time = false;
  ds.observations["y"] = Vector::Random(4);
  auto gen = oracles::rng(8);
  ds.forecasts["u"] = random_fm(gen, 4, {1, 5, 24}, 0.2);
  ds.forecasts["v"] = random_fm(gen, 4, {1, 5, 24}, 0.2);

  SUBCASE("full span is all-true") {
    const Mask m = in_range(9, ds.t);
    CHECK(count_true(m) == 4);
  }
  SUBCASE("period is (start, end]") {
    const Mask m = in_range(10, 30, ds.t);
    CHECK_FALSE(m[0]);
    CHECK(m[1]);
    CHECK(m[2]);
    CHECK_FALSE(m[3]);
  }
  SUBCASE("subset by horizons keeps the selected columns") {
    const DataSet s = subset(ds, std::vector<int>{1, 5, 24});
    CHECK(s.forecast("u").cols() == 3);
    const DataSet s2 = subset(ds, std::vector<int>{5});
    CHECK(s2.forecast("u").horizons == std::vector<int>{5});
  }
  SUBCASE("empty selection is an error") {
    Mask none = Mask::Constant(4, false);
    CHECK_THROWS_AS(subset(ds, none), DataError);
  }
  SUBCASE("subset commutes with complete_cases (rows and horizons)") {
    // horizon mode
    const std::vector<int> hsel{1, 24};
    const DataSet sh = subset(ds, hsel);
    const Mask a = complete_cases({{"u", &sh.forecast("u")}, {"v", &sh.forecast("v")}}, hsel);
    const Mask b = complete_cases({{"u", &ds.forecast("u")}, {"v", &ds.forecast("v")}}, hsel);
    for (Index t = 0; t < 4; ++t) CHECK(a[t] == b[t]);

    // row mode: mask into subset == subset of mask
    Mask keep(4);
    keep << true, false, true, true;
    const DataSet sr = subset(ds, keep);
    const Mask inner =
        complete_cases({{"u", &sr.forecast("u")}, {"v", &sr.forecast("v")}}, {1, 5, 24});
    const Mask outer =
        complete_cases({{"u", &ds.forecast("u")}, {"v", &ds.forecast("v")}}, {1, 5, 24});
    Index r = 0;
    for (Index t = 0; t < 4; ++t)
      if (keep[t]) CHECK(inner[r++] == outer[t]);
  }
}

TEST_CASE("timestamp parsing") {
  CHECK(parse_time("1970-01-01 00:00:00") == 0);
  CHECK(parse_time("1970-01-01T01:00:00Z") == 3600);
  CHECK(parse_time("2010-12-15 01:00:00") == 1292374800);
  CHECK(format_time_iso(1292374800) == "2010-12-15T01:00:00Z");
  CHECK(parse_time("42") == 42);
  CHECK_THROWS_AS(parse_time("yesterday"), DataError);
}
