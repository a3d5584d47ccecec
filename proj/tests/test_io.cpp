#include <catch2/catch_amalgamated.hpp>

#include "eastsim/io.hpp"

#include <cstdlib>
#include <filesystem>

#include "eastsim/classical_east.hpp"

using namespace eastsim;

namespace {

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "eastsim_io_test";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("seventeen significant digits round-trip any double") {
  Rng rng(13);
  for (int i = 0; i < 2000; ++i) {
    double value;
    if (i % 4 == 0) {
      value = (rng.next_double() - 0.5) * 2e-8;
    } else if (i % 4 == 1) {
      value = (rng.next_double() - 0.5) * 1e12;
    } else {
      value = std::log(rng.next_double() + 1e-300);
    }
    const std::string text = format_g17(value);
    REQUIRE(std::strtod(text.c_str(), nullptr) == value);
  }
}

TEST_CASE("csv quoting wraps only fields that need it") {
  REQUIRE(csv_quote("plain") == "plain");
  REQUIRE(csv_quote("a,b") == "\"a,b\"");
  REQUIRE(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("records survive a csv round trip") {
  const auto dir = temp_dir();
  const auto record = sample_classical_trajectory({6, 0.4}, 9, 21);
  write_record_csv(dir / "single.csv", record);
  const auto back = read_records_csv(dir / "single.csv");
  REQUIRE(back.size() == 1);
  REQUIRE(back.front().outcomes == record.outcomes);

  std::vector<MeasurementRecord> batch;
  std::vector<long long> ids;
  for (int seed = 0; seed < 3; ++seed) {
    batch.push_back(sample_classical_trajectory({5, 0.3}, 7, seed));
    ids.push_back(seed);
  }
  write_record_batch_csv(dir / "batch.csv", batch, ids);
  const auto round = read_records_csv(dir / "batch.csv");
  REQUIRE(round.size() == 3);
  for (std::size_t j = 0; j < 3; ++j) REQUIRE(round[j].outcomes == batch[j].outcomes);
}

TEST_CASE("csv writer emits lossless floats") {
  const auto dir = temp_dir();
  const double theta = -0.12345678901234567;
  {
    CsvWriter csv(dir / "curve.csv", "s,theta");
    csv.row({0.25, theta});
  }
  std::ifstream in(dir / "curve.csv");
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  REQUIRE(header == "s,theta");
  const auto comma = line.find(',');
  REQUIRE(std::strtod(line.substr(comma + 1).c_str(), nullptr) == theta);
}
