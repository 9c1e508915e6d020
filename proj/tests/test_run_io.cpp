#include "roundabout/run_io.hpp"

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "roundabout/sweep.hpp"

namespace roundabout {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

TEST(RunIo, SummaryRoundTrip) {
  SummaryRow r;
  r.mpr = 0.8;
  r.runs = 5;
  r.travel_time_improvement = 12.3456;
  r.fuel_improvement = -1.5;
  r.baseline_fuel = 123.0;
  r.residual = 0.4;
  std::ostringstream os;
  write_summary(os, std::span<const SummaryRow>(&r, 1));
  std::istringstream in(os.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  const auto h = split(header), c = split(row);
  ASSERT_EQ(h.size(), c.size());
  ASSERT_EQ(h.size(), 12u);
  EXPECT_EQ(h[0], "mpr");
  EXPECT_DOUBLE_EQ(std::stod(c[0]), 0.8);
  EXPECT_EQ(std::stoi(c[1]), 5);
  EXPECT_DOUBLE_EQ(std::stod(c[2]), 12.3456);
  EXPECT_DOUBLE_EQ(std::stod(c[4]), -1.5);
  EXPECT_DOUBLE_EQ(std::stod(c[10]), 123.0);
  EXPECT_DOUBLE_EQ(std::stod(c[11]), 0.4);
}

TEST(RunIo, RunDirectoryNaming) {
  EXPECT_EQ(run_directory(0.2, 3), std::filesystem::path("mpr_20/seed_3"));
  EXPECT_EQ(run_directory(1.0, 1), std::filesystem::path("mpr_100/seed_1"));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Two identical short runs give byte-identical files.
TEST(RunIo, IdenticalRunsIdenticalBytes) {
  SimConfig cfg;
  cfg.duration = 200.0;
  cfg.dispatch_window = 135.0;
  cfg.total_vehicles = 60;
  cfg.mpr = 0.5;
  cfg.seed = 9;
  const ModelParams params;
  const FuelModelCoefficients fuel;
  const auto root = std::filesystem::temp_directory_path() / "roundabout_run_io_test";
  std::filesystem::remove_all(root);
  write_run(root / "a", run(cfg, params), params.geometry, fuel);
  write_run(root / "b", run(cfg, params), params.geometry, fuel);
  for (const char* name : {"trajectories.csv", "events.csv", "vehicles.csv", "queue.csv", "moe.csv"}) {
    const std::string a = slurp(root / "a" / name);
    EXPECT_FALSE(a.empty()) << name;
    EXPECT_EQ(a, slurp(root / "b" / name)) << name;
  }
  std::istringstream veh(slurp(root / "a" / "vehicles.csv"));
  std::string header;
  std::getline(veh, header);
  EXPECT_EQ(split(header).size(), 12u);
  for (std::string line; std::getline(veh, line);) EXPECT_EQ(split(line).size(), 12u) << line;
  std::filesystem::remove_all(root);
}

TEST(RunIo, MoeRowsWithRunColumns) {
  MOERecord r;
  r.window_end = 60.0;
  std::ostringstream os;
  write_moe(os, std::span<const MOERecord>(&r, 1), true, 0.5, 2);
  std::istringstream in(os.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(split(header).size(), split(row).size());
  EXPECT_EQ(row.substr(0, 7), "0.50,2,");
}

}  // namespace
}  // namespace roundabout
