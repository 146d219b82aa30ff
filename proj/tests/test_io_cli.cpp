#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "vstate/io.hpp"

using namespace vstate;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("vstate_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.string() + "' && '" + VSTATE_CLI + "' " + args + " > log.txt 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string slurp(const std::string& name) const {
    std::ifstream in(dir_ / name, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  json manifest(const std::string& prefix) const { return read_json((dir_ / (prefix + ".manifest.json")).string()); }

  void expect_complete_manifest(const std::string& prefix) const {
    const json m = manifest(prefix);
    EXPECT_EQ(m.at("version"), kToolVersion);
    EXPECT_TRUE(m.contains("timestamp"));
    EXPECT_TRUE(m.contains("params"));
    bool self = false;
    for (const auto& f : m.at("outputs")) {
      EXPECT_TRUE(fs::exists(dir_ / f.get<std::string>())) << f;
      self = self || f == prefix + ".manifest.json";
    }
    EXPECT_TRUE(self);
    // every file carrying this prefix is listed
    for (const auto& e : fs::directory_iterator(dir_)) {
      const std::string name = e.path().filename().string();
      if (name.rfind(prefix + ".", 0) != 0) continue;
      bool listed = false;
      for (const auto& f : m.at("outputs")) listed = listed || f == name;
      EXPECT_TRUE(listed) << name;
    }
  }

  fs::path dir_;
};

}  // namespace

TEST(Io, StateRoundTrip) {
  StoredState sc{{FourierContour(0.8, 4, {0.1, -1.0 / 3.0, 1e-17})}, 0.39, 256};
  const StoredState back = state_from_json(json::parse(state_to_json(sc).dump()));
  ASSERT_EQ(back.contours.size(), 1u);
  EXPECT_EQ(back.contours[0].coeffs, sc.contours[0].coeffs);
  EXPECT_EQ(back.contours[0].b, 0.8);
  EXPECT_EQ(*back.omega, 0.39);
  EXPECT_EQ(*back.node_count, 256);

  StoredState dc{{FourierContour(0.8, 2, {0.01}), FourierContour(0.3, 2, {-0.02})}, std::nullopt, std::nullopt};
  const StoredState back2 = state_from_json(json::parse(state_to_json(dc).dump()));
  ASSERT_TRUE(back2.doubly());
  EXPECT_EQ(back2.contours[1].coeffs[0], -0.02);
  EXPECT_FALSE(back2.omega);

  EXPECT_THROW(state_from_json(json::parse(R"({"b": 0.5})")), ConfigurationError);
  EXPECT_THROW(read_json("/nonexistent/file.json"), ConfigurationError);
}

TEST(Io, FixedNumberFormat) {
  EXPECT_EQ(fmt(0.1), "0.10000000000000001");
  EXPECT_EQ(fmt(-2.5), "-2.5");
  EXPECT_EQ(std::stod(fmt(1.0 / 3.0)), 1.0 / 3.0);
  const std::string csv = boundary_csv(FourierContour::circle(0.5, 1, 1), SpectralGrid(4));
  EXPECT_EQ(csv.substr(0, 11), "theta,x,y\n0");
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(Io, ManifestSerialization) {
  RunManifest m;
  m.command = "eigen sc";
  m.params = {{"b", "0.1:0.9:0.1"}, {"m", "1:3"}};
  m.node_count = 64;
  m.outputs = {"a.csv"};
  const json j = json::parse(m.to_json().dump());
  EXPECT_EQ(j.at("params"), m.params);
  EXPECT_EQ(j.at("node_count"), 64);
  EXPECT_EQ(j.at("outputs")[0], "a.csv");
}

TEST_F(CliTest, EigenTables) {
  ASSERT_EQ(run("eigen sc --b 0.1:0.99:0.01 --m 1:20 --out sc"), 0);
  const std::string csv = slurp("sc.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 20 * 90);
  expect_complete_manifest("sc");

  ASSERT_EQ(run("eigen dc --b1 0.75 --m 2:20 --intersections --out dc"), 0);
  expect_complete_manifest("dc");
  EXPECT_NE(slurp("dc.intersections.csv").find("n,b2,lambda"), std::string::npos);

  ASSERT_EQ(run("eigen bstar --b1 0.05:0.95:0.05 --m 2:20 --out bs"), 0);
  EXPECT_NE(slurp("bs.csv").find("4,0.80000000000000004,0.5407"), std::string::npos);
}

TEST_F(CliTest, EigenIsReproducible) {
  ASSERT_EQ(run("eigen dc --b1 0.8 --m 2:6 --out a"), 0);
  ASSERT_EQ(run("eigen dc --b1 0.8 --m 2:6 --out b"), 0);
  EXPECT_EQ(slurp("a.csv"), slurp("b.csv"));
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run("eigen sc --b 0.9:0.1:0.1"), 2);
  EXPECT_EQ(run("eigen sc --b 0.1:1.5:0.1"), 2);
  EXPECT_EQ(run("eigen nothing"), 2);
  EXPECT_EQ(run("solve sc --m 3 --b 0.8"), 2);
  EXPECT_EQ(run("solve dc --m 3 --b1 0.5 --b2 0.6 --omega 0.1"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run(""), 2);
}

TEST_F(CliTest, SolveTrivialAndGeometry) {
  EXPECT_EQ(run("solve sc --m 3 --b 0.8 --omega 0.3765 --seed-a1 0 --out t"), 0);
  const json rep = read_json((dir_ / "t.report.json").string());
  EXPECT_TRUE(rep.at("trivial").get<bool>());
  EXPECT_TRUE(rep.at("converged").get<bool>());
  expect_complete_manifest("t");
  EXPECT_EQ(run("solve sc --m 3 --b 0.8 --omega 0.3765 --seed-a1 0.5 --out g"), 3);
}

TEST_F(CliTest, SolveFromBranchFindsThreeStates) {
  for (int k = 0; k < 3; ++k)
    ASSERT_EQ(run("solve sc --m 3 --b 0.8 --omega 0.3765 --from-branch sc --pick " + std::to_string(k) +
                  " --out s" + std::to_string(k)),
              0);
  std::vector<double> a1;
  for (int k = 0; k < 3; ++k) {
    const StoredState st = read_state((dir_ / ("s" + std::to_string(k) + ".contour.json")).string());
    a1.push_back(st.contours[0].coeffs[0]);
  }
  EXPECT_GT(a1[1] - a1[0], 1e-3);
  EXPECT_GT(a1[2] - a1[1], 1e-3);
  EXPECT_EQ(run("solve sc --m 3 --b 0.8 --omega 0.3765 --from-branch sc --pick 3 --out x"), 2);
}

TEST_F(CliTest, Branch) {
  ASSERT_EQ(run("branch sc --m 3 --b 0.8 --out b"), 0);
  const std::string csv = slurp("b.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "omega,a_first,sup_residual,gap_unit_circle");
  const json j = read_json((dir_ / "b.json").string());
  EXPECT_EQ(j.at("fold_indices").size(), 2u);
  EXPECT_EQ(j.at("points").size(), static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n') - 1));
  expect_complete_manifest("b");

  ASSERT_EQ(run("branch dc --m 4 --b1 0.8 --b2 0.53 --from plus --r 5 --out d"), 0);
  const std::string dcsv = slurp("d.csv");
  EXPECT_EQ(dcsv.substr(0, dcsv.find('\n')), "omega,a_first,sup_residual,gap_unit_circle,gap_boundaries");
  EXPECT_EQ(read_json((dir_ / "d.json").string()).at("termination"), "reconnected");
}

TEST_F(CliTest, Verify) {
  const std::string circle = (dir_ / "circle.json").string();
  write_json(circle, state_to_json(StoredState{{FourierContour::circle(0.6, 2, 3)}, 0.3, 64}));
  EXPECT_EQ(run("verify circle.json --tol 1e-9 --snapshots snap.csv --out c"), 0);
  expect_complete_manifest("c");
  const std::string snap = slurp("snap.csv");
  EXPECT_EQ(snap.substr(0, snap.find('\n')), "theta_index,t,x,y");

  EXPECT_EQ(run("verify '" + oracle::fixture("sc_m3_b0.8_omega0.3765_0.json") + "' --steps 200 --out m3"), 0);
  EXPECT_TRUE(read_json((dir_ / "m3.json").string()).at("pass").get<bool>());

  EXPECT_EQ(run("verify '" + oracle::fixture("sc_m4_b0.8_omega0.39.json") + "' --steps 10 --T 10 --out bad"), 1);
  EXPECT_FALSE(read_json((dir_ / "bad.json").string()).at("pass").get<bool>());
}
