// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "helpers.hpp"

using namespace polyapprox;
namespace fs = std::filesystem;

namespace {

std::string config_error(const json& j) {
  try {
    config_from_json(j);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::kInvalidConfig);
    return e.what();
  }
  return "";
}

struct RunResult {
  int status = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(POLYAPPROX_CLI_PATH) + " " + args + " 2>/dev/null";
  RunResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("polyapprox_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Config, ErrorsNameTheField) {
  EXPECT_NE(config_error({{"colour", 1}}).find("'colour'"), std::string::npos);
  EXPECT_NE(config_error({{"train", {{"lr", 1}}}}).find("'train.lr'"), std::string::npos);
  EXPECT_NE(config_error({{"train", {{"epochs", -3}}}}).find("'train.epochs'"), std::string::npos);
  EXPECT_NE(config_error({{"architecture", "vgg"}}).find("'architecture'"), std::string::npos);
  EXPECT_NE(config_error({{"scheme", {{{"degree", 3}, {"group_size", 4}}}}}).find("'scheme[0].degree'"),
            std::string::npos);
  EXPECT_NE(config_error({{"scheme", {nullptr}}}).find("'scheme'"), std::string::npos);
  EXPECT_NE(config_error({{"preset", "fc-case9"}}).find("fc-case9"), std::string::npos);
  EXPECT_NE(config_error({{"cost", {{"moment_adders", {{"x", 3}}}}}}).find("'cost.moment_adders'"),
            std::string::npos);
}

TEST(Config, PresetDefaultsAndOverrides) {
  const ExperimentConfig c =
      config_from_json({{"preset", "fc-case3"}, {"train", {{"epochs", 2}, {"seed", 9}}}});
  EXPECT_EQ(c.train.epochs, 2u);
  EXPECT_EQ(c.train.seed, 9u);
  EXPECT_EQ(c.scheme.layers[0].group_size, 24u);
  EXPECT_EQ(c.reference, "lenet_300_100");
}

TEST(Config, JsonRoundTrip) {
  for (const auto& p : presets()) {
    json j = to_json(p);
    j.erase("preset");
    const ExperimentConfig back = config_from_json(j);
    EXPECT_EQ(to_json(back).dump(), [&] {
      json k = to_json(p);
      k["preset"] = "";
      return k.dump();
    }()) << p.preset;
  }
}

TEST(Config, ShippedConfigsLoad) {
  for (const auto& e : fs::directory_iterator(POLYAPPROX_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_config(e.path().string())) << e.path();
  }
}

TEST(Checkpoint, RoundTrip) {
  const fs::path dir = scratch("ckpt");
  Checkpoint ck;
  ck.config = preset("fc-case3");
  ck.store = project_parameters(ck.config.network(), init_parameters(ck.config.network(), 2),
                                ck.config.scheme);
  ck.summary = {{"final_accuracy", 0.5}};
  const std::string path = (dir / "model.pwc").string();
  save_checkpoint(path, ck);
  EXPECT_TRUE(fs::exists(dir / "model.json"));
  const Checkpoint back = load_checkpoint(path);
  EXPECT_EQ(back.config.preset, "fc-case3");
  EXPECT_EQ(serialize(back.store), serialize(ck.store));
  EXPECT_EQ(back.summary["final_accuracy"], 0.5);
  EXPECT_THROW(load_checkpoint((dir / "absent.pwc").string()), Error);
}

TEST(Cli, CostPrintsTotals) {
  const fs::path dir = scratch("cost");
  const RunResult r = run_cli("cost --preset fc-case3 --quiet --out " + dir.string());
  EXPECT_EQ(r.status, 0);
  for (const char* f : {"cost.csv", "cost.json", "trace.json", "sweep.csv", "sweep_3x3.svg",
                        "sweep_5x5.svg", "cost.txt"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  std::ifstream in(dir / "cost.json");
  const json j = json::parse(in);
  EXPECT_EQ(j["ops_proposed"], 13156);
}

TEST(Cli, ErrorsAreJsonWithExitOne) {
  const RunResult r = run_cli("cost --preset no-such-preset");
  EXPECT_EQ(r.status, 1);
  const json j = json::parse(r.out);
  EXPECT_EQ(j["error"], errc::kInvalidConfig);
  EXPECT_NE(j["message"].get<std::string>().find("no-such-preset"), std::string::npos);

  const fs::path dir = scratch("missing");
  const RunResult m = run_cli("train --preset fc-case1 --epochs 1 --data " + (dir / "nothing").string() +
                              " --out " + dir.string());
  EXPECT_EQ(m.status, 1);
  EXPECT_EQ(json::parse(m.out)["error"], errc::kMissingDataset);
}

TEST(Cli, UsageErrorExitsTwo) {
  EXPECT_EQ(run_cli("frobnicate").status, 2);
  EXPECT_EQ(run_cli("--help").status, 0);
}

TEST(Cli, PresetListing) {
  const RunResult r = run_cli("presets");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("cnn-case1"), std::string::npos);
  EXPECT_NE(r.out.find("fc-case7"), std::string::npos);
}
