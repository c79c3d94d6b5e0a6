// SPDX-License-Identifier: Apache-2.0
#pragma once

// A checkpoint is a PWC1 coefficient container plus a JSON sidecar with the
// same stem ("model.pwc" + "model.json") holding the config and a summary.

#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "polyapprox/container.hpp"
#include "polyapprox/experiment.hpp"

namespace polyapprox {

struct Checkpoint {
  CoeffStore store;
  ExperimentConfig config;
  nlohmann::json summary = nlohmann::json::object();
};

inline std::string sidecar_path(const std::string& container_path) {
  return std::filesystem::path(container_path).replace_extension(".json").string();
}

inline void save_checkpoint(const std::string& container_path, const Checkpoint& ck) {
  save_coeff_store(ck.store, container_path);
  const nlohmann::json side = {{"config", to_json(ck.config)}, {"summary", ck.summary}};
  std::ofstream out(sidecar_path(container_path));
  if (!out) throw Error(errc::kIo, "cannot write " + sidecar_path(container_path));
  out << side.dump(2) << "\n";
}

inline Checkpoint load_checkpoint(const std::string& container_path) {
  if (!std::filesystem::exists(container_path)) {
    throw Error(errc::kIo, "checkpoint " + container_path + " not found");
  }
  Checkpoint ck;
  ck.store = load_coeff_store(container_path);
  const std::string side = sidecar_path(container_path);
  std::ifstream in(side);
  if (!in) throw Error(errc::kCorruptContainer, "checkpoint sidecar " + side + " missing");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::kCorruptContainer, "checkpoint sidecar " + side + ": " + e.what());
  }
  if (!j.contains("config")) throw Error(errc::kCorruptContainer, "checkpoint sidecar lacks config");
  nlohmann::json cfg = j["config"];
  cfg.erase("preset");  // the stored fields are complete on their own
  ck.config = config_from_json(cfg);
  ck.config.preset = j["config"].value("preset", "");
  ck.summary = j.value("summary", nlohmann::json::object());
  check_store(ck.config.network(), ck.store);
  return ck;
}

}  // namespace polyapprox
