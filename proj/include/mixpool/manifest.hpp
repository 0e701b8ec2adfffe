#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mixpool/errors.hpp"
#include "mixpool/table_io.hpp"
#include "mixpool/version.hpp"

// Run manifests: every CLI run writes a manifest.json beside its outputs
// recording the subcommand, parameters, input digests, and output names, so
// a result can be traced back to exactly what produced it. Serialization
// order is fixed, making reruns byte-identical.

namespace mixpool {

struct RunManifest {
  std::string command;
  std::string version = kVersion;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  // Ordered (name, value) pairs; insertion order is preserved in the JSON.
  std::vector<std::pair<std::string, std::string>> parameters;
  std::vector<std::pair<std::string, std::string>> inputs;  // (path, digest)
  std::vector<std::string> outputs;

  void add_parameter(std::string name, std::string value) {
    parameters.emplace_back(std::move(name), std::move(value));
  }
  void add_input(const std::filesystem::path& path) {
    inputs.emplace_back(path.string(), io::digest_file(path));
  }
};

inline nlohmann::ordered_json to_json(const RunManifest& manifest) {
  nlohmann::ordered_json j;
  j["command"] = manifest.command;
  j["version"] = manifest.version;
  if (manifest.seed) j["seed"] = *manifest.seed;
  j["workers"] = manifest.workers;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& [name, value] : manifest.parameters) params[name] = value;
  j["parameters"] = std::move(params);
  nlohmann::ordered_json inputs = nlohmann::ordered_json::array();
  for (const auto& [path, digest] : manifest.inputs) {
    inputs.push_back({{"path", path}, {"fnv1a64", digest}});
  }
  j["inputs"] = std::move(inputs);
  j["outputs"] = manifest.outputs;
  return j;
}

inline void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest '" + path.string() + "'");
  out << to_json(manifest).dump(2) << '\n';
}

}  // namespace mixpool
