#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>

#include "promptlit/service.hpp"

namespace promptlit {

/// Deployment settings for `serve`, read from a YAML file.
struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "data";
  std::size_t snapshot_every = 200;
  ServiceOptions service;
  /// Operator-supplied bundles; the shipped content is used when absent.
  std::optional<std::filesystem::path> scenarios_path;
  std::optional<std::filesystem::path> items_path;

  /// Recorded in the log as the config version; carries no secrets.
  nlohmann::json to_json() const;
};

/// Parses the YAML text. Throws ContentError listing every bad field.
ServerConfig parse_server_config(std::string_view yaml);
ServerConfig load_server_config(const std::filesystem::path& file);

/// Reads a whole file; throws Error on I/O failure.
std::string read_file(const std::filesystem::path& file);

/// Scenario bundle from `path`, or the shipped one. Throws ContentError.
std::vector<Scenario> load_scenarios(const std::optional<std::filesystem::path>& path);
ItemBank load_item_bank(const std::optional<std::filesystem::path>& path);

}  // namespace promptlit
