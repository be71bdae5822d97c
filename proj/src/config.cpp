#include "promptlit/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <sstream>

#include "promptlit/content.hpp"

namespace promptlit {

using nlohmann::json;

namespace {

template <class T>
void read_scalar(const YAML::Node& node, const std::string& key, const std::string& path, T& out,
                 std::vector<ValidationError>& errors) {
  if (!node[key]) return;
  try {
    out = node[key].as<T>();
  } catch (const YAML::Exception&) {
    errors.push_back({path + key, "has the wrong type"});
  }
}

}  // namespace

json ServerConfig::to_json() const {
  const auto& g = service.gateway;
  return {{"host", host},
          {"port", port},
          {"snapshot_every", snapshot_every},
          {"grader_backend", to_string(service.backend)},
          {"test_form", service.test_form},
          {"model", service.model},
          {"scenarios", scenarios_path ? scenarios_path->string() : "shipped"},
          {"items", items_path ? items_path->string() : "shipped"},
          {"gateway",
           {{"base_url", g.base_url},
            {"api_key_env", g.api_key_env_var},
            {"timeout_ms", g.timeout.count()},
            {"max_retries", g.max_retries},
            {"backoff_base_ms", g.backoff_base.count()},
            {"max_concurrent", g.max_concurrent}}}};
}

ServerConfig parse_server_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ContentError(std::vector<ValidationError>{ValidationError{"", std::string("invalid YAML: ") + e.what()}});
  }
  ServerConfig c;
  std::vector<ValidationError> errors;
  if (root.IsNull()) return c;
  if (!root.IsMap()) throw ContentError(std::vector<ValidationError>{ValidationError{"", "config must be a mapping"}});

  static const std::vector<std::string> known = {"host",   "port",      "data_dir", "snapshot_every", "grader_backend",
                                                 "model",  "test_form", "scenarios", "items",          "gateway"};
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (std::find(known.begin(), known.end(), key) == known.end()) errors.push_back({key, "unknown setting"});
  }

  read_scalar(root, "host", "", c.host, errors);
  read_scalar(root, "port", "", c.port, errors);
  if (c.port < 0 || c.port > 65535) errors.push_back({"port", "must lie in 0..65535"});
  std::string data_dir = c.data_dir.string();
  read_scalar(root, "data_dir", "", data_dir, errors);
  c.data_dir = data_dir;
  read_scalar(root, "snapshot_every", "", c.snapshot_every, errors);
  std::string backend = "mock";
  read_scalar(root, "grader_backend", "", backend, errors);
  if (auto b = parse_backend(backend)) {
    c.service.backend = *b;
  } else {
    errors.push_back({"grader_backend", "must be live or mock"});
  }
  read_scalar(root, "model", "", c.service.model, errors);
  read_scalar(root, "test_form", "", c.service.test_form, errors);
  if (root["scenarios"]) {
    std::string p;
    read_scalar(root, "scenarios", "", p, errors);
    c.scenarios_path = p;
  }
  if (root["items"]) {
    std::string p;
    read_scalar(root, "items", "", p, errors);
    c.items_path = p;
  }
  if (const auto g = root["gateway"]) {
    auto& gw = c.service.gateway;
    read_scalar(g, "base_url", "gateway.", gw.base_url, errors);
    read_scalar(g, "api_key_env", "gateway.", gw.api_key_env_var, errors);
    long long timeout = gw.timeout.count();
    read_scalar(g, "timeout_ms", "gateway.", timeout, errors);
    gw.timeout = std::chrono::milliseconds(timeout);
    read_scalar(g, "max_retries", "gateway.", gw.max_retries, errors);
    long long backoff = gw.backoff_base.count();
    read_scalar(g, "backoff_base_ms", "gateway.", backoff, errors);
    gw.backoff_base = std::chrono::milliseconds(backoff);
    read_scalar(g, "max_concurrent", "gateway.", gw.max_concurrent, errors);
    try {
      gw.validate();
    } catch (const PreconditionError& e) {
      errors.push_back({"gateway", e.what()});
    }
  }
  if (!errors.empty()) throw ContentError(std::move(errors));
  return c;
}

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ServerConfig load_server_config(const std::filesystem::path& file) { return parse_server_config(read_file(file)); }

std::vector<Scenario> load_scenarios(const std::optional<std::filesystem::path>& path) {
  if (!path) return content::scenarios();
  auto v = validate_scenario_config(read_file(*path));
  if (!v.ok()) throw ContentError(v.errors);
  return v.value;
}

ItemBank load_item_bank(const std::optional<std::filesystem::path>& path) {
  if (!path) return content::item_bank();
  auto v = validate_item_bank(read_file(*path));
  if (!v.ok()) throw ContentError(v.errors);
  return v.value;
}

}  // namespace promptlit
