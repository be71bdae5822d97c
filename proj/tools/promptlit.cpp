// Operator command-line tool: serve, validate content, import labels, run
// analyses and simulate cohorts.
#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>

#include "promptlit/analysis.hpp"
#include "promptlit/config.hpp"
#include "promptlit/content.hpp"
#include "promptlit/http_api.hpp"
#include "promptlit/simulate.hpp"

using namespace promptlit;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kValidation = 1, kIo = 2, kAnalysis = 3 };

struct ReportOptions {
  std::string data_dir;
  std::string out;
  bool as_json = false;
};

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const stats::StatsError*>(&e)) return kAnalysis;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const CorruptRecord*>(&e) ||
      dynamic_cast<const std::filesystem::filesystem_error*>(&e)) {
    return kIo;
  }
  return kValidation;
}

int fail(const std::exception& e) {
  const int code = exit_code_for(e);
  json err = {{"error", {{"code", code == kAnalysis ? "analysis_precondition" : code == kIo ? "io" : "validation"},
                         {"message", e.what()}}}};
  if (const auto* c = dynamic_cast<const ContentError*>(&e)) {
    json list = json::array();
    for (const auto& v : c->errors()) list.push_back({{"path", v.path}, {"message", v.message}});
    err["error"]["details"] = list;
  }
  std::cerr << err.dump() << '\n';
  return code;
}

void emit(const std::string& body, const std::string& out) {
  std::cout << body;
  if (!out.empty()) {
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    f << body;
    if (!f) throw IoError("cannot write " + out);
  }
}

std::unique_ptr<Store> open_store(const std::string& dir) {
  if (dir.empty()) throw PreconditionError("--data is required");
  if (!std::filesystem::exists(dir)) throw IoError("data directory " + dir + " does not exist");
  return std::make_unique<Store>(dir);
}

int content_validate(const std::string& path) {
  const std::string text = read_file(path);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    std::cout << "error: invalid YAML: " << e.what() << '\n';
    return kValidation;
  }
  std::vector<ValidationError> errors;
  std::string summary;
  if (root.IsMap() && root["scenarios"]) {
    auto v = validate_scenario_config(text);
    errors = v.errors;
    summary = std::to_string(v.value.size()) + " scenarios";
  } else if (root.IsMap() && root["items"]) {
    auto v = validate_item_bank(text);
    errors = v.errors;
    summary = std::to_string(v.value.items.size()) + " items, " + std::to_string(v.value.forms.size()) + " forms";
  } else {
    std::cout << "error: document has neither a 'scenarios' nor an 'items' section\n";
    return kValidation;
  }
  if (!errors.empty()) {
    for (const auto& e : errors) std::cout << "error: " << e.to_string() << '\n';
    std::cout << errors.size() << " error(s) in " << path << '\n';
    return kValidation;
  }
  std::cout << "ok: " << path << " (" << summary << ")\n";
  return kOk;
}

std::atomic<HttpApi*> g_api{nullptr};

void on_signal(int) {
  if (auto* api = g_api.load()) api->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"promptlit: prompting practice service and analysis tools"};
  app.require_subcommand(1);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string config_path;
  std::string host_override;
  int port_override = -1;
  std::string data_override;
  std::string backend_override;
  serve->add_option("--config", config_path, "YAML config file")->required();
  serve->add_option("--host", host_override, "Override the bind address");
  serve->add_option("--port", port_override, "Override the port");
  serve->add_option("--data", data_override, "Override the data directory");
  serve->add_option("--backend", backend_override, "Override the grader backend (live|mock)");

  // content validate
  auto* content_cmd = app.add_subcommand("content", "Content bundle tools");
  content_cmd->require_subcommand(1);
  auto* validate = content_cmd->add_subcommand("validate", "Validate a scenario or item bundle");
  std::string bundle_path;
  validate->add_option("path", bundle_path, "Bundle file")->required();

  // labels import
  auto* labels_cmd = app.add_subcommand("labels", "Human label tools");
  labels_cmd->require_subcommand(1);
  auto* import = labels_cmd->add_subcommand("import", "Import human grades, OE scores and explanation ratings");
  std::string labels_path;
  std::string labels_data;
  import->add_option("path", labels_path, "Label file (.csv or .json)")->required();
  import->add_option("--data", labels_data, "Data directory of the store")->required();

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Run analyses");
  analyze->require_subcommand(1);
  ReportOptions ro;
  auto add_report_flags = [&ro](CLI::App* cmd) {
    cmd->add_option("--data", ro.data_dir, "Data directory of the store");
    cmd->add_option("--out", ro.out, "Also write the report to this file");
    cmd->add_flag("--json", ro.as_json, "Emit JSON instead of a text table");
  };
  auto* items = analyze->add_subcommand("items", "Item difficulty, discrimination and reliability");
  std::string form_id = "v2";
  std::string matrix_path;
  std::string occasion = "pre";
  items->add_option("--form", form_id, "Assessment form (v1|v2)")->check(CLI::IsMember({"v1", "v2"}));
  items->add_option("--matrix", matrix_path, "Response matrix CSV instead of the store");
  items->add_option("--occasion", occasion, "Test occasion from the store (pre|post)")
      ->check(CLI::IsMember({"pre", "post"}));
  add_report_flags(items);
  auto* grader = analyze->add_subcommand("grader", "Grader accuracy against human labels");
  std::string fixture_path;
  grader->add_option("--fixture", fixture_path, "Labelled fixture CSV instead of the store");
  add_report_flags(grader);
  auto* learning = analyze->add_subcommand("learning", "McNemar, Wilcoxon and correlation battery");
  add_report_flags(learning);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Drive a synthetic cohort through the flow");
  SimulationOptions so;
  std::string sim_out;
  std::string sim_data;
  bool no_labels = false;
  simulate->add_option("--students", so.students, "Number of students")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--seed", so.seed, "Random seed")->required();
  simulate->add_option("--form", so.test_form, "Test form")->check(CLI::IsMember({"v1", "v2"}));
  simulate->add_option("--out", sim_out, "Directory for the exported CSV tables");
  simulate->add_option("--data", sim_data, "Persist the run into this data directory");
  simulate->add_flag("--no-labels", no_labels, "Skip simulated human labels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kValidation;
  }

  try {
    if (*serve) {
      ServerConfig cfg = load_server_config(config_path);
      if (!host_override.empty()) cfg.host = host_override;
      if (port_override >= 0) cfg.port = port_override;
      if (!data_override.empty()) cfg.data_dir = data_override;
      if (!backend_override.empty()) {
        auto b = parse_backend(backend_override);
        if (!b) throw PreconditionError("--backend must be live or mock");
        cfg.service.backend = *b;
      }
      Store store(cfg.data_dir, cfg.snapshot_every);
      PracticeService service(store, load_scenarios(cfg.scenarios_path), load_item_bank(cfg.items_path), cfg.service);
      store.record_config_version(cfg.to_json(), std::chrono::time_point_cast<std::chrono::milliseconds>(
                                                     std::chrono::system_clock::now()));
      HttpApi api(service);
      g_api = &api;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "promptlit listening on " << cfg.host << ":" << cfg.port << " (backend "
                << to_string(cfg.service.backend) << ")\n";
      const bool ok = api.listen(cfg.host, cfg.port);
      g_api = nullptr;
      if (!ok) throw IoError("cannot listen on " + cfg.host + ":" + std::to_string(cfg.port));
      return kOk;
    }
    if (*validate) return content_validate(bundle_path);
    if (*import) {
      Store store(labels_data);
      ServiceOptions opts;
      PracticeService service(store, content::scenarios(), content::item_bank(), opts);
      const bool is_csv = std::filesystem::path(labels_path).extension() != ".json";
      const json result = service.import_labels(read_file(labels_path), is_csv);
      std::cout << "imported " << result["imported"].get<std::size_t>() << " labels\n";
      return kOk;
    }
    if (*items) {
      const ItemBank& bank = content::item_bank();
      analysis::ItemsReport report;
      if (!matrix_path.empty()) {
        const ResponseMatrix m = parse_matrix_csv(read_file(matrix_path));
        const auto& form = bank.form(form_id);
        for (const auto& item : m.items()) {
          if (std::find(form.item_ids.begin(), form.item_ids.end(), item) == form.item_ids.end()) {
            throw PreconditionError("matrix column '" + item + "' is not on form " + form_id);
          }
        }
        report = analysis::analyze_items(m, bank, form_id, std::filesystem::path(matrix_path).filename().string());
      } else {
        auto store = open_store(ro.data_dir);
        const auto cohort = analysis::completed_cohort(analysis::summarize_store(*store, bank));
        const auto m = analysis::cohort_matrix(cohort, bank, bank.form(form_id), occasion, store->labels());
        report = analysis::analyze_items(m, bank, form_id, occasion);
      }
      emit(ro.as_json ? analysis::to_json(report).dump(2) + "\n" : analysis::render_text(report), ro.out);
      return kOk;
    }
    if (*grader) {
      analysis::GraderCorpus corpus;
      if (!fixture_path.empty()) {
        corpus = analysis::parse_grader_fixture(read_file(fixture_path));
      } else {
        auto store = open_store(ro.data_dir);
        corpus = analysis::grader_corpus(analysis::summarize_store(*store, content::item_bank()), store->labels());
        if (corpus.human.empty()) {
          throw stats::StatsError(stats::StatsError::Kind::InsufficientData, "no human grade labels in the store");
        }
      }
      const auto report = analysis::analyze_grader(corpus);
      emit(ro.as_json ? analysis::to_json(report).dump(2) + "\n" : analysis::render_text(report), ro.out);
      return kOk;
    }
    if (*learning) {
      auto store = open_store(ro.data_dir);
      const ItemBank& bank = content::item_bank();
      const auto cohort = analysis::completed_cohort(analysis::summarize_store(*store, bank));
      const auto report = analysis::analyze_learning(cohort, content::scenarios(), bank, store->labels());
      emit(ro.as_json ? analysis::to_json(report).dump(2) + "\n" : analysis::render_text(report), ro.out);
      return kOk;
    }
    if (*simulate) {
      so.labels = !no_labels;
      std::unique_ptr<Store> store = sim_data.empty() ? std::make_unique<Store>() : std::make_unique<Store>(sim_data);
      const auto result = simulate_cohort(*store, content::scenarios(), content::item_bank(), so);
      if (!sim_out.empty()) write_simulation(result, sim_out);
      std::cout << "simulated " << result.sessions << " sessions with " << result.attempts << " prompt attempts"
                << (sim_out.empty() ? "" : "; tables written to " + sim_out) << '\n';
      return kOk;
    }
  } catch (const std::exception& e) {
    return fail(e);
  }
  return kOk;
}
