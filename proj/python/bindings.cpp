#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "promptlit/analysis.hpp"
#include "promptlit/content.hpp"
#include "promptlit/grader.hpp"
#include "promptlit/practice_flow.hpp"
#include "promptlit/psychometrics.hpp"
#include "promptlit/simulate.hpp"

namespace py = pybind11;
using namespace promptlit;
using nlohmann::json;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }
json from_py(const py::object& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::dict test_dict(const stats::TestResult& t) {
  py::dict d;
  d["statistic"] = t.statistic;
  d["p_value"] = t.p_value;
  d["n"] = t.n;
  d["method"] = std::string(stats::to_string(t.method));
  return d;
}

const Scenario& scenario_by_id(const std::string& id) {
  const Scenario* s = content::find_scenario(content::scenarios(), id);
  if (!s) throw PreconditionError("unknown scenario '" + id + "'");
  return *s;
}

ResponseMatrix matrix_from_rows(const std::vector<std::vector<std::optional<int>>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  std::vector<std::string> students;
  std::vector<std::string> items;
  for (std::size_t i = 0; i < rows.size(); ++i) students.push_back("r" + std::to_string(i));
  for (std::size_t j = 0; j < cols; ++j) items.push_back("c" + std::to_string(j));
  ResponseMatrix m(students, items);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw PreconditionError("matrix rows differ in length");
    for (std::size_t j = 0; j < cols; ++j) {
      const auto& v = rows[i][j];
      m.set(i, j, !v ? Cell::Missing : (*v ? Cell::Right : Cell::Wrong));
    }
  }
  return m;
}

std::vector<std::string> error_strings(const std::vector<ValidationError>& errors) {
  std::vector<std::string> out;
  for (const auto& e : errors) out.push_back(e.to_string());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "promptlit core: statistics, grading contract, practice flow and cohort simulation";
  py::register_exception<Error>(m, "PromptlitError", PyExc_ValueError);

  m.def("mcnemar_test", [](std::uint64_t b, std::uint64_t c) { return test_dict(stats::mcnemar_test(b, c)); },
        py::arg("b"), py::arg("c"));
  m.def("wilcoxon_signed_rank",
        [](const std::vector<double>& pre, const std::vector<double>& post) {
          return test_dict(stats::wilcoxon_signed_rank(pre, post));
        },
        py::arg("pre"), py::arg("post"));
  m.def("cronbach_alpha",
        [](const std::vector<std::vector<double>>& rows) {
          if (rows.empty()) throw PreconditionError("no rows");
          std::vector<double> flat;
          for (const auto& r : rows) {
            if (r.size() != rows.front().size()) throw PreconditionError("rows differ in length");
            flat.insert(flat.end(), r.begin(), r.end());
          }
          return stats::cronbach_alpha(flat, rows.size(), rows.front().size());
        },
        py::arg("rows"));
  m.def("cohen_kappa",
        [](const std::vector<std::string>& a, const std::vector<std::string>& b) { return stats::cohen_kappa(a, b); },
        py::arg("a"), py::arg("b"), "Kappa over categorical labels given as strings");
  m.def("pearson_correlation",
        [](const std::vector<double>& x, const std::vector<double>& y) {
          const auto c = stats::pearson_correlation(x, y);
          py::dict d;
          d["r"] = c.r;
          d["p_value"] = c.p_value;
          d["n"] = c.n;
          return d;
        },
        py::arg("x"), py::arg("y"));
  m.def("difficulty_index",
        [](const std::vector<std::optional<int>>& column) {
          std::vector<Cell> cells;
          for (const auto& v : column) cells.push_back(!v ? Cell::Missing : (*v ? Cell::Right : Cell::Wrong));
          return stats::difficulty_index(cells);
        },
        py::arg("column"));
  m.def("discrimination_index",
        [](const std::vector<std::vector<std::optional<int>>>& rows, std::size_t column) {
          return stats::discrimination_index(matrix_from_rows(rows), column);
        },
        py::arg("rows"), py::arg("column"));
  m.def("classify_matrix_csv",
        [](const std::string& csv, const std::string& form) {
          const auto report =
              analysis::analyze_items(parse_matrix_csv(csv), content::item_bank(), form, "python");
          return to_py(analysis::to_json(report));
        },
        py::arg("csv"), py::arg("form") = "v2");
  m.def("explanation_accuracy",
        [](const std::map<std::string, std::vector<double>>& ratings) {
          std::map<Dimension, std::vector<double>> in;
          for (const auto& [k, v] : ratings) {
            auto d = parse_dimension(k);
            if (!d) throw PreconditionError("unknown dimension '" + k + "'");
            in[*d] = v;
          }
          const auto acc = stats::explanation_accuracy(in);
          py::dict per;
          for (const auto& [d, v] : acc.per_dimension) per[py::str(std::string(to_string(d)))] = v;
          py::dict out;
          out["per_dimension"] = per;
          out["overall"] = acc.overall;
          return out;
        },
        py::arg("ratings"));

  m.def("scenarios", [] {
    json out = json::array();
    for (const auto& s : content::scenarios()) {
      json dims = json::array();
      for (Dimension d : s.applicable_dimensions) dims.push_back(to_string(d));
      out.push_back({{"id", s.id}, {"subject", s.subject}, {"title", s.title}, {"dimensions", dims}});
    }
    return to_py(out);
  });
  m.def("scenario_dimensions",
        [](const std::string& id) {
          std::vector<std::string> out;
          for (Dimension d : scenario_dimensions(scenario_by_id(id))) out.emplace_back(to_string(d));
          return out;
        },
        py::arg("scenario_id"));
  m.def("validate_scenario_config",
        [](const std::string& text) { return error_strings(validate_scenario_config(text).errors); },
        py::arg("text"), "Validation errors; empty when the bundle is valid");
  m.def("validate_item_bank", [](const std::string& text) { return error_strings(validate_item_bank(text).errors); },
        py::arg("text"));
  m.def("mock_grade",
        [](const std::string& scenario_id, const std::string& prompt) {
          return to_py(grade_report_to_json(mock_grade(scenario_by_id(scenario_id), prompt)));
        },
        py::arg("scenario_id"), py::arg("prompt"));
  m.def("parse_grade_report",
        [](const std::string& raw, const std::string& scenario_id) {
          const auto& s = scenario_by_id(scenario_id);
          return to_py(grade_report_to_json(parse_grade_report(raw, make_grading_schema(s), GraderKind::Llm)));
        },
        py::arg("raw"), py::arg("scenario_id"));
  m.def("replay",
        [](const py::list& events) {
          std::vector<SessionEvent> log;
          for (const auto& e : events) log.push_back(SessionEvent::from_json(from_py(py::reinterpret_borrow<py::object>(e))));
          return to_py(replay(log).to_json());
        },
        py::arg("events"), "Fold a list of event dicts into a session state dict");
  m.def("simulate",
        [](std::size_t students, std::uint64_t seed, bool labels) {
          Store store;
          SimulationOptions o;
          o.students = students;
          o.seed = seed;
          o.labels = labels;
          const auto r = simulate_cohort(store, content::scenarios(), content::item_bank(), o);
          py::dict d;
          d["sessions"] = r.sessions;
          d["attempts"] = r.attempts;
          d["responses"] = r.responses_csv;
          d["attempts_csv"] = r.attempts_csv;
          d["grades"] = r.grades_csv;
          d["labels"] = r.labels_csv;
          return d;
        },
        py::arg("students"), py::arg("seed"), py::arg("labels") = true);
}
