#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "costorm/discourse.hpp"
#include "costorm/errors.hpp"
#include "costorm/eval.hpp"
#include "costorm/gateways.hpp"
#include "costorm/mind_map.hpp"
#include "costorm/prompts.hpp"
#include "costorm/scripted.hpp"
#include "costorm/session.hpp"

namespace py = pybind11;
using namespace costorm;

namespace {

// Structured values cross the boundary as JSON text; the Python package
// decodes them.
Config config_from_text(const std::string& text) {
  return text.empty() ? Config{} : config_from_json(Json::parse(text));
}

Embedding to_embedding(const std::vector<double>& v) { return normalized(v); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Discourse engine core";

  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<BudgetExhausted>(m, "BudgetExhausted", PyExc_RuntimeError);
  py::register_exception<EmptyMapError>(m, "EmptyMapError", PyExc_RuntimeError);
  py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<GatewayError>(m, "GatewayError", PyExc_RuntimeError);

  py::class_<Gateways>(m, "Gateways");
  m.def("scripted_gateways", &load_scripted_gateways, py::arg("fixtures_dir"),
        "Offline gateways from a fixtures directory");

  py::class_<Session, std::shared_ptr<Session>>(m, "Session")
      .def(py::init([](const std::string& topic, std::optional<std::string> goal,
                       const std::string& config_json, const Gateways& gw,
                       std::optional<std::string> log_path) {
             SessionOptions so;
             so.topic = topic;
             so.goal = std::move(goal);
             so.config = config_from_text(config_json);
             so.log_path = std::move(log_path);
             return std::make_shared<Session>(so, gw);
           }),
           py::arg("topic"), py::arg("goal") = py::none(), py::arg("config_json") = "",
           py::arg("gateways"), py::arg("log_path") = py::none())
      .def("step_json",
           [](Session& s) {
             py::gil_scoped_release nogil;
             return to_json(s.step()).dump();
           })
      .def("inject", &Session::inject, py::arg("text"))
      .def("snapshot_json", [](const Session& s) { return s.snapshot()->dump(); })
      .def("mind_map_json", [](const Session& s) { return s.mind_map_json().dump(); })
      .def("report_json",
           [](Session& s) {
             py::gil_scoped_release nogil;
             return s.report()->to_json().dump();
           })
      .def("report_markdown",
           [](Session& s) {
             py::gil_scoped_release nogil;
             return s.report()->to_markdown();
           })
      .def("events_jsonl", [](const Session& s) { return s.log().to_jsonl(); })
      .def_property_readonly("terminated", &Session::terminated)
      .def_property_readonly("turns", &Session::turns);

  m.def(
      "replay",
      [](const std::string& jsonl, const Gateways& gw) {
        return std::shared_ptr<Session>(Session::replay(EventLog::parse_jsonl(jsonl), gw));
      },
      py::arg("events_jsonl"), py::arg("gateways"));

  m.def("rerank_score", &agents::rerank_score, py::arg("cos_it"), py::arg("cos_iq"),
        py::arg("alpha"));
  m.def(
      "cosine",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return cosine(to_embedding(a), to_embedding(b));
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "info_diversity",
      [](const std::vector<std::vector<double>>& vs) {
        std::vector<Embedding> e;
        for (const auto& v : vs) e.push_back(to_embedding(v));
        return eval::info_diversity(e);
      },
      py::arg("vectors"));

  m.def(
      "next_actor_json",
      [](const std::string& snapshot_like) {
        // Minimal state: {"history": [...], "config": {...}, "pending": str|null,
        // "warmup_queue": [...], "steady_start": n, "cursor": n, "n_personas": n}
        auto j = Json::parse(snapshot_like);
        SessionState st;
        if (j.contains("config")) st.config = config_from_json(j["config"]);
        for (const auto& u : j.value("history", Json::array())) st.history.push_back(utterance_from_json(u));
        if (j.contains("pending") && !j["pending"].is_null()) st.pending_user_text = j["pending"].get<std::string>();
        for (int i : j.value("warmup_queue", std::vector<int>{})) st.warmup_queue.push_back(i);
        st.phase = st.warmup_queue.empty() ? Phase::Steady : Phase::WarmUp;
        st.steady_start = j.value("steady_start", std::size_t{0});
        st.next_expert_cursor = j.value("cursor", std::size_t{0});
        auto a = next_actor(st);
        return Json{{"kind", std::string(to_string(a.actor.kind))},
                    {"persona_index", a.actor.persona_index},
                    {"warmup", a.warmup}}
            .dump();
      },
      py::arg("state_json"));

  m.def(
      "load_wildseek_json",
      [](const std::string& path) {
        Json out = Json::array();
        for (const auto& c : eval::load_wildseek(path))
          out.push_back({{"domain", c.domain}, {"topic", c.topic}, {"goal", c.goal}});
        return out.dump();
      },
      py::arg("path"));

  m.def(
      "run_budgeted_json",
      [](const std::string& pipeline, const std::string& topic, const std::string& goal, int budget,
         const Gateways& gw) {
        py::gil_scoped_release nogil;
        auto t = eval::run_budgeted(eval::parse_pipeline(pipeline), {"", topic, goal}, budget, gw);
        auto metrics = eval::measure(t, *gw.embed);
        Json events = Json::array();
        for (const auto& e : t.events) events.push_back(e.to_json());
        return Json{{"searches", t.searches},
                    {"turns", t.history.size()},
                    {"unique_cited_urls", metrics.unique_urls},
                    {"events", events},
                    {"report", t.report ? t.report->to_json() : Json(nullptr)}}
            .dump();
      },
      py::arg("pipeline"), py::arg("topic"), py::arg("goal"), py::arg("budget"), py::arg("gateways"));

  m.def(
      "insertion_benchmark_json",
      [](const std::string& tasks_path, const std::string& method, const Gateways& gw) {
        auto tasks = eval::load_insertion_tasks(tasks_path);
        auto rep = eval::insertion_benchmark(tasks, eval::parse_insert_method(method), gw);
        auto j = eval::to_json(rep);
        j["table"] = eval::accuracy_table(std::vector{rep});
        return j.dump();
      },
      py::arg("tasks_path"), py::arg("method"), py::arg("gateways"));

  m.def("template_ids", &prompts::template_ids);
  m.def(
      "template_text", [](const std::string& id) { return prompts::template_text(id); },
      py::arg("template_id"));
}
