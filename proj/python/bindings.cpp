#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "facetforge/consolidation.hpp"
#include "facetforge/error.hpp"
#include "facetforge/hac.hpp"
#include "facetforge/pipeline.hpp"
#include "facetforge/server.hpp"

namespace py = pybind11;
using namespace facetforge;

namespace {

Linkage linkage_arg(const std::string& name) {
  auto l = parse_linkage(name);
  if (!l) throw InvalidArgument("unknown linkage: " + name);
  return *l;
}

QASetup setup_arg(const std::string& name) {
  auto s = parse_qa_setup(name);
  if (!s) throw InvalidArgument("unknown setup: " + name);
  return *s;
}

std::string dump(const KnowledgeBase& kb) {
  std::ostringstream out;
  export_jsonl(kb, out);
  return out.str();
}

KnowledgeBase parse_dump(const std::string& text) {
  std::istringstream in(text);
  return import_jsonl(in);
}

// Resources, KBs and the mock model behind one object, so Python sees the
// same responses the HTTP server would send.
class Service {
 public:
  Service(const std::string& data_dir, const std::vector<std::pair<std::string, std::string>>& kbs)
      : res_(Resources::load(data_dir.empty() ? default_data_dir() : std::filesystem::path(data_dir))),
        registry_(res_.stoplist, res_.plurals),
        mock_(res_.stoplist),
        api_(registry_, mock_) {
    for (const auto& [name, path] : kbs) registry_.add(name, import_jsonl(std::filesystem::path(path)));
  }

  using Reply = std::pair<int, std::string>;
  static Reply wrap(const ApiResponse& r) { return {r.status, r.body.dump()}; }

  Reply concept_page(const std::string& name, const std::string& kb) const {
    return wrap(api_.concept_page(name, kb));
  }
  Reply assertion(const std::string& id, const std::string& kb) const { return wrap(api_.assertion(id, kb)); }
  Reply search(const std::string& s, const std::string& p, const std::string& o, const std::string& kb) const {
    return wrap(api_.search({s, p, o}, kb));
  }
  Reply autocomplete(const std::string& prefix, const std::string& kb) const {
    return wrap(api_.autocomplete(prefix, kb));
  }
  Reply kbs() const { return wrap(api_.kbs()); }
  Reply qa(const std::string& body) const { return wrap(api_.qa(body)); }

  std::vector<std::pair<std::string, std::string>> retrieve(const std::string& question, std::size_t k,
                                                            const std::string& method,
                                                            const std::string& kb) const {
    auto m = parse_retrieval_method(method);
    if (!m) throw InvalidArgument("unknown retrieval method: " + method);
    const std::string& name = kb.empty() ? registry_.default_name() : kb;
    const RetrievalIndex* index = registry_.index(name);
    if (index == nullptr) throw NotFoundError("no KB named " + name);
    auto snippet = facetforge::retrieve(question, *index, k, *m, name);
    std::vector<std::pair<std::string, std::string>> out;
    for (std::size_t i = 0; i < snippet.sentences.size(); ++i) {
      out.emplace_back(snippet.assertion_ids[i], snippet.sentences[i]);
    }
    return out;
  }

  py::tuple span(const std::string& question, const std::string& context, const std::string& kb) const {
    const KnowledgeBase* base = kb.empty() ? nullptr : registry_.find(kb);
    if (!kb.empty() && base == nullptr) throw NotFoundError("no KB named " + kb);
    auto a = lexical_span_baseline(question, context, res_.stoplist, base, &res_.plurals);
    if (!a.found) return py::make_tuple(py::none(), 0, 0);
    return py::make_tuple(a.answer, a.start, a.end);
  }

  std::string verbalize(const std::string& id, const std::string& kb) const {
    const KnowledgeBase* base = kb.empty() ? &registry_.default_kb() : registry_.find(kb);
    if (base == nullptr) throw NotFoundError("no KB named " + kb);
    return facetforge::verbalize(base->get_assertion(id), res_.plurals);
  }

 private:
  Resources res_;
  KbRegistry registry_;
  MockModelClient mock_;
  ApiService api_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "facetforge native core";

  auto error = py::register_exception<Error>(m, "Error");
  auto parse_error = py::register_exception<ParseError>(m, "ParseError", error);
  py::register_exception<SpanError>(m, "SpanError", parse_error);
  py::register_exception<NotFoundError>(m, "NotFoundError", error);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", error);
  py::register_exception<ModelError>(m, "ModelError", error);

  m.def("default_data_dir", [] { return default_data_dir().string(); });

  m.def("normalize_dump", [](const std::string& text) { return dump(parse_dump(text)); },
        "Parse a JSONL dump and write it back in canonical form.");
  m.def("dump_equal", [](const std::string& a, const std::string& b) { return parse_dump(a) == parse_dump(b); });

  m.def(
      "hac",
      [](const std::vector<std::vector<double>>& d, const std::string& linkage, double theta) {
        DistanceMatrix dm(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
          if (d[i].size() != d.size()) throw InvalidArgument("distance matrix must be square");
          for (std::size_t j = i + 1; j < d.size(); ++j) {
            if (d[i][j] != kInfiniteDistance) dm.set(i, j, d[i][j]);
          }
        }
        return hac(dm, linkage_arg(linkage), theta);
      },
      py::arg("distances"), py::arg("linkage") = "average", py::arg("theta_cut") = 0.35);

  m.def(
      "cluster",
      [](const std::vector<std::tuple<std::string, std::string, std::string, int>>& triples,
         const std::function<double(py::tuple, py::tuple)>& scorer, const std::string& linkage,
         double theta) {
        std::vector<WeightedTriple> items;
        for (const auto& [s, p, o, f] : triples) items.push_back({{s, p, o}, f});
        FunctionPairScorer fn([&](const Triple& a, const Triple& b) {
          return scorer(py::make_tuple(a.subject, a.predicate, a.object),
                        py::make_tuple(b.subject, b.predicate, b.object));
        });
        ConsolidationConfig config;
        config.linkage = linkage_arg(linkage);
        config.theta_cut = theta;
        py::list out;
        for (const auto& c : cluster_triples(items, fn, config)) {
          py::list members;
          for (const auto& w : c.members) {
            members.append(py::make_tuple(w.triple.subject, w.triple.predicate, w.triple.object, w.frequency));
          }
          py::dict d;
          d["representative"] = py::make_tuple(c.representative.subject, c.representative.predicate,
                                               c.representative.object);
          d["frequency"] = c.frequency;
          d["members"] = members;
          out.append(d);
        }
        return out;
      },
      py::arg("triples"), py::arg("scorer"), py::arg("linkage") = "average", py::arg("theta_cut") = 0.35);

  m.def(
      "build_prompt",
      [](const std::string& setup, const std::string& question, const std::string& context,
         std::optional<std::string> prefix) {
        return build_prompt(setup_arg(setup), question, context, prefix).text;
      },
      py::arg("setup"), py::arg("question"), py::arg("context") = "", py::arg("prefix") = py::none());

  py::class_<Service>(m, "Service")
      .def(py::init<const std::string&, const std::vector<std::pair<std::string, std::string>>&>(),
           py::arg("data_dir"), py::arg("kbs"))
      .def("concept", &Service::concept_page, py::arg("name"), py::arg("kb") = "")
      .def("assertion", &Service::assertion, py::arg("id"), py::arg("kb") = "")
      .def("search", &Service::search, py::arg("s") = "", py::arg("p") = "", py::arg("o") = "",
           py::arg("kb") = "")
      .def("autocomplete", &Service::autocomplete, py::arg("prefix"), py::arg("kb") = "")
      .def("kbs", &Service::kbs)
      .def("qa", &Service::qa, py::arg("body"))
      .def("retrieve", &Service::retrieve, py::arg("question"), py::arg("k") = 5, py::arg("method") = "tfidf",
           py::arg("kb") = "")
      .def("span", &Service::span, py::arg("question"), py::arg("context"), py::arg("kb") = "")
      .def("verbalize", &Service::verbalize, py::arg("id"), py::arg("kb") = "");
}
