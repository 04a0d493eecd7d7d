#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "facetforge/error.hpp"
#include "facetforge/model_client.hpp"
#include "facetforge/pipeline.hpp"
#include "facetforge/qa.hpp"
#include "facetforge/server.hpp"

namespace fs = std::filesystem;
using namespace facetforge;

namespace {

struct Common {
  std::string data_dir;
  std::string config_path;
  std::string embeddings_path;
};

Resources load_resources(const Common& c) {
  return Resources::load(c.data_dir.empty() ? default_data_dir() : fs::path(c.data_dir));
}

PipelineConfig load_config(const Common& c) {
  PipelineConfig cfg = c.config_path.empty() ? PipelineConfig{} : PipelineConfig::load(c.config_path);
  if (!c.embeddings_path.empty()) cfg.embeddings_path = c.embeddings_path;
  return cfg;
}

EmbeddingTable load_table(const PipelineConfig& cfg) {
  if (cfg.embeddings_path.empty()) {
    std::cerr << "warning: no embeddings configured; subgroups and clusters stay singletons\n";
    return {};
  }
  return load_embeddings(fs::path(cfg.embeddings_path));
}

// "name=path" or a bare path named after its stem.
std::pair<std::string, fs::path> kb_arg(const std::string& arg) {
  auto eq = arg.find('=');
  if (eq != std::string::npos) return {arg.substr(0, eq), arg.substr(eq + 1)};
  return {fs::path(arg).stem().string(), arg};
}

std::unique_ptr<ModelClient> make_client(const std::string& endpoint, const Stoplist& stoplist) {
  if (endpoint.empty()) return std::make_unique<MockModelClient>(stoplist);
  return std::make_unique<HttpModelClient>(endpoint);
}

std::vector<SubjectExtraction> extract_dirs(const std::vector<std::string>& dirs, const Resources& res,
                                            const PipelineConfig& cfg, const EmbeddingTable& table,
                                            const std::string& facet_endpoint) {
  std::unique_ptr<FacetClassifier> classifier;
  if (facet_endpoint.empty()) {
    classifier = std::make_unique<LexiconFacetClassifier>(res.lexicon);
  } else {
    classifier = std::make_unique<HttpFacetClassifier>(facet_endpoint);
  }
  std::vector<SubjectExtraction> out;
  for (const auto& d : dirs) {
    auto ingest = ingest_subject_dir(d, res.stoplist, res.templates, cfg.filter);
    out.push_back(extract_subject(ingest, res, *classifier, table, cfg.subgroups));
    const auto& st = out.back().profile.stats;
    std::cerr << out.back().profile.name << ": " << st.websites_retained << " documents, "
              << st.sentences << " sentences, " << st.raw_assertions << " raw assertions\n";
  }
  return out;
}

KnowledgeBase consolidate_all(std::vector<SubjectExtraction> subjects, const Resources& res,
                              const PipelineConfig& cfg, const EmbeddingTable& table,
                              const std::string& scorer_endpoint) {
  std::unique_ptr<PairScorer> scorer;
  if (scorer_endpoint.empty()) {
    scorer = std::make_unique<EmbeddingPairScorer>(table);
  } else {
    scorer = std::make_unique<HttpPairScorer>(scorer_endpoint);
  }
  return build_kb(std::move(subjects), *scorer, res, cfg.consolidation, cfg.prefilter ? &table : nullptr);
}

std::atomic<HttpServer*> g_server{nullptr};

void on_signal(int) {
  if (HttpServer* s = g_server.load()) s->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"facetforge: faceted commonsense knowledge extraction and serving"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--data-dir", common.data_dir, "Directory with stoplist, lexicon, plurals, templates");
  app.add_option("--config", common.config_path, "JSON config file");
  app.add_option("--embeddings", common.embeddings_path, "Word vector file (overrides embeddings.path)");

  std::string subject_dir;
  auto* ingest = app.add_subcommand("ingest", "Rank and filter one subject's documents");
  ingest->add_option("--subject-dir", subject_dir, "Subject directory")->required()->check(CLI::ExistingDirectory);

  std::vector<std::string> extract_dirs_arg;
  std::string extract_out, facet_endpoint;
  auto* extract = app.add_subcommand("extract", "Extract raw faceted assertions");
  extract->add_option("--subject-dir", extract_dirs_arg, "Subject directory (repeatable)")->required();
  extract->add_option("--out", extract_out, "raw.jsonl to write")->required();
  extract->add_option("--facet-endpoint", facet_endpoint, "HTTP facet classifier");

  std::string cons_in, cons_out, scorer_endpoint, linkage_name;
  double tau_fast = -1, theta_cut = -1;
  bool no_prefilter = false;
  auto* consolidate = app.add_subcommand("consolidate", "Cluster raw assertions into a KB dump");
  consolidate->add_option("--in", cons_in, "raw.jsonl")->required()->check(CLI::ExistingFile);
  consolidate->add_option("--out", cons_out, "kb.jsonl to write")->required();
  consolidate->add_option("--tau-fast", tau_fast, "Candidate cosine threshold");
  consolidate->add_option("--theta-cut", theta_cut, "HAC distance cut");
  consolidate->add_option("--linkage", linkage_name, "single | complete | average");
  consolidate->add_flag("--no-prefilter", no_prefilter, "Score every pair");
  consolidate->add_option("--scorer-endpoint", scorer_endpoint, "HTTP triple similarity scorer");

  std::string build_corpus, build_out;
  auto* build = app.add_subcommand("build", "ingest + extract + consolidate every subject under a corpus root");
  build->add_option("--corpus", build_corpus, "Corpus root")->required()->check(CLI::ExistingDirectory);
  build->add_option("--out", build_out, "kb.jsonl to write")->required();

  std::string ret_kb, question, method_name = "tfidf";
  std::size_t k = 5;
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Retrieve priming context for a question");
  retrieve_cmd->add_option("--kb", ret_kb, "KB dump")->required()->check(CLI::ExistingFile);
  retrieve_cmd->add_option("--q", question, "Question")->required();
  retrieve_cmd->add_option("-k", k, "Number of assertions")->check(CLI::PositiveNumber);
  retrieve_cmd->add_option("--method", method_name, "overlap | tfidf");

  std::vector<std::string> serve_kbs;
  std::string host = "0.0.0.0", model_endpoint, cors = "*";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve the KB API");
  serve->add_option("--kb", serve_kbs, "KB dump, optionally name=path (repeatable)")->required();
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (env FACETFORGE_PORT overrides)");
  serve->add_option("--model-endpoint", model_endpoint, "Model endpoint (env FACETFORGE_MODEL_ENDPOINT overrides)");
  serve->add_option("--cors-origin", cors, "Access-Control-Allow-Origin value");

  std::vector<std::string> qa_kbs, qa_sources;
  std::string qa_setup = "masked_prediction", qa_prefix;
  int num_answers = 1;
  auto* qa_cmd = app.add_subcommand("qa", "Run one QA request");
  qa_cmd->add_option("--kb", qa_kbs, "KB dump, optionally name=path (repeatable)");
  qa_cmd->add_option("--setup", qa_setup, "masked_prediction | free_generation | guided_generation | span_prediction");
  qa_cmd->add_option("--q", question, "Question")->required();
  qa_cmd->add_option("--prefix", qa_prefix, "Answer prefix for guided generation");
  qa_cmd->add_option("--source", qa_sources, "no_context | kb:<name> | custom:<text> (repeatable)");
  qa_cmd->add_option("-k", k, "Assertions per KB");
  qa_cmd->add_option("--method", method_name, "overlap | tfidf");
  qa_cmd->add_option("--num-answers", num_answers, "Answers per row");
  qa_cmd->add_option("--model-endpoint", model_endpoint, "Model endpoint");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      Resources res = load_resources(common);
      PipelineConfig cfg = load_config(common);
      auto r = ingest_subject_dir(subject_dir, res.stoplist, res.templates, cfg.filter);
      ojson retained = ojson::array();
      for (const auto& d : r.retained) {
        retained.push_back({{"doc_id", d.doc.doc_id}, {"url", d.doc.url}, {"score", d.score}});
      }
      ojson out = {{"subject", r.meta.subject},
                   {"queries", r.queries},
                   {"documents_seen", r.documents_seen},
                   {"retained", retained}};
      std::cout << out.dump(2) << '\n';
    } else if (*extract) {
      Resources res = load_resources(common);
      PipelineConfig cfg = load_config(common);
      EmbeddingTable table = load_table(cfg);
      auto subjects = extract_dirs(extract_dirs_arg, res, cfg, table, facet_endpoint);
      std::ofstream out(extract_out, std::ios::binary);
      if (!out) throw Error("cannot write " + extract_out);
      write_raw_jsonl(subjects, out);
    } else if (*consolidate) {
      Resources res = load_resources(common);
      PipelineConfig cfg = load_config(common);
      if (tau_fast >= 0) cfg.consolidation.tau_fast = tau_fast;
      if (theta_cut >= 0) cfg.consolidation.theta_cut = theta_cut;
      if (!linkage_name.empty()) {
        auto l = parse_linkage(linkage_name);
        if (!l) throw InvalidArgument("unknown linkage '" + linkage_name + "'");
        cfg.consolidation.linkage = *l;
      }
      if (no_prefilter) cfg.prefilter = false;
      EmbeddingTable table = load_table(cfg);
      std::ifstream in(cons_in, std::ios::binary);
      KnowledgeBase kb = consolidate_all(read_raw_jsonl(in), res, cfg, table, scorer_endpoint);
      export_jsonl(kb, fs::path(cons_out));
      std::cerr << kb.concepts().size() << " concepts, " << kb.size() << " assertions\n";
    } else if (*build) {
      Resources res = load_resources(common);
      PipelineConfig cfg = load_config(common);
      EmbeddingTable table = load_table(cfg);
      std::vector<std::string> dirs;
      for (const auto& d : subject_dirs(build_corpus)) dirs.push_back(d.string());
      KnowledgeBase kb = consolidate_all(extract_dirs(dirs, res, cfg, table, {}), res, cfg, table, {});
      export_jsonl(kb, fs::path(build_out));
      std::cerr << kb.concepts().size() << " concepts, " << kb.size() << " assertions\n";
    } else if (*retrieve_cmd) {
      Resources res = load_resources(common);
      auto method = parse_retrieval_method(method_name);
      if (!method) throw InvalidArgument("unknown method '" + method_name + "'");
      KnowledgeBase kb = import_jsonl(fs::path(ret_kb));
      RetrievalIndex index(kb, res.stoplist, res.plurals);
      auto snippet = retrieve(question, index, k, *method, fs::path(ret_kb).stem().string());
      for (std::size_t i = 0; i < snippet.sentences.size(); ++i) {
        std::cout << snippet.assertion_ids[i] << '\t' << snippet.sentences[i] << '\n';
      }
    } else if (*serve) {
      if (const char* p = std::getenv("FACETFORGE_PORT"); p != nullptr && *p != '\0') port = std::stoi(p);
      if (const char* e = std::getenv("FACETFORGE_MODEL_ENDPOINT"); e != nullptr && *e != '\0') {
        model_endpoint = e;
      }
      Resources res = load_resources(common);
      KbRegistry registry(res.stoplist, res.plurals);
      for (const auto& arg : serve_kbs) {
        auto [name, path] = kb_arg(arg);
        registry.add(name, import_jsonl(path));
      }
      auto client = make_client(model_endpoint, res.stoplist);
      ApiService api(registry, *client);
      HttpServer server(api, cors);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving " << registry.names().size() << " KB(s) on " << host << ":" << port
                << (model_endpoint.empty() ? " with the mock model\n" : " with model " + model_endpoint + "\n");
      if (!server.listen(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
      g_server = nullptr;
    } else if (*qa_cmd) {
      Resources res = load_resources(common);
      KbRegistry registry(res.stoplist, res.plurals);
      for (const auto& arg : qa_kbs) {
        auto [name, path] = kb_arg(arg);
        registry.add(name, import_jsonl(path));
      }
      nlohmann::json body = {{"setup", qa_setup}, {"question", question}, {"k", k},
                             {"retrieval_method", method_name}, {"num_answers", num_answers}};
      if (!qa_prefix.empty()) body["answer_prefix"] = qa_prefix;
      if (qa_sources.empty()) {
        for (const auto& n : registry.names()) qa_sources.push_back("kb:" + n);
        if (qa_sources.empty()) qa_sources.push_back("no_context");
      }
      body["sources"] = qa_sources;
      auto client = make_client(model_endpoint, res.stoplist);
      std::cout << to_json(answer(parse_qa_request(body), registry, *client)).dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
