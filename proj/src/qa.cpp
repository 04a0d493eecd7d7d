#include "facetforge/qa.hpp"

#include <algorithm>
#include <cctype>
#include <future>
#include <set>

#include "facetforge/error.hpp"

namespace facetforge {

namespace {

using json = nlohmann::json;

struct Word {
  std::string lower;
  std::size_t start;
  std::size_t end;
};

bool is_word_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || u >= 0x80 || c == '\'' || c == '-';
}

std::vector<Word> words_with_offsets(std::string_view text) {
  std::vector<Word> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_char(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_char(text[j])) ++j;
    out.push_back({to_lower(text.substr(i, j - i)), i, j});
    i = j;
  }
  return out;
}

bool is_terminal(std::string_view text, std::size_t i) {
  char c = text[i];
  if (c != '.' && c != '!' && c != '?') return false;
  return i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]));
}

// [start, end) of each sentence, terminator included.
std::vector<CharSpan> sentence_spans(std::string_view text) {
  std::vector<CharSpan> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (is_terminal(text, i)) {
      out.push_back({start, i + 1});
      start = i + 1;
    }
  }
  if (start < text.size()) out.push_back({start, text.size()});
  for (auto& s : out) {
    while (s.start < s.end && std::isspace(static_cast<unsigned char>(text[s.start]))) ++s.start;
  }
  std::erase_if(out, [](const CharSpan& s) { return s.start >= s.end; });
  return out;
}

std::string key(std::string_view w) { return fold_plural(to_lower(w)); }

std::vector<std::string> content_keys(std::string_view text, const Stoplist& stoplist) {
  std::vector<std::string> out;
  for (const auto& w : words_with_offsets(text)) {
    if (!stoplist.contains(w.lower)) out.push_back(key(w.lower));
  }
  return out;
}

std::string question_verb(std::string_view question, const Stoplist& stoplist) {
  auto keys = content_keys(question, stoplist);
  return keys.empty() ? std::string() : keys.back();
}

struct Candidate {
  CharSpan span;
  bool from_kb;
};

// Comma list starting right after a verb token ending at `pos`.
std::optional<CharSpan> comma_list(std::string_view ctx, std::size_t pos, const Stoplist& stoplist) {
  std::optional<CharSpan> list;
  bool first = true;
  while (pos < ctx.size()) {
    while (pos < ctx.size() && ctx[pos] == ' ') ++pos;
    std::vector<Word> item;
    std::size_t i = pos;
    while (i < ctx.size() && ctx[i] != ',' && !is_terminal(ctx, i) && ctx[i] != ';' &&
           ctx[i] != ':' && ctx[i] != '\n') {
      if (is_word_char(ctx[i])) {
        std::size_t j = i;
        while (j < ctx.size() && is_word_char(ctx[j])) ++j;
        item.push_back({to_lower(ctx.substr(i, j - i)), i, j});
        i = j;
      } else if (ctx[i] == ' ') {
        ++i;
      } else {
        break;
      }
    }
    if (first) {
      std::size_t lead = 0;
      while (lead < item.size() && stoplist.contains(item[lead].lower)) ++lead;
      item.erase(item.begin(), item.begin() + static_cast<std::ptrdiff_t>(lead));
    }
    if (item.empty() || item.size() > 4) break;
    const bool closing = !first && (item.front().lower == "and" || item.front().lower == "or");
    if (closing && item.size() == 1) break;
    if (!list) list = CharSpan{item.front().start, item.back().end};
    list->end = item.back().end;
    first = false;
    if (closing) break;
    pos = item.back().end;
    if (pos < ctx.size() && ctx[pos] == ',') {
      ++pos;
    } else {
      break;
    }
  }
  return list;
}

}  // namespace

std::string_view to_string(QASetup setup) {
  switch (setup) {
    case QASetup::masked_prediction: return "masked_prediction";
    case QASetup::free_generation: return "free_generation";
    case QASetup::guided_generation: return "guided_generation";
    case QASetup::span_prediction: return "span_prediction";
  }
  return "masked_prediction";
}

std::optional<QASetup> parse_qa_setup(std::string_view name) {
  for (auto s : {QASetup::masked_prediction, QASetup::free_generation, QASetup::guided_generation,
                 QASetup::span_prediction}) {
    if (name == to_string(s)) return s;
  }
  if (name == "MP") return QASetup::masked_prediction;
  if (name == "FG") return QASetup::free_generation;
  if (name == "GG") return QASetup::guided_generation;
  if (name == "SP") return QASetup::span_prediction;
  return std::nullopt;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t n = 0;
  for (auto p = haystack.find(needle); p != std::string_view::npos;
       p = haystack.find(needle, p + needle.size())) {
    ++n;
  }
  return n;
}

Prompt build_prompt(QASetup setup, std::string_view question, std::string_view context,
                    const std::optional<std::string>& answer_prefix) {
  if (trim(question).empty()) throw InvalidArgument("question must be non-empty");
  Prompt p{setup, {}, std::string(question), std::string(context)};
  switch (setup) {
    case QASetup::masked_prediction:
      if (count_occurrences(question, kMaskToken) != 1) {
        throw InvalidArgument("masked question must contain [MASK] exactly once");
      }
      p.text = p.question;
      if (!context.empty()) p.text += " " + std::string(kSepToken) + " " + p.context;
      break;
    case QASetup::free_generation:
    case QASetup::guided_generation: {
      if (setup == QASetup::guided_generation && (!answer_prefix || trim(*answer_prefix).empty())) {
        throw InvalidArgument("guided generation needs an answer prefix");
      }
      if (!context.empty()) p.text = "C: " + p.context + "\n";
      p.text += "Q: " + p.question + "\nA:";
      if (setup == QASetup::guided_generation) p.text += " " + *answer_prefix;
      break;
    }
    case QASetup::span_prediction:
      break;
  }
  return p;
}

SpanAnswer lexical_span_baseline(std::string_view question, std::string_view context,
                                 const Stoplist& stoplist, const KnowledgeBase* kb,
                                 const Pluralizer* plurals) {
  if (context.empty()) throw InvalidArgument("span prediction needs a context");
  std::vector<Candidate> candidates;

  if (kb != nullptr) {
    Pluralizer fallback;
    const Pluralizer& pl = plurals != nullptr ? *plurals : fallback;
    for (const auto& a : kb->assertions()) {
      if (a.object.empty()) continue;
      Assertion bare = a;
      bare.object.clear();
      bare.facets.clear();
      std::string prefix = verbalize(bare, pl);
      prefix.back() = ' ';
      const std::string full = verbalize(a, pl);
      for (auto p = context.find(full); p != std::string_view::npos; p = context.find(full, p + 1)) {
        candidates.push_back({{p + prefix.size(), p + prefix.size() + a.object.size()}, true});
      }
    }
  }

  const std::string verb = question_verb(question, stoplist);
  if (!verb.empty()) {
    for (const auto& w : words_with_offsets(context)) {
      if (key(w.lower) != verb) continue;
      if (auto span = comma_list(context, w.end, stoplist)) candidates.push_back({*span, false});
    }
  }
  if (candidates.empty()) return {};

  auto q = content_keys(question, stoplist);
  std::set<std::string> qset(q.begin(), q.end());
  const auto sentences = sentence_spans(context);
  auto score = [&](const CharSpan& span) {
    for (const auto& s : sentences) {
      if (span.start >= s.start && span.start < s.end) {
        auto keys = content_keys(context.substr(s.start, s.end - s.start), stoplist);
        std::set<std::string> kset(keys.begin(), keys.end());
        std::size_t n = 0;
        for (const auto& k : qset) n += kset.count(k);
        return n;
      }
    }
    return std::size_t{0};
  };

  const Candidate* best = nullptr;
  std::size_t best_score = 0;
  for (const auto& c : candidates) {
    std::size_t s = score(c.span);
    bool better = best == nullptr || s > best_score ||
                  (s == best_score && (c.span.start < best->span.start ||
                                       (c.span.start == best->span.start && c.from_kb && !best->from_kb)));
    if (better) {
      best = &c;
      best_score = s;
    }
  }
  SpanAnswer out;
  out.found = true;
  out.start = best->span.start;
  out.end = best->span.end;
  out.answer = std::string(context.substr(out.start, out.end - out.start));
  out.confidence = qset.empty() ? 0.0 : static_cast<double>(best_score) / static_cast<double>(qset.size());
  return out;
}

std::vector<ModelAnswer> MockModelClient::complete(const Prompt& prompt, int num_answers) const {
  switch (prompt.setup) {
    case QASetup::masked_prediction: {
      auto mask = prompt.question.find(kMaskToken);
      std::string verb = question_verb(std::string_view(prompt.question).substr(0, mask), stoplist_);
      std::vector<ModelAnswer> out;
      std::set<std::string> seen;
      auto words = words_with_offsets(prompt.context);
      for (std::size_t i = 0; i < words.size() && !verb.empty(); ++i) {
        if (key(words[i].lower) != verb) continue;
        for (std::size_t j = i + 1; j < words.size(); ++j) {
          if (stoplist_.contains(words[j].lower)) continue;
          if (seen.insert(words[j].lower).second) {
            out.push_back({words[j].lower, 1.0 / static_cast<double>(out.size() + 1), std::nullopt});
          }
          break;
        }
        if (static_cast<int>(out.size()) >= num_answers) break;
      }
      if (out.empty()) out.push_back({"unknown", 0.0, std::nullopt});
      return out;
    }
    case QASetup::free_generation:
    case QASetup::guided_generation: {
      auto sentences = sentence_spans(prompt.context);
      if (sentences.empty()) return {{"I don't know.", std::nullopt, std::nullopt}};
      const auto& s = sentences.front();
      return {{prompt.context.substr(s.start, s.end - s.start), std::nullopt, std::nullopt}};
    }
    case QASetup::span_prediction: {
      if (prompt.context.empty()) return {{"", 0.0, std::nullopt}};
      auto span = lexical_span_baseline(prompt.question, prompt.context, stoplist_);
      if (!span.found) return {{"", 0.0, std::nullopt}};
      return {{span.answer, span.confidence, CharSpan{span.start, span.end}}};
    }
  }
  return {};
}

std::string ContextSource::label() const {
  switch (kind) {
    case SourceKind::no_context: return "no_context";
    case SourceKind::kb: return "kb:" + value;
    case SourceKind::custom: return "custom:" + value;
  }
  return "no_context";
}

ContextSource parse_context_source(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "no_context") return {SourceKind::no_context, {}};
    if (s.starts_with("kb:") && s.size() > 3) return {SourceKind::kb, s.substr(3)};
    if (s.starts_with("custom:")) return {SourceKind::custom, s.substr(7)};
    throw InvalidArgument("unrecognized source '" + s + "'");
  }
  if (j.is_object()) {
    const auto type = j.value("type", std::string());
    if (type == "no_context") return {SourceKind::no_context, {}};
    if (type == "kb" && j.contains("name") && j["name"].is_string()) {
      return {SourceKind::kb, j["name"].get<std::string>()};
    }
    if (type == "custom" && j.contains("text") && j["text"].is_string()) {
      return {SourceKind::custom, j["text"].get<std::string>()};
    }
  }
  throw InvalidArgument("source must be \"no_context\", \"kb:<name>\" or \"custom:<text>\"");
}

QARequest parse_qa_request(const json& j) {
  if (!j.is_object()) throw InvalidArgument("request body must be a JSON object");
  QARequest r;
  auto setup = j.find("setup");
  if (setup == j.end() || !setup->is_string()) throw InvalidArgument("missing 'setup'");
  auto parsed = parse_qa_setup(setup->get<std::string>());
  if (!parsed) throw InvalidArgument("unknown setup '" + setup->get<std::string>() + "'");
  r.setup = *parsed;

  auto q = j.find("question");
  if (q == j.end() || !q->is_string()) throw InvalidArgument("missing 'question'");
  r.question = q->get<std::string>();

  if (auto p = j.find("answer_prefix"); p != j.end() && !p->is_null()) {
    if (!p->is_string()) throw InvalidArgument("'answer_prefix' must be a string");
    r.answer_prefix = p->get<std::string>();
  }
  if (auto k = j.find("k"); k != j.end()) {
    if (!k->is_number_integer() || k->get<long long>() < 1) {
      throw InvalidArgument("'k' must be a positive integer");
    }
    r.k = k->get<std::size_t>();
  }
  auto m = j.find("retrieval_method");
  if (m == j.end()) m = j.find("method");
  if (m != j.end()) {
    auto method = m->is_string() ? parse_retrieval_method(m->get<std::string>()) : std::nullopt;
    if (!method) throw InvalidArgument("retrieval method must be 'overlap' or 'tfidf'");
    r.method = *method;
  }
  if (auto n = j.find("num_answers"); n != j.end()) {
    if (!n->is_number_integer() || n->get<long long>() < 1 || n->get<long long>() > 100) {
      throw InvalidArgument("'num_answers' must be an integer in [1,100]");
    }
    r.num_answers = n->get<int>();
  }
  auto sources = j.find("sources");
  if (sources == j.end()) {
    r.sources.push_back({SourceKind::no_context, {}});
  } else {
    if (!sources->is_array()) throw InvalidArgument("'sources' must be an array");
    for (const auto& s : *sources) r.sources.push_back(parse_context_source(s));
  }
  return r;
}

void KbRegistry::add(std::string name, KnowledgeBase kb) {
  if (name.empty()) throw InvalidArgument("KB name must be non-empty");
  if (entries_.contains(name)) throw InvalidArgument("duplicate KB name '" + name + "'");
  Entry e;
  e.kb = std::make_unique<KnowledgeBase>(std::move(kb));
  e.index = std::make_unique<RetrievalIndex>(*e.kb, stoplist_, plurals_);
  order_.push_back(name);
  entries_.emplace(std::move(name), std::move(e));
}

const KnowledgeBase* KbRegistry::find(std::string_view name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : it->second.kb.get();
}

const RetrievalIndex* KbRegistry::index(std::string_view name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : it->second.index.get();
}

const KnowledgeBase& KbRegistry::default_kb() const {
  return *entries_.find(default_name())->second.kb;
}

const std::string& KbRegistry::default_name() const {
  if (order_.empty()) throw NotFoundError("no knowledge base loaded");
  return order_.front();
}

void validate_request(const QARequest& r, const KbRegistry& registry) {
  if (trim(r.question).empty()) throw InvalidArgument("question must be non-empty");
  if (r.setup == QASetup::masked_prediction && count_occurrences(r.question, kMaskToken) != 1) {
    throw InvalidArgument("masked question must contain [MASK] exactly once");
  }
  if (r.setup == QASetup::guided_generation && (!r.answer_prefix || trim(*r.answer_prefix).empty())) {
    throw InvalidArgument("guided generation needs an answer prefix");
  }
  if (r.sources.empty()) throw InvalidArgument("at least one source is required");
  if (r.k < 1) throw InvalidArgument("k must be at least 1");
  if (r.num_answers < 1) throw InvalidArgument("num_answers must be at least 1");
  for (const auto& s : r.sources) {
    if (s.kind == SourceKind::no_context && r.setup == QASetup::span_prediction) {
      throw InvalidArgument("span prediction is not available without context");
    }
    if (s.kind == SourceKind::kb && registry.find(s.value) == nullptr) {
      throw InvalidArgument("unknown KB '" + s.value + "'");
    }
  }
}

QAResult answer(const QARequest& request, const KbRegistry& registry, const ModelClient& client) {
  validate_request(request, registry);

  auto run_row = [&](const ContextSource& source) {
    QARow row;
    row.source = source.label();
    if (source.kind == SourceKind::kb) {
      auto snippet = retrieve(request.question, *registry.index(source.value), request.k,
                              request.method, source.value);
      row.context = snippet.text();
      row.assertion_ids = std::move(snippet.assertion_ids);
    } else if (source.kind == SourceKind::custom) {
      row.context = source.value;
    }
    try {
      Prompt prompt = build_prompt(request.setup, request.question, row.context, request.answer_prefix);
      row.answers = client.complete(prompt, request.num_answers);
      if (request.setup == QASetup::span_prediction && !row.answers.empty()) {
        row.span = row.answers.front().span;
      }
    } catch (const InvalidArgument& e) {
      row.error = RowError{422, "invalid_request", e.what()};
    } catch (const std::exception& e) {
      row.error = RowError{502, "model_error", e.what()};
    }
    return row;
  };

  std::vector<std::future<QARow>> pending;
  pending.reserve(request.sources.size());
  for (const auto& s : request.sources) pending.push_back(std::async(std::launch::async, run_row, s));

  QAResult result;
  result.setup = request.setup;
  result.question = request.question;
  for (auto& f : pending) result.rows.push_back(f.get());
  return result;
}

ojson to_json(const QAResult& result) {
  ojson rows = ojson::array();
  for (const auto& row : result.rows) {
    ojson answers = ojson::array();
    for (const auto& a : row.answers) {
      ojson item = {{"text", a.text}};
      if (a.confidence) item["confidence"] = *a.confidence;
      answers.push_back(std::move(item));
    }
    ojson r = {{"source", row.source},
               {"context", row.context},
               {"assertion_ids", row.assertion_ids},
               {"answers", answers}};
    if (row.span) r["span"] = {{"start", row.span->start}, {"end", row.span->end}};
    if (row.error) {
      r["error"] = {{"status", row.error->status}, {"code", row.error->code}, {"message", row.error->message}};
    }
    rows.push_back(std::move(r));
  }
  return {{"setup", to_string(result.setup)}, {"question", result.question}, {"rows", rows}};
}

}  // namespace facetforge
