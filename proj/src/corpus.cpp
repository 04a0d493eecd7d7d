#include "facetforge/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "facetforge/error.hpp"

namespace facetforge {

namespace {

bool parse_int(std::string_view s, int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// Value of a "# key = value" comment, or npos-empty when the key differs.
bool comment_value(std::string_view line, std::string_view key, std::string& out) {
  std::string_view body = trim(line.substr(1));
  if (!starts_with(body, key)) return false;
  body = trim(body.substr(key.size()));
  if (body.empty() || body.front() != '=') return false;
  out = std::string(trim(body.substr(1)));
  return true;
}

struct PendingToken {
  ParsedToken token;
  bool space_after = true;
};

class SentenceBuilder {
 public:
  SentenceBuilder(const std::string& doc_id) : doc_id_(doc_id) {}

  bool empty() const { return tokens_.empty(); }

  void set_text(std::string text) { text_ = std::move(text); has_text_ = true; }
  void set_sent_id(std::string id) { sent_id_ = std::move(id); }

  void add(PendingToken tok, std::size_t line) {
    if (tokens_.empty()) first_line_ = line;
    tokens_.push_back(std::move(tok));
  }

  ParsedSentence finish(std::size_t ordinal) {
    ParsedSentence s;
    s.doc_id = doc_id_;
    s.sent_id = sent_id_.empty() ? std::to_string(ordinal) : sent_id_;

    const int n = static_cast<int>(tokens_.size());
    int roots = 0;
    for (int i = 0; i < n; ++i) {
      const auto& t = tokens_[i].token;
      if (t.index != i + 1) {
        throw ParseError("token ids must be contiguous from 1, found " +
                             std::to_string(t.index),
                         first_line_ + i);
      }
      if (t.head < 0 || t.head > n) {
        throw ParseError("head " + std::to_string(t.head) + " out of range", first_line_ + i);
      }
      if (t.head == 0) ++roots;
    }
    if (roots != 1) {
      throw ParseError("sentence must have exactly one root, found " + std::to_string(roots),
                       first_line_);
    }

    if (has_text_) {
      s.text = text_;
    } else {
      for (const auto& p : tokens_) {
        s.text += p.token.surface;
        if (p.space_after) s.text += ' ';
      }
      while (!s.text.empty() && s.text.back() == ' ') s.text.pop_back();
    }

    std::size_t cursor = 0;
    for (int i = 0; i < n; ++i) {
      auto tok = tokens_[i].token;
      std::size_t pos = s.text.find(tok.surface, cursor);
      if (tok.surface.empty() || pos == std::string::npos) {
        throw SpanError("token '" + tok.surface + "' not found in sentence text",
                        first_line_ + i);
      }
      tok.char_start = pos;
      tok.char_end = pos + tok.surface.size();
      cursor = tok.char_end;
      s.tokens.push_back(std::move(tok));
    }

    tokens_.clear();
    text_.clear();
    sent_id_.clear();
    has_text_ = false;
    return s;
  }

 private:
  const std::string& doc_id_;
  std::vector<PendingToken> tokens_;
  std::string text_;
  std::string sent_id_;
  bool has_text_ = false;
  std::size_t first_line_ = 0;
};

}  // namespace

const ParsedToken* ParsedSentence::root() const {
  for (const auto& t : tokens) {
    if (t.head == 0) return &t;
  }
  return nullptr;
}

std::vector<int> ParsedSentence::children(int index) const {
  std::vector<int> out;
  for (const auto& t : tokens) {
    if (t.head == index) out.push_back(t.index);
  }
  return out;
}

std::string_view ParsedSentence::slice(CharSpan span) const {
  return std::string_view(text).substr(span.start, span.end - span.start);
}

ParsedDocument parse_conllu(std::istream& in, std::string doc_id, std::string url) {
  ParsedDocument doc;
  doc.doc_id = std::move(doc_id);
  doc.url = std::move(url);

  SentenceBuilder builder(doc.doc_id);
  std::set<std::string> seen_ids;
  std::size_t line_no = 0;
  std::string line;

  auto flush = [&] {
    if (builder.empty()) return;
    ParsedSentence s = builder.finish(doc.sentences.size() + 1);
    if (!seen_ids.insert(s.sent_id).second) {
      throw ParseError("duplicate sent_id '" + s.sent_id + "'", line_no);
    }
    doc.sentences.push_back(std::move(s));
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      flush();
      continue;
    }
    if (line.front() == '#') {
      std::string value;
      if (comment_value(line, "text", value)) {
        builder.set_text(value);
      } else if (comment_value(line, "sent_id", value)) {
        builder.set_sent_id(value);
      } else if (comment_value(line, "url", value) && doc.url.empty()) {
        doc.url = value;
      }
      continue;
    }

    auto cols = split(line, '\t');
    if (cols.size() != 10) {
      throw ParseError("expected 10 tab-separated columns, found " + std::to_string(cols.size()),
                       line_no);
    }
    if (cols[0].find_first_of("-.") != std::string::npos) continue;

    PendingToken p;
    if (!parse_int(cols[0], p.token.index)) {
      throw ParseError("bad token id '" + cols[0] + "'", line_no);
    }
    if (!parse_int(cols[6], p.token.head)) {
      throw ParseError("bad head '" + cols[6] + "'", line_no);
    }
    p.token.surface = cols[1];
    p.token.lemma = cols[2];
    p.token.upos = cols[3];
    p.token.deprel = cols[7];
    p.space_after = cols[9].find("SpaceAfter=No") == std::string::npos;
    builder.add(std::move(p), line_no);
  }
  flush();
  return doc;
}

ParsedDocument parse_conllu(std::string_view text, std::string doc_id, std::string url) {
  std::istringstream in{std::string(text)};
  return parse_conllu(in, std::move(doc_id), std::move(url));
}

ParsedDocument load_conllu_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return parse_conllu(in, path.stem().string(), "");
  } catch (const ParseError& e) {
    throw Error(path.filename().string() + ": " + e.what());
  }
}

std::string to_conllu(const ParsedDocument& doc) {
  std::ostringstream out;
  if (!doc.url.empty()) out << "# url = " << doc.url << "\n";
  for (const auto& s : doc.sentences) {
    out << "# sent_id = " << s.sent_id << "\n";
    out << "# text = " << s.text << "\n";
    for (const auto& t : s.tokens) {
      out << t.index << '\t' << t.surface << '\t' << t.lemma << '\t' << t.upos << "\t_\t_\t"
          << t.head << '\t' << t.deprel << "\t_\t_\n";
    }
    out << "\n";
  }
  return out.str();
}

BagOfWords bag_of_words(const ParsedDocument& doc, const Stoplist& stoplist) {
  BagOfWords bag;
  for (const auto& s : doc.sentences) {
    for (const auto& t : s.tokens) {
      if (!is_alpha_word(t.lemma)) continue;
      std::string lemma = to_lower(t.lemma);
      if (stoplist.contains(lemma)) continue;
      ++bag.counts[lemma];
    }
  }
  return bag;
}

double relevance_score(const BagOfWords& a, const BagOfWords& b) {
  if (a.empty() || b.empty()) return 0.0;
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (const auto& [w, c] : a.counts) {
    na += static_cast<double>(c) * c;
    auto it = b.counts.find(w);
    if (it != b.counts.end()) dot += static_cast<double>(c) * it->second;
  }
  for (const auto& [w, c] : b.counts) nb += static_cast<double>(c) * c;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

std::vector<RankedDocument> filter_documents(std::vector<ParsedDocument> docs,
                                             const BagOfWords& reference,
                                             const Stoplist& stoplist,
                                             const FilterPolicy& policy) {
  std::vector<RankedDocument> ranked;
  ranked.reserve(docs.size());
  for (auto& d : docs) {
    double score = relevance_score(bag_of_words(d, stoplist), reference);
    if (score >= policy.min_score) ranked.push_back({std::move(d), score});
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedDocument& a, const RankedDocument& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc.doc_id < b.doc.doc_id;
  });
  if (ranked.size() > policy.max_keep) ranked.resize(policy.max_keep);
  return ranked;
}

QueryTemplate::QueryTemplate(std::string hypernym_id, std::string text)
    : hypernym_id_(std::move(hypernym_id)), text_(std::move(text)) {
  auto first = text_.find(kSubjectSlot);
  if (first == std::string::npos ||
      text_.find(kSubjectSlot, first + kSubjectSlot.size()) != std::string::npos) {
    throw InvalidArgument("query template must contain " + std::string(kSubjectSlot) +
                          " exactly once: '" + text_ + "'");
  }
}

std::string QueryTemplate::render(std::string_view subject) const {
  std::string out = text_;
  out.replace(out.find(kSubjectSlot), kSubjectSlot.size(), subject);
  return out;
}

std::vector<QueryTemplate> load_query_templates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open query templates " + path.string());
  std::vector<QueryTemplate> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    auto cols = split(line, '\t');
    if (cols.size() != 2) throw ParseError("expected hypernym<TAB>template", line_no);
    out.emplace_back(std::string(trim(cols[0])), std::string(trim(cols[1])));
  }
  return out;
}

std::vector<std::string> build_search_queries(std::string_view subject,
                                              std::string_view hypernym_id,
                                              std::span<const QueryTemplate> templates) {
  std::vector<std::string> out;
  for (const auto& t : templates) {
    if (t.hypernym_id() == hypernym_id) out.push_back(t.render(subject));
  }
  if (out.empty()) out.push_back(std::string(subject) + " facts");
  return out;
}

SubjectMeta load_subject_meta(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  SubjectMeta m;
  m.subject = to_lower(j.at("subject").get<std::string>());
  if (m.subject.empty()) throw Error(path.string() + ": empty subject");
  m.synset_id = j.value("synset", "");
  m.hypernym_id = j.value("hypernym_id", "");
  m.wikipedia_title = j.value("wikipedia_title", "");
  m.image_url = j.value("image_url", "");
  m.alternative_lemmas = j.value("alternative_lemmas", std::vector<std::string>{});
  return m;
}

IngestResult ingest_subject_dir(const std::filesystem::path& dir, const Stoplist& stoplist,
                                std::span<const QueryTemplate> templates,
                                const FilterPolicy& policy) {
  namespace fs = std::filesystem;
  IngestResult result;
  result.meta = load_subject_meta(dir / "meta.json");
  result.queries = build_search_queries(result.meta.subject, result.meta.hypernym_id, templates);

  const fs::path reference_path = dir / "reference.conllu";
  if (fs::exists(reference_path)) {
    result.reference = bag_of_words(load_conllu_file(reference_path), stoplist);
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".conllu" && entry.path().filename() != "reference.conllu") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  std::vector<std::future<ParsedDocument>> pending;
  pending.reserve(files.size());
  for (const auto& f : files) {
    pending.push_back(std::async(std::launch::async, [f] {
      ParsedDocument d = load_conllu_file(f);
      if (d.url.empty()) d.url = "file://" + f.filename().string();
      return d;
    }));
  }
  std::vector<ParsedDocument> docs;
  docs.reserve(files.size());
  for (auto& p : pending) docs.push_back(p.get());

  result.documents_seen = docs.size();
  result.retained = filter_documents(std::move(docs), result.reference, stoplist, policy);
  return result;
}

}  // namespace facetforge
