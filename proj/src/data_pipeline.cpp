#include "bibleqa/data_pipeline.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bibleqa/errors.hpp"
#include "bibleqa/log.hpp"
#include "bibleqa/rng.hpp"

namespace bqa {

using ojson = nlohmann::ordered_json;

// ---- text ---------------------------------------------------------------------

namespace {

bool is_word_byte(unsigned char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80; }

// Curly single quotes become ASCII apostrophes.
std::string normalize_quotes(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (i + 2 < text.size() && static_cast<unsigned char>(text[i]) == 0xE2 &&
        static_cast<unsigned char>(text[i + 1]) == 0x80 &&
        (static_cast<unsigned char>(text[i + 2]) == 0x98 || static_cast<unsigned char>(text[i + 2]) == 0x99)) {
      out.push_back('\'');
      i += 2;
    } else {
      out.push_back(text[i]);
    }
  }
  return out;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

std::vector<std::string> tokenize(const std::string& raw) {
  const std::string text = normalize_quotes(raw);
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_word_byte(c)) {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
    } else if (c == '\'' && !cur.empty() && i + 1 < text.size() &&
               is_word_byte(static_cast<unsigned char>(text[i + 1]))) {
      cur.push_back('\'');
    } else {
      flush();
    }
  }
  flush();
  return out;
}

namespace {

constexpr std::array<std::string_view, 9> kAbbreviations = {"Mr.", "Mrs.", "Dr.", "St.", "e.g.",
                                                            "i.e.", "etc.", "vs.", "No."};

// The whitespace-delimited word ending at `dot`, without leading punctuation.
std::string_view word_ending_at(const std::string& text, std::size_t dot) {
  std::size_t start = dot;
  while (start > 0 && !is_space(text[start - 1])) --start;
  while (start < dot && !std::isalnum(static_cast<unsigned char>(text[start]))) ++start;
  return std::string_view(text).substr(start, dot - start + 1);
}

}  // namespace

std::vector<SentenceSpan> split_sentences(const std::string& text) {
  std::vector<SentenceSpan> spans;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    if (j >= text.size() || !is_space(text[j])) continue;
    while (j < text.size() && is_space(text[j])) ++j;
    if (j >= text.size() || !(text[j] >= 'A' && text[j] <= 'Z')) continue;
    if (c == '.') {
      const auto word = word_ending_at(text, i);
      if (std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end()) continue;
    }
    spans.push_back({begin, j});
    begin = j;
  }
  if (begin < text.size() || spans.empty()) spans.push_back({begin, text.size()});
  return spans;
}

// ---- corpus -------------------------------------------------------------------

namespace {

const std::vector<std::string>& canonical_books() {
  static const std::vector<std::string> books = {
      "Genesis", "Exodus", "Leviticus", "Numbers", "Deuteronomy", "Joshua", "Judges", "Ruth", "1 Samuel",
      "2 Samuel", "1 Kings", "2 Kings", "1 Chronicles", "2 Chronicles", "Ezra", "Nehemiah", "Esther", "Job",
      "Psalms", "Proverbs", "Ecclesiastes", "Song of Solomon", "Isaiah", "Jeremiah", "Lamentations",
      "Ezekiel", "Daniel", "Hosea", "Joel", "Amos", "Obadiah", "Jonah", "Micah", "Nahum", "Habakkuk",
      "Zephaniah", "Haggai", "Zechariah", "Malachi", "Matthew", "Mark", "Luke", "John", "Acts", "Romans",
      "1 Corinthians", "2 Corinthians", "Galatians", "Ephesians", "Philippians", "Colossians",
      "1 Thessalonians", "2 Thessalonians", "1 Timothy", "2 Timothy", "Titus", "Philemon", "Hebrews",
      "James", "1 Peter", "2 Peter", "1 John", "2 John", "3 John", "Jude", "Revelation"};
  return books;
}

int parse_positive(std::string_view s, std::size_t line, const char* what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 1) {
    throw ParseError(line, std::string("bad ") + what + " '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split_tabs(std::string_view line, std::size_t max_fields) {
  std::vector<std::string_view> out;
  while (out.size() + 1 < max_fields) {
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) break;
    out.push_back(line.substr(0, tab));
    line.remove_prefix(tab + 1);
  }
  out.push_back(line);
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
  if (!std::getline(in, line)) return false;
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace

std::size_t book_order(const std::string& book) {
  const auto& books = canonical_books();
  auto it = std::find(books.begin(), books.end(), book);
  return static_cast<std::size_t>(it - books.begin());
}

std::string VerseRef::str() const {
  return translation + " " + book + " " + std::to_string(chapter) + ":" + std::to_string(verse);
}

std::strong_ordering compare_refs(const VerseRef& a, const VerseRef& b) {
  if (auto c = book_order(a.book) <=> book_order(b.book); c != 0) return c;
  if (auto c = a.book <=> b.book; c != 0) return c;
  if (auto c = a.chapter <=> b.chapter; c != 0) return c;
  if (auto c = a.verse <=> b.verse; c != 0) return c;
  return a.translation <=> b.translation;
}

const BibleCorpus::Chapter* BibleCorpus::chapter(const std::string& translation, const std::string& book,
                                                 int chapter) const {
  auto t = data_.find(translation);
  if (t == data_.end()) return nullptr;
  auto b = t->second.find(book);
  if (b == t->second.end()) return nullptr;
  auto c = b->second.find(chapter);
  return c == b->second.end() ? nullptr : &c->second;
}

bool BibleCorpus::resolves(const std::string& translation, const std::string& book, int chapter, int verse) const {
  const Chapter* ch = this->chapter(translation, book, chapter);
  return ch && verse >= 1 && static_cast<std::size_t>(verse) <= ch->size();
}

std::vector<std::string> BibleCorpus::translation_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : data_) out.push_back(id);
  return out;
}

BibleCorpus parse_bible(std::istream& in) {
  // verse number -> text while collecting, validated for density afterwards.
  std::map<std::string, std::map<std::string, std::map<int, std::map<int, std::string>>>> raw;
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line, line_no)) {
    if (trim(line).empty()) continue;
    const auto f = split_tabs(line, 5);
    if (f.size() != 5) throw ParseError(line_no, "expected 5 tab-separated fields, got " + std::to_string(f.size()));
    const std::string translation(trim(f[0]));
    const std::string book(trim(f[1]));
    if (translation.empty() || book.empty()) throw ParseError(line_no, "empty translation or book");
    const int chapter = parse_positive(trim(f[2]), line_no, "chapter");
    const int verse = parse_positive(trim(f[3]), line_no, "verse");
    const std::string text(trim(f[4]));
    if (text.empty()) throw ParseError(line_no, "empty verse text");
    auto& verses = raw[translation][book][chapter];
    if (!verses.emplace(verse, text).second) {
      throw ValidationError("line " + std::to_string(line_no) + ": duplicate verse " + translation + " " + book +
                            " " + std::to_string(chapter) + ":" + std::to_string(verse));
    }
  }

  BibleCorpus corpus;
  for (auto& [translation, books] : raw)
    for (auto& [book, chapters] : books)
      for (auto& [chapter, verses] : chapters) {
        BibleCorpus::Chapter texts;
        int expected = 1;
        for (auto& [verse, text] : verses) {
          if (verse != expected) {
            throw ValidationError("gap in " + translation + " " + book + " " + std::to_string(chapter) +
                                  ": missing verse " + std::to_string(expected));
          }
          texts.push_back(std::move(text));
          ++expected;
        }
        corpus.translations()[translation][book][chapter] = std::move(texts);
      }
  return corpus;
}

// ---- trivia -------------------------------------------------------------------

namespace {

int json_int(const nlohmann::json& j, const char* key, std::size_t line) {
  if (!j.contains(key)) throw ParseError(line, std::string("missing field ") + key);
  const auto& v = j.at(key);
  if (v.is_number_integer()) {
    const auto x = v.get<long long>();
    if (x < 1) throw ParseError(line, std::string("bad ") + key);
    return static_cast<int>(x);
  }
  if (v.is_string()) return parse_positive(trim(v.get_ref<const std::string&>()), line, key);
  throw ParseError(line, std::string("bad ") + key);
}

std::string json_str(const nlohmann::json& j, const char* key, std::size_t line) {
  if (!j.contains(key) || !j.at(key).is_string()) throw ParseError(line, std::string("missing field ") + key);
  return j.at(key).get<std::string>();
}

}  // namespace

std::vector<TriviaQuestion> parse_trivia(std::istream& in) {
  std::vector<TriviaQuestion> out;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (next_line(in, line, line_no)) {
    const auto content = trim(line);
    if (content.empty()) continue;
    TriviaQuestion q;
    if (content.front() == '{') {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(content);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(line_no, e.what());
      }
      q.question = json_str(j, "question", line_no);
      q.answer = json_str(j, "answer", line_no);
      q.book = json_str(j, "book", line_no);
      q.chapter = json_int(j, "chapter", line_no);
      q.verse = json_int(j, "verse", line_no);
    } else {
      const auto f = split_tabs(line, 5);
      if (first && f.size() == 5 && trim(f[0]) == "question") {
        first = false;
        continue;
      }
      if (f.size() != 5) throw ParseError(line_no, "expected 5 tab-separated fields, got " + std::to_string(f.size()));
      q.question = std::string(trim(f[0]));
      q.answer = std::string(trim(f[1]));
      q.book = std::string(trim(f[2]));
      q.chapter = parse_positive(trim(f[3]), line_no, "chapter");
      q.verse = parse_positive(trim(f[4]), line_no, "verse");
    }
    first = false;
    q.id = out.size();
    out.push_back(std::move(q));
  }
  return out;
}

void validate_trivia(const std::vector<TriviaQuestion>& questions, const BibleCorpus& corpus,
                     const std::vector<std::string>& translations) {
  for (const auto& t : translations) {
    if (!corpus.has_translation(t)) throw ValidationError("translation " + t + " not present in the corpus");
  }
  for (const auto& q : questions)
    for (const auto& t : translations) {
      if (!corpus.resolves(t, q.book, q.chapter, q.verse)) {
        throw ValidationError("question " + std::to_string(q.id) + " (\"" + q.question + "\"): " + q.book + " " +
                              std::to_string(q.chapter) + ":" + std::to_string(q.verse) + " not found in " + t);
      }
    }
}

// ---- BibleQA --------------------------------------------------------------------

std::size_t QuestionGroup::gold_index() const {
  std::size_t gold = candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].label == 1) {
      if (gold != candidates.size()) throw ValidationError("question " + std::to_string(qid) + " has several positives");
      gold = i;
    }
  }
  if (gold == candidates.size()) throw ValidationError("question " + std::to_string(qid) + " has no positive");
  return gold;
}

DatasetSpec parse_context_mode(const std::string& mode) {
  DatasetSpec spec;
  if (mode == "chapter") {
    spec.mode = ContextMode::Chapter;
    return spec;
  }
  constexpr std::string_view prefix = "window-";
  if (mode.starts_with(prefix)) {
    const std::string_view n(mode.data() + prefix.size(), mode.size() - prefix.size());
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(n.data(), n.data() + n.size(), v);
    if (ec == std::errc() && ptr == n.data() + n.size() && v >= 1) {
      spec.window = v;
      return spec;
    }
  }
  throw ValidationError("unknown context mode '" + mode + "' (expected window-N or chapter)");
}

std::string context_mode_name(const DatasetSpec& spec) {
  return spec.mode == ContextMode::Chapter ? "chapter" : "window-" + std::to_string(spec.window);
}

VerseWindow candidate_window(int gold, int chapter_len, std::size_t n) {
  const int want = static_cast<int>(n);
  if (chapter_len <= want) return {1, chapter_len};
  int first = gold - (want - 1) / 2;
  first = std::max(first, 1);
  first = std::min(first, chapter_len - want + 1);
  return {first, want};
}

std::vector<QuestionGroup> build_bibleqa(const BibleCorpus& corpus, const std::vector<TriviaQuestion>& questions,
                                         const DatasetSpec& spec) {
  if (spec.mode == ContextMode::Window && spec.window < 1) throw ValidationError("window size must be >= 1");
  validate_trivia(questions, corpus, spec.translations);
  std::vector<QuestionGroup> groups;
  groups.reserve(questions.size() * spec.translations.size());
  for (const auto& q : questions)
    for (const auto& t : spec.translations) {
      const auto& chapter = *corpus.chapter(t, q.book, q.chapter);
      const int len = static_cast<int>(chapter.size());
      const VerseWindow w = spec.mode == ContextMode::Chapter ? VerseWindow{1, len}
                                                              : candidate_window(q.verse, len, spec.window);
      QuestionGroup g;
      g.qid = q.id;
      g.translation = t;
      g.question = q.question;
      g.question_tokens = tokenize(q.question);
      for (int v = w.first; v < w.first + w.count; ++v) {
        Candidate c;
        c.ref = VerseRef{t, q.book, q.chapter, v};
        c.text = chapter[static_cast<std::size_t>(v - 1)];
        c.tokens = tokenize(c.text);
        c.label = v == q.verse ? 1 : 0;
        g.candidates.push_back(std::move(c));
      }
      groups.push_back(std::move(g));
    }
  return groups;
}

// ---- span datasets --------------------------------------------------------------

SpanConversion convert_span_dataset(const std::vector<SpanRecord>& records) {
  SpanConversion out;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const SpanRecord& rec = records[r];
    const auto len = static_cast<long long>(rec.context.size());
    if (rec.answer_start < 0 || rec.answer_start >= len) {
      out.rejected.push_back("record " + std::to_string(r) + ": answer_start " + std::to_string(rec.answer_start) +
                             " outside [0, " + std::to_string(len) + ")");
      continue;
    }
    const auto start = static_cast<std::size_t>(rec.answer_start);
    const auto spans = split_sentences(rec.context);
    std::size_t hit = 0;
    while (!(spans[hit].begin <= start && start < spans[hit].end)) ++hit;

    std::size_t content_end = spans[hit].end;
    while (content_end > spans[hit].begin && is_space(rec.context[content_end - 1])) --content_end;
    if (start + rec.answer_text.size() > content_end) {
      ++out.dropped_cross_boundary;
      continue;
    }

    QuestionGroup g;
    g.qid = r;
    g.translation = "SPAN";
    g.question = rec.question;
    g.question_tokens = tokenize(rec.question);
    for (std::size_t s = 0; s < spans.size(); ++s) {
      Candidate c;
      c.ref = VerseRef{"SPAN", "context", static_cast<int>(r + 1), static_cast<int>(s + 1)};
      c.text = std::string(trim(std::string_view(rec.context).substr(spans[s].begin, spans[s].end - spans[s].begin)));
      c.tokens = tokenize(c.text);
      c.label = s == hit ? 1 : 0;
      g.candidates.push_back(std::move(c));
    }
    out.groups.push_back(std::move(g));
  }
  if (out.dropped_cross_boundary) {
    logging::warn("dropped " + std::to_string(out.dropped_cross_boundary) + " span records crossing a sentence boundary");
  }
  return out;
}

std::vector<SpanRecord> parse_span_records(std::istream& in) {
  std::vector<SpanRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line, line_no)) {
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      SpanRecord r;
      r.context = j.at("context").get<std::string>();
      r.question = j.at("question").get<std::string>();
      r.answer_text = j.at("answer_text").get<std::string>();
      r.answer_start = j.at("answer_start").get<long long>();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

// ---- splits ---------------------------------------------------------------------

DatasetSplit split_dataset(const std::vector<QuestionGroup>& groups, std::uint64_t seed) {
  std::set<std::size_t> unique;
  for (const auto& g : groups) unique.insert(g.qid);
  if (unique.size() < 10) {
    throw InsufficientDataError("splitting needs at least 10 question ids, got " + std::to_string(unique.size()));
  }
  std::vector<std::size_t> ids(unique.begin(), unique.end());
  Rng rng(seed);
  rng.shuffle(ids);

  const std::size_t n = ids.size();
  const std::size_t n_test = n * 3 / 10;
  const std::size_t n_val = (n - n_test) / 10;
  std::map<std::size_t, int> part;  // 0 train, 1 val, 2 test
  for (std::size_t i = 0; i < n; ++i) part[ids[i]] = i < n_test ? 2 : (i < n_test + n_val ? 1 : 0);

  DatasetSplit out;
  for (const auto& g : groups) {
    switch (part[g.qid]) {
      case 0: out.train.push_back(g); break;
      case 1: out.val.push_back(g); break;
      default: out.test.push_back(g); break;
    }
  }
  return out;
}

// ---- JSON lines -----------------------------------------------------------------

void write_groups(std::ostream& out, const std::vector<QuestionGroup>& groups) {
  for (const auto& g : groups) {
    ojson j;
    j["qid"] = g.qid;
    j["translation"] = g.translation;
    j["question"] = g.question;
    j["candidates"] = ojson::array();
    for (const auto& c : g.candidates) {
      ojson cj;
      cj["book"] = c.ref.book;
      cj["chapter"] = c.ref.chapter;
      cj["verse"] = c.ref.verse;
      cj["text"] = c.text;
      cj["label"] = c.label;
      j["candidates"].push_back(std::move(cj));
    }
    out << j.dump() << '\n';
  }
}

std::vector<QuestionGroup> read_groups(std::istream& in) {
  std::vector<QuestionGroup> out;
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line, line_no)) {
    if (trim(line).empty()) continue;
    QuestionGroup g;
    try {
      const auto j = nlohmann::json::parse(line);
      g.qid = j.at("qid").get<std::size_t>();
      g.translation = j.at("translation").get<std::string>();
      g.question = j.at("question").get<std::string>();
      for (const auto& cj : j.at("candidates")) {
        Candidate c;
        c.ref = VerseRef{g.translation, cj.at("book").get<std::string>(), cj.at("chapter").get<int>(),
                         cj.at("verse").get<int>()};
        c.text = cj.at("text").get<std::string>();
        c.label = cj.at("label").get<int>();
        if (c.label != 0 && c.label != 1) throw ParseError(line_no, "label must be 0 or 1");
        c.tokens = tokenize(c.text);
        g.candidates.push_back(std::move(c));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
    if (g.candidates.empty()) throw ParseError(line_no, "group without candidates");
    g.question_tokens = tokenize(g.question);
    g.gold_index();
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace bqa
