#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace bqa {

// ---- text ---------------------------------------------------------------------

// Lowercased word tokens. Words are runs of alphanumerics (non-ASCII bytes
// count as letters) joined by internal apostrophes; everything else separates.
std::vector<std::string> tokenize(const std::string& text);

struct SentenceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive; trailing whitespace belongs to the span
  bool operator==(const SentenceSpan&) const = default;
};

// Contiguous, non-overlapping spans covering the whole paragraph.
std::vector<SentenceSpan> split_sentences(const std::string& paragraph);

// ---- corpus -------------------------------------------------------------------

inline const std::vector<std::string> kTranslations = {"KJV", "ASV", "YLT", "WEB"};

// Position of a book in the canonical 66-book order; unknown books sort after.
std::size_t book_order(const std::string& book);

struct VerseRef {
  std::string translation;
  std::string book;
  int chapter = 0;
  int verse = 0;

  std::string str() const;
  bool operator==(const VerseRef&) const = default;
};

// Canonical book order, then chapter, then verse (translation compared last).
std::strong_ordering compare_refs(const VerseRef& a, const VerseRef& b);

// translation -> book -> chapter -> verse texts (verse n at index n-1).
class BibleCorpus {
 public:
  using Chapter = std::vector<std::string>;
  using Book = std::map<int, Chapter>;
  using Translation = std::map<std::string, Book>;

  const std::map<std::string, Translation>& translations() const { return data_; }
  std::map<std::string, Translation>& translations() { return data_; }

  bool has_translation(const std::string& t) const { return data_.contains(t); }
  // nullptr when the chapter is absent.
  const Chapter* chapter(const std::string& translation, const std::string& book, int chapter) const;
  bool resolves(const std::string& translation, const std::string& book, int chapter, int verse) const;
  std::vector<std::string> translation_ids() const;

 private:
  std::map<std::string, Translation> data_;
};

// `translation TAB book TAB chapter TAB verse TAB text` per line.
BibleCorpus parse_bible(std::istream& in);

struct TriviaQuestion {
  std::size_t id = 0;
  std::string question;
  std::string answer;
  std::string book;
  int chapter = 0;
  int verse = 0;
};

// TSV (`question TAB answer TAB book TAB chapter TAB verse`, optional header)
// or JSON lines with the same field names. Ids follow input order.
std::vector<TriviaQuestion> parse_trivia(std::istream& in);
// Throws ValidationError naming the first question whose reference does not
// resolve in one of the translations.
void validate_trivia(const std::vector<TriviaQuestion>& questions, const BibleCorpus& corpus,
                     const std::vector<std::string>& translations);

// ---- datasets -------------------------------------------------------------------

struct Candidate {
  VerseRef ref;
  std::string text;
  std::vector<std::string> tokens;
  int label = 0;
};

struct QuestionGroup {
  std::size_t qid = 0;
  std::string translation;
  std::string question;
  std::vector<std::string> question_tokens;
  std::vector<Candidate> candidates;

  std::size_t gold_index() const;  // throws ValidationError unless exactly one positive
};

enum class ContextMode { Window, Chapter };

struct DatasetSpec {
  ContextMode mode = ContextMode::Window;
  std::size_t window = 3;
  std::vector<std::string> translations = kTranslations;
};

// "window-3", "window-10", "chapter", or "window-N".
DatasetSpec parse_context_mode(const std::string& mode);
std::string context_mode_name(const DatasetSpec& spec);

// First verse (1-based) of an n-verse window around `gold` in a chapter of
// `chapter_len` verses: centered with floor((n-1)/2) before, shifted to stay
// in-chapter, shrunk only when the chapter is shorter than n.
struct VerseWindow {
  int first = 1;
  int count = 0;
};
VerseWindow candidate_window(int gold, int chapter_len, std::size_t n);

std::vector<QuestionGroup> build_bibleqa(const BibleCorpus& corpus, const std::vector<TriviaQuestion>& questions,
                                         const DatasetSpec& spec);

struct SpanRecord {
  std::string context;
  std::string question;
  std::string answer_text;
  long long answer_start = 0;
};

struct SpanConversion {
  std::vector<QuestionGroup> groups;
  std::size_t dropped_cross_boundary = 0;
  std::vector<std::string> rejected;  // one message per out-of-range record
};

SpanConversion convert_span_dataset(const std::vector<SpanRecord>& records);
std::vector<SpanRecord> parse_span_records(std::istream& in);

struct DatasetSplit {
  std::vector<QuestionGroup> train, val, test;
};

// Split by question id: 30% test, then 10% of the rest validation, sizes
// rounded down, remainder to train.
DatasetSplit split_dataset(const std::vector<QuestionGroup>& groups, std::uint64_t seed);

// Dataset JSON lines: {qid, translation, question, candidates: [{book, chapter, verse, text, label}]}.
void write_groups(std::ostream& out, const std::vector<QuestionGroup>& groups);
std::vector<QuestionGroup> read_groups(std::istream& in);

}  // namespace bqa
