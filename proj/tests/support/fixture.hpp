#pragma once

// A small generated Bible in every translation plus trivia pointing into it,
// both as raw text so the parsers are exercised too.

#include <sstream>
#include <string>
#include <vector>

#include "bibleqa/data_pipeline.hpp"
#include "bibleqa/rng.hpp"

namespace fixture {

struct Chapter {
  std::string book;
  int number = 0;
  int verses = 0;
};

inline std::vector<Chapter> chapters(std::uint64_t seed) {
  bqa::Rng rng(seed);
  std::vector<Chapter> out;
  for (const std::string book : {"Genesis", "Exodus", "Psalms", "Matthew", "John", "Revelation"})
    for (int c = 1; c <= 8; ++c) {
      // Mostly ordinary chapters, with a few shorter than the widest window.
      const int verses = rng.below(6) == 0 ? 1 + static_cast<int>(rng.below(9)) : 10 + static_cast<int>(rng.below(30));
      out.push_back({book, c, verses});
    }
  return out;
}

inline std::string bible_text(const std::vector<Chapter>& chs, const std::vector<std::string>& translations) {
  std::ostringstream os;
  for (const auto& t : translations)
    for (const auto& ch : chs)
      for (int v = 1; v <= ch.verses; ++v)
        os << t << '\t' << ch.book << '\t' << ch.number << '\t' << v << '\t' << "In " << t << " " << ch.book << " "
           << ch.number << " verse " << v << " says word" << (v * 7 + ch.number) % 50 << ".\n";
  return os.str();
}

struct Pick {
  std::string book;
  int chapter = 0;
  int verse = 0;
  int chapter_len = 0;
};

inline std::vector<Pick> picks(const std::vector<Chapter>& chs, std::size_t n, std::uint64_t seed) {
  bqa::Rng rng(seed);
  std::vector<Pick> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ch = chs[rng.below(chs.size())];
    out.push_back({ch.book, ch.number, 1 + static_cast<int>(rng.below(static_cast<std::size_t>(ch.verses))), ch.verses});
  }
  return out;
}

inline std::string trivia_text(const std::vector<Pick>& ps) {
  std::ostringstream os;
  os << "question\tanswer\tbook\tchapter\tverse\n";
  for (std::size_t i = 0; i < ps.size(); ++i)
    os << "Which verse mentions item " << i << "?\tanswer " << i << '\t' << ps[i].book << '\t' << ps[i].chapter << '\t'
       << ps[i].verse << '\n';
  return os.str();
}

inline bqa::BibleCorpus corpus(const std::vector<Chapter>& chs) {
  std::istringstream in(bible_text(chs, bqa::kTranslations));
  return bqa::parse_bible(in);
}

inline std::vector<bqa::TriviaQuestion> trivia(const std::vector<Pick>& ps) {
  std::istringstream in(trivia_text(ps));
  return bqa::parse_trivia(in);
}

}  // namespace fixture
