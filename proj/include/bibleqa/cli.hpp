#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "bibleqa/embeddings.hpp"

namespace bqa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;

// Runs one subcommand. `args` excludes the program name. Data goes to files
// or `out`; logs go to standard error.
int dispatch(const std::vector<std::string>& args, std::ostream& out);

// Writes via a sibling temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

// Pretrained-format file; the dimension is read off the first entry.
EmbeddingMatrix load_embedding_file(const std::filesystem::path& path);

}  // namespace bqa::cli
