#ifndef PINK_IO_H_
#define PINK_IO_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace pink::io {

struct NumberedLine {
  std::size_t number = 0;  // 1-based
  std::string text;
};

// Reads an LF-delimited text file. Blank lines are skipped; a trailing CR is
// stripped. Throws Error(kIo) if the file cannot be opened.
std::vector<NumberedLine> ReadLines(const std::filesystem::path& path);

std::string ReadFile(const std::filesystem::path& path);

// Writes `content` to a sibling temp file and renames it over `path`, so
// readers never observe a partially written file.
void WriteFileAtomic(const std::filesystem::path& path,
                     const std::string& content);

}  // namespace pink::io

#endif  // PINK_IO_H_
