#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace facetforge {

// ASCII lowercase; bytes >= 0x80 pass through untouched.
std::string to_lower(std::string_view s);

std::string_view trim(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// True when every byte is an ASCII letter or part of a multi-byte UTF-8
// sequence. Empty strings are not words.
bool is_alpha_word(std::string_view s);

// Lowercased alphanumeric runs; everything else separates tokens.
std::vector<std::string> word_tokens(std::string_view s);

// Cheap singularization used for matching keys: "grasses" -> "grass",
// "berries" -> "berry", "trunks" -> "trunk". Words ending in "ss", "us" or
// "is" and words of three letters or fewer are left alone.
std::string fold_plural(std::string_view word);

// 64-bit FNV-1a rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view s);

std::string read_file(const std::filesystem::path& path);

class Stoplist {
 public:
  Stoplist() = default;
  explicit Stoplist(const std::set<std::string>& words)
      : words_(words.begin(), words.end()) {}

  // One word per line, '#' starts a comment, blank lines ignored.
  static Stoplist load(const std::filesystem::path& path);

  bool contains(std::string_view word) const;
  std::size_t size() const { return words_.size(); }

 private:
  std::set<std::string, std::less<>> words_;
};

}  // namespace facetforge
