#include <cctype>

#include "mapreplay/workloads.hpp"

namespace mapreplay {

namespace detail {
extern const unsigned char kCorpusBytes[];
extern const std::size_t kCorpusSize;
}  // namespace detail

std::string_view corpus_text() noexcept {
  return {reinterpret_cast<const char*>(detail::kCorpusBytes), detail::kCorpusSize};
}

const std::vector<std::string>& corpus_tokens() {
  static const std::vector<std::string> tokens = [] {
    std::vector<std::string> out;
    std::string word;
    auto flush = [&] {
      if (!word.empty()) out.push_back(std::move(word));
      word.clear();
    };
    for (char ch : corpus_text()) {
      const auto c = static_cast<unsigned char>(ch);
      if (std::isalnum(c) || c == '\'') {
        word += static_cast<char>(std::tolower(c));
      } else if (std::isspace(c)) {
        flush();
      }
    }
    flush();
    return out;
  }();
  return tokens;
}

}  // namespace mapreplay
