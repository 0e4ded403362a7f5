#include "dialdiv/text.hpp"

#include <cctype>

namespace dialdiv::text {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
bool is_word_char(char c) {
  auto u = static_cast<unsigned char>(c);
  // Bytes >= 0x80 belong to multi-byte UTF-8 letters; treat them as word chars.
  return std::isalnum(u) != 0 || c == '_' || u >= 0x80;
}

}  // namespace

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::size_t word_count(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

std::vector<std::string> metric_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (auto tok : split_ws(s)) {
    std::size_t b = 0, e = tok.size();
    while (b < e && is_punct(tok[b])) ++b;
    while (e > b && is_punct(tok[e - 1])) --e;
    if (b == e) continue;
    std::string t(tok.substr(b, e - b));
    for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(std::move(t));
  }
  return out;
}

std::string normalize(std::string_view s) {
  std::string out;
  for (auto tok : split_ws(s)) {
    if (!out.empty()) out.push_back(' ');
    for (char c : tok) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string replace_whole_word(std::string_view s, std::string_view from, std::string_view to) {
  if (from.empty()) return std::string(s);
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t hit = s.find(from, i);
    if (hit == std::string_view::npos) break;
    bool left_ok = hit == 0 || !is_word_char(s[hit - 1]);
    std::size_t end = hit + from.size();
    bool right_ok = end == s.size() || !is_word_char(s[end]);
    if (left_ok && right_ok) {
      out.append(s.substr(i, hit - i));
      out.append(to);
      i = end;
    } else {
      out.append(s.substr(i, hit - i + 1));
      i = hit + 1;
    }
  }
  out.append(s.substr(i));
  return out;
}

std::string substitute(std::string_view tmpl,
                       const std::vector<std::pair<std::string, std::string>>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        auto key = tmpl.substr(i + 1, close - i - 1);
        bool found = false;
        for (const auto& [k, v] : values) {
          if (k == key) {
            out += v;
            found = true;
            break;
          }
        }
        if (found) {
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

}  // namespace dialdiv::text
