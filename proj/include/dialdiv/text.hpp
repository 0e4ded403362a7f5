#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dialdiv::text {

/// Whitespace-separated tokens.
std::vector<std::string_view> split_ws(std::string_view s);

/// Number of whitespace-separated tokens; the word count used everywhere.
std::size_t word_count(std::string_view s);

/// Metric tokenizer: lowercase, split on whitespace, strip leading and
/// trailing ASCII punctuation, drop tokens that end up empty.
std::vector<std::string> metric_tokens(std::string_view s);

/// Lowercase + collapse whitespace runs to one space + trim.
std::string normalize(std::string_view s);

/// Replace every whole-word occurrence of `from` with `to`. A match must not
/// be preceded or followed by a letter, digit or underscore.
std::string replace_whole_word(std::string_view s, std::string_view from, std::string_view to);

/// Replace `{key}` placeholders.
std::string substitute(std::string_view tmpl,
                       const std::vector<std::pair<std::string, std::string>>& values);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace dialdiv::text
