#include "dialdiv/backend.hpp"

#include <cmath>
#include <regex>

#include "dialdiv/errors.hpp"
#include "dialdiv/seed.hpp"
#include "dialdiv/text.hpp"

namespace dialdiv::backend {

void DecodingConfig::validate() const {
  if (!(temperature > 0.0)) throw Error("temperature must be positive");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error("top_p must lie in (0, 1]");
  if (top_k && *top_k < 1) throw Error("top_k must be at least 1");
  if (max_new_tokens < 1) throw Error("max_new_tokens must be at least 1");
}

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

}  // namespace

std::vector<Token> Tokenizer::tokenize(std::string_view s) const {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (is_word_byte(c)) {
      std::size_t j = i;
      while (j < s.size() && is_word_byte(static_cast<unsigned char>(s[j]))) ++j;
      out.push_back({i, j});
      i = j;
    } else {
      out.push_back({i, i + 1});
      ++i;
    }
  }
  return out;
}

prompt::Prompt bind_token_spans(const prompt::Prompt& p, const Tokenizer& tok) {
  const auto tokens = tok.tokenize(p.text());
  const auto spans = p.char_spans();
  prompt::Prompt out = p;
  std::size_t k = 0;
  std::size_t t = 0;
  for (auto& b : out.blocks)
    for (auto& u : b.units) {
      const auto cs = spans[k++].second;
      while (t < tokens.size() && tokens[t].begin < cs.begin) ++t;
      const std::size_t first = t;
      while (t < tokens.size() && tokens[t].end <= cs.end) ++t;
      u.token_span = prompt::TokenSpan{first, t};
    }
  return out;
}

GenerationRequest make_request(const prompt::Prompt& p, const DecodingConfig& config,
                               bool want_attention) {
  GenerationRequest r;
  r.prompt_text = p.text();
  r.config = config;
  r.want_attention = want_attention;
  for (const auto& [u, cs] : p.char_spans()) r.unit_spans.push_back({u->id, cs.begin, cs.end});
  return r;
}

GenerationResult generate(GenerationBackend& be, const prompt::Prompt& p,
                          const DecodingConfig& config, bool want_attention) {
  config.validate();
  auto req = make_request(p, config, want_attention);
  if (req.prompt_text.empty()) throw Error("empty prompt");
  auto res = be.generate(req);
  if (!want_attention) {
    res.unit_attention.clear();
  } else if (res.unit_attention.empty() && !req.unit_spans.empty()) {
    throw AttentionUnsupported("backend returned no attention");
  }
  return res;
}

std::vector<std::vector<double>> embed(GenerationBackend& be, const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error("embed needs at least one text");
  auto vecs = be.embed(texts);
  if (vecs.size() != texts.size()) throw BackendError("embedding count mismatch");
  for (const auto& v : vecs) {
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    if (std::abs(std::sqrt(n2) - 1.0) > 1e-6) throw BackendError("embedding is not unit norm");
  }
  return vecs;
}

std::string judge_prompt(const std::vector<std::string>& statements, const std::string& response,
                         const std::string& a, const std::string& b) {
  std::string out;
  for (const auto& s : statements) out += s + "\n";
  out += a + " is now in a chat with " + b + " and going to say '" + response +
         "'. Are there any inconsistencies between this response and the statements above?\n";
  out +=
      "Write a brief comment, then rate the inconsistency from 1 (fully consistent) to 10 "
      "(completely inconsistent). End with a line of the form \"Score: N\".";
  return out;
}

std::optional<double> parse_judge_score(const std::string& output) {
  static const std::regex tagged(R"(Score:\s*(\d+(?:\.\d+)?))", std::regex::icase);
  static const std::regex bare(R"((^|[^0-9.])(\d+(?:\.\d+)?)(?![0-9]|\.[0-9]))");
  auto value = [](const std::string& s) {
    return s.size() > 32 ? 1e9 : std::stod(s);
  };
  std::optional<double> found;
  for (std::sregex_iterator it(output.begin(), output.end(), tagged), end; it != end; ++it) {
    const double v = value((*it)[1].str());
    found = (v >= 1.0 && v <= 10.0) ? std::optional<double>(v) : std::nullopt;
  }
  if (found) return found;
  for (std::sregex_iterator it(output.begin(), output.end(), bare), end; it != end; ++it) {
    const double v = value((*it)[2].str());
    if (v >= 1.0 && v <= 10.0) found = v;
  }
  return found;
}

double judge(GenerationBackend& be, const std::vector<std::string>& statements,
          const std::string& response, const std::string& a, const std::string& b,
          const DecodingConfig& config, const JudgeOptions& opts) {
  prompt::Prompt p;
  p.blocks.push_back({prompt::BlockId::kTaskDescription,
                      prompt::BlockKind::kScaffold,
                      {{"judge", prompt::UnitKind::kText, judge_prompt(statements, response, a, b),
                        prompt::BlockId::kTaskDescription, false, std::nullopt}}});
  auto cfg = config;
  std::string last;
  for (int attempt = 0; attempt <= opts.retries; ++attempt) {
    last = generate(be, p, cfg, false).text;
    if (auto s = parse_judge_score(last)) return *s;
    ++cfg.seed;
  }
  throw JudgeParseError("no score in judge output: " + last.substr(0, 200));
}

std::vector<double> hashed_bow_embedding(std::string_view s, std::size_t dim) {
  std::vector<double> v(dim, 0.0);
  for (const auto& tok : text::metric_tokens(s)) {
    const auto h = fnv1a(tok);
    v[h % dim] += (h >> 63) ? 1.0 : -1.0;
    const auto h2 = splitmix64(h);
    v[h2 % dim] += 0.5 * ((h2 >> 63) ? 1.0 : -1.0);
  }
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  if (n2 == 0.0) {
    v[0] = 1.0;
    return v;
  }
  const double inv = 1.0 / std::sqrt(n2);
  for (double& x : v) x *= inv;
  return v;
}

}  // namespace dialdiv::backend
