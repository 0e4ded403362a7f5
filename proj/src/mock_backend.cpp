#include "dialdiv/backend.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <regex>

#include <json.hpp>

#include "dialdiv/errors.hpp"
#include "dialdiv/seed.hpp"
#include "dialdiv/text.hpp"

namespace dialdiv::backend {

namespace {

constexpr std::array<std::string_view, 48> kGeneric = {
    "How have you been lately?",
    "I was just thinking about that.",
    "That sounds like a lot to deal with.",
    "Honestly, I am not sure what to say.",
    "It has been a long day.",
    "Do you want to grab something to eat?",
    "I could use a break, to be honest.",
    "That is a good point.",
    "Let me think about it for a second.",
    "You always know how to cheer me up.",
    "I did not expect to see you here.",
    "We should do this more often.",
    "Anyway, what are you up to?",
    "I have been meaning to ask you something.",
    "It is strange how things turn out.",
    "Well, I should get going soon.",
    "That reminds me of something.",
    "I am glad we ran into each other.",
    "Are you doing okay?",
    "Maybe we can figure it out together.",
    "I keep going back and forth on it.",
    "It was nice talking to you.",
    "Tell me more about it.",
    "I never thought of it that way.",
    "You look like you have something on your mind.",
    "Things have been busy around here.",
    "I appreciate you saying that.",
    "Let us not worry about it right now.",
    "I heard something interesting today.",
    "Sometimes I wonder about the future.",
    "That is exactly what I was afraid of.",
    "Do you remember the last time we talked?",
    "I think we both need some rest.",
    "What would you do in my place?",
    "I will see you around, then.",
    "That makes two of us.",
    "It is good to have someone to talk to.",
    "I might take a walk later.",
    "Let me know if you need anything.",
    "I am curious what you think.",
    "Funny, I was about to say the same thing.",
    "It is quieter than usual today.",
    "I should probably write that down.",
    "You seem a little distracted.",
    "I have had worse days, I suppose.",
    "Let us change the subject.",
    "Well, that settles it.",
    "Take care of yourself.",
};

constexpr std::array<std::string_view, 6> kFrames = {
    "I remember {x}.", "You know, {x}.", "{x}, right?", "Speaking of which, {x}.",
    "I keep thinking that {x}.", "Did I tell you {x}?",
};

constexpr std::array<std::string_view, 8> kComments = {
    "The response fits what is known about the speaker.",
    "The response mostly matches the statements.",
    "There is a small tension with one statement.",
    "The tone is consistent with the background.",
    "Some details in the response are not supported.",
    "The response contradicts part of the memory.",
    "The response ignores the current situation.",
    "Nothing in the statements rules this out.",
};

bool is_item_id(std::string_view id) {
  return id.size() >= 3 && std::string_view("bhmpe").find(id[0]) != std::string_view::npos &&
         id[1] == '.' && std::isdigit(static_cast<unsigned char>(id[2]));
}

char block_letter_of(std::string_view id) {
  return id.size() >= 2 && id[1] == '.' ? id[0] : '\0';
}

/// xorshift64*; cheap stream for attention jitter.
struct FastRng {
  std::uint64_t s;
  explicit FastRng(std::uint64_t seed) : s(seed ? seed : 0x9e3779b97f4a7c15ull) {}
  double next() {
    s ^= s >> 12;
    s ^= s << 25;
    s ^= s >> 27;
    return unit_interval(s * 0x2545f4914f6cdd1dull);
  }
};

std::string strip_bullet(std::string_view s) {
  if (s.starts_with("- ")) s.remove_prefix(2);
  return std::string(s);
}

struct ContentUnit {
  std::string text;
  double weight;
};

struct Utterance {
  std::string text;
  bool end = false;
};

Utterance make_utterance(Rng& rng, const std::vector<ContentUnit>& pool, double total_weight,
                         std::size_t turns, const DecodingConfig& cfg) {
  const double q0 =
      pool.empty() ? 0.0 : std::min(0.85, 0.2 * std::log2(1.0 + static_cast<double>(pool.size())));
  const double q = std::clamp(q0 * 0.8 / cfg.temperature, 0.0, 0.95);
  const std::size_t bank =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(cfg.top_p * kGeneric.size())));
  const std::size_t segments = 1 + uniform_index(rng, 3);
  std::vector<std::string> parts;
  for (std::size_t s = 0; s < segments; ++s) {
    if (uniform01(rng) < q) {
      double r = uniform01(rng) * total_weight;
      std::size_t k = 0;
      while (k + 1 < pool.size() && r >= pool[k].weight) r -= pool[k++].weight;
      const auto words = text::split_ws(pool[k].text);
      if (words.empty()) continue;
      const std::size_t len = std::min<std::size_t>(words.size(), 3 + uniform_index(rng, 5));
      const std::size_t start = uniform_index(rng, words.size() - len + 1);
      std::vector<std::string> w(words.begin() + static_cast<std::ptrdiff_t>(start),
                                 words.begin() + static_cast<std::ptrdiff_t>(start + len));
      std::string phrase = text::join(w, " ");
      while (!phrase.empty() && std::ispunct(static_cast<unsigned char>(phrase.back()))) phrase.pop_back();
      const auto frame = kFrames[uniform_index(rng, kFrames.size())];
      parts.push_back(text::substitute(frame, {{"x", phrase}}));
      if (!parts.back().empty())
        parts.back()[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(parts.back()[0])));
    } else {
      parts.emplace_back(kGeneric[uniform_index(rng, bank)]);
    }
  }
  if (parts.empty()) parts.emplace_back(kGeneric[0]);
  const double p_end = std::min(0.9, 0.03 + 0.07 * static_cast<double>(turns));
  return {text::join(parts, " "), uniform01(rng) < p_end};
}

std::string render_output(Rng& rng, const std::string& name, const Utterance& u) {
  nlohmann::ordered_json j;
  j[name] = u.text;
  const std::string key = "Did the conversation end with " + name + "'s utterance?";
  if (uniform01(rng) < 0.25)
    j[key] = u.end ? "true" : "false";
  else
    j[key] = u.end;
  std::string body = j.dump(uniform01(rng) < 0.5 ? -1 : 1);
  if (uniform01(rng) < 0.1) body = "Sure, here is the output:\n" + body;
  return body;
}

}  // namespace

MockBackend::MockBackend(MockConfig config) : config_(std::move(config)) {
  if (config_.layers == 0 || config_.heads == 0 || config_.embed_dim == 0)
    throw Error("mock backend dimensions must be positive");
}

Capabilities MockBackend::capabilities() {
  return {config_.model_name, config_.layers, config_.heads, config_.embed_dim};
}

void MockBackend::add_rule(ScriptRule rule) {
  std::lock_guard lock(mu_);
  rules_.push_back(std::move(rule));
  rule_calls_.push_back(0);
}

void MockBackend::set_embedding(const std::string& text, std::vector<double> vector) {
  std::lock_guard lock(mu_);
  embeddings_[text] = std::move(vector);
}

void MockBackend::set_recording(bool on) {
  std::lock_guard lock(mu_);
  recording_ = on;
}

std::vector<std::string> MockBackend::recorded_prompts() const {
  std::lock_guard lock(mu_);
  return prompt_log_;
}

std::size_t MockBackend::calls_matching(const std::string& pattern) const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(std::count_if(
      prompt_log_.begin(), prompt_log_.end(),
      [&](const std::string& p) { return p.find(pattern) != std::string::npos; }));
}

std::size_t MockBackend::total_calls() const {
  std::lock_guard lock(mu_);
  return total_calls_;
}

GenerationResult MockBackend::generate(const GenerationRequest& req) {
  std::optional<std::string> scripted;
  const ScriptRule* rule = nullptr;
  std::size_t call = 0;
  {
    std::lock_guard lock(mu_);
    ++total_calls_;
    if (recording_) prompt_log_.push_back(req.prompt_text);
    for (std::size_t r = 0; r < rules_.size(); ++r) {
      if (req.prompt_text.find(rules_[r].pattern) == std::string::npos) continue;
      rule = &rules_[r];
      call = rule_calls_[r]++;
      if (!rule->responses.empty())
        scripted = rule->responses[std::min(call, rule->responses.size() - 1)];
      break;
    }
  }
  GenerationResult out;
  out.text = scripted ? *scripted : free_text(req);
  out.prompt_token_count = tokenizer_.tokenize(req.prompt_text).size();
  if (req.want_attention) {
    if (rule && rule->attention) {
      out.unit_attention = rule->attention(req, call);
    } else {
      const auto n = std::min<std::size_t>(
          std::max<std::size_t>(1, tokenizer_.tokenize(out.text).size()),
          static_cast<std::size_t>(req.config.max_new_tokens));
      out.unit_attention = mock_attention(req, n);
    }
  }
  return out;
}

std::string MockBackend::free_text(const GenerationRequest& req) const {
  const std::string& prompt = req.prompt_text;
  Rng rng(mix_seed({fnv1a(prompt), req.config.seed}));

  if (prompt.find("Are there any inconsistencies") != std::string::npos) {
    if (uniform01(rng) < config_.malformed_rate) return "I would rather not rate this.";
    const int score = 1 + static_cast<int>(std::floor(10.0 * std::pow(uniform01(rng), 1.6)));
    return "Comment: " + std::string(kComments[uniform_index(rng, kComments.size())]) +
           "\nScore: " + std::to_string(std::min(score, 10));
  }

  static const std::regex name_re(R"(Did the conversation end with (.+?)'s utterance\?)");
  std::smatch m;
  if (!std::regex_search(prompt, m, name_re))
    return std::string(kGeneric[uniform_index(rng, kGeneric.size())]);
  const std::string name = m[1].str();

  std::vector<ContentUnit> pool;
  double total = 0.0;
  std::size_t turns = 0;
  for (const auto& span : req.unit_spans) {
    const std::string_view content(prompt.data() + span.char_start, span.char_end - span.char_start);
    if (span.id == "c.0") {
      if (!content.starts_with("[")) turns = 1 + static_cast<std::size_t>(std::count(content.begin(), content.end(), '\n'));
      continue;
    }
    if (!is_item_id(span.id)) continue;
    auto bias = config_.block_bias.find(span.id[0]);
    const double w = (bias == config_.block_bias.end() ? 1.0 : bias->second) *
                     static_cast<double>(std::max<std::size_t>(1, text::word_count(content)));
    pool.push_back({strip_bullet(content), w});
    total += w;
  }

  if (uniform01(rng) < config_.malformed_rate) return "{\"" + name + "\": \"Well, I";

  if (prompt.find("Please output TEN candidates") != std::string::npos) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (int i = 0; i < 10; ++i) {
      auto u = make_utterance(rng, pool, total, turns, req.config);
      nlohmann::ordered_json j;
      j[name] = u.text;
      j["Did the conversation end with " + name + "'s utterance?"] = u.end;
      arr.push_back(std::move(j));
    }
    return arr.dump(1);
  }

  auto u = make_utterance(rng, pool, total, turns, req.config);
  return render_output(rng, name, u);
}

std::map<std::string, AttentionTensor> MockBackend::mock_attention(const GenerationRequest& req,
                                                                   std::size_t n) const {
  const auto tokens = tokenizer_.tokenize(req.prompt_text);
  const std::size_t T = tokens.size();
  const std::size_t L = config_.layers;
  const std::size_t H = config_.heads;

  // token -> owning span (or none) and per-token base weight
  std::vector<double> base(T, 1.0);
  std::vector<std::pair<std::size_t, std::size_t>> span_tokens(req.unit_spans.size());
  std::size_t t = 0;
  for (std::size_t k = 0; k < req.unit_spans.size(); ++k) {
    const auto& sp = req.unit_spans[k];
    while (t < T && tokens[t].begin < sp.char_start) ++t;
    const std::size_t first = t;
    while (t < T && tokens[t].end <= sp.char_end) ++t;
    span_tokens[k] = {first, t};
    auto bias = config_.block_bias.find(block_letter_of(sp.id));
    const double b = bias == config_.block_bias.end() ? 1.0 : bias->second;
    for (std::size_t i = first; i < t; ++i) {
      const auto word = std::string_view(req.prompt_text).substr(tokens[i].begin, tokens[i].end - tokens[i].begin);
      base[i] = b * (0.25 + unit_interval(fnv1a(word))) *
                (1.0 + 0.5 * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(1, T)));
    }
  }

  std::map<std::string, AttentionTensor> out;
  std::vector<AttentionTensor*> slot(req.unit_spans.size());
  for (std::size_t k = 0; k < req.unit_spans.size(); ++k) {
    const auto [a, b] = span_tokens[k];
    slot[k] = &out.emplace(req.unit_spans[k].id, AttentionTensor(L, H, b - a, n)).first->second;
  }

  const std::uint64_t root = mix_seed({fnv1a(req.prompt_text), req.config.seed, 0xa77e});
  std::vector<double> row(T);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t j = 0; j < n; ++j) {
        FastRng r(mix_seed({root, l, h, j}));
        double sum = 0.0;
        for (std::size_t i = 0; i < T; ++i) {
          row[i] = base[i] * (0.2 + r.next());
          sum += row[i];
        }
        const double mass = j == 0 ? 1.0 : 1.0 - config_.response_self_mass;
        const double scale = sum > 0.0 ? mass / sum : 0.0;
        for (std::size_t k = 0; k < req.unit_spans.size(); ++k) {
          const auto [a, b] = span_tokens[k];
          for (std::size_t i = a; i < b; ++i) slot[k]->at(l, h, i - a, j) = row[i] * scale;
        }
      }
  return out;
}

std::vector<std::vector<double>> MockBackend::embed(const std::vector<std::string>& texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  std::lock_guard lock(mu_);
  for (const auto& t : texts) {
    auto it = embeddings_.find(t);
    out.push_back(it != embeddings_.end() ? it->second : hashed_bow_embedding(t, config_.embed_dim));
  }
  return out;
}

}  // namespace dialdiv::backend
