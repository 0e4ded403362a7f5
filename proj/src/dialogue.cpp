#include "dialdiv/dialogue.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "dialdiv/errors.hpp"
#include "dialdiv/seed.hpp"
#include "dialdiv/text.hpp"

namespace dialdiv::dialogue {

using nlohmann::json;

std::string first_balanced(std::string_view raw, char open) {
  const char close = open == '{' ? '}' : ']';
  for (std::size_t start = raw.find(open); start != std::string_view::npos;
       start = raw.find(open, start + 1)) {
    int depth = 0;
    bool in_str = false;
    bool esc = false;
    for (std::size_t i = start; i < raw.size(); ++i) {
      const char ch = raw[i];
      if (in_str) {
        if (esc) esc = false;
        else if (ch == '\\') esc = true;
        else if (ch == '"') in_str = false;
        continue;
      }
      if (ch == '"') in_str = true;
      else if (ch == '{' || ch == '[') ++depth;
      else if (ch == '}' || ch == ']') {
        if (--depth == 0) {
          if (ch != close) break;
          return std::string(raw.substr(start, i - start + 1));
        }
      }
    }
  }
  return {};
}

namespace {

std::optional<bool> lenient_bool(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number()) return v.get<double>() != 0.0;
  if (v.is_string()) {
    const auto s = text::normalize(v.get<std::string>());
    if (s == "true" || s == "yes") return true;
    if (s == "false" || s == "no") return false;
  }
  return std::nullopt;
}

std::optional<json> parse_lenient(const std::string& body) {
  auto j = json::parse(body, nullptr, false);
  if (!j.is_discarded()) return j;
  // Python-style literals
  std::string fixed = text::replace_whole_word(body, "True", "true");
  fixed = text::replace_whole_word(fixed, "False", "false");
  j = json::parse(fixed, nullptr, false);
  if (!j.is_discarded()) return j;
  return std::nullopt;
}

std::optional<ParsedUtterance> from_object(const json& obj, const std::string& speaker) {
  if (!obj.is_object()) return std::nullopt;
  const std::string flag_prefix = "Did the conversation end";
  ParsedUtterance out;
  const json* utt = nullptr;
  if (obj.contains(speaker)) utt = &obj.at(speaker);
  else
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!it.key().starts_with(flag_prefix) && it->is_string()) {
        utt = &*it;
        break;
      }
  if (!utt || !utt->is_string()) return std::nullopt;
  out.utterance = utt->get<std::string>();
  if (text::split_ws(out.utterance).empty()) return std::nullopt;
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (it.key().starts_with(flag_prefix)) {
      if (auto b = lenient_bool(*it)) {
        out.ended = *b;
        out.end_flag_present = true;
      }
      break;
    }
  if (!out.end_flag_present) spdlog::debug("end flag missing for {}; treating as false", speaker);
  return out;
}

}  // namespace

std::optional<ParsedUtterance> parse_utterance(const std::string& raw, const std::string& speaker) {
  const auto body = first_balanced(raw, '{');
  if (body.empty()) return std::nullopt;
  auto j = parse_lenient(body);
  if (!j) return std::nullopt;
  return from_object(*j, speaker);
}

std::vector<ParsedUtterance> parse_candidates(const std::string& raw, const std::string& speaker) {
  std::vector<ParsedUtterance> out;
  const auto arr = first_balanced(raw, '[');
  if (!arr.empty())
    if (auto j = parse_lenient(arr); j && j->is_array())
      for (const auto& e : *j)
        if (auto p = from_object(e, speaker)) out.push_back(std::move(*p));
  if (!out.empty()) return out;
  std::string_view rest(raw);
  while (true) {
    auto body = first_balanced(rest, '{');
    if (body.empty()) break;
    if (auto j = parse_lenient(body))
      if (auto p = from_object(*j, speaker)) out.push_back(std::move(*p));
    rest.remove_prefix(rest.find(body) + body.size());
  }
  return out;
}

namespace {

struct Generated {
  std::vector<ParsedUtterance> parsed;
  std::string raw;
  int attempts = 0;
};

Generated generate_parsed(backend::GenerationBackend& be, const prompt::Prompt& p,
                          const std::string& speaker, backend::DecodingConfig cfg,
                          std::uint64_t seed, int retries, bool sequential) {
  Generated g;
  for (int attempt = 0; attempt <= retries; ++attempt) {
    cfg.seed = seed + static_cast<std::uint64_t>(attempt);
    g.raw = backend::generate(be, p, cfg, false).text;
    g.attempts = attempt + 1;
    if (sequential) {
      g.parsed = parse_candidates(g.raw, speaker);
    } else if (auto u = parse_utterance(g.raw, speaker)) {
      g.parsed = {std::move(*u)};
    }
    if (!g.parsed.empty()) return g;
    spdlog::debug("unparseable output for {} (attempt {})", speaker, attempt + 1);
  }
  if (sequential) throw NoCandidates("no candidates parsed for " + speaker);
  throw ParseExhausted("could not parse an utterance for " + speaker + " after " +
                       std::to_string(retries + 1) + " attempts");
}

std::vector<std::uint64_t> sample_seeds(std::uint64_t trial, int turn, SeedPurpose purpose, int n) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < n; ++i)
    out.push_back(turn_seed(trial, static_cast<std::uint64_t>(turn), purpose, static_cast<std::uint64_t>(i)));
  return out;
}

Transcript run(const corpus::Case& c, const EngineConfig& cfg, const Backends& be,
               std::uint64_t trial_seed) {
  if (!be.generator) throw Error("no generation backend");
  if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0)) throw InvalidLambda("lambda must lie in [0, 1]");
  if (cfg.max_turns < 1) throw Error("max_turns must be positive");
  cfg.decoding.validate();
  if (cfg.revision.enabled) cfg.revision.validate();
  const auto& tmpl = cfg.tmpl ? *cfg.tmpl : prompt::Template::builtin();
  auto& gen = *be.generator;
  auto& judge_be = be.judge ? *be.judge : gen;

  Transcript tr;
  tr.case_id = c.id;
  tr.trial_seed = trial_seed;
  tr.speaker_a = c.agent_a.name;
  tr.speaker_b = c.agent_b.name;

  std::vector<prompt::DialogueLine> lines;
  auto speaker = c.opening_speaker;
  const bool need_scores = cfg.lambda > 0.0 || cfg.retain_one || cfg.post_removal_stats;

  try {
    for (int t = 0; t < cfg.max_turns; ++t) {
      Turn turn;
      turn.index = t;
      turn.speaker = speaker;
      const auto& self = c.agent(speaker);
      const auto& listener = c.agent(corpus::other(speaker));
      turn.speaker_name = self.name;

      const auto full = prompt::assemble(c, lines, speaker, cfg.layout, tmpl);

      std::vector<attention::UnitScore> scores;
      if (need_scores) {
        attention::ScoringOptions so{cfg.score_samples, cfg.reducer, cfg.decoding,
                                     sample_seeds(trial_seed, t, SeedPurpose::kScore, cfg.score_samples)};
        scores = attention::score_units(full, gen, so);
      } else {
        for (const auto* u : prompt::removable_units(full)) scores.push_back({u->id, 0.0, {}, cfg.reducer});
      }

      prompt::Prompt pruned;
      if (cfg.retain_one) {
        pruned = pruning::retain_one(full, scores, cfg.retain_one->block, cfg.retain_one->which);
        std::set<std::string> kept;
        for (const auto* u : prompt::removable_units(pruned)) kept.insert(u->id);
        turn.plan.lambda = cfg.lambda;
        turn.plan.strategy = cfg.strategy;
        for (const auto& s : scores)
          if (!kept.contains(s.unit_id)) {
            turn.plan.removed_unit_ids.push_back(s.unit_id);
            turn.plan.removed_score_sum += s.a_u;
          }
        turn.plan.word_removal_ratio = pruning::word_removal_ratio(full, turn.plan);
      } else {
        turn.plan = pruning::plan(full, scores, cfg.lambda, cfg.strategy);
        pruned = pruning::apply(full, turn.plan);
      }
      turn.prompt_unit_ids = pruned.unit_ids();
      turn.prompt_blocks = pruned.block_sequence();

      const auto gen_prompt =
          cfg.sequential ? pruned.with_appended_instruction("sequential", tmpl.sequential_instruction)
                         : pruned;
      const auto gseed = turn_seed(trial_seed, static_cast<std::uint64_t>(t), SeedPurpose::kGenerate);
      auto g = generate_parsed(gen, gen_prompt, self.name, cfg.decoding, gseed, cfg.parse_retries,
                               cfg.sequential);
      turn.raw_output = g.raw;
      turn.parse_attempts = g.attempts;

      ParsedUtterance chosen;
      if (cfg.sequential) {
        turn.candidate_count = g.parsed.size();
        if (g.parsed.size() < 10)
          spdlog::info("{} turn {}: only {} candidates", c.id, t, g.parsed.size());
        Rng pick(turn_seed(trial_seed, static_cast<std::uint64_t>(t), SeedPurpose::kCandidatePick));
        turn.candidate_index = uniform_index(pick, g.parsed.size());
        chosen = g.parsed[turn.candidate_index];
      } else {
        chosen = g.parsed.front();
      }

      revision::JudgeSetup js{&judge_be, self.name, listener.name, cfg.decoding, cfg.revision.judge_calls};
      if (cfg.revision.enabled && !cfg.sequential) {
        std::vector<std::string> statements;
        for (const auto& id : turn.plan.removed_unit_ids) statements.push_back(full.find(id)->content);
        std::vector<ParsedUtterance> parsed{chosen};
        auto backup = [&](std::size_t k) {
          auto b = generate_parsed(gen, gen_prompt, self.name, cfg.decoding,
                                   turn_seed(trial_seed, static_cast<std::uint64_t>(t), SeedPurpose::kBackup, k),
                                   cfg.parse_retries, false);
          parsed.push_back(b.parsed.front());
          return b.parsed.front().utterance;
        };
        std::vector<std::string> cands{chosen.utterance};
        if (!statements.empty())
          for (int k = 1; k <= cfg.revision.backup_count; ++k) cands.push_back(backup(static_cast<std::size_t>(k)));
        auto out = revision::revise(cands, statements, js, cfg.revision,
                                    turn_seed(trial_seed, static_cast<std::uint64_t>(t), SeedPurpose::kJudge),
                                    backup);
        turn.revision_events = out.events;
        turn.removed_inconsistency = out.events.front().mean_score;
        chosen = parsed[out.chosen_index];
      }
      if (cfg.full_prompt_inconsistency) {
        turn.full_inconsistency =
            revision::estimate_full_prompt_inconsistency(
                full, chosen.utterance, js,
                turn_seed(trial_seed, static_cast<std::uint64_t>(t), SeedPurpose::kJudge, 1000))
                .mean;
      }
      if (cfg.post_removal_stats) {
        attention::ScoringOptions so{cfg.score_samples, cfg.reducer, cfg.decoding,
                                     sample_seeds(trial_seed, t, SeedPurpose::kScore, cfg.score_samples)};
        auto after = prompt::removable_units(pruned).empty() ? std::vector<attention::UnitScore>{}
                                                             : attention::score_units(pruned, gen, so);
        turn.post_removal = attention::post_removal_stats(scores, after);
      }

      turn.utterance = chosen.utterance;
      turn.ended = chosen.ended;
      lines.push_back({self.name, chosen.utterance});
      tr.turns.push_back(std::move(turn));
      if (chosen.ended) {
        tr.ended_by_flag = true;
        break;
      }
      speaker = corpus::other(speaker);
    }
  } catch (const BackendError& e) {
    tr.failed = true;
    tr.error = e.what();
    spdlog::error("{}: backend failure: {}", c.id, e.what());
  }
  return tr;
}

}  // namespace

Transcript run_dialogue(const corpus::Case& c, const EngineConfig& config, const Backends& backends,
                        std::uint64_t trial_seed) {
  return run(c, config, backends, trial_seed);
}

Transcript run_sequential(const corpus::Case& c, EngineConfig config, const Backends& backends,
                          std::uint64_t trial_seed) {
  config.sequential = true;
  return run(c, config, backends, trial_seed);
}

bool check_alternation(const Transcript& t, corpus::AgentId opening) {
  auto expect = opening;
  for (const auto& turn : t.turns) {
    if (turn.speaker != expect) return false;
    expect = corpus::other(expect);
  }
  return true;
}

std::string dialogue_text(const Transcript& t) {
  std::vector<prompt::DialogueLine> lines;
  for (const auto& turn : t.turns) lines.push_back({turn.speaker_name, turn.utterance});
  return prompt::render_dialogue(lines);
}

// ---------------------------------------------------------------------------
// serialization

json to_json(const Turn& t) {
  json events = json::array();
  for (const auto& e : t.revision_events)
    events.push_back({{"candidate_index", e.candidate_index},
                      {"scores", e.scores},
                      {"mean_score", e.mean_score},
                      {"accepted", e.accepted}});
  json blocks = json::array();
  for (auto b : t.prompt_blocks) blocks.push_back(prompt::to_string(b));
  json j = {
      {"type", "turn"},
      {"index", t.index},
      {"speaker", t.speaker == corpus::AgentId::kA ? "a" : "b"},
      {"speaker_name", t.speaker_name},
      {"utterance", t.utterance},
      {"ended", t.ended},
      {"plan",
       {{"lambda", t.plan.lambda},
        {"strategy", pruning::to_string(t.plan.strategy)},
        {"removed_unit_ids", t.plan.removed_unit_ids},
        {"removed_score_sum", t.plan.removed_score_sum},
        {"target", t.plan.target},
        {"word_removal_ratio", t.plan.word_removal_ratio}}},
      {"prompt_unit_ids", t.prompt_unit_ids},
      {"prompt_blocks", std::move(blocks)},
      {"revision_events", std::move(events)},
      {"parse_attempts", t.parse_attempts},
      {"raw_output", t.raw_output},
  };
  if (t.removed_inconsistency) j["removed_inconsistency"] = *t.removed_inconsistency;
  if (t.full_inconsistency) j["full_inconsistency"] = *t.full_inconsistency;
  if (t.post_removal)
    j["post_removal"] = {{"retention_percent", t.post_removal->retention_percent},
                         {"top_shares", t.post_removal->top_shares}};
  if (t.candidate_count) {
    j["candidate_count"] = t.candidate_count;
    j["candidate_index"] = t.candidate_index;
  }
  return j;
}

Turn turn_from_json(const json& j) {
  Turn t;
  t.index = j.at("index").get<int>();
  t.speaker = j.at("speaker").get<std::string>() == "a" ? corpus::AgentId::kA : corpus::AgentId::kB;
  t.speaker_name = j.at("speaker_name").get<std::string>();
  t.utterance = j.at("utterance").get<std::string>();
  t.ended = j.at("ended").get<bool>();
  const auto& p = j.at("plan");
  t.plan.lambda = p.at("lambda").get<double>();
  t.plan.strategy = pruning::strategy_from_string(p.at("strategy").get<std::string>());
  t.plan.removed_unit_ids = p.at("removed_unit_ids").get<std::vector<std::string>>();
  t.plan.removed_score_sum = p.at("removed_score_sum").get<double>();
  t.plan.target = p.at("target").get<double>();
  t.plan.word_removal_ratio = p.at("word_removal_ratio").get<double>();
  t.prompt_unit_ids = j.at("prompt_unit_ids").get<std::vector<std::string>>();
  for (const auto& b : j.at("prompt_blocks")) {
    const auto name = b.get<std::string>();
    for (auto id : {prompt::BlockId::kBasicInfo, prompt::BlockId::kHumanNeeds, prompt::BlockId::kMemory,
                    prompt::BlockId::kPreviousDialogues, prompt::BlockId::kEnvironment,
                    prompt::BlockId::kCurrentDialogue, prompt::BlockId::kOpening,
                    prompt::BlockId::kTaskDescription, prompt::BlockId::kOutputInstruction})
      if (prompt::to_string(id) == name) t.prompt_blocks.push_back(id);
  }
  for (const auto& e : j.at("revision_events"))
    t.revision_events.push_back({e.at("candidate_index").get<int>(),
                                 e.at("scores").get<std::vector<double>>(),
                                 e.at("mean_score").get<double>(), e.at("accepted").get<bool>()});
  t.parse_attempts = j.value("parse_attempts", 1);
  t.raw_output = j.value("raw_output", "");
  if (j.contains("removed_inconsistency")) t.removed_inconsistency = j["removed_inconsistency"].get<double>();
  if (j.contains("full_inconsistency")) t.full_inconsistency = j["full_inconsistency"].get<double>();
  if (j.contains("post_removal"))
    t.post_removal = attention::PostRemovalStats{
        j["post_removal"].at("retention_percent").get<double>(),
        j["post_removal"].at("top_shares").get<std::vector<double>>()};
  t.candidate_count = j.value("candidate_count", std::size_t{0});
  t.candidate_index = j.value("candidate_index", std::size_t{0});
  return t;
}

std::string to_jsonl(const Transcript& t) {
  std::string out = json{{"type", "header"},
                         {"case_id", t.case_id},
                         {"condition", t.condition},
                         {"trial", t.trial},
                         {"trial_seed", t.trial_seed},
                         {"speaker_a", t.speaker_a},
                         {"speaker_b", t.speaker_b}}
                        .dump();
  out += '\n';
  for (const auto& turn : t.turns) out += to_json(turn).dump() + '\n';
  out += json{{"type", "footer"},
              {"turns", t.turns.size()},
              {"ended_by_flag", t.ended_by_flag},
              {"failed", t.failed},
              {"error", t.error}}
             .dump();
  out += '\n';
  return out;
}

Transcript from_jsonl(std::string_view text) {
  Transcript t;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (text::split_ws(line).empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("type")) throw ParseError("bad transcript line");
    const auto type = j["type"].get<std::string>();
    if (type == "header") {
      header = true;
      t.case_id = j.at("case_id").get<std::string>();
      t.condition = j.value("condition", "");
      t.trial = j.value("trial", 0);
      t.trial_seed = j.value("trial_seed", std::uint64_t{0});
      t.speaker_a = j.value("speaker_a", "");
      t.speaker_b = j.value("speaker_b", "");
    } else if (type == "turn") {
      t.turns.push_back(turn_from_json(j));
    } else if (type == "footer") {
      t.ended_by_flag = j.value("ended_by_flag", false);
      t.failed = j.value("failed", false);
      t.error = j.value("error", "");
    }
  }
  if (!header) throw ParseError("transcript has no header line");
  return t;
}

void write_transcript(const Transcript& t, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << to_jsonl(t);
}

Transcript read_transcript(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_jsonl(ss.str());
}

}  // namespace dialdiv::dialogue
