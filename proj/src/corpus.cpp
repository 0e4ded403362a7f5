#include "dialdiv/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "dialdiv/errors.hpp"
#include "dialdiv/seed.hpp"
#include "dialdiv/text.hpp"

namespace dialdiv::corpus {

using nlohmann::json;

namespace {

constexpr std::string_view kNeedNames[] = {"fullness", "social", "fun", "health", "energy"};
constexpr std::string_view kNeedAdjectives[] = {"hungry", "lonely", "bored", "unwell", "tired"};
constexpr std::string_view kModifierNames[] = {"slightly", "none", "very", "extremely"};
constexpr std::string_view kEmotionNames[] = {"disgusted", "afraid", "sad",    "surprised",
                                              "happy",     "angry",  "neutral"};
constexpr std::string_view kClosenessNames[] = {"distant", "rather_close", "close", "very_close"};
constexpr std::string_view kClosenessText[] = {"distant", "rather close", "close", "very close"};

template <typename E, std::size_t N>
E parse_enum(const json& j, const std::string_view (&names)[N], const std::string& field) {
  if (!j.is_string()) throw SchemaError(field, "expected a string");
  auto s = j.get<std::string>();
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return static_cast<E>(i);
  throw SchemaError(field, "unknown value '" + s + "'");
}

std::vector<std::string> string_list(const json& j, const std::string& field) {
  if (!j.is_array()) throw SchemaError(field, "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw SchemaError(field, "expected an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

const json& require(const json& j, const char* key, const std::string& prefix) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(prefix + key, "missing");
  return *it;
}

std::string require_string(const json& j, const char* key, const std::string& prefix) {
  const auto& v = require(j, key, prefix);
  if (!v.is_string()) throw SchemaError(prefix + key, "expected a string");
  return v.get<std::string>();
}

json needs_to_json(const HumanNeeds& h) {
  json needs = json::array();
  for (const auto& u : h.unsatisfied_needs)
    needs.push_back({{"need", to_string(u.need)}, {"modifier", to_string(u.modifier)}});
  return {{"unsatisfied_needs", needs},
          {"emotion", to_string(h.emotion)},
          {"closeness", to_string(h.closeness)}};
}

HumanNeeds needs_from_json(const json& j, const std::string& prefix) {
  if (!j.is_object()) throw SchemaError(prefix, "expected an object");
  HumanNeeds h;
  const auto& needs = require(j, "unsatisfied_needs", prefix + ".");
  if (!needs.is_array()) throw SchemaError(prefix + ".unsatisfied_needs", "expected an array");
  for (const auto& n : needs) {
    h.unsatisfied_needs.push_back(
        {parse_enum<Need>(require(n, "need", prefix + ".unsatisfied_needs."), kNeedNames,
                          prefix + ".unsatisfied_needs.need"),
         parse_enum<Modifier>(require(n, "modifier", prefix + ".unsatisfied_needs."),
                              kModifierNames, prefix + ".unsatisfied_needs.modifier")});
  }
  h.emotion = parse_enum<Emotion>(require(j, "emotion", prefix + "."), kEmotionNames,
                                  prefix + ".emotion");
  h.closeness = parse_enum<Closeness>(require(j, "closeness", prefix + "."), kClosenessNames,
                                      prefix + ".closeness");
  return h;
}

json agent_to_json(const AgentProfile& a) {
  json j = {{"name", a.name},
            {"basic_info_items", a.basic_info_items},
            {"memory_items", a.memory_items}};
  j["human_needs"] = a.human_needs ? needs_to_json(*a.human_needs) : json(nullptr);
  return j;
}

AgentProfile agent_from_json(const json& j, const std::string& field) {
  if (!j.is_object()) throw SchemaError(field, "expected an object");
  AgentProfile a;
  a.name = require_string(j, "name", field + ".");
  a.basic_info_items = string_list(require(j, "basic_info_items", field + "."),
                                   field + ".basic_info_items");
  a.memory_items = string_list(require(j, "memory_items", field + "."), field + ".memory_items");
  if (auto it = j.find("human_needs"); it != j.end() && !it->is_null())
    a.human_needs = needs_from_json(*it, field + ".human_needs");
  return a;
}

bool canonical_variant(const std::string& v) { return v == "ga" || v == "ha"; }

// Shared duplicate/delete loop; `words(i)` gives the word count of item i.
template <typename T, typename WordsFn>
std::vector<T> perturb_generic(std::vector<T> items, std::size_t target, const ItemChooser& choose,
                               WordsFn words) {
  auto total = [&] {
    std::size_t n = 0;
    for (const auto& it : items) n += words(it);
    return n;
  };
  std::size_t current = total();
  if (current < target) {
    if (items.empty()) throw EmptyBlock("cannot duplicate items of an empty block");
    if (current == 0) throw EmptyBlock("block has items but no words");
    while (current < target) {
      std::size_t i = choose(items.size());
      T copy = items[i];
      current += words(copy);
      items.insert(items.begin() + static_cast<std::ptrdiff_t>(i) + 1, std::move(copy));
    }
  } else {
    while (current > target && items.size() > 1) {
      std::size_t i = choose(items.size());
      current -= words(items[i]);
      items.erase(items.begin() + static_cast<std::ptrdiff_t>(i));
    }
  }
  return items;
}

}  // namespace

std::string_view to_string(Need n) { return kNeedNames[static_cast<int>(n)]; }
std::string_view to_string(Modifier m) { return kModifierNames[static_cast<int>(m)]; }
std::string_view to_string(Emotion e) { return kEmotionNames[static_cast<int>(e)]; }
std::string_view to_string(Closeness c) { return kClosenessNames[static_cast<int>(c)]; }

std::vector<std::string> HumanNeeds::render(const std::string& self, const std::string& other) const {
  std::vector<std::string> out;
  for (const auto& u : unsatisfied_needs) {
    std::string line = self + " is ";
    if (u.modifier != Modifier::kNone) {
      line += to_string(u.modifier);
      line += ' ';
    }
    line += kNeedAdjectives[static_cast<int>(u.need)];
    line += '.';
    out.push_back(std::move(line));
  }
  if (emotion != Emotion::kNeutral)
    out.push_back(self + " is feeling extremely " + std::string(to_string(emotion)) + ".");
  out.push_back(self + " is feeling " + std::string(kClosenessText[static_cast<int>(closeness)]) +
                " to " + other + ".");
  return out;
}

void validate(const Case& c) {
  if (c.id.empty()) throw SchemaError("id", "must be nonempty");
  if (c.agent_a.name.empty()) throw SchemaError("agent_a.name", "must be nonempty");
  if (c.agent_b.name.empty()) throw SchemaError("agent_b.name", "must be nonempty");
  if (c.agent_a.name == c.agent_b.name)
    throw SchemaError("agent_b.name", "agents must have distinct names");
  const bool strict = canonical_variant(c.variant);
  for (AgentId id : {AgentId::kA, AgentId::kB}) {
    const auto& a = c.agent(id);
    const std::string prefix = id == AgentId::kA ? "agent_a." : "agent_b.";
    if (strict && a.basic_info_items.size() != 5)
      throw SchemaError(prefix + "basic_info_items",
                        "expected 5 items, got " + std::to_string(a.basic_info_items.size()));
    if (strict && (a.memory_items.size() < 30 || a.memory_items.size() > 45))
      throw SchemaError(prefix + "memory_items",
                        "expected 30..45 items, got " + std::to_string(a.memory_items.size()));
    if (a.human_needs) {
      std::set<Need> seen;
      for (const auto& u : a.human_needs->unsatisfied_needs)
        if (!seen.insert(u.need).second)
          throw SchemaError(prefix + "human_needs.unsatisfied_needs", "duplicate need");
      auto n = a.human_needs->render(a.name, c.agent(other(id)).name).size();
      if (n < 1 || n > 7)
        throw SchemaError(prefix + "human_needs", "renders " + std::to_string(n) + " items");
    }
  }
  if (strict && c.previous_dialogues.size() > 3)
    throw SchemaError("previous_dialogues", "expected 0..3 dialogues, got " +
                                                std::to_string(c.previous_dialogues.size()));
  if (strict) {
    const auto& env = c.environment.items;
    if (env.size() != 2 || env[0].kind != EnvKind::kLocation || env[1].kind != EnvKind::kSituation)
      throw SchemaError("environment", "expected exactly [location, situation]");
  }
  if (c.environment.items.empty() && strict) throw SchemaError("environment", "empty");
}

json to_json(const Case& c) {
  json j;
  j["id"] = c.id;
  j["timestamp"] = c.timestamp;
  j["variant"] = c.variant;
  j["agent_a"] = agent_to_json(c.agent_a);
  j["agent_b"] = agent_to_json(c.agent_b);
  j["previous_dialogues"] = c.previous_dialogues;
  const auto& env = c.environment.items;
  if (env.size() == 2 && env[0].kind == EnvKind::kLocation && env[1].kind == EnvKind::kSituation) {
    j["environment"] = {{"location", env[0].text}, {"situation", env[1].text}};
  } else {
    json arr = json::array();
    for (const auto& e : env)
      arr.push_back({{e.kind == EnvKind::kLocation ? "location" : "situation", e.text}});
    j["environment"] = arr;
  }
  j["opening_speaker"] = c.opening_speaker == AgentId::kA ? "a" : "b";
  return j;
}

Case from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("<root>", "expected an object");
  Case c;
  c.id = require_string(j, "id", "");
  c.timestamp = require_string(j, "timestamp", "");
  if (auto it = j.find("variant"); it != j.end()) {
    if (!it->is_string()) throw SchemaError("variant", "expected a string");
    c.variant = it->get<std::string>();
  }
  c.agent_a = agent_from_json(require(j, "agent_a", ""), "agent_a");
  c.agent_b = agent_from_json(require(j, "agent_b", ""), "agent_b");
  c.previous_dialogues = string_list(require(j, "previous_dialogues", ""), "previous_dialogues");
  const auto& env = require(j, "environment", "");
  if (env.is_object()) {
    c.environment.items = {{EnvKind::kLocation, require_string(env, "location", "environment.")},
                           {EnvKind::kSituation, require_string(env, "situation", "environment.")}};
  } else if (env.is_array()) {
    for (const auto& e : env) {
      if (!e.is_object() || e.size() != 1) throw SchemaError("environment", "malformed item");
      auto it = e.begin();
      if (!it->is_string()) throw SchemaError("environment", "item text must be a string");
      if (it.key() == "location")
        c.environment.items.push_back({EnvKind::kLocation, it->get<std::string>()});
      else if (it.key() == "situation")
        c.environment.items.push_back({EnvKind::kSituation, it->get<std::string>()});
      else
        throw SchemaError("environment", "unknown item kind '" + it.key() + "'");
    }
  } else {
    throw SchemaError("environment", "expected an object or array");
  }
  auto opening = require_string(j, "opening_speaker", "");
  if (opening == "a")
    c.opening_speaker = AgentId::kA;
  else if (opening == "b")
    c.opening_speaker = AgentId::kB;
  else
    throw SchemaError("opening_speaker", "expected 'a' or 'b'");
  validate(c);
  return c;
}

Case load_case(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open case file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

void save_case(const Case& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(c).dump(2) << '\n';
}

std::filesystem::path ha_sibling(const std::filesystem::path& ga_path) {
  return std::filesystem::path(ga_path.string() + ".ha");
}

std::vector<Case> load_corpus(const std::filesystem::path& dir, Dataset dataset) {
  if (!std::filesystem::is_directory(dir)) throw ParseError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  const std::string suffix = dataset == Dataset::kGA ? ".json" : ".json.ha";
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() > suffix.size() && name.ends_with(suffix)) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Case> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(load_case(f));
  return out;
}

HumanNeeds draw_human_needs(const std::string& case_id, std::uint64_t seed, AgentId agent,
                            const NeedsProbabilities& p) {
  Rng rng(mix_seed({fnv1a(case_id), seed, static_cast<std::uint64_t>(agent) + 1}));
  HumanNeeds h;
  for (Need n : kAllNeeds) {
    double threshold = n == Need::kEnergy ? p.unsatisfied_energy : p.unsatisfied;
    bool unsatisfied = uniform01(rng) < threshold;
    auto modifier = static_cast<Modifier>(uniform_index(rng, 4));
    if (unsatisfied) h.unsatisfied_needs.push_back({n, modifier});
  }
  // One draw split into per-emotion slots keeps the emotions exclusive with
  // exact marginals.
  double u = uniform01(rng);
  h.emotion = Emotion::kNeutral;
  for (std::size_t k = 0; k < std::size(kNonNeutralEmotions); ++k) {
    if (u < p.per_emotion * static_cast<double>(k + 1)) {
      h.emotion = kNonNeutralEmotions[k];
      break;
    }
  }
  double v = uniform01(rng);
  double acc = 0.0;
  h.closeness = Closeness::kVeryClose;
  for (int k = 0; k < 4; ++k) {
    acc += p.closeness[k];
    if (v < acc) {
      h.closeness = static_cast<Closeness>(k);
      break;
    }
  }
  return h;
}

Case sample_human_needs(const Case& c, std::uint64_t seed) {
  if (c.agent_a.human_needs || c.agent_b.human_needs)
    throw AlreadyAugmented("case " + c.id + " already has human needs");
  Case out = c;
  out.agent_a.human_needs = draw_human_needs(c.id, seed, AgentId::kA);
  out.agent_b.human_needs = draw_human_needs(c.id, seed, AgentId::kB);
  if (out.variant == "ga") out.variant = "ha";
  return out;
}

Case replace_names(const Case& c, const std::map<std::string, std::string>& mapping) {
  for (const auto* name : {&c.agent_a.name, &c.agent_b.name}) {
    auto it = mapping.find(*name);
    if (it == mapping.end()) throw IncompleteMapping("mapping does not cover '" + *name + "'");
    if (it->second.empty()) throw IncompleteMapping("empty replacement for '" + *name + "'");
  }
  if (mapping.at(c.agent_a.name) == mapping.at(c.agent_b.name))
    throw IncompleteMapping("replacement names must be distinct");

  // Longer names first so "Mei Lin" wins over a hypothetical "Lin".
  std::vector<std::pair<std::string, std::string>> pairs(mapping.begin(), mapping.end());
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& x, const auto& y) { return x.first.size() > y.first.size(); });

  // Two-phase substitution through placeholders makes swaps (A->B, B->A) safe.
  auto rewrite = [&](const std::string& s) {
    std::string tmp = s;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      tmp = text::replace_whole_word(tmp, pairs[i].first, "\x01" + std::to_string(i) + "\x02");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const std::string ph = "\x01" + std::to_string(i) + "\x02";
      std::size_t pos = 0;
      while ((pos = tmp.find(ph, pos)) != std::string::npos) {
        tmp.replace(pos, ph.size(), pairs[i].second);
        pos += pairs[i].second.size();
      }
    }
    return tmp;
  };
  auto rewrite_all = [&](std::vector<std::string>& v) {
    for (auto& s : v) s = rewrite(s);
  };

  Case out = c;
  for (AgentId id : {AgentId::kA, AgentId::kB}) {
    auto& a = out.agent(id);
    a.name = rewrite(a.name);
    rewrite_all(a.basic_info_items);
    rewrite_all(a.memory_items);
  }
  rewrite_all(out.previous_dialogues);
  for (auto& e : out.environment.items) e.text = rewrite(e.text);
  return out;
}

std::vector<std::string> perturb_items(std::vector<std::string> items, std::size_t target_words,
                                       const ItemChooser& choose) {
  return perturb_generic(std::move(items), target_words, choose,
                         [](const std::string& s) { return text::word_count(s); });
}

Case perturb_block_length(const Case& c, std::size_t target_words, const ItemChooser& choose,
                          const PerturbOptions& opts) {
  if (target_words == 0) throw Error("target_words must be positive");
  Case out = c;
  for (AgentId id : {AgentId::kA, AgentId::kB}) {
    auto& a = out.agent(id);
    a.basic_info_items = perturb_items(std::move(a.basic_info_items), target_words, choose);
    if (opts.include_memory)
      a.memory_items = perturb_items(std::move(a.memory_items), target_words, choose);
  }
  if (!out.previous_dialogues.empty())
    out.previous_dialogues = perturb_items(std::move(out.previous_dialogues), target_words, choose);
  out.environment.items = perturb_generic(std::move(out.environment.items), target_words, choose,
                                          [](const EnvItem& e) { return text::word_count(e.text); });
  out.variant = "bln" + std::to_string(target_words);
  return out;
}

Case perturb_block_length(const Case& c, std::size_t target_words, std::uint64_t seed,
                          const PerturbOptions& opts) {
  auto rng = std::make_shared<Rng>(mix_seed({fnv1a(c.id), seed, 0x626c6eull}));
  return perturb_block_length(
      c, target_words, [rng](std::size_t n) { return uniform_index(*rng, n); }, opts);
}

}  // namespace dialdiv::corpus
