#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include "dialdiv/backend.hpp"
#include "dialdiv/errors.hpp"
#include "dialdiv/wire.hpp"
#include "fixtures.hpp"

using namespace dialdiv;
using namespace dialdiv::backend;

namespace {

prompt::Prompt small_prompt() {
  return prompt::assemble(fixtures::small_case(), {}, corpus::AgentId::kA, prompt::PromptLayout{});
}

}  // namespace

TEST(Backend, TokenizerSplitsWordsAndPunctuation) {
  Tokenizer tok;
  std::string s = "Hi, Zoë's  cat_1!";
  auto t = tok.tokenize(s);
  std::vector<std::string> words;
  for (const auto& x : t) words.push_back(s.substr(x.begin, x.end - x.begin));
  EXPECT_EQ(words, (std::vector<std::string>{"Hi", ",", "Zoë", "'", "s", "cat_1", "!"}));
}

TEST(Backend, TokenSpansDisjointAndOrdered) {
  auto p = small_prompt();
  auto b = bind_token_spans(p, Tokenizer{});
  EXPECT_FALSE(p.units()[0]->token_span.has_value());
  std::size_t prev_end = 0;
  for (const auto* u : b.units()) {
    ASSERT_TRUE(u->token_span);
    EXPECT_GE(u->token_span->start, prev_end);
    EXPECT_GE(u->token_span->end, u->token_span->start);
    prev_end = u->token_span->end;
  }
  EXPECT_EQ(prev_end, Tokenizer{}.tokenize(p.text()).size());
}

TEST(Backend, DecodingValidation) {
  DecodingConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_DOUBLE_EQ(c.temperature, 0.8);
  EXPECT_DOUBLE_EQ(c.top_p, 0.9);
  c.temperature = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.top_p = 1.5;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Backend, JudgeScoreParsing) {
  EXPECT_EQ(parse_judge_score("Comment: fine\nScore: 3"), 3);
  EXPECT_EQ(parse_judge_score("score: 2 ... Score: 9"), 9);
  EXPECT_EQ(parse_judge_score("I'd say 7 out of 10."), 10);
  EXPECT_EQ(parse_judge_score("about 7."), 7);
  EXPECT_EQ(parse_judge_score("Score: 11"), std::nullopt);
  EXPECT_EQ(parse_judge_score("nothing here"), std::nullopt);
  EXPECT_EQ(parse_judge_score("Score: 7.5"), 7.5);
  EXPECT_EQ(parse_judge_score("3.5"), 3.5);
  EXPECT_EQ(parse_judge_score("Score: 0.5"), std::nullopt);
}

TEST(Backend, JudgeRetriesThenFails) {
  MockBackend be;
  be.add_rule({"inconsistencies", {"no idea", "Score: 4"}, {}});
  EXPECT_EQ(judge(be, {"a"}, "b", "A", "B", {}), 4);
  MockBackend never;
  never.add_rule({"inconsistencies", {"no idea"}, {}});
  EXPECT_THROW(judge(never, {"a"}, "b", "A", "B", {}), JudgeParseError);
  EXPECT_EQ(never.total_calls(), 3u);
}

TEST(Backend, JudgePromptShape) {
  auto s = judge_prompt({"x is 3", "y is 4"}, "hello", "Ann", "Bo");
  EXPECT_EQ(s.rfind("x is 3\ny is 4\nAnn is now in a chat with Bo and going to say 'hello'.", 0), 0u);
}

TEST(Backend, MockIsDeterministic) {
  MockBackend a, b;
  auto p = small_prompt();
  DecodingConfig cfg;
  cfg.seed = 77;
  auto r1 = generate(a, p, cfg, true);
  auto r2 = generate(b, p, cfg, true);
  EXPECT_EQ(r1.text, r2.text);
  EXPECT_EQ(r1.unit_attention, r2.unit_attention);
  cfg.seed = 78;
  EXPECT_NE(generate(a, p, cfg, false).text, r1.text);
  EXPECT_TRUE(generate(a, p, cfg, false).unit_attention.empty());
}

TEST(Backend, MockAttentionNormalized) {
  MockBackend be;
  auto p = small_prompt();
  DecodingConfig cfg;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    cfg.seed = seed;
    auto r = generate(be, p, cfg, true);
    ASSERT_FALSE(r.unit_attention.empty());
    const auto& any = r.unit_attention.begin()->second;
    for (std::size_t l = 0; l < any.layers; ++l)
      for (std::size_t h = 0; h < any.heads; ++h)
        for (std::size_t j = 0; j < any.response_tokens; ++j) {
          double sum = 0.0;
          for (const auto& [id, t] : r.unit_attention)
            for (std::size_t i = 0; i < t.unit_tokens; ++i) {
              EXPECT_GE(t.at(l, h, i, j), 0.0);
              sum += t.at(l, h, i, j);
            }
          EXPECT_LE(sum, 1.0 + 1e-9);
        }
  }
}

TEST(Backend, MockUtteranceIsJson) {
  MockBackend be;
  auto p = small_prompt();
  DecodingConfig cfg;
  int ok = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    cfg.seed = s;
    auto text = generate(be, p, cfg, false).text;
    ok += text.find("\"Arthur Burton\"") != std::string::npos;
  }
  EXPECT_GE(ok, 18);
}

TEST(Backend, ScriptedRulesInOrderLastRepeats) {
  MockBackend be;
  be.set_recording(true);
  be.add_rule({"Arthur", {"one", "two"}, {}});
  auto p = small_prompt();
  EXPECT_EQ(generate(be, p, {}, false).text, "one");
  EXPECT_EQ(generate(be, p, {}, false).text, "two");
  EXPECT_EQ(generate(be, p, {}, false).text, "two");
  EXPECT_EQ(be.calls_matching("Arthur"), 3u);
  EXPECT_EQ(be.recorded_prompts().size(), 3u);
}

TEST(Backend, EmbeddingsUnitNorm) {
  MockBackend be;
  auto v = embed(be, {"hello there", "", "hello there"});
  EXPECT_EQ(v[0], v[2]);
  for (const auto& x : v) {
    double n = 0;
    for (double d : x) n += d * d;
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-9);
  }
  EXPECT_THROW(embed(be, {}), Error);
  be.set_embedding("bad", {2.0, 0.0});
  EXPECT_THROW(embed(be, {"bad"}), BackendError);
}

TEST(Backend, AttentionUnsupportedWhenMissing) {
  MockBackend be;
  be.add_rule({"", {"x"}, [](const GenerationRequest&, std::size_t) {
                 return std::map<std::string, AttentionTensor>{};
               }});
  EXPECT_THROW(generate(be, small_prompt(), {}, true), AttentionUnsupported);
}

TEST(Wire, RequestRoundTrip) {
  auto req = make_request(small_prompt(), {}, true);
  req.config.top_k = 40;
  req.config.seed = 123456789012345ull;
  auto back = wire::request_from_json(wire::to_json(req));
  EXPECT_EQ(back.prompt_text, req.prompt_text);
  ASSERT_EQ(back.unit_spans.size(), req.unit_spans.size());
  EXPECT_EQ(back.unit_spans[3].id, req.unit_spans[3].id);
  EXPECT_EQ(back.unit_spans[3].char_end, req.unit_spans[3].char_end);
  EXPECT_EQ(back.config.top_k, 40);
  EXPECT_EQ(back.config.seed, req.config.seed);
  EXPECT_TRUE(back.want_attention);
}

TEST(Wire, ResultRoundTripAtFloatPrecision) {
  MockBackend be;
  auto r = generate(be, small_prompt(), {}, true);
  auto back = wire::result_from_json(nlohmann::json::parse(wire::to_json(r).dump()));
  EXPECT_EQ(back.text, r.text);
  ASSERT_EQ(back.unit_attention.size(), r.unit_attention.size());
  for (const auto& [id, t] : r.unit_attention) {
    const auto& u = back.unit_attention.at(id);
    ASSERT_EQ(u.values.size(), t.values.size());
    for (std::size_t i = 0; i < t.values.size(); ++i)
      EXPECT_EQ(u.values[i], static_cast<double>(static_cast<float>(t.values[i])));
  }
}

TEST(Wire, SchemaErrors) {
  EXPECT_THROW(wire::capabilities_from_json({{"model_name", "x"}}), SchemaError);
  nlohmann::json bad = {{"text", "x"},
                        {"prompt_token_count", 1},
                        {"attentions", {{{"unit_id", "a"}, {"shape", {1, 1, 2, 2}}, {"values", {0.1}}}}}};
  EXPECT_THROW(wire::result_from_json(bad), SchemaError);
}

TEST(Wire, ServerAndRemoteBackendLoop) {
  MockBackend mock;
  wire::BackendServer server(mock);
  int port = server.bind_any_port();
  std::thread th([&] { server.serve_bound(); });
  server.wait_until_ready();

  RemoteConfig rc;
  rc.url = "http://127.0.0.1:" + std::to_string(port);
  rc.timeout = std::chrono::seconds(10);
  {
    RemoteBackend remote(rc);
    EXPECT_EQ(remote.capabilities().layers, mock.capabilities().layers);
    auto p = small_prompt();
    DecodingConfig cfg;
    cfg.seed = 5;
    auto local = generate(mock, p, cfg, true);
    auto over = generate(remote, p, cfg, true);
    EXPECT_EQ(over.text, local.text);
    EXPECT_EQ(over.unit_attention.size(), local.unit_attention.size());
    auto e = embed(remote, {"a b c"});
    EXPECT_NEAR(e[0][0], hashed_bow_embedding("a b c", 256)[0], 1e-12);
    EXPECT_EQ(judge(remote, {"x"}, "y", "A", "B", cfg), judge(mock, {"x"}, "y", "A", "B", cfg));
  }
  server.stop();
  th.join();
}

TEST(Wire, UnreachableBackend) {
  RemoteConfig rc;
  rc.url = "http://127.0.0.1:1";
  rc.timeout = std::chrono::seconds(1);
  rc.retries = 0;
  EXPECT_THROW(RemoteBackend{rc}, BackendUnavailable);
}
