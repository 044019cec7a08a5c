#include <gtest/gtest.h>

#include <cstdlib>

#include "esma/dataset.hpp"
#include "esma/error.hpp"
#include "esma/remote.hpp"
#include "esma/sdt.hpp"
#include "fixtures.hpp"
#include "mock_server.hpp"

using namespace esma;
using namespace esma::remote;

TEST(Prompt, BuiltinTemplatesRender) {
  EXPECT_EQ(PromptTemplate::builtin(PromptKind::direct).render("Capital of France?"),
            "Answer the following question with keywords.\nQuestion: Capital of France?");
  EXPECT_EQ(PromptTemplate::builtin(PromptKind::meta).render("Capital of France?"),
            "Do you know the answer to the following question? If you know and are sure about the answer, just "
            "return \"Yes\". If you don't know the answer or are uncertain, just return \"No\".\n"
            "Question: Capital of France?");
  EXPECT_EQ(PromptTemplate::builtin(PromptKind::direct_idk).render("Q?"),
            "Answer the following question with keywords. If you don't know the answer, just return \"I don't "
            "know\".\nQuestion: Q?");
}

TEST(Prompt, QuestionIsInsertedVerbatim) {
  const std::string q = "What is {question}?\nLine two {}";
  const auto out = PromptTemplate::builtin(PromptKind::direct).render(q);
  EXPECT_EQ(out.substr(out.size() - q.size()), q);
}

TEST(Prompt, PlaceholderMustOccurOnce) {
  EXPECT_THROW(PromptTemplate(PromptKind::direct, "no placeholder"), Error);
  EXPECT_THROW(PromptTemplate(PromptKind::direct, "{question} {question}"), Error);
  EXPECT_EQ(PromptTemplate(PromptKind::direct, "<{question}>").render("x"), "<x>");
}

TEST(Grade, Examples) {
  const std::vector<std::string> lignite{"lignite"}, paris{"Paris"};
  EXPECT_TRUE(grade_answer("Lignite coal.", lignite));
  EXPECT_TRUE(grade_answer("It is in Paris, France.", paris));
  EXPECT_FALSE(grade_answer("I don't know", lignite));
  EXPECT_FALSE(grade_answer("Parisian", paris));
  const std::vector<std::string> two{"New York City", "NYC"};
  EXPECT_TRUE(grade_answer("nyc", two));
  EXPECT_TRUE(grade_answer("the new york city!", two));
}

TEST(Grade, CaseAndPunctuationInvariant) {
  const std::vector<std::string> aliases{"Marie Curie"};
  for (const char* r : {"marie curie", "MARIE CURIE", "Marie, Curie.", "\"Marie Curie\"!"}) {
    EXPECT_EQ(grade_answer(r, aliases), grade_answer("Marie Curie", aliases)) << r;
  }
}

TEST(ParseMeta, Examples) {
  EXPECT_EQ(parse_meta("Yes."), MetaAnswer::yes);
  EXPECT_EQ(parse_meta("no, I am not sure"), MetaAnswer::no);
  EXPECT_EQ(parse_meta("I believe so"), MetaAnswer::unparseable);
  EXPECT_EQ(parse_meta("  **YES**"), MetaAnswer::yes);
  EXPECT_EQ(parse_meta("I would say no."), MetaAnswer::no);
  EXPECT_EQ(parse_meta("Either yes or no"), MetaAnswer::unparseable);
  EXPECT_EQ(parse_meta(""), MetaAnswer::unparseable);
  EXPECT_EQ(parse_meta("Nope"), MetaAnswer::unparseable);
}

TEST(ParseIdk, Examples) {
  EXPECT_TRUE(parse_idk("I don't know.").abstained);
  EXPECT_TRUE(parse_idk("I don't know, maybe Paris").abstained);
  EXPECT_TRUE(parse_idk("I don\xE2\x80\x99t know").abstained);
  const auto p = parse_idk("Paris");
  EXPECT_FALSE(p.abstained);
  EXPECT_EQ(p.text, "Paris");
}

TEST(Reply, SchemaErrorsAreProtocolErrors) {
  try {
    parse_reply(nlohmann::json::object());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::protocol);
  }
  const auto ok = parse_reply(nlohmann::json::parse(R"({"choices":[{"message":{"content":"Yes"}}]})"));
  EXPECT_EQ(ok.content, "Yes");
  EXPECT_FALSE(ok.yes_logprob.has_value());
}

namespace {

Dataset items(std::vector<std::pair<std::string, std::vector<std::string>>> qa) {
  std::vector<QaItem> out;
  for (std::size_t i = 0; i < qa.size(); ++i) {
    out.push_back({"q" + std::to_string(i + 1), qa[i].first, qa[i].second, {}});
  }
  return make_dataset(std::move(out), "inline");
}

EndpointConfig endpoint_for(const mock::ChatServer& server, const std::filesystem::path& cache) {
  EndpointConfig cfg;
  cfg.base_url = server.base_url();
  cfg.model = "mock-model";
  cfg.cache_dir = cache;
  cfg.backoff_seconds = 0.001;
  cfg.timeout_seconds = 5;
  return cfg;
}

}  // namespace

TEST(RemoteEval, TracesOneItemAndReplaysFromCache) {
  mock::Transcript t{{{"Capital of France?", "Paris", "Yes", "Paris"}}};
  mock::ChatServer server(t.script());
  const auto data = items({{"Capital of France?", {"Paris"}}});
  const auto cfg = endpoint_for(server, fixture::temp_dir("cache1"));

  const auto first = evaluate_remote(cfg, data, Protocol::dual);
  ASSERT_EQ(first.records.size(), 1u);
  EXPECT_TRUE(first.records[0].correct);
  EXPECT_EQ(first.records[0].meta, MetaAnswer::yes);
  EXPECT_TRUE(first.records[0].outcome().aligned);
  EXPECT_FALSE(first.records[0].confidence.has_value());
  EXPECT_EQ(first.network_requests, 2u);
  EXPECT_EQ(server.requests(), 2u);

  const auto again = evaluate_remote(cfg, data, Protocol::dual);
  EXPECT_EQ(server.requests(), 2u);
  EXPECT_EQ(again.network_requests, 0u);
  EXPECT_EQ(again.cache_hits, 2u);
  EXPECT_EQ(again.records, first.records);
}

TEST(RemoteEval, RequestsAreIndependent) {
  mock::Transcript t{{{"Who wrote Hamlet?", "Shakespeare", "Yes", "Shakespeare"}}};
  mock::ChatServer server(t.script());
  const auto cfg = endpoint_for(server, fixture::temp_dir("cache2"));
  evaluate_remote(cfg, items({{"Who wrote Hamlet?", {"Shakespeare"}}}), Protocol::both);
  const auto bodies = server.bodies();
  ASSERT_EQ(bodies.size(), 3u);
  for (const auto& b : bodies) {
    ASSERT_EQ(b["messages"].size(), 1u);
    EXPECT_EQ(b["messages"][0]["role"], "user");
    EXPECT_EQ(b["model"], "mock-model");
    EXPECT_EQ(b["temperature"], 0.0);
    const std::string content = b["messages"][0]["content"];
    if (content.starts_with("Do you know")) EXPECT_EQ(content.find("Shakespeare"), std::string::npos);
  }
}

TEST(RemoteEval, RetryExhaustionExcludesItem) {
  std::atomic<int> broken_calls{0};
  mock::ChatServer server([&](const std::string& prompt) {
    mock::Reply r;
    if (prompt.find("Broken?") != std::string::npos) {
      ++broken_calls;
      r.status = 500;
      r.raw_body = "{}";
    } else {
      r.content = prompt.starts_with("Do you know") ? "No" : "Rome";
    }
    return r;
  });
  const auto cfg = endpoint_for(server, fixture::temp_dir("cache3"));
  const auto res = evaluate_remote(cfg, items({{"Capital of Italy?", {"Rome"}}, {"Broken?", {"x"}}}), Protocol::dual);
  ASSERT_EQ(res.failed_ids, std::vector<std::string>{"q2"});
  ASSERT_EQ(res.records.size(), 1u);
  EXPECT_EQ(res.records[0].item_id, "q1");
  // Three attempts for each of the item's two prompts.
  EXPECT_EQ(broken_calls.load(), 6);
}

TEST(RemoteEval, MalformedReplyIsProtocolError) {
  mock::ChatServer server([](const std::string&) {
    mock::Reply r;
    r.raw_body = R"({"unexpected": true})";
    return r;
  });
  const auto cfg = endpoint_for(server, fixture::temp_dir("cache4"));
  try {
    evaluate_remote(cfg, items({{"Q?", {"a"}}}), Protocol::dual);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::protocol);
  }
}

TEST(RemoteEval, ConcurrencyStaysWithinBound) {
  mock::ChatServer server([](const std::string& prompt) {
    mock::Reply r;
    r.content = prompt.starts_with("Do you know") ? "Yes" : "x";
    r.delay = std::chrono::milliseconds(20);
    return r;
  });
  std::vector<std::pair<std::string, std::vector<std::string>>> qa;
  for (int i = 0; i < 24; ++i) qa.push_back({"Question " + std::to_string(i) + "?", {"x"}});
  auto cfg = endpoint_for(server, fixture::temp_dir("cache5"));
  cfg.max_concurrent = 3;
  const auto res = evaluate_remote(cfg, items(qa), Protocol::dual);
  EXPECT_EQ(res.records.size(), 24u);
  EXPECT_LE(server.max_in_flight(), 3u);
  EXPECT_GE(server.max_in_flight(), 2u);
  for (std::size_t i = 0; i < res.records.size(); ++i) EXPECT_EQ(res.records[i].item_id, "q" + std::to_string(i + 1));
}

TEST(RemoteEval, CachedAndUncachedAgree) {
  mock::Transcript t{{{"A?", "alpha", "Yes", "I don't know"},
                      {"B?", "wrong", "Yes", "beta"},
                      {"C?", "gamma", "no", "gamma"}}};
  mock::ChatServer server(t.script());
  const auto data = items({{"A?", {"alpha"}}, {"B?", {"beta"}}, {"C?", {"gamma"}}});
  const auto cached_dir = fixture::temp_dir("cache6");
  const auto warm = evaluate_remote(endpoint_for(server, cached_dir), data, Protocol::both);
  const auto replay = evaluate_remote(endpoint_for(server, cached_dir), data, Protocol::both);
  const auto cold = evaluate_remote(endpoint_for(server, fixture::temp_dir("cache7")), data, Protocol::both);
  EXPECT_EQ(warm.records, replay.records);
  EXPECT_EQ(warm.records, cold.records);
  ASSERT_TRUE(warm.records[0].idk.has_value());
  EXPECT_TRUE(warm.records[0].idk->abstained);
  EXPECT_FALSE(warm.records[1].idk->abstained);
  EXPECT_TRUE(warm.records[1].idk->correct);
  EXPECT_FALSE(warm.records[1].correct);
}

TEST(RemoteEval, IdkOnlyMapsOntoDualFields) {
  mock::Transcript t{{{"A?", "", "", "I don't know"}, {"B?", "", "", "beta"}}};
  mock::ChatServer server(t.script());
  const auto res = evaluate_remote(endpoint_for(server, fixture::temp_dir("cache8")),
                                   items({{"A?", {"alpha"}}, {"B?", {"beta"}}}), Protocol::idk);
  ASSERT_EQ(res.records.size(), 2u);
  EXPECT_EQ(res.records[0].meta, MetaAnswer::no);
  EXPECT_FALSE(res.records[0].correct);
  EXPECT_EQ(res.records[1].meta, MetaAnswer::yes);
  EXPECT_TRUE(res.records[1].correct);
  EXPECT_EQ(server.requests(), 2u);
}

TEST(RemoteEval, LogprobsGiveConfidence) {
  mock::ChatServer server([](const std::string& prompt) {
    mock::Reply r;
    if (prompt.starts_with("Do you know")) {
      r.content = "Yes";
      r.logprobs = std::make_pair(std::log(0.75), std::log(0.25));
    } else {
      r.content = "x";
    }
    return r;
  });
  auto cfg = endpoint_for(server, fixture::temp_dir("cache9"));
  cfg.request_logprobs = true;
  const auto res = evaluate_remote(cfg, items({{"Q?", {"x"}}}), Protocol::dual);
  ASSERT_TRUE(res.records[0].confidence.has_value());
  EXPECT_NEAR(*res.records[0].confidence, 0.75, 1e-12);
  const auto bodies = server.bodies();
  std::size_t with_logprobs = 0;
  for (const auto& b : bodies) with_logprobs += b.contains("logprobs");
  EXPECT_EQ(with_logprobs, 1u);
}

TEST(RemoteEval, BearerTokenFromEnvironment) {
  ::setenv("ESMA_TEST_TOKEN", "sk-test", 1);
  mock::Transcript t{{{"Q?", "x", "Yes", "x"}}};
  mock::ChatServer server(t.script());
  auto cfg = endpoint_for(server, fixture::temp_dir("cache10"));
  cfg.token_env = "ESMA_TEST_TOKEN";
  evaluate_remote(cfg, items({{"Q?", {"x"}}}), Protocol::dual);
  for (const auto& h : server.auth_headers()) EXPECT_EQ(h, "Bearer sk-test");
}
