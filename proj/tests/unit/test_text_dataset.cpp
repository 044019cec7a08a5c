#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "esma/dataset.hpp"
#include "esma/digest.hpp"
#include "esma/error.hpp"
#include "esma/io.hpp"
#include "esma/text.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace esma;

TEST(Normalize, CasefoldPunctuationWhitespaceArticle) {
  EXPECT_EQ(normalize_answer("  The  Lignite, coal! "), "lignite coal");
  EXPECT_EQ(normalize_answer("An apple"), "apple");
  EXPECT_EQ(normalize_answer("Paris"), "paris");
  EXPECT_EQ(normalize_answer("don't"), "dont");
  EXPECT_EQ(normalize_answer("the the"), "the");
}

TEST(Normalize, TokenRun) {
  const auto hay = normalized_tokens("It is in Paris, France.");
  EXPECT_TRUE(contains_token_run(hay, normalized_tokens("paris france")));
  EXPECT_FALSE(contains_token_run(hay, normalized_tokens("france paris")));
  EXPECT_FALSE(contains_token_run(hay, normalized_tokens("par")));
}

TEST(Dataset, MinimalLine) {
  const auto d = parse_dataset(R"({"id":"q1","question":"Capital of France?","answers":["Paris"]})");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.items[0].id, "q1");
  EXPECT_EQ(d.items[0].answers, std::vector<std::string>{"Paris"});
}

TEST(Dataset, DuplicateIdNamesBothLines) {
  const std::string text =
      "{\"id\":\"q1\",\"question\":\"a\",\"answers\":[\"x\"]}\n"
      "{\"id\":\"q2\",\"question\":\"b\",\"answers\":[\"y\"]}\n"
      "{\"id\":\"q1\",\"question\":\"c\",\"answers\":[\"z\"]}\n";
  try {
    parse_dataset(text, "dup.jsonl");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("3"), std::string::npos) << msg;
  }
}

TEST(Dataset, RejectsEmptyAliases) {
  EXPECT_THROW(parse_dataset(R"({"id":"q1","question":"a","answers":[]})"), Error);
  EXPECT_THROW(parse_dataset(R"({"id":"q1","question":"a","answers":["the"]})"), Error);
  EXPECT_THROW(parse_dataset(R"({"id":"q1","question":"a"})"), Error);
  EXPECT_THROW(parse_dataset("not json"), Error);
}

TEST(Dataset, FileOrderAndDigestMatchSha256sum) {
  const auto dir = fixture::temp_dir("dataset");
  const auto path = dir / "three.jsonl";
  io::write_file_atomic(path,
                        "{\"id\":\"q1\",\"question\":\"a\",\"answers\":[\"x\"]}\r\n"
                        "\n"
                        "{\"id\":\"q2\",\"question\":\"b\",\"answers\":[\"y\"],\"topic\":\"geo\"}\n"
                        "{\"id\":\"q3\",\"question\":\"c\",\"answers\":[\"z\"]}\n");
  const auto d = load_dataset(path);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.items[0].id, "q1");
  EXPECT_EQ(d.items[1].id, "q2");
  EXPECT_EQ(d.items[2].id, "q3");
  EXPECT_EQ(d.items[1].extra["topic"], "geo");
  EXPECT_EQ(d.content_hash, oracle::sha256sum(path));
}

TEST(Dataset, SerializeRoundTrip) {
  const auto d = parse_dataset(
      "{\"id\":\"q1\",\"question\":\"a {b}\\nc\",\"answers\":[\"x\",\"y\"],\"k\":1}\n");
  const auto again = parse_dataset(serialize_dataset(d));
  EXPECT_EQ(again.items, d.items);
}

namespace {

Dataset numbered(std::size_t n) {
  std::vector<QaItem> items;
  for (std::size_t i = 0; i < n; ++i) items.push_back({"q" + std::to_string(i), "question", {"a"}, {}});
  return make_dataset(std::move(items), "numbered");
}

}  // namespace

TEST(Split, HalfSplitIsDeterministic) {
  const auto d = numbered(10);
  const auto a = split_dataset(d, 0.5, 7);
  const auto b = split_dataset(d, 0.5, 7);
  EXPECT_EQ(a.train.size(), 5u);
  EXPECT_EQ(a.eval.size(), 5u);
  EXPECT_EQ(a.train.items, b.train.items);
  EXPECT_EQ(a.eval.items, b.eval.items);
}

TEST(Split, EvalSizeRounds) {
  EXPECT_EQ(split_dataset(numbered(10), 0.2, 1).eval.size(), 2u);
  EXPECT_EQ(split_dataset(numbered(10), 0.01, 1).eval.size(), 1u);
  EXPECT_EQ(split_dataset(numbered(10), 0.99, 1).eval.size(), 9u);
}

TEST(Split, UnionEqualsInput) {
  const auto d = numbered(100);
  const auto s = split_dataset(d, 0.3, 11);
  std::multiset<std::string> got, want;
  for (const auto& it : s.train.items) got.insert(it.id);
  for (const auto& it : s.eval.items) got.insert(it.id);
  for (const auto& it : d.items) want.insert(it.id);
  EXPECT_EQ(got, want);
  EXPECT_EQ(std::set<std::string>(got.begin(), got.end()).size(), 100u);
}

TEST(Digest, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
