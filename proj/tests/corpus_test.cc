// Copyright 2026 The Derail Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "derail/corpus.h"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "derail/errors.h"
#include "gtest/gtest.h"

namespace derail {
namespace {

std::vector<Tweet> Parse(const std::string& text) {
  std::istringstream in(text);
  return ParseCorpus(in);
}

Tweet MakeTweet(std::string id, std::optional<std::string> parent,
                std::optional<int> label = std::nullopt,
                std::string conversation = "c") {
  Tweet t;
  t.id = std::move(id);
  t.conversation_id = std::move(conversation);
  t.reply_to_id = std::move(parent);
  t.text = "text of " + t.id;
  t.label = label;
  return t;
}

std::vector<std::string> Ids(const ConversationBranch& b) {
  std::vector<std::string> ids;
  for (const auto& t : b.tweets) ids.push_back(t.id);
  return ids;
}

TEST(ParseCorpusTest, EmptyStream) { EXPECT_TRUE(Parse("").empty()); }

TEST(ParseCorpusTest, SingleRecord) {
  const auto tweets = Parse(
      R"({"id":"a","conversation_id":"c","reply_to_id":null,"author_id":"u","text":"hi","label":null})"
      "\n");
  ASSERT_EQ(tweets.size(), 1u);
  EXPECT_EQ(tweets[0].id, "a");
  EXPECT_FALSE(tweets[0].reply_to_id.has_value());
  EXPECT_FALSE(tweets[0].label.has_value());
}

TEST(ParseCorpusTest, DuplicateIdNamesTheId) {
  const std::string text =
      R"({"id":"a","conversation_id":"c","text":"x"})" "\n"
      R"({"id":"a","conversation_id":"c","text":"y"})" "\n"
      R"({"id":"b","conversation_id":"c","text":"z"})" "\n";
  try {
    Parse(text);
    FAIL() << "expected IntegrityError";
  } catch (const IntegrityError& e) {
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos);
  }
}

TEST(ParseCorpusTest, MalformedLineReportsLineNumber) {
  const std::string text =
      R"({"id":"a","conversation_id":"c","text":"x"})" "\n{oops\n";
  try {
    Parse(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ParseCorpusTest, EmptyTextRejected) {
  EXPECT_THROW(Parse(R"({"id":"a","conversation_id":"c","text":"   "})"),
               IntegrityError);
}

TEST(ParseCorpusTest, BadLabelRejected) {
  EXPECT_THROW(
      Parse(R"({"id":"a","conversation_id":"c","text":"x","label":2})"),
      ParseError);
}

TEST(ThreadBranchesTest, SingleNode) {
  const auto branches = ThreadBranches({MakeTweet("a", std::nullopt)});
  ASSERT_EQ(branches.size(), 1u);
  EXPECT_EQ(Ids(branches[0]), (std::vector<std::string>{"a"}));
}

TEST(ThreadBranchesTest, Chain) {
  const auto branches = ThreadBranches(
      {MakeTweet("a", std::nullopt), MakeTweet("b", "a"), MakeTweet("c", "b")});
  ASSERT_EQ(branches.size(), 1u);
  EXPECT_EQ(Ids(branches[0]), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(ThreadBranchesTest, TwoLeaves) {
  const auto branches = ThreadBranches(
      {MakeTweet("a", std::nullopt), MakeTweet("b", "a"), MakeTweet("c", "a")});
  ASSERT_EQ(branches.size(), 2u);
  EXPECT_EQ(Ids(branches[0]), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(Ids(branches[1]), (std::vector<std::string>{"a", "c"}));
}

TEST(ThreadBranchesTest, DanglingReply) {
  EXPECT_THROW(ThreadBranches({MakeTweet("b", "missing")}), IntegrityError);
}

TEST(ThreadBranchesTest, Cycle) {
  EXPECT_THROW(ThreadBranches({MakeTweet("r", std::nullopt),
                               MakeTweet("a", "b"), MakeTweet("b", "a")}),
               IntegrityError);
}

TEST(ThreadBranchesTest, CrossConversationReply) {
  EXPECT_THROW(ThreadBranches({MakeTweet("a", std::nullopt, {}, "c1"),
                               MakeTweet("b", "a", {}, "c2")}),
               IntegrityError);
}

// Every produced branch is a valid chain and the multiset of
// (conversation, leaf) pairs equals the leaves of the reply forest, found by
// enumerating every node without children.
TEST(ThreadBranchesTest, LeavesMatchBruteForceOnRandomForests) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Tweet> tweets;
    const int conversations = 1 + static_cast<int>(rng() % 3);
    for (int c = 0; c < conversations; ++c) {
      const int n = 1 + static_cast<int>(rng() % 10);
      std::vector<std::string> ids;
      for (int i = 0; i < n; ++i) {
        const std::string id = "c" + std::to_string(c) + "n" + std::to_string(i);
        std::optional<std::string> parent;
        if (i > 0 && rng() % 5 != 0) parent = ids[rng() % ids.size()];
        tweets.push_back(MakeTweet(id, parent, {}, "c" + std::to_string(c)));
        ids.push_back(id);
      }
    }
    std::shuffle(tweets.begin(), tweets.end(), rng);

    std::set<std::string> has_child;
    for (const auto& t : tweets) {
      if (t.reply_to_id) has_child.insert(*t.reply_to_id);
    }
    std::multiset<std::pair<std::string, std::string>> expected;
    for (const auto& t : tweets) {
      if (!has_child.contains(t.id)) expected.emplace(t.conversation_id, t.id);
    }

    std::multiset<std::pair<std::string, std::string>> actual;
    for (const auto& b : ThreadBranches(tweets)) {
      ASSERT_FALSE(b.tweets.empty());
      EXPECT_FALSE(b.tweets[0].reply_to_id.has_value());
      for (std::size_t i = 1; i < b.tweets.size(); ++i) {
        EXPECT_EQ(b.tweets[i].reply_to_id, b.tweets[i - 1].id);
      }
      actual.emplace(b.tweets.back().conversation_id, b.tweets.back().id);
    }
    ASSERT_EQ(actual, expected);
  }
}

TEST(ExtractExamplesTest, ShortBranchYieldsNothing) {
  ConversationBranch b{"c:b", {MakeTweet("a", std::nullopt, 0),
                               MakeTweet("b", "a", 1)}};
  EXPECT_TRUE(ExtractExamples(b).empty());
}

TEST(ExtractExamplesTest, TwoPriorContext) {
  ConversationBranch b{"c:c", {MakeTweet("a", std::nullopt), MakeTweet("b", "a"),
                               MakeTweet("c", "b", 1)}};
  const auto examples = ExtractExamples(b);
  ASSERT_EQ(examples.size(), 1u);
  EXPECT_EQ(examples[0].target_id, "c");
  EXPECT_EQ(examples[0].raw_context_texts[0], "text of b");
  EXPECT_EQ(examples[0].raw_context_texts[1], "text of a");
  EXPECT_EQ(examples[0].label, 1);
  EXPECT_FALSE(examples[0].synthetic);
}

TEST(ExtractExamplesTest, OnlyLabeledTargets) {
  ConversationBranch b{"c:e", {MakeTweet("a", std::nullopt), MakeTweet("b", "a"),
                               MakeTweet("c", "b", 0), MakeTweet("d", "c", 1),
                               MakeTweet("e", "d")}};
  const auto examples = ExtractExamples(b);
  ASSERT_EQ(examples.size(), 2u);
  EXPECT_EQ(examples[0].target_id, "c");
  EXPECT_EQ(examples[1].target_id, "d");
  EXPECT_EQ(examples[1].raw_context_texts[0], "text of c");
}

TEST(ExtractExamplesTest, UsesEncoderCallback) {
  ConversationBranch b{"c:c", {MakeTweet("a", std::nullopt), MakeTweet("b", "a"),
                               MakeTweet("c", "b", 0)}};
  const auto vocab = Vocabulary::Build({{"text", "of", "a", "b"}});
  const auto examples = ExtractExamples(b, MakeContextEncoder(vocab, {}));
  ASSERT_EQ(examples.size(), 1u);
  const auto& ids = examples[0].context_token_ids;
  ASSERT_EQ(ids.size(), 8u);
  EXPECT_EQ(ids[0], kClsId);
  EXPECT_EQ(ids[4], kSepId);
}

std::vector<ContextExample> Balanced(int pos, int neg) {
  std::vector<ContextExample> out;
  for (int i = 0; i < pos + neg; ++i) {
    ContextExample ex;
    ex.target_id = "t" + std::to_string(i);
    ex.label = i < pos ? 1 : 0;
    out.push_back(ex);
  }
  return out;
}

int CountLabel(const std::vector<ContextExample>& xs, int label) {
  return static_cast<int>(std::count_if(
      xs.begin(), xs.end(), [label](const auto& e) { return e.label == label; }));
}

TEST(StratifiedSplitTest, SizesAndBalance) {
  const auto split = StratifiedSplit(Balanced(10, 10), {0.8, 0.1, 0.1}, 7);
  EXPECT_EQ(split.train.size(), 16u);
  EXPECT_EQ(split.val.size(), 2u);
  EXPECT_EQ(split.test.size(), 2u);
  EXPECT_EQ(CountLabel(split.train, 1), 8);
  EXPECT_EQ(CountLabel(split.val, 1), 1);
  EXPECT_EQ(CountLabel(split.test, 1), 1);
}

TEST(StratifiedSplitTest, AllTrain) {
  const auto split = StratifiedSplit(Balanced(4, 6), {1.0, 0.0, 0.0}, 1);
  EXPECT_EQ(split.train.size(), 10u);
  EXPECT_TRUE(split.val.empty());
  EXPECT_TRUE(split.test.empty());
}

TEST(StratifiedSplitTest, Deterministic) {
  const auto a = StratifiedSplit(Balanced(30, 50), {}, 99);
  const auto b = StratifiedSplit(Balanced(30, 50), {}, 99);
  auto ids = [](const std::vector<ContextExample>& xs) {
    std::vector<std::string> out;
    for (const auto& x : xs) out.push_back(x.target_id);
    return out;
  };
  EXPECT_EQ(ids(a.train), ids(b.train));
  EXPECT_EQ(ids(a.val), ids(b.val));
  EXPECT_EQ(ids(a.test), ids(b.test));
}

TEST(StratifiedSplitTest, TinyClassGoesToTrainWithWarning) {
  const auto split = StratifiedSplit(Balanced(2, 20), {0.5, 0.25, 0.25}, 3);
  EXPECT_EQ(CountLabel(split.train, 1), 2);
  ASSERT_EQ(split.warnings.size(), 1u);
}

TEST(StratifiedSplitTest, PartitionsInput) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const int pos = static_cast<int>(rng() % 40);
    const int neg = 1 + static_cast<int>(rng() % 40);
    const auto input = Balanced(pos, neg);
    const auto split = StratifiedSplit(input, {0.6, 0.2, 0.2}, rng());
    std::multiset<std::string> seen;
    for (const auto* part : {&split.train, &split.val, &split.test}) {
      for (const auto& ex : *part) seen.insert(ex.target_id);
    }
    std::multiset<std::string> all;
    for (const auto& ex : input) all.insert(ex.target_id);
    ASSERT_EQ(seen, all);
  }
}

TEST(StratifiedSplitTest, RejectsBadFractions) {
  EXPECT_THROW(StratifiedSplit(Balanced(5, 5), {0.5, 0.5, 0.5}, 1), ConfigError);
  EXPECT_THROW(StratifiedSplit({}, {}, 1), Error);
}

}  // namespace
}  // namespace derail
