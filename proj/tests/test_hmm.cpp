#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "hazardkg/hmm.hpp"
#include "test_helpers.hpp"

using namespace hazardkg;
using hazardkg::testing::brute_force_decode;
using hazardkg::testing::random_model;
using hazardkg::testing::random_obs;

TEST_CASE("words_to_tags basics") {
  auto s = words_to_tags({"主变"});
  CHECK(s.chars == std::vector<char32_t>{U'主', U'变'});
  CHECK(s.tags == std::vector<int>{TagB, TagE});

  auto s2 = words_to_tags({"油", "泄漏"});
  CHECK(s2.tags == std::vector<int>{TagS, TagB, TagE});

  auto s3 = words_to_tags({"abcd"});
  CHECK(s3.tags == std::vector<int>{TagB, TagM, TagM, TagE});

  CHECK_THROWS_AS(words_to_tags({"ok", ""}), std::invalid_argument);
}

TEST_CASE("words_to_tags round trip property") {
  std::mt19937 rng(42);
  std::uniform_int_distribution<int> n_words(1, 8);
  std::uniform_int_distribution<int> word_len(1, 5);
  std::uniform_int_distribution<int> pick(0, 19);
  for (int iter = 0; iter < 1000; ++iter) {
    std::vector<std::string> words;
    int nw = n_words(rng);
    for (int w = 0; w < nw; ++w) {
      std::string word;
      int len = word_len(rng);
      for (int c = 0; c < len; ++c) utf8_append(word, static_cast<char32_t>(U'一' + pick(rng)));
      words.push_back(word);
    }
    auto s = words_to_tags(words);
    CHECK(tags_to_words(s.chars, s.tags) == words);
  }
}

TEST_CASE("tags_to_words cuts and repair") {
  auto chars = utf8_decode("主变");
  CHECK(tags_to_words(chars, {TagB, TagE}) == std::vector<std::string>{"主变"});

  auto abc = utf8_decode("ABC");
  CHECK(tags_to_words(abc, {TagS, TagB, TagE}) == std::vector<std::string>{"A", "BC"});
  // ill-formed B,B,E: forced cut before the second B
  CHECK(tags_to_words(abc, {TagB, TagB, TagE}) == std::vector<std::string>{"A", "BC"});
  // ill-formed run ending mid-word still flushes the tail
  CHECK(tags_to_words(abc, {TagB, TagM, TagM}) == std::vector<std::string>{"ABC"});

  CHECK_THROWS_AS(tags_to_words(abc, {TagB, TagE}), std::invalid_argument);
}

TEST_CASE("train_hmm hand-count fixture") {
  TaggedCorpus corpus = {words_to_tags({"AB"}), words_to_tags({"C"})};
  auto m = train_hmm(corpus, 1e-12);
  CHECK(std::exp(m.pi[TagB]) == Catch::Approx(0.5).margin(1e-9));
  CHECK(std::exp(m.pi[TagS]) == Catch::Approx(0.5).margin(1e-9));
  CHECK(m.pi[TagM] == kNegInf);
  CHECK(m.pi[TagE] == kNegInf);
  CHECK(std::exp(m.trans[TagB][TagE]) == Catch::Approx(1.0).margin(1e-9));
  CHECK(std::exp(m.emission(TagB, U'A')) == Catch::Approx(1.0).margin(1e-9));
  CHECK(std::exp(m.emission(TagE, U'B')) == Catch::Approx(1.0).margin(1e-9));
  CHECK(std::exp(m.emission(TagS, U'C')) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("train_hmm rejects bad input") {
  CHECK_THROWS_AS(train_hmm({}, 1e-6), std::invalid_argument);
  CHECK_THROWS_AS(train_hmm({words_to_tags({"ab"})}, 0.0), std::invalid_argument);
}

TEST_CASE("trained model invariants on random corpora") {
  std::mt19937 rng(7);
  for (int iter = 0; iter < 50; ++iter) {
    auto m = random_model(rng);
    // pi sums to 1 over allowed starts; M/E are structural zeros
    CHECK(m.pi[TagM] == kNegInf);
    CHECK(m.pi[TagE] == kNegInf);
    CHECK(std::exp(m.pi[TagB]) + std::exp(m.pi[TagS]) == Catch::Approx(1.0).margin(1e-9));
    // each transition row sums to 1 over its allowed columns
    for (int from = 0; from < kNumTags; ++from) {
      double sum = 0;
      for (int to = 0; to < kNumTags; ++to) {
        if (transition_allowed(from, to))
          sum += std::exp(m.trans[from][to]);
        else
          CHECK(m.trans[from][to] == kNegInf);
      }
      CHECK(sum == Catch::Approx(1.0).margin(1e-9));
    }
    // emissions sum to 1 over vocab plus the unknown bucket
    for (int t = 0; t < kNumTags; ++t) {
      double sum = std::exp(m.emit_unknown[t]);
      for (char32_t c : m.vocab) sum += std::exp(m.emission(t, c));
      CHECK(sum == Catch::Approx(1.0).margin(1e-9));
    }
  }
}

TEST_CASE("viterbi trivial cases") {
  std::mt19937 rng(3);
  auto m = random_model(rng);
  CHECK(viterbi_decode(m, {}).empty());

  // T=1: argmax restricted to {E, S}; E has no start mass, so S wins
  auto tags = viterbi_decode(m, utf8_decode("a"));
  REQUIRE(tags.size() == 1);
  CHECK(tags[0] == TagS);
}

TEST_CASE("viterbi equals exhaustive enumeration") {
  std::mt19937 rng(1234);
  for (int iter = 0; iter < 200; ++iter) {
    auto m = random_model(rng);
    auto obs = random_obs(rng, 8);
    auto tags = viterbi_decode(m, obs);
    auto oracle = brute_force_decode(m, obs);
    REQUIRE_FALSE(oracle.argmax.empty());
    CHECK(sequence_log_score(m, obs, tags) == Catch::Approx(oracle.score).margin(1e-9));
    bool found = false;
    for (const auto& cand : oracle.argmax)
      if (cand == tags) found = true;
    CHECK(found);
    if (oracle.argmax.size() == 1) CHECK(tags == oracle.argmax[0]);
  }
}

TEST_CASE("decoded sequences are well-formed BMES") {
  std::mt19937 rng(99);
  for (int iter = 0; iter < 100; ++iter) {
    auto m = random_model(rng);
    auto obs = random_obs(rng, 12);
    auto tags = viterbi_decode(m, obs);
    if (tags.empty()) continue;
    CHECK(start_allowed(tags.front()));
    CHECK(end_allowed(tags.back()));
    for (size_t t = 1; t < tags.size(); ++t) CHECK(transition_allowed(tags[t - 1], tags[t]));
  }
}

TEST_CASE("segment punctuation and losslessness") {
  TaggedCorpus corpus = {words_to_tags({"主变", "异常"}), words_to_tags({"主变", "渗漏"})};
  auto m = train_hmm(corpus, 1e-6);

  CHECK(segment(m, "").empty());

  auto toks = segment(m, "主变异常。");
  REQUIRE_FALSE(toks.empty());
  CHECK(toks.back() == "。");
  std::string joined;
  for (const auto& t : toks) joined += t;
  CHECK(joined == "主变异常。");
  // oracle: decode + cut composition on the sentence body
  auto body = utf8_decode("主变异常");
  auto expect = tags_to_words(body, viterbi_decode(m, body));
  expect.push_back("。");
  CHECK(toks == expect);

  std::mt19937 rng(5);
  std::uniform_int_distribution<int> len(0, 30);
  const std::string alphabet = "ab，。 x!云水";
  auto cps = utf8_decode(alphabet);
  std::uniform_int_distribution<size_t> pick(0, cps.size() - 1);
  for (int iter = 0; iter < 1000; ++iter) {
    std::vector<char32_t> text(static_cast<size_t>(len(rng)));
    for (auto& c : text) c = cps[pick(rng)];
    std::string input = utf8_encode(text);
    std::string out;
    for (const auto& t : segment(m, input)) out += t;
    CHECK(out == input);
  }
}

TEST_CASE("model file round trip is bit exact") {
  std::mt19937 rng(11);
  auto m = random_model(rng);
  auto j = model_to_json(m);
  std::string dumped = j.dump();
  auto m2 = model_from_json(nlohmann::ordered_json::parse(dumped));
  CHECK(model_to_json(m2).dump() == dumped);
  CHECK(m2.pi == m.pi);
  CHECK(m2.trans == m.trans);
  CHECK(m2.vocab == m.vocab);
  CHECK(m2.emit_unknown == m.emit_unknown);
  for (int t = 0; t < kNumTags; ++t)
    for (char32_t c : m.vocab) CHECK(m2.emission(t, c) == m.emission(t, c));
}

TEST_CASE("corpus parsing") {
  auto corpus = corpus_from_text("主变 异常\n\n油 泄漏\n");
  REQUIRE(corpus.size() == 2);
  CHECK(corpus[0].tags == std::vector<int>{TagB, TagE, TagB, TagE});
  CHECK(corpus[1].tags == std::vector<int>{TagS, TagB, TagE});
}
