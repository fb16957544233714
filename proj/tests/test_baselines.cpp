#include <catch_amalgamated.hpp>

#include <random>

#include "hazardkg/baselines.hpp"

using namespace hazardkg;

TEST_CASE("max_match basics") {
  CHECK(max_match_segment({"主变"}, "主变") == std::vector<std::string>{"主变"});
  CHECK(max_match_segment({}, "abc") == std::vector<std::string>{"a", "b", "c"});
  CHECK(max_match_segment({"主变"}, "").empty());
}

TEST_CASE("max_match bidirectional tie-break") {
  // forward -> [AB, C]; backward -> [A, BC]; equal single-char counts and
  // token counts, so forward wins
  CHECK(max_match_segment({"AB", "BC"}, "ABC") == std::vector<std::string>{"AB", "C"});
  // backward strictly better: forward [A,B,CD]? dict {BCD}: fwd [A,B,C,D]->
  // actually fwd gives [A, BCD]? no: at A nothing matches, B starts BCD
  CHECK(max_match_segment({"BCD"}, "ABCD") == std::vector<std::string>{"A", "BCD"});
}

TEST_CASE("max_match lossless and dictionary-backed") {
  std::mt19937 rng(17);
  std::set<std::string> dict = {"ab", "abc", "bcd", "cd", "dd"};
  std::uniform_int_distribution<int> len(0, 20);
  std::uniform_int_distribution<int> pick(0, 3);
  for (int iter = 0; iter < 500; ++iter) {
    std::string text;
    int n = len(rng);
    for (int i = 0; i < n; ++i) text.push_back(static_cast<char>('a' + pick(rng)));
    auto toks = max_match_segment(dict, text);
    std::string joined;
    for (const auto& t : toks) {
      joined += t;
      if (t.size() > 1) CHECK(dict.count(t) == 1);
    }
    CHECK(joined == text);
  }
}

TEST_CASE("ngram segmentation") {
  BigramStats stats;
  CHECK(ngram_segment(stats, "a") == std::vector<std::string>{"a"});

  // one frequent bigram "ab" amid independent filler: PMI("ab") > 0 keeps
  // the pair joined; the unseen bigram always cuts
  for (int i = 0; i < 10; ++i) stats.add_text("ab");
  stats.add_text("cd");
  stats.add_text("dc");
  CHECK(ngram_segment(stats, "ab") == std::vector<std::string>{"ab"});
  CHECK(ngram_segment(stats, "ba") == std::vector<std::string>{"b", "a"});  // never seen
  CHECK(ngram_segment(stats, "xy") == std::vector<std::string>{"x", "y"});  // unknown chars

  // hand-computed PMI: P(ab)=10/12, P(a)=P(b)=10/24 -> PMI = ln(4.8) > 0
  CHECK(stats.pmi(U'a', U'b') == Catch::Approx(std::log(10.0 / 12.0 / ((10.0 / 24) * (10.0 / 24)))));

  std::mt19937 rng(23);
  std::uniform_int_distribution<int> len(0, 15);
  std::uniform_int_distribution<int> pick(0, 4);
  for (int iter = 0; iter < 300; ++iter) {
    std::string text;
    int n = len(rng);
    for (int i = 0; i < n; ++i) text.push_back(static_cast<char>('a' + pick(rng)));
    std::string joined;
    for (const auto& t : ngram_segment(stats, text)) joined += t;
    CHECK(joined == text);
  }
}

TEST_CASE("evaluate_segmentation") {
  auto [p1, r1, f1] = evaluate_segmentation({"ab", "c"}, {"ab", "c"});
  CHECK(p1 == 1.0);
  CHECK(r1 == 1.0);
  CHECK(f1 == 1.0);

  // gold {AB, C, DE}, predicted {A, B, C, DE}
  auto [p, r, f] = evaluate_segmentation({"A", "B", "C", "DE"}, {"AB", "C", "DE"});
  CHECK(p == Catch::Approx(0.5));
  CHECK(r == Catch::Approx(2.0 / 3.0));
  CHECK(f == Catch::Approx(4.0 / 7.0));

  CHECK_THROWS_AS(evaluate_segmentation({"ab"}, {"cd"}), std::invalid_argument);
}

TEST_CASE("f1 is the harmonic mean") {
  // grid of constructed P/R cases via synthetic span sets
  for (int gold_words = 1; gold_words <= 6; ++gold_words) {
    for (int pred_extra = 0; pred_extra <= 4; ++pred_extra) {
      // gold: words of length 2; predicted: first `gold_words - 1` correct,
      // last word split into singles plus nothing else
      std::vector<std::string> gold, pred;
      for (int i = 0; i < gold_words; ++i) gold.push_back("ab");
      for (int i = 0; i < gold_words - 1; ++i) pred.push_back("ab");
      pred.push_back("a");
      pred.push_back("b");
      (void)pred_extra;
      auto [p, r, f] = evaluate_segmentation(pred, gold);
      double expect = (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
      CHECK(f == Catch::Approx(expect).margin(1e-12));
    }
  }
}
