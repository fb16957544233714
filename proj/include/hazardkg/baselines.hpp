#ifndef HAZARDKG_BASELINES_HPP
#define HAZARDKG_BASELINES_HPP

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "hazardkg/unicode.hpp"

namespace hazardkg {

namespace detail {

inline std::vector<std::string> forward_max_match(const std::set<std::u32string>& dict,
                                                  const std::vector<char32_t>& cps,
                                                  size_t max_len) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < cps.size()) {
    size_t best = 1;
    for (size_t len = std::min(max_len, cps.size() - i); len >= 2; --len) {
      if (dict.count(std::u32string(cps.begin() + i, cps.begin() + i + len))) {
        best = len;
        break;
      }
    }
    std::vector<char32_t> w(cps.begin() + i, cps.begin() + i + best);
    out.push_back(utf8_encode(w));
    i += best;
  }
  return out;
}

inline std::vector<std::string> backward_max_match(const std::set<std::u32string>& dict,
                                                   const std::vector<char32_t>& cps,
                                                   size_t max_len) {
  std::vector<std::string> rev;
  size_t i = cps.size();
  while (i > 0) {
    size_t best = 1;
    for (size_t len = std::min(max_len, i); len >= 2; --len) {
      if (dict.count(std::u32string(cps.begin() + (i - len), cps.begin() + i))) {
        best = len;
        break;
      }
    }
    std::vector<char32_t> w(cps.begin() + (i - best), cps.begin() + i);
    rev.push_back(utf8_encode(w));
    i -= best;
  }
  return {rev.rbegin(), rev.rend()};
}

inline size_t single_char_count(const std::vector<std::string>& toks) {
  size_t n = 0;
  for (const auto& t : toks)
    if (utf8_decode(t).size() == 1) ++n;
  return n;
}

}  // namespace detail

// Bidirectional maximum matching: run forward and backward scans, keep the
// one with fewer single-char tokens, then fewer tokens, forward on ties.
inline std::vector<std::string> max_match_segment(const std::set<std::string>& dictionary,
                                                  const std::string& text,
                                                  size_t max_word_len = 8) {
  if (max_word_len < 1) throw std::invalid_argument("max_word_len must be >= 1");
  std::set<std::u32string> dict;
  for (const auto& w : dictionary) {
    std::vector<char32_t> cps = utf8_decode(w);
    dict.insert(std::u32string(cps.begin(), cps.end()));
  }
  std::vector<char32_t> cps = utf8_decode(text);
  if (cps.empty()) return {};
  auto fwd = detail::forward_max_match(dict, cps, max_word_len);
  auto bwd = detail::backward_max_match(dict, cps, max_word_len);
  size_t fs = detail::single_char_count(fwd), bs = detail::single_char_count(bwd);
  if (bs < fs) return bwd;
  if (bs == fs && bwd.size() < fwd.size()) return bwd;
  return fwd;
}

// Character-bigram statistics for the cohesion baseline.
struct BigramStats {
  std::unordered_map<char32_t, double> unigram;
  std::map<std::pair<char32_t, char32_t>, double> bigram;
  double unigram_total = 0;
  double bigram_total = 0;

  void add_text(const std::vector<char32_t>& cps) {
    for (size_t i = 0; i < cps.size(); ++i) {
      unigram[cps[i]] += 1;
      unigram_total += 1;
      if (i + 1 < cps.size()) {
        bigram[{cps[i], cps[i + 1]}] += 1;
        bigram_total += 1;
      }
    }
  }

  void add_text(const std::string& text) { add_text(utf8_decode(text)); }

  // Pointwise mutual information of an adjacent pair; unseen pairs sit
  // below any finite threshold.
  double pmi(char32_t a, char32_t b) const {
    auto it = bigram.find({a, b});
    if (it == bigram.end() || bigram_total == 0) return kNegInfPmi;
    double p_ab = it->second / bigram_total;
    double p_a = unigram.at(a) / unigram_total;
    double p_b = unigram.at(b) / unigram_total;
    return std::log(p_ab / (p_a * p_b));
  }

  static constexpr double kNegInfPmi = -1e300;
};

// Cuts between adjacent characters whenever their PMI falls below the
// threshold (default 0); never-seen bigrams always cut.
inline std::vector<std::string> ngram_segment(const BigramStats& stats, const std::string& text,
                                              double threshold = 0.0) {
  std::vector<char32_t> cps = utf8_decode(text);
  std::vector<std::string> out;
  std::vector<char32_t> cur;
  for (size_t i = 0; i < cps.size(); ++i) {
    cur.push_back(cps[i]);
    bool cut = (i + 1 == cps.size()) || stats.pmi(cps[i], cps[i + 1]) < threshold;
    if (cut) {
      out.push_back(utf8_encode(cur));
      cur.clear();
    }
  }
  return out;
}

// Span-based P/R/F1 over predicted vs gold word boundaries.
inline std::tuple<double, double, double> evaluate_segmentation(
    const std::vector<std::string>& predicted, const std::vector<std::string>& gold) {
  auto spans = [](const std::vector<std::string>& toks) {
    std::set<std::pair<size_t, size_t>> out;
    size_t pos = 0;
    for (const auto& t : toks) {
      size_t len = utf8_decode(t).size();
      out.insert({pos, pos + len});
      pos += len;
    }
    return std::make_pair(out, pos);
  };
  auto [pred_spans, pred_len] = spans(predicted);
  auto [gold_spans, gold_len] = spans(gold);
  std::string pj, gj;
  for (const auto& t : predicted) pj += t;
  for (const auto& t : gold) gj += t;
  if (pj != gj) throw std::invalid_argument("evaluate_segmentation: texts differ");

  size_t hit = 0;
  for (const auto& s : pred_spans)
    if (gold_spans.count(s)) ++hit;
  double p = pred_spans.empty() ? 0.0 : static_cast<double>(hit) / pred_spans.size();
  double r = gold_spans.empty() ? 0.0 : static_cast<double>(hit) / gold_spans.size();
  double f = (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
  return {p, r, f};
}

}  // namespace hazardkg

#endif  // HAZARDKG_BASELINES_HPP
