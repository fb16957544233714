#ifndef HAZARDKG_HMM_HPP
#define HAZARDKG_HMM_HPP

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "hazardkg/unicode.hpp"

namespace hazardkg {

// Word-position tags. Indices are fixed and part of every tie-break rule.
enum Tag : int { TagB = 0, TagM = 1, TagE = 2, TagS = 3 };
inline constexpr int kNumTags = 4;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline char tag_char(int t) { return "BMES"[t]; }

// BMES grammar: B,M -> {M,E}; E,S -> {B,S}. Everything else is a
// structural zero, never smoothed.
inline constexpr bool transition_allowed(int from, int to) {
  if (from == TagB || from == TagM) return to == TagM || to == TagE;
  return to == TagB || to == TagS;
}

// A sentence can only start at B or S.
inline constexpr bool start_allowed(int t) { return t == TagB || t == TagS; }
// A word can only end at E or S.
inline constexpr bool end_allowed(int t) { return t == TagE || t == TagS; }

struct TaggedSentence {
  std::vector<char32_t> chars;
  std::vector<int> tags;
};

using TaggedCorpus = std::vector<TaggedSentence>;

// lambda = (pi, X, Y) over the 4-tag state space, stored in log space.
struct HmmModel {
  std::array<double, kNumTags> pi{};
  std::array<std::array<double, kNumTags>, kNumTags> trans{};  // trans[from][to]
  std::array<std::unordered_map<char32_t, double>, kNumTags> emit;
  std::array<double, kNumTags> emit_unknown{};  // per-tag unknown-char log-prob
  std::set<char32_t> vocab;
  double smoothing_epsilon = 1e-6;

  double emission(int tag, char32_t c) const {
    const auto& m = emit[tag];
    auto it = m.find(c);
    return it != m.end() ? it->second : emit_unknown[tag];
  }
};

// Maps a gold word list to its character/tag sequences:
// length-1 word -> S, length-k word -> B M^(k-2) E.
inline TaggedSentence words_to_tags(const std::vector<std::string>& words) {
  TaggedSentence s;
  for (const auto& w : words) {
    std::vector<char32_t> cps = utf8_decode(w);
    if (cps.empty()) throw std::invalid_argument("empty word in gold segmentation");
    if (cps.size() == 1) {
      s.chars.push_back(cps[0]);
      s.tags.push_back(TagS);
    } else {
      for (size_t i = 0; i < cps.size(); ++i) {
        s.chars.push_back(cps[i]);
        s.tags.push_back(i == 0 ? TagB : (i + 1 == cps.size() ? TagE : TagM));
      }
    }
  }
  return s;
}

// Cuts chars into words at every E and S tag. An ill-formed run is repaired
// by forcing a cut before any B or S that follows a B or M.
inline std::vector<std::string> tags_to_words(const std::vector<char32_t>& chars,
                                              const std::vector<int>& tags) {
  if (chars.size() != tags.size())
    throw std::invalid_argument("tags_to_words: length mismatch");
  std::vector<std::string> words;
  std::vector<char32_t> cur;
  for (size_t i = 0; i < chars.size(); ++i) {
    cur.push_back(chars[i]);
    bool cut = end_allowed(tags[i]);
    if (!cut && i + 1 < tags.size() && start_allowed(tags[i + 1])) cut = true;  // repair
    if (cut || i + 1 == chars.size()) {
      words.push_back(utf8_encode(cur));
      cur.clear();
    }
  }
  return words;
}

// Additive-epsilon-smoothed MLE over tag starts, tag bigrams and (tag, char)
// counts. Structural zeros stay at -inf regardless of epsilon.
inline HmmModel train_hmm(const TaggedCorpus& corpus, double epsilon = 1e-6) {
  if (epsilon <= 0) throw std::invalid_argument("epsilon must be positive");
  bool any = false;
  for (const auto& s : corpus)
    if (!s.chars.empty()) any = true;
  if (!any) throw std::invalid_argument("train_hmm: empty corpus");

  HmmModel m;
  m.smoothing_epsilon = epsilon;

  std::array<double, kNumTags> start_counts{};
  std::array<std::array<double, kNumTags>, kNumTags> trans_counts{};
  std::array<std::unordered_map<char32_t, double>, kNumTags> emit_counts;
  std::array<double, kNumTags> tag_totals{};

  for (const auto& s : corpus) {
    if (s.chars.size() != s.tags.size())
      throw std::invalid_argument("train_hmm: sentence length mismatch");
    if (s.chars.empty()) continue;
    start_counts[s.tags[0]] += 1;
    for (size_t i = 0; i < s.chars.size(); ++i) {
      emit_counts[s.tags[i]][s.chars[i]] += 1;
      tag_totals[s.tags[i]] += 1;
      m.vocab.insert(s.chars[i]);
      if (i + 1 < s.chars.size()) trans_counts[s.tags[i]][s.tags[i + 1]] += 1;
    }
  }

  // pi: smoothed over the allowed start tags {B, S} only
  double start_total = start_counts[TagB] + start_counts[TagS];
  for (int t = 0; t < kNumTags; ++t) {
    if (start_allowed(t))
      m.pi[t] = std::log((start_counts[t] + epsilon) / (start_total + 2 * epsilon));
    else
      m.pi[t] = kNegInf;
  }

  // transitions: smoothed over each row's two allowed columns
  for (int from = 0; from < kNumTags; ++from) {
    double row_total = 0;
    for (int to = 0; to < kNumTags; ++to)
      if (transition_allowed(from, to)) row_total += trans_counts[from][to];
    for (int to = 0; to < kNumTags; ++to) {
      if (transition_allowed(from, to))
        m.trans[from][to] = std::log((trans_counts[from][to] + epsilon) / (row_total + 2 * epsilon));
      else
        m.trans[from][to] = kNegInf;
    }
  }

  // emissions: smoothed over vocab plus one unknown bucket
  const double buckets = static_cast<double>(m.vocab.size()) + 1.0;
  for (int t = 0; t < kNumTags; ++t) {
    double denom = tag_totals[t] + epsilon * buckets;
    for (char32_t c : m.vocab) {
      auto it = emit_counts[t].find(c);
      double cnt = it != emit_counts[t].end() ? it->second : 0.0;
      m.emit[t][c] = std::log((cnt + epsilon) / denom);
    }
    m.emit_unknown[t] = std::log(epsilon / denom);
  }
  return m;
}

// Max-probability tag sequence for an observation sequence (log-space DP).
// Ties break toward the lowest tag index; the backtrace starts from the
// best of {E, S} since a word cannot end mid-word.
inline std::vector<int> viterbi_decode(const HmmModel& model, const std::vector<char32_t>& obs) {
  const size_t T = obs.size();
  if (T == 0) return {};

  std::vector<std::array<double, kNumTags>> score(T);
  std::vector<std::array<int, kNumTags>> backptr(T);

  for (int i = 0; i < kNumTags; ++i) {
    score[0][i] = model.pi[i] + model.emission(i, obs[0]);
    backptr[0][i] = 0;
  }
  for (size_t t = 1; t < T; ++t) {
    for (int i = 0; i < kNumTags; ++i) {
      double best = kNegInf;
      int arg = 0;
      for (int j = 0; j < kNumTags; ++j) {
        double v = score[t - 1][j] + model.trans[j][i];
        if (v > best) {
          best = v;
          arg = j;
        }
      }
      score[t][i] = best + model.emission(i, obs[t]);
      backptr[t][i] = arg;
    }
  }

  double best = kNegInf;
  int last = TagE;
  for (int i = 0; i < kNumTags; ++i) {
    if (!end_allowed(i)) continue;
    if (score[T - 1][i] > best) {
      best = score[T - 1][i];
      last = i;
    }
  }

  std::vector<int> tags(T);
  tags[T - 1] = last;
  for (size_t t = T - 1; t > 0; --t) tags[t - 1] = backptr[t][tags[t]];
  return tags;
}

// Score of the decoded sequence, for oracle comparison.
inline double sequence_log_score(const HmmModel& model, const std::vector<char32_t>& obs,
                                 const std::vector<int>& tags) {
  if (obs.empty()) return 0.0;
  double s = model.pi[tags[0]] + model.emission(tags[0], obs[0]);
  for (size_t t = 1; t < obs.size(); ++t)
    s += model.trans[tags[t - 1]][tags[t]] + model.emission(tags[t], obs[t]);
  return s;
}

// Sentence boundaries for decoding; each of these is emitted as its own
// single-char token so segmentation stays lossless. Whitespace counts as a
// boundary too so mixed Latin text decodes word by word.
inline bool is_split_char(char32_t c) {
  switch (c) {
    case U'。':  // 。
    case U'，':  // ，
    case U'；':  // ；
    case U'！':  // ！
    case U'？':  // ？
    case U',':
    case U'.':
    case U';':
    case U'!':
    case U'?':
    case U'\n':
    case U' ':
    case U'\t':
    case U'\r':
      return true;
    default:
      return false;
  }
}

// Full-text segmentation: split at punctuation, decode each sentence, cut.
inline std::vector<std::string> segment(const HmmModel& model, const std::string& text) {
  std::vector<char32_t> cps = utf8_decode(text);
  std::vector<std::string> tokens;
  std::vector<char32_t> sentence;
  auto flush = [&]() {
    if (sentence.empty()) return;
    std::vector<int> tags = viterbi_decode(model, sentence);
    for (auto& w : tags_to_words(sentence, tags)) tokens.push_back(std::move(w));
    sentence.clear();
  };
  for (char32_t c : cps) {
    if (is_split_char(c)) {
      flush();
      tokens.push_back(utf8_encode(c));
    } else {
      sentence.push_back(c);
    }
  }
  flush();
  return tokens;
}

// ---- model file format -------------------------------------------------

inline nlohmann::ordered_json model_to_json(const HmmModel& m) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["epsilon"] = m.smoothing_epsilon;
  auto logp = [](double v) {
    return v == kNegInf ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v);
  };
  for (int t = 0; t < kNumTags; ++t) j["pi"].push_back(logp(m.pi[t]));
  for (int f = 0; f < kNumTags; ++f) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int t = 0; t < kNumTags; ++t) row.push_back(logp(m.trans[f][t]));
    j["trans"].push_back(row);
  }
  nlohmann::ordered_json emit = nlohmann::ordered_json::array();
  for (int t = 0; t < kNumTags; ++t) {
    // sorted by codepoint for byte-stable output
    std::map<char32_t, double> sorted(m.emit[t].begin(), m.emit[t].end());
    nlohmann::ordered_json e = nlohmann::ordered_json::object();
    for (const auto& [c, v] : sorted) e[utf8_encode(c)] = v;
    emit.push_back(e);
  }
  j["emit"] = emit;
  for (int t = 0; t < kNumTags; ++t) j["emit_unknown"].push_back(m.emit_unknown[t]);
  nlohmann::ordered_json vocab = nlohmann::ordered_json::array();
  for (char32_t c : m.vocab) vocab.push_back(utf8_encode(c));
  j["vocab"] = vocab;
  return j;
}

inline HmmModel model_from_json(const nlohmann::ordered_json& j) {
  if (j.at("format_version").get<int>() != 1)
    throw std::runtime_error("unsupported model format_version");
  HmmModel m;
  m.smoothing_epsilon = j.at("epsilon").get<double>();
  auto logp = [](const nlohmann::ordered_json& v) {
    return v.is_null() ? kNegInf : v.get<double>();
  };
  for (int t = 0; t < kNumTags; ++t) m.pi[t] = logp(j.at("pi").at(t));
  for (int f = 0; f < kNumTags; ++f)
    for (int t = 0; t < kNumTags; ++t) m.trans[f][t] = logp(j.at("trans").at(f).at(t));
  for (int t = 0; t < kNumTags; ++t) {
    for (const auto& [k, v] : j.at("emit").at(t).items()) {
      std::vector<char32_t> cps = utf8_decode(k);
      if (cps.size() != 1) throw std::runtime_error("bad emission key in model file");
      m.emit[t][cps[0]] = v.get<double>();
    }
    m.emit_unknown[t] = j.at("emit_unknown").at(t).get<double>();
  }
  for (const auto& v : j.at("vocab")) {
    std::vector<char32_t> cps = utf8_decode(v.get<std::string>());
    if (cps.size() != 1) throw std::runtime_error("bad vocab entry in model file");
    m.vocab.insert(cps[0]);
  }
  return m;
}

// Gold corpus file: one sentence per line, words separated by single spaces.
inline TaggedCorpus corpus_from_text(const std::string& text) {
  TaggedCorpus corpus;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    std::vector<std::string> words;
    size_t p = 0;
    while (p < line.size()) {
      size_t sp = line.find(' ', p);
      if (sp == std::string::npos) sp = line.size();
      if (sp > p) words.push_back(line.substr(p, sp - p));
      p = sp + 1;
    }
    if (!words.empty()) corpus.push_back(words_to_tags(words));
    if (nl == text.size()) break;
  }
  return corpus;
}

}  // namespace hazardkg

#endif  // HAZARDKG_HMM_HPP
