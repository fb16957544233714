#ifndef HAZARDKG_SEARCH_HPP
#define HAZARDKG_SEARCH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "hazardkg/hmm.hpp"
#include "hazardkg/record.hpp"
#include "hazardkg/unicode.hpp"

namespace hazardkg {

namespace fs = std::filesystem;

struct IntegrityError : std::runtime_error {
  explicit IntegrityError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DuplicateIdError : std::runtime_error {
  explicit DuplicateIdError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---- analyzer ----------------------------------------------------------

// Segmenter-driven tokenization: HMM tokens, punctuation dropped, Latin
// lowercased. Positions are 0-based indices over the kept terms.
inline std::vector<std::pair<std::string, uint32_t>> analyze(const std::string& text,
                                                             const HmmModel& model) {
  std::vector<std::pair<std::string, uint32_t>> out;
  uint32_t pos = 0;
  for (const auto& tok : segment(model, text)) {
    std::vector<char32_t> cps = utf8_decode(tok);
    bool punct = true;
    for (char32_t c : cps)
      if (!is_split_char(c)) punct = false;
    if (punct) continue;
    out.emplace_back(ascii_lower(tok), pos++);
  }
  return out;
}

// ---- routing -----------------------------------------------------------

inline uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

struct ShardRouter {
  uint32_t num_shards;

  explicit ShardRouter(uint32_t n) : num_shards(n) {
    if (n < 1) throw std::invalid_argument("num_shards must be >= 1");
  }

  uint32_t route(const std::string& key) const {
    if (key.empty()) throw std::invalid_argument("routing key must be non-empty");
    return static_cast<uint32_t>(fnv1a64(key) % num_shards);
  }
};

// ---- index structures --------------------------------------------------

struct PostingEntry {
  std::string doc_id;
  uint32_t term_frequency = 0;
  std::vector<uint32_t> positions;  // strictly increasing; size == term_frequency
};

struct InvertedIndex {
  std::map<std::string, std::vector<PostingEntry>> terms;  // postings sorted by doc_id
  std::map<std::string, uint32_t> doc_lengths;

  size_t doc_count() const { return doc_lengths.size(); }

  void add_document(const std::string& doc_id,
                    const std::vector<std::pair<std::string, uint32_t>>& tokens) {
    std::map<std::string, std::vector<uint32_t>> per_term;
    for (const auto& [term, pos] : tokens) per_term[term].push_back(pos);
    for (auto& [term, positions] : per_term) {
      PostingEntry e{doc_id, static_cast<uint32_t>(positions.size()), std::move(positions)};
      auto& list = terms[term];
      auto it = std::lower_bound(list.begin(), list.end(), doc_id,
                                 [](const PostingEntry& p, const std::string& id) {
                                   return p.doc_id < id;
                                 });
      list.insert(it, std::move(e));
    }
    doc_lengths[doc_id] = static_cast<uint32_t>(tokens.size());
  }
};

struct IndexSegment {
  uint64_t segment_id = 0;
  InvertedIndex index;  // immutable once sealed
};

struct CommitPoint {
  uint64_t commit_id = 0;
  std::vector<uint64_t> live_segment_ids;
  std::set<std::string> tombstones;
};

struct SearchHit {
  std::string doc_id;
  double score = 0;
  std::vector<std::string> matched_terms;
};

struct ClusterMeta {
  uint32_t num_shards = 1;
  uint32_t num_nodes = 1;

  uint32_t node_of(uint32_t shard) const { return shard % num_nodes; }
  fs::path shard_dir(const fs::path& root, uint32_t shard) const {
    return root / ("node-" + std::to_string(node_of(shard))) /
           ("shard-" + std::to_string(shard));
  }
};

// ---- segment file format ----------------------------------------------

namespace segio {

inline constexpr char kMagic[8] = {'H', 'K', 'G', 'S', 'E', 'G', '1', '\n'};
inline constexpr char kEndMagic[8] = {'H', 'K', 'G', 'E', 'N', 'D', '1', '\n'};

inline void write_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, uint64_t v) {
  write_u32(os, static_cast<uint32_t>(v));
  write_u32(os, static_cast<uint32_t>(v >> 32));
}

inline void write_str(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

struct Reader {
  std::ifstream in;
  std::string name;

  explicit Reader(const fs::path& p) : in(p, std::ios::binary), name(p.string()) {
    if (!in) throw IntegrityError("cannot open segment file " + name);
  }

  void read_bytes(void* dst, size_t n) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n)
      throw IntegrityError("truncated segment file " + name);
  }

  uint32_t read_u32() {
    unsigned char b[4];
    read_bytes(b, 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
  }

  uint64_t read_u64() {
    uint64_t lo = read_u32();
    uint64_t hi = read_u32();
    return lo | (hi << 32);
  }

  std::string read_str() {
    uint32_t n = read_u32();
    if (n > (1u << 28)) throw IntegrityError("corrupt length field in " + name);
    std::string s(n, '\0');
    if (n) read_bytes(s.data(), n);
    return s;
  }
};

}  // namespace segio

inline void write_segment_file(const fs::path& path, const IndexSegment& seg) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write segment file " + path.string());
  os.write(segio::kMagic, 8);
  segio::write_u64(os, seg.segment_id);
  segio::write_u32(os, static_cast<uint32_t>(seg.index.terms.size()));
  for (const auto& [term, postings] : seg.index.terms) {
    segio::write_str(os, term);
    segio::write_u32(os, static_cast<uint32_t>(postings.size()));
    for (const auto& p : postings) {
      segio::write_str(os, p.doc_id);
      segio::write_u32(os, p.term_frequency);
      for (uint32_t pos : p.positions) segio::write_u32(os, pos);
    }
  }
  segio::write_u32(os, static_cast<uint32_t>(seg.index.doc_lengths.size()));
  for (const auto& [id, len] : seg.index.doc_lengths) {
    segio::write_str(os, id);
    segio::write_u32(os, len);
  }
  os.write(segio::kEndMagic, 8);
  if (!os) throw std::runtime_error("write failure on " + path.string());
}

inline IndexSegment read_segment_file(const fs::path& path) {
  segio::Reader r(path);
  char magic[8];
  r.read_bytes(magic, 8);
  if (std::memcmp(magic, segio::kMagic, 8) != 0)
    throw IntegrityError("bad magic in segment file " + path.string());
  IndexSegment seg;
  seg.segment_id = r.read_u64();
  uint32_t term_count = r.read_u32();
  for (uint32_t t = 0; t < term_count; ++t) {
    std::string term = r.read_str();
    uint32_t n = r.read_u32();
    std::vector<PostingEntry> postings;
    postings.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
      PostingEntry p;
      p.doc_id = r.read_str();
      p.term_frequency = r.read_u32();
      if (p.term_frequency == 0 || p.term_frequency > (1u << 26))
        throw IntegrityError("corrupt posting in " + path.string());
      p.positions.resize(p.term_frequency);
      for (auto& pos : p.positions) pos = r.read_u32();
      postings.push_back(std::move(p));
    }
    seg.index.terms[term] = std::move(postings);
  }
  uint32_t doc_count = r.read_u32();
  for (uint32_t i = 0; i < doc_count; ++i) {
    std::string id = r.read_str();
    seg.index.doc_lengths[id] = r.read_u32();
  }
  char end[8];
  r.read_bytes(end, 8);
  if (std::memcmp(end, segio::kEndMagic, 8) != 0)
    throw IntegrityError("missing end marker in segment file " + path.string());
  r.in.peek();
  if (!r.in.eof()) throw IntegrityError("trailing bytes in segment file " + path.string());
  return seg;
}

// ---- engine ------------------------------------------------------------

// Embedded sharded engine. Nodes are simulated as storage directories under
// one root; shards hold immutable segments named by commit points.
class SearchEngine {
 public:
  // Initializes a fresh index layout and writes meta.json.
  static SearchEngine create(const fs::path& root, uint32_t num_shards, uint32_t num_nodes = 0) {
    if (num_shards < 1) throw std::invalid_argument("num_shards must be >= 1");
    if (num_nodes == 0) num_nodes = num_shards;
    ClusterMeta meta{num_shards, num_nodes};
    fs::create_directories(root);
    nlohmann::ordered_json j;
    j["format_version"] = 1;
    j["num_shards"] = num_shards;
    j["num_nodes"] = num_nodes;
    nlohmann::ordered_json shards = nlohmann::ordered_json::array();
    for (uint32_t s = 0; s < num_shards; ++s) {
      shards.push_back({{"shard", s},
                        {"node", meta.node_of(s)},
                        {"path", meta.shard_dir(".", s).generic_string()}});
      fs::create_directories(meta.shard_dir(root, s));
    }
    j["shards"] = shards;
    std::ofstream os(root / "meta.json");
    os << j.dump(2) << "\n";
    if (!os) throw std::runtime_error("cannot write " + (root / "meta.json").string());
    return SearchEngine(root, meta);
  }

  // Loads the highest valid commit point of every shard.
  static SearchEngine open(const fs::path& root) {
    std::ifstream is(root / "meta.json");
    if (!is) throw std::runtime_error("missing index metadata: " + (root / "meta.json").string());
    auto j = nlohmann::ordered_json::parse(is);
    ClusterMeta meta{j.at("num_shards").get<uint32_t>(), j.at("num_nodes").get<uint32_t>()};
    SearchEngine e(root, meta);
    for (auto& shard : e.shards_) e.load_shard(shard);
    return e;
  }

  uint32_t num_shards() const { return meta_.num_shards; }

  // Analyzes each record's searchable text and commits it to its routed
  // shard. The whole batch either becomes visible via new commit points or
  // leaves the previous state authoritative.
  void index_documents(const std::vector<HazardRecord>& records, const HmmModel& model) {
    std::unordered_set<std::string> batch_ids;
    for (const auto& r : records) {
      if (r.id.empty()) throw std::invalid_argument("record with empty id");
      if (!batch_ids.insert(r.id).second)
        throw DuplicateIdError("duplicate doc id in batch: " + r.id);
    }
    ShardRouter router(meta_.num_shards);
    std::vector<std::vector<const HazardRecord*>> per_shard(meta_.num_shards);
    for (const auto& r : records) per_shard[router.route(r.id)].push_back(&r);

    for (uint32_t s = 0; s < meta_.num_shards; ++s) {
      if (per_shard[s].empty()) continue;
      ShardState& shard = shards_[s];
      std::vector<IndexSegment> sealed;
      IndexSegment cur;
      cur.segment_id = next_segment_id(shard);
      for (const HazardRecord* rec : per_shard[s]) {
        cur.index.add_document(rec->id, analyze(searchable_text(*rec), model));
        if (cur.index.doc_count() >= kSealThreshold) {
          sealed.push_back(std::move(cur));
          cur = IndexSegment{};
          cur.segment_id = sealed.back().segment_id + 1;
        }
      }
      if (cur.index.doc_count() > 0) sealed.push_back(std::move(cur));
      commit_segments(shard, sealed, {});
    }
  }

  // Records tombstones in a fresh commit point; segments stay untouched.
  void delete_documents(const std::vector<std::string>& ids) {
    ShardRouter router(meta_.num_shards);
    std::vector<std::vector<std::string>> per_shard(meta_.num_shards);
    for (const auto& id : ids) per_shard[router.route(id)].push_back(id);
    for (uint32_t s = 0; s < meta_.num_shards; ++s) {
      if (per_shard[s].empty()) continue;
      commit_segments(shards_[s], {}, {per_shard[s].begin(), per_shard[s].end()});
    }
  }

  static std::string searchable_text(const HazardRecord& r) {
    return r.equipment_name + " " + r.hazard_content + " " + r.detail_category + " " +
           r.control_measures;
  }

  // OR query, tf-idf scoring with corpus-global document frequencies,
  // scatter-gather over shards, deterministic (score desc, doc_id asc).
  std::vector<SearchHit> search(const std::string& query, size_t k, const HmmModel& model) const {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    std::set<std::string> terms;
    for (const auto& [t, pos] : analyze(query, model)) terms.insert(t);
    if (terms.empty()) return {};

    // gather: global doc count and per-term df over live docs
    size_t n_docs = 0;
    std::map<std::string, size_t> df;
    for (const auto& shard : shards_) {
      n_docs += shard.live_docs.size();
      for (const auto& term : terms) df[term] += shard_df(shard, term);
    }
    if (n_docs == 0) return {};

    std::map<std::string, double> idf;
    for (const auto& [term, d] : df)
      idf[term] = std::log(1.0 + (static_cast<double>(n_docs) - d + 0.5) / (d + 0.5));

    // scatter: per-shard top-k
    std::vector<SearchHit> all;
    for (const auto& shard : shards_) {
      auto hits = shard_topk(shard, terms, idf, k);
      all.insert(all.end(), hits.begin(), hits.end());
    }
    std::sort(all.begin(), all.end(), [](const SearchHit& a, const SearchHit& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.doc_id < b.doc_id;
    });
    if (all.size() > k) all.resize(k);
    return all;
  }

  // Compacts each shard into a single segment, dropping tombstoned and
  // superseded documents. Search results are unchanged.
  void merge_all() {
    for (auto& shard : shards_) merge_shard(shard);
  }

  size_t live_doc_count() const {
    size_t n = 0;
    for (const auto& shard : shards_) n += shard.live_docs.size();
    return n;
  }

  size_t live_segment_count() const {
    size_t n = 0;
    for (const auto& shard : shards_) n += shard.segments.size();
    return n;
  }

  const fs::path& root() const { return root_; }

  static constexpr size_t kSealThreshold = 1000;

 private:
  struct ShardState {
    uint32_t shard_id = 0;
    fs::path dir;
    CommitPoint commit;
    std::vector<IndexSegment> segments;  // live, ordered by segment_id
    // doc_id -> owning segment index (highest segment wins on re-index)
    std::unordered_map<std::string, size_t> live_docs;
  };

  SearchEngine(const fs::path& root, const ClusterMeta& meta) : root_(root), meta_(meta) {
    shards_.resize(meta.num_shards);
    for (uint32_t s = 0; s < meta.num_shards; ++s) {
      shards_[s].shard_id = s;
      shards_[s].dir = meta.shard_dir(root, s);
    }
  }

  static void rebuild_live_docs(ShardState& shard) {
    shard.live_docs.clear();
    for (size_t i = 0; i < shard.segments.size(); ++i)
      for (const auto& [id, len] : shard.segments[i].index.doc_lengths)
        if (!shard.commit.tombstones.count(id)) shard.live_docs[id] = i;
  }

  uint64_t next_segment_id(const ShardState& shard) const {
    uint64_t next = 1;
    for (const auto& seg : shard.segments) next = std::max(next, seg.segment_id + 1);
    return next;
  }

  void load_shard(ShardState& shard) const {
    std::vector<std::pair<uint64_t, fs::path>> commits;
    if (fs::exists(shard.dir)) {
      for (const auto& e : fs::directory_iterator(shard.dir)) {
        std::string name = e.path().filename().string();
        if (name.rfind("commit-", 0) == 0 && name.size() > 12 &&
            name.substr(name.size() - 5) == ".json")
          commits.emplace_back(std::stoull(name.substr(7, name.size() - 12)), e.path());
      }
    }
    std::sort(commits.begin(), commits.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    std::string last_error;
    for (const auto& [cid, path] : commits) {
      try {
        CommitPoint cp;
        std::ifstream is(path);
        auto j = nlohmann::ordered_json::parse(is);
        cp.commit_id = j.at("commit_id").get<uint64_t>();
        for (const auto& v : j.at("segments")) cp.live_segment_ids.push_back(v.get<uint64_t>());
        for (const auto& v : j.at("tombstones")) cp.tombstones.insert(v.get<std::string>());
        std::vector<IndexSegment> segs;
        for (uint64_t sid : cp.live_segment_ids)
          segs.push_back(read_segment_file(shard.dir / ("seg-" + std::to_string(sid) + ".idx")));
        shard.commit = std::move(cp);
        shard.segments = std::move(segs);
        rebuild_live_docs(shard);
        return;
      } catch (const std::exception& e) {
        last_error = e.what();
      }
    }
    if (!commits.empty())
      throw IntegrityError("shard-" + std::to_string(shard.shard_id) +
                           ": no loadable commit point (" + last_error + ")");
    // fresh shard: empty state
  }

  // Writes new segment files, then atomically publishes a commit point via
  // rename. A failure before the rename leaves the old commit authoritative.
  void commit_segments(ShardState& shard, std::vector<IndexSegment> new_segments,
                       std::set<std::string> new_tombstones) {
    fs::create_directories(shard.dir);
    for (const auto& seg : new_segments)
      write_segment_file(shard.dir / ("seg-" + std::to_string(seg.segment_id) + ".idx"), seg);

    CommitPoint cp;
    cp.commit_id = shard.commit.commit_id + 1;
    cp.live_segment_ids = shard.commit.live_segment_ids;
    for (const auto& seg : new_segments) cp.live_segment_ids.push_back(seg.segment_id);
    cp.tombstones = shard.commit.tombstones;
    // a re-indexed doc is live again; its older copies are superseded by
    // the higher segment id
    for (const auto& seg : new_segments)
      for (const auto& [id, len] : seg.index.doc_lengths) cp.tombstones.erase(id);
    cp.tombstones.insert(new_tombstones.begin(), new_tombstones.end());

    write_commit_file(shard.dir, cp);
    shard.commit = std::move(cp);
    for (auto& seg : new_segments) shard.segments.push_back(std::move(seg));
    rebuild_live_docs(shard);
  }

  static void write_commit_file(const fs::path& dir, const CommitPoint& cp) {
    nlohmann::ordered_json j;
    j["format_version"] = 1;
    j["commit_id"] = cp.commit_id;
    j["segments"] = cp.live_segment_ids;
    j["tombstones"] = nlohmann::ordered_json::array();
    for (const auto& t : cp.tombstones) j["tombstones"].push_back(t);
    fs::path tmp = dir / ("commit-" + std::to_string(cp.commit_id) + ".json.tmp");
    fs::path final_path = dir / ("commit-" + std::to_string(cp.commit_id) + ".json");
    {
      std::ofstream os(tmp);
      os << j.dump(2) << "\n";
      if (!os) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw std::runtime_error("cannot write commit point " + final_path.string());
      }
    }
    fs::rename(tmp, final_path);
  }

  size_t shard_df(const ShardState& shard, const std::string& term) const {
    size_t df = 0;
    for (size_t i = 0; i < shard.segments.size(); ++i) {
      auto it = shard.segments[i].index.terms.find(term);
      if (it == shard.segments[i].index.terms.end()) continue;
      for (const auto& p : it->second) {
        auto owner = shard.live_docs.find(p.doc_id);
        if (owner != shard.live_docs.end() && owner->second == i) ++df;
      }
    }
    return df;
  }

  std::vector<SearchHit> shard_topk(const ShardState& shard, const std::set<std::string>& terms,
                                    const std::map<std::string, double>& idf, size_t k) const {
    std::map<std::string, SearchHit> per_doc;
    for (const auto& term : terms) {
      double w = idf.at(term);
      for (size_t i = 0; i < shard.segments.size(); ++i) {
        auto it = shard.segments[i].index.terms.find(term);
        if (it == shard.segments[i].index.terms.end()) continue;
        for (const auto& p : it->second) {
          auto owner = shard.live_docs.find(p.doc_id);
          if (owner == shard.live_docs.end() || owner->second != i) continue;
          SearchHit& h = per_doc[p.doc_id];
          h.doc_id = p.doc_id;
          h.score += static_cast<double>(p.term_frequency) * w;
          h.matched_terms.push_back(term);
        }
      }
    }
    std::vector<SearchHit> hits;
    hits.reserve(per_doc.size());
    for (auto& [id, h] : per_doc) hits.push_back(std::move(h));
    std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.doc_id < b.doc_id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
  }

  void merge_shard(ShardState& shard) {
    if (shard.segments.empty()) return;
    IndexSegment merged;
    merged.segment_id = next_segment_id(shard);
    for (const auto& [id, seg_idx] : shard.live_docs) {
      const InvertedIndex& src = shard.segments[seg_idx].index;
      merged.index.doc_lengths[id] = src.doc_lengths.at(id);
    }
    for (size_t i = 0; i < shard.segments.size(); ++i) {
      for (const auto& [term, postings] : shard.segments[i].index.terms) {
        for (const auto& p : postings) {
          auto owner = shard.live_docs.find(p.doc_id);
          if (owner == shard.live_docs.end() || owner->second != i) continue;
          auto& list = merged.index.terms[term];
          auto it = std::lower_bound(list.begin(), list.end(), p.doc_id,
                                     [](const PostingEntry& e, const std::string& id) {
                                       return e.doc_id < id;
                                     });
          list.insert(it, p);
        }
      }
    }
    write_segment_file(shard.dir / ("seg-" + std::to_string(merged.segment_id) + ".idx"), merged);
    CommitPoint cp;
    cp.commit_id = shard.commit.commit_id + 1;
    cp.live_segment_ids = {merged.segment_id};
    write_commit_file(shard.dir, cp);
    shard.commit = std::move(cp);
    shard.segments.clear();
    shard.segments.push_back(std::move(merged));
    rebuild_live_docs(shard);
  }

  fs::path root_;
  ClusterMeta meta_;
  std::vector<ShardState> shards_;
};

}  // namespace hazardkg

#endif  // HAZARDKG_SEARCH_HPP
