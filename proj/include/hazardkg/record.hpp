#ifndef HAZARDKG_RECORD_HPP
#define HAZARDKG_RECORD_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hazardkg/unicode.hpp"

namespace hazardkg {

using json = nlohmann::ordered_json;

enum class Severity { I, II, III, Unrated };

inline std::string severity_to_string(Severity s) {
  switch (s) {
    case Severity::I: return "I";
    case Severity::II: return "II";
    case Severity::III: return "III";
    default: return "unrated";
  }
}

inline Severity severity_from_string(const std::string& s) {
  if (s == "I") return Severity::I;
  if (s == "II") return Severity::II;
  if (s == "III") return Severity::III;
  return Severity::Unrated;
}

struct CalendarDate {
  int year = 0;
  int month = 0;  // 1-12
  int day = 0;

  bool operator==(const CalendarDate&) const = default;

  std::string to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
  }
};

// Accepts YYYY-MM-DD and YYYY/MM/DD; anything else is rejected.
inline std::optional<CalendarDate> parse_date(const std::string& s) {
  if (s.size() < 8 || s.size() > 10) return std::nullopt;
  int y = 0, m = 0, d = 0;
  char sep1 = 0, sep2 = 0;
  if (std::sscanf(s.c_str(), "%d%c%d%c%d", &y, &sep1, &m, &sep2, &d) != 5) return std::nullopt;
  if (sep1 != sep2 || (sep1 != '-' && sep1 != '/')) return std::nullopt;
  if (y < 1900 || y > 9999 || m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
  return CalendarDate{y, m, d};
}

// One normalized hidden-danger report.
struct HazardRecord {
  std::string id;
  std::optional<CalendarDate> inspect_time;
  std::string location;
  std::string equipment_name;
  std::string hazard_content;
  std::string detail_category;
  std::string violation_info;
  Severity severity_level = Severity::Unrated;
  std::string control_measures;
  std::string voltage_class;
  std::map<std::string, std::string> extra;  // unrecognized headers, auxiliary attributes
  bool date_warning = false;                 // unparseable time field (not serialized)

  std::optional<int> month() const {
    if (inspect_time) return inspect_time->month;
    return std::nullopt;
  }

  bool operator==(const HazardRecord& o) const {
    return id == o.id && inspect_time == o.inspect_time && location == o.location &&
           equipment_name == o.equipment_name && hazard_content == o.hazard_content &&
           detail_category == o.detail_category && violation_info == o.violation_info &&
           severity_level == o.severity_level && control_measures == o.control_measures &&
           voltage_class == o.voltage_class && extra == o.extra;
  }
};

struct RawTableText {
  std::string content;
  std::string source_name;
};

struct HeaderDataPair {
  std::string header;
  std::string value;
  size_t span_start = 0;  // codepoint offsets of the data area within the raw text
  size_t span_end = 0;
};

// The paper's seven field names plus the optional voltage class header.
inline const std::vector<std::string>& default_header_lexicon() {
  static const std::vector<std::string> kHeaders = {
      "hidden danger investigation time",
      "investigation place",
      "equipment name",
      "accident hidden danger content",
      "detailed classification of hidden dangers",
      "violation information",
      "evaluation level",
      "prevention and control measures",
      "voltage class",
  };
  return kHeaders;
}

namespace detail {

struct Chunk {
  std::string text;
  size_t start;  // codepoint offsets
  size_t end;
};

// Splits raw text into chunks at data-area terminators: any newline or a
// run of >= 2 spaces. Single spaces stay inside a chunk.
inline std::vector<Chunk> split_chunks(const std::vector<char32_t>& cps) {
  std::vector<Chunk> chunks;
  size_t i = 0;
  const size_t n = cps.size();
  auto is_break = [&](size_t p) {
    if (cps[p] == U'\n' || cps[p] == U'\r' || cps[p] == U'\t') return true;
    if (cps[p] == U' ' && p + 1 < n && cps[p + 1] == U' ') return true;
    return false;
  };
  while (i < n) {
    while (i < n && (cps[i] == U' ' || cps[i] == U'\n' || cps[i] == U'\r' || cps[i] == U'\t')) ++i;
    if (i >= n) break;
    size_t start = i;
    while (i < n && !is_break(i)) ++i;
    size_t end = i;
    while (end > start && cps[end - 1] == U' ') --end;
    std::vector<char32_t> sub(cps.begin() + start, cps.begin() + end);
    chunks.push_back({utf8_encode(sub), start, end});
    i = std::max(i, end);
  }
  return chunks;
}

}  // namespace detail

// Extracts (header, value) pairs: each chunk that exactly matches a lexicon
// entry opens a header; the value is the maximal run of chunks up to the next
// recognized header. Throws DecodeError on malformed input.
inline std::vector<HeaderDataPair> parse_table(const RawTableText& raw,
                                               const std::vector<std::string>& header_lexicon) {
  std::set<std::string> lex(header_lexicon.begin(), header_lexicon.end());
  std::vector<char32_t> cps = utf8_decode(raw.content);
  std::vector<detail::Chunk> chunks = detail::split_chunks(cps);

  std::vector<HeaderDataPair> pairs;
  HeaderDataPair* open = nullptr;
  for (const auto& c : chunks) {
    if (lex.count(c.text)) {
      pairs.push_back({c.text, "", c.end, c.end});
      open = &pairs.back();
    } else if (open) {
      if (!open->value.empty()) open->value += ' ';
      open->value += c.text;
      if (open->span_start == open->span_end) open->span_start = c.start;
      open->span_end = c.end;
    }
    // text before the first recognized header is discarded
  }
  return pairs;
}

inline const std::map<std::string, std::string>& header_field_table() {
  static const std::map<std::string, std::string> kTable = {
      {"hidden danger investigation time", "inspect_time"},
      {"investigation place", "location"},
      {"equipment name", "equipment_name"},
      {"accident hidden danger content", "hazard_content"},
      {"detailed classification of hidden dangers", "detail_category"},
      {"violation information", "violation_info"},
      {"evaluation level", "severity_level"},
      {"prevention and control measures", "control_measures"},
      {"voltage class", "voltage_class"},
  };
  return kTable;
}

// Pulls a "<digits>kV" fragment out of free text, e.g. "220kV Wukeshu substation".
inline std::string scan_voltage_class(const std::string& text) {
  for (size_t i = 0; i < text.size(); ++i) {
    if (std::isdigit(static_cast<unsigned char>(text[i]))) {
      size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      if (j + 1 < text.size() && text[j] == 'k' && text[j + 1] == 'V')
        return text.substr(i, j + 2 - i);
      i = j;
    }
  }
  return "";
}

// Total over any pair list: unknown headers land in `extra`, missing fields
// default to empty/unrated, a bad date sets date_warning instead of failing.
inline HazardRecord assemble_record(const std::vector<HeaderDataPair>& pairs,
                                    const std::string& id) {
  if (id.empty()) throw std::invalid_argument("record id must be non-empty");
  HazardRecord rec;
  rec.id = id;
  const auto& table = header_field_table();
  for (const auto& p : pairs) {
    auto it = table.find(p.header);
    if (it == table.end()) {
      rec.extra[p.header] = p.value;
      continue;
    }
    const std::string& field = it->second;
    if (field == "inspect_time") {
      auto d = parse_date(p.value);
      if (d)
        rec.inspect_time = d;
      else if (!p.value.empty())
        rec.date_warning = true;
    } else if (field == "location") {
      rec.location = p.value;
    } else if (field == "equipment_name") {
      rec.equipment_name = p.value;
    } else if (field == "hazard_content") {
      rec.hazard_content = p.value;
    } else if (field == "detail_category") {
      rec.detail_category = p.value;
    } else if (field == "violation_info") {
      rec.violation_info = p.value;
    } else if (field == "severity_level") {
      rec.severity_level = severity_from_string(p.value);
    } else if (field == "control_measures") {
      rec.control_measures = p.value;
    } else if (field == "voltage_class") {
      rec.voltage_class = p.value;
    }
  }
  if (rec.voltage_class.empty()) {
    rec.voltage_class = scan_voltage_class(rec.equipment_name);
    if (rec.voltage_class.empty()) rec.voltage_class = scan_voltage_class(rec.location);
  }
  return rec;
}

inline json to_document(const HazardRecord& r) {
  json j;
  j["id"] = r.id;
  j["inspect_time"] = r.inspect_time ? json(r.inspect_time->to_string()) : json(nullptr);
  j["location"] = r.location;
  j["equipment_name"] = r.equipment_name;
  j["hazard_content"] = r.hazard_content;
  j["detail_category"] = r.detail_category;
  j["violation_info"] = r.violation_info;
  j["severity_level"] = severity_to_string(r.severity_level);
  j["control_measures"] = r.control_measures;
  j["voltage_class"] = r.voltage_class;
  json extra = json::object();
  for (const auto& [k, v] : r.extra) extra[k] = v;
  j["extra"] = extra;
  return j;
}

inline HazardRecord record_from_document(const json& j) {
  HazardRecord r;
  r.id = j.at("id").get<std::string>();
  if (!j.at("inspect_time").is_null()) r.inspect_time = parse_date(j.at("inspect_time").get<std::string>());
  r.location = j.at("location").get<std::string>();
  r.equipment_name = j.at("equipment_name").get<std::string>();
  r.hazard_content = j.at("hazard_content").get<std::string>();
  r.detail_category = j.at("detail_category").get<std::string>();
  r.violation_info = j.at("violation_info").get<std::string>();
  r.severity_level = severity_from_string(j.at("severity_level").get<std::string>());
  r.control_measures = j.at("control_measures").get<std::string>();
  r.voltage_class = j.at("voltage_class").get<std::string>();
  for (const auto& [k, v] : j.at("extra").items()) r.extra[k] = v.get<std::string>();
  return r;
}

inline std::string records_to_jsonl(const std::vector<HazardRecord>& recs) {
  std::string out;
  for (const auto& r : recs) {
    out += to_document(r).dump();
    out += '\n';
  }
  return out;
}

inline std::vector<HazardRecord> records_from_jsonl(const std::string& text) {
  std::vector<HazardRecord> recs;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    recs.push_back(record_from_document(json::parse(line)));
  }
  return recs;
}

// Groups a flat pair stream into records: a header already seen in the
// current cycle starts a new record (one record per header-cycle).
inline std::vector<std::vector<HeaderDataPair>> split_header_cycles(
    const std::vector<HeaderDataPair>& pairs) {
  std::vector<std::vector<HeaderDataPair>> groups;
  std::set<std::string> seen;
  for (const auto& p : pairs) {
    if (groups.empty() || seen.count(p.header)) {
      groups.emplace_back();
      seen.clear();
    }
    groups.back().push_back(p);
    seen.insert(p.header);
  }
  return groups;
}

}  // namespace hazardkg

#endif  // HAZARDKG_RECORD_HPP
