#ifndef HAZARDKG_ANALYTICS_HPP
#define HAZARDKG_ANALYTICS_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hazardkg/record.hpp"
#include "hazardkg/unicode.hpp"

namespace hazardkg {

// The six hazard types, in first-match classification order.
enum class HazardType { E1, E2, E3, E4, E5, E6 };

inline constexpr int kNumHazardTypes = 6;

inline const std::vector<HazardType>& all_hazard_types() {
  static const std::vector<HazardType> kAll = {HazardType::E1, HazardType::E2, HazardType::E3,
                                               HazardType::E4, HazardType::E5, HazardType::E6};
  return kAll;
}

inline std::string hazard_type_code(HazardType t) {
  switch (t) {
    case HazardType::E1: return "E1";
    case HazardType::E2: return "E2";
    case HazardType::E3: return "E3";
    case HazardType::E4: return "E4";
    case HazardType::E5: return "E5";
    case HazardType::E6: return "E6";
  }
  return "?";
}

inline std::string hazard_type_name(HazardType t) {
  switch (t) {
    case HazardType::E1: return "winding_deformation";
    case HazardType::E2: return "fault_shutdown";
    case HazardType::E3: return "protection_misoperation";
    case HazardType::E4: return "drainage_line_falloff";
    case HazardType::E5: return "pollution_rain_flashover";
    case HazardType::E6: return "mechanism_pressure_relief";
  }
  return "unknown";
}

inline HazardType hazard_type_from_code(const std::string& code) {
  for (HazardType t : all_hazard_types())
    if (hazard_type_code(t) == code) return t;
  throw std::invalid_argument("unknown hazard type code: " + code);
}

// Editable keyword lists per type; defaults cover the six categories in
// both English and Chinese surface forms.
using HazardKeywords = std::map<HazardType, std::vector<std::string>>;

inline HazardKeywords default_hazard_keywords() {
  return {
      {HazardType::E1, {"winding deformation", "绕组变形"}},
      {HazardType::E2, {"fault shutdown", "malfunction and shutdown", "故障停运", "停运"}},
      {HazardType::E3, {"protection misoperation", "mis-operation of protection", "保护误动"}},
      {HazardType::E4, {"drainage line", "引流线脱落"}},
      {HazardType::E5, {"pollution flashover", "rain flashover", "污闪", "雨闪"}},
      {HazardType::E6, {"pressure relief", "压力释放", "泄压"}},
  };
}

// First type in E1..E6 order whose keyword list matches hazard_content or
// detail_category (substring, Latin case-insensitive).
inline std::optional<HazardType> classify_hazard(const HazardRecord& record,
                                                 const HazardKeywords& keywords =
                                                     default_hazard_keywords()) {
  std::string text = ascii_lower(record.hazard_content + " " + record.detail_category);
  for (HazardType t : all_hazard_types()) {
    auto it = keywords.find(t);
    if (it == keywords.end()) continue;
    for (const auto& kw : it->second)
      if (text.find(ascii_lower(kw)) != std::string::npos) return t;
  }
  return std::nullopt;
}

struct MonthlyStats {
  std::map<std::pair<HazardType, int>, long> counts;  // (type, month 1-12) -> count
  std::set<int> months_covered;
  long unclassified = 0;  // records without a month or without a type

  long count(HazardType t, int month) const {
    auto it = counts.find({t, month});
    return it != counts.end() ? it->second : 0;
  }

  long total(HazardType t) const {
    long n = 0;
    for (int m : months_covered) n += count(t, m);
    return n;
  }
};

inline MonthlyStats monthly_counts(const std::vector<HazardRecord>& records,
                                   const HazardKeywords& keywords = default_hazard_keywords()) {
  MonthlyStats stats;
  for (const auto& r : records) {
    auto type = classify_hazard(r, keywords);
    auto month = r.month();
    if (!type || !month) {
      ++stats.unclassified;
      continue;
    }
    ++stats.counts[{*type, *month}];
    stats.months_covered.insert(*month);
  }
  return stats;
}

// Flags (type, month) whenever the month's count exceeds factor times the
// type's mean over the covered months.
inline std::vector<std::pair<HazardType, int>> seasonal_flags(const MonthlyStats& stats,
                                                              double factor = 1.5) {
  if (factor <= 0) throw std::invalid_argument("factor must be positive");
  if (stats.months_covered.empty())
    throw std::invalid_argument("seasonal_flags: no months covered");
  std::vector<std::pair<HazardType, int>> flags;
  for (HazardType t : all_hazard_types()) {
    double mean = static_cast<double>(stats.total(t)) / stats.months_covered.size();
    for (int m : stats.months_covered)
      if (static_cast<double>(stats.count(t, m)) > factor * mean) flags.emplace_back(t, m);
  }
  return flags;
}

// ---- prediction rules --------------------------------------------------

enum class Comparator { Gt, Ge, Lt, Le, Eq, Ne };

inline std::string comparator_name(Comparator c) {
  switch (c) {
    case Comparator::Gt: return "gt";
    case Comparator::Ge: return "ge";
    case Comparator::Lt: return "lt";
    case Comparator::Le: return "le";
    case Comparator::Eq: return "eq";
    case Comparator::Ne: return "ne";
  }
  return "?";
}

inline Comparator comparator_from_name(const std::string& s) {
  if (s == "gt") return Comparator::Gt;
  if (s == "ge") return Comparator::Ge;
  if (s == "lt") return Comparator::Lt;
  if (s == "le") return Comparator::Le;
  if (s == "eq") return Comparator::Eq;
  if (s == "ne") return Comparator::Ne;
  throw std::invalid_argument("unknown comparator: " + s);
}

// Pure, total predicate over one `extra` attribute of a record.
struct PredictionRule {
  std::string rule_id;
  std::string attribute;
  Comparator comparator = Comparator::Eq;
  std::string value;
  HazardType hazard_type = HazardType::E1;
  std::string advisory;
};

struct Advisory {
  std::string rule_id;
  HazardType hazard_type;
  std::string text;
};

// Rules for the six reported risk patterns, keyed on record attributes.
inline std::vector<PredictionRule> default_prediction_rules() {
  return {
      {"R1", "near_area_short_circuits", Comparator::Ge, "3", HazardType::E1,
       "repeated near-area short-circuit impact: transformer prone to winding deformation"},
      {"R2", "years_in_service", Comparator::Gt, "15", HazardType::E2,
       "equipment in service over 15 years: prone to malfunction and shutdown"},
      {"R3", "rainproof_implemented", Comparator::Eq, "false", HazardType::E3,
       "rainproofing of gas relay / pressure release valve not implemented: protection "
       "misoperation risk"},
      {"R4", "clamp_loose", Comparator::Eq, "true", HazardType::E4,
       "loose clamp or crimping tube: drainage line may fall off"},
      {"R5", "creepage_ok", Comparator::Eq, "false", HazardType::E5,
       "external insulation creepage distance below standard in polluted area: pollution/rain "
       "flashover risk"},
      {"R6", "overhaul_overdue", Comparator::Eq, "true", HazardType::E6,
       "switch hydraulic mechanism overhaul period exceeded: pressure relief and forced "
       "shutdown risk"},
  };
}

inline bool rule_fires(const PredictionRule& rule, const HazardRecord& record) {
  auto it = record.extra.find(rule.attribute);
  if (it == record.extra.end()) return false;
  const std::string& actual = it->second;
  char* end1 = nullptr;
  char* end2 = nullptr;
  double a = std::strtod(actual.c_str(), &end1);
  double v = std::strtod(rule.value.c_str(), &end2);
  bool numeric = end1 != actual.c_str() && *end1 == '\0' && end2 != rule.value.c_str() &&
                 *end2 == '\0';
  switch (rule.comparator) {
    case Comparator::Gt: return numeric && a > v;
    case Comparator::Ge: return numeric && a >= v;
    case Comparator::Lt: return numeric && a < v;
    case Comparator::Le: return numeric && a <= v;
    case Comparator::Eq: return numeric ? a == v : actual == rule.value;
    case Comparator::Ne: return numeric ? a != v : actual != rule.value;
  }
  return false;
}

inline std::vector<Advisory> predict_risks(const HazardRecord& record,
                                           const std::vector<PredictionRule>& rules =
                                               default_prediction_rules()) {
  std::vector<Advisory> out;
  for (const auto& rule : rules)
    if (rule_fires(rule, record))
      out.push_back({rule.rule_id, rule.hazard_type,
                     hazard_type_code(rule.hazard_type) + " " + hazard_type_name(rule.hazard_type) +
                         ": " + rule.advisory});
  return out;
}

// Rules file: list of {rule_id, attribute, comparator, value, hazard_type, advisory}.
inline std::vector<PredictionRule> rules_from_json(const nlohmann::ordered_json& j) {
  std::vector<PredictionRule> rules;
  for (const auto& jr : j) {
    PredictionRule r;
    r.rule_id = jr.at("rule_id").get<std::string>();
    r.attribute = jr.at("attribute").get<std::string>();
    r.comparator = comparator_from_name(jr.at("comparator").get<std::string>());
    r.value = jr.at("value").get<std::string>();
    r.hazard_type = hazard_type_from_code(jr.at("hazard_type").get<std::string>());
    r.advisory = jr.at("advisory").get<std::string>();
    rules.push_back(std::move(r));
  }
  return rules;
}

inline nlohmann::ordered_json rules_to_json(const std::vector<PredictionRule>& rules) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& r : rules) {
    j.push_back({{"rule_id", r.rule_id},
                 {"attribute", r.attribute},
                 {"comparator", comparator_name(r.comparator)},
                 {"value", r.value},
                 {"hazard_type", hazard_type_code(r.hazard_type)},
                 {"advisory", r.advisory}});
  }
  return j;
}

// ---- reporting ---------------------------------------------------------

inline std::string month_name(int m) {
  static const char* kNames[] = {"January", "February", "March",     "April",   "May",
                                 "June",    "July",     "August",    "September",
                                 "October", "November", "December"};
  return (m >= 1 && m <= 12) ? kNames[m - 1] : "?";
}

// CSV of month,type,count: one row per covered month per type.
inline std::string stats_to_csv(const MonthlyStats& stats) {
  std::string out = "month,type,count\n";
  for (int m : stats.months_covered)
    for (HazardType t : all_hazard_types())
      out += std::to_string(m) + "," + hazard_type_code(t) + "," +
             std::to_string(stats.count(t, m)) + "\n";
  return out;
}

// Human-readable month x type table.
inline std::string stats_to_table(const MonthlyStats& stats) {
  std::string out = "month     ";
  for (HazardType t : all_hazard_types()) out += "  " + hazard_type_code(t);
  out += "\n";
  for (int m : stats.months_covered) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-10s", month_name(m).c_str());
    out += buf;
    for (HazardType t : all_hazard_types()) {
      std::snprintf(buf, sizeof(buf), "%4ld", stats.count(t, m));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace hazardkg

#endif  // HAZARDKG_ANALYTICS_HPP
