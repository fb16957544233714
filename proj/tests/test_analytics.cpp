#include <catch_amalgamated.hpp>

#include <random>

#include "hazardkg/analytics.hpp"

using namespace hazardkg;

namespace {

HazardRecord rec_with(const std::string& content, int month = 0) {
  static int seq = 0;
  HazardRecord r;
  r.id = "rec-" + std::to_string(++seq);
  r.hazard_content = content;
  if (month >= 1) r.inspect_time = CalendarDate{2023, month, 1};
  return r;
}

}  // namespace

TEST_CASE("classify_hazard") {
  CHECK(classify_hazard(rec_with("transformer winding deformation found")) == HazardType::E1);
  CHECK(classify_hazard(rec_with("Winding Deformation")) == HazardType::E1);  // case-insensitive
  CHECK(classify_hazard(rec_with("")) == std::nullopt);
  CHECK(classify_hazard(rec_with("nothing relevant")) == std::nullopt);
  // first-match order: E1 before E5 when both keyword sets hit
  CHECK(classify_hazard(rec_with("winding deformation after rain flashover")) == HazardType::E1);
  // detail_category also consulted
  HazardRecord r = rec_with("");
  r.detail_category = "pollution flashover";
  CHECK(classify_hazard(r) == HazardType::E5);
}

TEST_CASE("monthly_counts") {
  CHECK(monthly_counts({}).counts.empty());

  std::vector<HazardRecord> recs;
  for (int i = 0; i < 4; ++i) recs.push_back(rec_with("winding deformation", 3));
  for (int i = 0; i < 2; ++i) recs.push_back(rec_with("fault shutdown", 4));
  recs.push_back(rec_with("winding deformation"));       // no month: excluded
  recs.push_back(rec_with("unclassifiable thing", 3));   // no type: excluded
  auto stats = monthly_counts(recs);
  CHECK(stats.count(HazardType::E1, 3) == 4);
  CHECK(stats.count(HazardType::E2, 4) == 2);
  CHECK(stats.count(HazardType::E1, 4) == 0);
  CHECK(stats.total(HazardType::E1) == 4);
  CHECK(stats.unclassified == 2);
  CHECK(stats.months_covered == std::set<int>{3, 4});
}

TEST_CASE("monthly_counts equals counting oracle on random records") {
  std::mt19937 rng(55);
  const std::vector<std::string> contents = {
      "winding deformation", "fault shutdown",   "protection misoperation",
      "drainage line",       "rain flashover",   "pressure relief",
      "irrelevant"};
  std::uniform_int_distribution<size_t> pick(0, contents.size() - 1);
  std::uniform_int_distribution<int> month(0, 12);
  std::vector<HazardRecord> recs;
  for (int i = 0; i < 1000; ++i) recs.push_back(rec_with(contents[pick(rng)], month(rng)));

  auto stats = monthly_counts(recs);
  // independent filter-and-count oracle
  for (HazardType t : all_hazard_types()) {
    long total = 0;
    for (const auto& r : recs)
      if (r.month() && classify_hazard(r) == t) ++total;
    CHECK(stats.total(t) == total);
  }
  long excluded = 0;
  for (const auto& r : recs)
    if (!r.month() || !classify_hazard(r)) ++excluded;
  CHECK(stats.unclassified == excluded);
}

TEST_CASE("seasonal_flags") {
  // uniform counts: no flags for any factor > 1
  MonthlyStats uniform;
  for (int m = 3; m <= 7; ++m) {
    uniform.months_covered.insert(m);
    for (HazardType t : all_hazard_types()) uniform.counts[{t, m}] = 4;
  }
  CHECK(seasonal_flags(uniform, 1.01).empty());
  CHECK(seasonal_flags(uniform, 1.5).empty());

  // the March/June pattern: E1 = [6,1,1,6,1] over Mar..Jul, mean 3
  MonthlyStats spiky;
  const int e1[] = {6, 1, 1, 6, 1};
  for (int i = 0; i < 5; ++i) {
    spiky.months_covered.insert(3 + i);
    spiky.counts[{HazardType::E1, 3 + i}] = e1[i];
  }
  auto flags = seasonal_flags(spiky, 1.5);
  CHECK(flags == std::vector<std::pair<HazardType, int>>{{HazardType::E1, 3},
                                                         {HazardType::E1, 6}});

  // single covered month can never exceed factor x its own mean
  MonthlyStats single;
  single.months_covered.insert(5);
  single.counts[{HazardType::E2, 5}] = 10;
  CHECK(seasonal_flags(single, 1.5).empty());

  // scale invariance of the ratio test
  MonthlyStats scaled = spiky;
  for (auto& [k, v] : scaled.counts) v *= 7;
  CHECK(seasonal_flags(scaled, 1.5) == flags);

  CHECK_THROWS_AS(seasonal_flags(MonthlyStats{}, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(seasonal_flags(spiky, 0.0), std::invalid_argument);
}

TEST_CASE("prediction rules fire on triggers and not on controls") {
  struct Case {
    std::string attr;
    std::string trigger;
    std::string control;
    HazardType type;
  };
  const std::vector<Case> cases = {
      {"near_area_short_circuits", "3", "2", HazardType::E1},
      {"years_in_service", "16", "15", HazardType::E2},
      {"rainproof_implemented", "false", "true", HazardType::E3},
      {"clamp_loose", "true", "false", HazardType::E4},
      {"creepage_ok", "false", "true", HazardType::E5},
      {"overhaul_overdue", "true", "false", HazardType::E6},
  };
  for (const auto& c : cases) {
    HazardRecord trig;
    trig.id = "t";
    trig.extra[c.attr] = c.trigger;
    auto fired = predict_risks(trig);
    REQUIRE(fired.size() == 1);
    CHECK(fired[0].hazard_type == c.type);

    HazardRecord ctrl;
    ctrl.id = "c";
    ctrl.extra[c.attr] = c.control;
    CHECK(predict_risks(ctrl).empty());
  }

  HazardRecord none;
  none.id = "n";
  CHECK(predict_risks(none).empty());
}

TEST_CASE("predict_risks is monotone in attributes") {
  HazardRecord r;
  r.id = "m";
  r.extra["years_in_service"] = "20";
  auto before = predict_risks(r);
  r.extra["clamp_loose"] = "true";
  r.extra["some_other_attr"] = "whatever";
  auto after = predict_risks(r);
  for (const auto& adv : before) {
    bool still = false;
    for (const auto& a : after)
      if (a.rule_id == adv.rule_id) still = true;
    CHECK(still);
  }
  CHECK(after.size() >= before.size());
}

TEST_CASE("rules file round trip") {
  auto rules = default_prediction_rules();
  auto rt = rules_from_json(rules_to_json(rules));
  REQUIRE(rt.size() == rules.size());
  for (size_t i = 0; i < rules.size(); ++i) {
    CHECK(rt[i].rule_id == rules[i].rule_id);
    CHECK(rt[i].attribute == rules[i].attribute);
    CHECK(rt[i].comparator == rules[i].comparator);
    CHECK(rt[i].value == rules[i].value);
    CHECK(rt[i].hazard_type == rules[i].hazard_type);
  }
}

TEST_CASE("stats report shape and determinism") {
  MonthlyStats empty;
  CHECK(stats_to_csv(empty) == "month,type,count\n");

  MonthlyStats stats;
  for (int m : {3, 4, 5}) stats.months_covered.insert(m);
  stats.counts[{HazardType::E1, 3}] = 2;
  stats.counts[{HazardType::E5, 5}] = 1;
  std::string csv = stats_to_csv(stats);
  // header plus months_covered x 6 rows
  size_t lines = std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == 1 + 3 * 6);
  CHECK(csv.find("3,E1,2\n") != std::string::npos);
  CHECK(csv.find("5,E5,1\n") != std::string::npos);
  CHECK(csv.find("4,E2,0\n") != std::string::npos);
  CHECK(stats_to_csv(stats) == csv);

  std::string table = stats_to_table(stats);
  CHECK(table.find("March") != std::string::npos);
  CHECK(table.find("E6") != std::string::npos);
}
