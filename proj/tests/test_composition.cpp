#include "announcer/composition.hpp"
#include "announcer/errors.hpp"

#include <doctest.h>

#include <map>
#include <set>

using namespace announcer;

namespace {

ShotSpec spec(Angle a, Size s, Profile p, Screen sc) { return ShotSpec{a, s, p, sc, "npc_0"}; }

}  // namespace

TEST_SUITE("composition") {

TEST_CASE("look room") {
  for (auto a : kAngles) {
    for (auto s : kSizes) {
      CHECK_FALSE(lookroom_filter(spec(a, s, Profile::Right, Screen::Right)));
      CHECK(lookroom_filter(spec(a, s, Profile::Right, Screen::Left)));
      CHECK(lookroom_filter(spec(a, s, Profile::Front, Screen::Right)));
      CHECK_FALSE(lookroom_filter(spec(a, s, Profile::ThreeQuarterBackLeft, Screen::Left)));
      CHECK(lookroom_filter(spec(a, s, Profile::Back, Screen::Left)));
    }
  }
}

TEST_CASE("filter_all") {
  const auto all = enumerate_specs();
  const auto none = filter_all(all, RuleSet::disabled());
  CHECK(none.surviving == 288);
  CHECK(none.removed == 0);

  const auto report = filter_all(all, RuleSet{});
  // Six lateral profiles lose one of three screens each: 288 - 3*4*6.
  CHECK(report.surviving == 216);
  CHECK(report.surviving + report.removed == 288);
  for (const auto& s : report.kept) CHECK(lookroom_filter(s));

  // Order preserved.
  std::size_t cursor = 0;
  for (const auto& s : all) {
    if (cursor < report.kept.size() && report.kept[cursor] == s) ++cursor;
  }
  CHECK(cursor == report.kept.size());

  RuleSet rules;
  rules.forbidden = {{Profile::Front, Screen::Center}};
  rules.extra = {builtin_filter("no_back")};
  const auto narrowed = filter_all(all, rules);
  for (const auto& s : narrowed.kept) {
    CHECK_FALSE((s.profile == Profile::Front && s.screen == Screen::Center));
    CHECK(s.profile != Profile::Back);
  }
  CHECK(narrowed.surviving < report.surviving);
  CHECK_THROWS_AS(builtin_filter("no_such_rule"), ConfigError);
}

TEST_CASE("published rows") {
  const auto table = CompositionTable::defaults();
  CHECK(score(spec(Angle::Eye, Size::LS, Profile::Right, Screen::Left), table) == 5.0);
  CHECK(score(spec(Angle::High, Size::MS, Profile::Back, Screen::Left), table) == 1.67);
  CHECK(score(spec(Angle::High, Size::ELS, Profile::ThreeQuarterBackLeft, Screen::Right), table) == 3.5);
  CHECK(classify(spec(Angle::High, Size::ELS, Profile::ThreeQuarterBackLeft, Screen::Right), table) == Grade::Good);
  CHECK(classify(spec(Angle::Eye, Size::MCU, Profile::ThreeQuarterRight, Screen::Left), table) == Grade::Good);
  CHECK(classify(spec(Angle::High, Size::MS, Profile::Front, Screen::Right), table) == Grade::Bad);
  CHECK(table.entries.size() == 9);
}

TEST_CASE("High MS is always Bad") {
  const auto table = CompositionTable::defaults();
  for (const auto& s : enumerate_specs()) {
    if (s.angle == Angle::High && s.size == Size::MS) CHECK(classify(s, table) == Grade::Bad);
  }
}

TEST_CASE("heuristic prior") {
  CHECK(heuristic_prior(spec(Angle::Eye, Size::LS, Profile::Front, Screen::Center)) == doctest::Approx(4.0));
  CHECK(heuristic_prior(spec(Angle::High, Size::MS, Profile::Back, Screen::Center)) == doctest::Approx(2.0));
  CHECK(heuristic_prior(spec(Angle::High, Size::LS, Profile::Front, Screen::Center)) == doctest::Approx(3.6));
  CHECK(heuristic_prior(spec(Angle::Low, Size::LS, Profile::ThreeQuarterBackRight, Screen::Center)) ==
        doctest::Approx(3.5));
  for (const auto& s : enumerate_specs()) {
    const double p = heuristic_prior(s);
    CHECK(p >= 1.0);
    CHECK(p <= 5.0);
  }
}

TEST_CASE("threshold moves the good group monotonically") {
  auto table = CompositionTable::defaults();
  const auto specs = filter_all(enumerate_specs(), RuleSet{}).kept;
  std::size_t previous = specs.size() + 1;
  for (double threshold = 1.0; threshold <= 5.0; threshold += 0.1) {
    table.threshold = threshold;
    std::size_t good = 0;
    for (const auto& s : specs) {
      const bool is_good = classify(s, table) == Grade::Good;
      CHECK(is_good == (score(s, table) >= threshold));
      good += is_good ? 1 : 0;
    }
    CHECK(good <= previous);
    previous = good;
  }
}

TEST_CASE("preference deltas shift and clamp") {
  const auto table = CompositionTable::defaults();
  const auto top = spec(Angle::Eye, Size::LS, Profile::Right, Screen::Left);
  PreferenceDeltas deltas{{composition_key(top), -2.0}};
  CHECK(adjusted_score(top, table, &deltas) == doctest::Approx(3.0));
  CHECK(classify(top, table, &deltas) == Grade::Bad);
  deltas[composition_key(top)] = 3.0;
  CHECK(adjusted_score(top, table, &deltas) == 5.0);
}

TEST_CASE("sampling") {
  const auto table = CompositionTable::defaults();
  SampleConstraints constraints;
  std::mt19937_64 a(9), b(9);
  const auto first = sample_good(a, 3, table, constraints);
  CHECK(first == sample_good(b, 3, table, constraints));
  std::set<std::string> distinct;
  for (const auto& s : first) {
    CHECK(classify(s, table) == Grade::Good);
    distinct.insert(composition_key(s));
  }
  CHECK(distinct.size() == 3);

  constraints.sizes = {Size::LS, Size::ELS};
  for (int k = 0; k < 50; ++k) {
    for (const auto& s : sample_good(a, 3, table, constraints)) CHECK((s.size == Size::LS || s.size == Size::ELS));
  }

  SampleConstraints impossible;
  impossible.predicate = [](const ShotSpec&) { return false; };
  CHECK_THROWS_AS(sample_good(a, 1, table, impossible), PlanningError);
  CHECK_THROWS_AS(sample_good(a, 0, table, SampleConstraints{}), PlanningError);
}

TEST_CASE("sampling support covers the good group") {
  const auto table = CompositionTable::defaults();
  const SampleConstraints constraints;
  const auto pool = good_pool(table, constraints);
  REQUIRE(!pool.empty());
  std::map<std::string, int> seen;
  std::mt19937_64 rng(21);
  for (int draw = 0; draw < 10000; ++draw) {
    for (const auto& s : sample_good(rng, 1, table, constraints)) {
      CHECK(classify(s, table) == Grade::Good);
      ++seen[composition_key(s)];
    }
  }
  CHECK(seen.size() == pool.size());
}

TEST_CASE("table overrides") {
  const auto table = composition_table_from_json(
      R"([{"angle":"Low","size":"MS","profile":"3/4 Left","screen":"Right","mos":1.2}])");
  CHECK(score(spec(Angle::Low, Size::MS, Profile::ThreeQuarterLeft, Screen::Right), table) == 1.2);
  CHECK(score(spec(Angle::Eye, Size::LS, Profile::Right, Screen::Left), table) == 5.0);
  CHECK_THROWS_AS(composition_table_from_json(R"([{"angle":"Low","size":"MS","profile":"Front","screen":"Right","mos":7}])"),
                  ConfigError);
  CHECK_THROWS_AS(composition_table_from_json(R"([{"angle":"Sideways","size":"MS","profile":"Front","screen":"Right","mos":3}])"),
                  ConfigError);
  CHECK_THROWS_AS(composition_table_from_json("{"), ConfigError);
  CHECK_THROWS_AS(load_composition_table("/nonexistent/table.json"), ConfigError);
}

}
