#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cantor/fixtures.hpp"
#include "cantor/measures.hpp"
#include "cantor/saturation.hpp"

using namespace cantor;

namespace {

// Seed: one family-A atom against its family-B mirror at host level 2,
// followed by trivially equivalent continuation pairs.
PairStream gap_stream(int32_t pairs) {
  PairStream s;
  s.pairs.emplace_back(make_clopen(2, {0}), make_clopen(2, {3}));
  for (int32_t i = 1; i < pairs; ++i)
    s.pairs.emplace_back(make_clopen(2, {1}), make_clopen(2, {1}));
  return s;
}

bool has_violation(const ValidityReport& rep, const std::string& needle) {
  for (const Violation& v : rep.violations)
    if (v.what.find(needle) != std::string::npos) return true;
  return false;
}

} // namespace

TEST_CASE("tower over the two-family host passes the independent checker") {
  Diagram host = gap(8);
  SaturationTower t = build_saturation_tower(host, gap_stream(5), 5);
  REQUIRE(t.levels.size() == 5);

  ValidityReport rep = check_saturation_tower(t);
  for (const Violation& v : rep.violations) CAPTURE(v.what);
  CHECK(rep.ok);

  // Seed level: the pair plus its complement, three singleton orbits.
  CHECK(t.levels[0].classes.size() == 3);
  CHECK(t.levels[0].atom_total == 3);
  CHECK(t.levels[0].classes[t.levels[0].alpha].sig_a == 1);
  CHECK(t.levels[0].classes[t.levels[0].beta].sig_b == 1);

  for (size_t n = 1; n < t.levels.size(); ++n) {
    const SaturationLevel& lv = t.levels[n];
    const SaturationLevel& up = t.levels[n - 1];
    // The distinguished pair stays nested and separated on every level.
    CHECK(lv.classes[lv.alpha].parent == up.alpha);
    CHECK(lv.classes[lv.beta].parent == up.beta);
    CHECK(lv.classes[lv.alpha].orbit != lv.classes[lv.beta].orbit);
    CHECK(lv.host_level > up.host_level);
    CHECK(lv.atom_total > up.atom_total);
  }
}

TEST_CASE("trivial continuations keep the moved count at two per level") {
  Diagram host = gap(8);
  SaturationTower t = build_saturation_tower(host, gap_stream(5), 5);
  SingularLedger led = build_j_embeddings(t);
  REQUIRE(led.rows.size() == 5);
  for (size_t n = 0; n < led.rows.size(); ++n) {
    CHECK(led.rows[n].moved == 2);
    CHECK(led.rows[n].moved <= led.rows[n].moved_bound);
    CHECK(led.rows[n].measure <= led.rows[n].allowed);
    if (n > 0) {
      // moved-bound is h_{n-1} * (imbalance + 2) with imbalance 1 here
      CHECK(led.rows[n].moved_bound == 3 * t.levels[n - 1].atom_total);
      CHECK(led.rows[n].allowed == mpq_class(1, static_cast<int>(n)));
    }
  }
}

TEST_CASE("assembly joins the pair orbits and certifies the relation identity") {
  Diagram host = gap(8);
  SaturationTower t = build_saturation_tower(host, gap_stream(5), 5);
  SingularLedger led = build_j_embeddings(t);
  AssembledSaturation a = assemble_saturated(t, led);
  for (const Violation& v : a.report.violations) CAPTURE(v.what);
  CHECK(a.report.ok);
  REQUIRE(a.singular.size() == 5);
  for (size_t n = 0; n < t.levels.size(); ++n) {
    const SaturationLevel& lv = t.levels[n];
    const SaturationLevel& jn = a.lambda.levels[n];
    // the two distinguished orbits collapse to one, everything else survives
    CHECK(jn.classes[lv.alpha].orbit == jn.classes[lv.beta].orbit);
    CHECK(jn.exceptional.size() == 1);
    CHECK(a.singular[n] == std::vector<int32_t>{lv.alpha, lv.beta});
  }
}

TEST_CASE("streams with unequal measure bounds are rejected with the intervals") {
  Diagram host = gap(8);
  PairStream s = gap_stream(5);
  s.pairs[0].second = make_clopen(2, {3, 4}); // twice the mass of the left set
  try {
    build_saturation_tower(host, s, 5);
    FAIL("expected a refusal");
  } catch (const Error& e) {
    CHECK(e.code == Errc::refusal);
    CHECK(std::string(e.what()).find("bounds") != std::string::npos);
  }
}

TEST_CASE("seed pairs that are not mirror pairs are refused") {
  Diagram host = gap(8);
  PairStream s = gap_stream(5);
  s.pairs[0].second = make_clopen(2, {1}); // same family as the left set
  CHECK_THROWS_WITH_AS(build_saturation_tower(host, s, 5),
                       doctest::Contains("mirror"), Error);
}

TEST_CASE("non-equivalent continuation pairs are refused") {
  Diagram host = gap(8);
  PairStream s = gap_stream(5);
  s.pairs[2] = {make_clopen(2, {1}), make_clopen(2, {4})}; // an A/B pair again
  try {
    build_saturation_tower(host, s, 5);
    FAIL("expected a refusal");
  } catch (const Error& e) {
    CHECK(e.code == Errc::refusal);
  }
}

TEST_CASE("a stream shorter than the requested depth is a depth error") {
  Diagram host = gap(8);
  try {
    build_saturation_tower(host, gap_stream(3), 5);
    FAIL("expected a depth error");
  } catch (const Error& e) {
    CHECK(e.code == Errc::depth);
  }
}

TEST_CASE("hosts without the symmetric two-family pattern are refused") {
  try {
    build_saturation_tower(odometer(6), gap_stream(4), 4);
    FAIL("expected a refusal");
  } catch (const Error& e) {
    CHECK(e.code == Errc::refusal);
  }
}

TEST_CASE("weakening the fragment floor breaks the thinness certificate only") {
  Diagram host = gap(8);
  SaturationTower weak = build_saturation_tower(host, gap_stream(5), 5, /*richness=*/1);

  ValidityReport rep = check_saturation_tower(weak);
  CHECK_FALSE(rep.ok);
  CHECK(has_violation(rep, "floor"));

  // The moved atoms are still just the distinguished pair, so the ledger
  // accounting itself stays within its bounds...
  SingularLedger led = build_j_embeddings(weak);
  for (const auto& row : led.rows) CHECK(row.moved == 2);

  // ...but the assembled thinness certificate, which rests on the fragment
  // floor rather than the exact measures, fails.
  AssembledSaturation a = assemble_saturated(weak, led);
  CHECK_FALSE(a.report.ok);
  CHECK(has_violation(a.report, "thinness"));
  CHECK_FALSE(has_violation(a.report, "relation-identity"));
  CHECK_FALSE(has_violation(a.report, "etale"));
}

TEST_CASE("tampered towers are caught by the checker") {
  Diagram host = gap(8);
  SaturationTower t = build_saturation_tower(host, gap_stream(4), 4);

  SUBCASE("unbalancing an orbit between the pair") {
    // move one balanced-orbit child of the left distinguished atom into the
    // other bulk orbit
    SaturationLevel& lv = t.levels[2];
    const SaturationLevel& up = t.levels[1];
    for (SatClass& q : lv.classes)
      if (q.parent == up.alpha && q.orbit == 2 && q.role == 0) {
        q.per_parent -= 1;
        q.count -= 1;
        break;
      }
    ValidityReport rep = check_saturation_tower(t);
    CHECK_FALSE(rep.ok);
  }
  SUBCASE("breaking the nesting of the pair") {
    t.levels[3].classes[t.levels[3].alpha].parent = t.levels[2].beta;
    ValidityReport rep = check_saturation_tower(t);
    CHECK_FALSE(rep.ok);
    CHECK(has_violation(rep, "nest"));
  }
  SUBCASE("joining the pair orbits prematurely") {
    SaturationLevel& lv = t.levels[2];
    lv.classes[lv.beta].orbit = lv.classes[lv.alpha].orbit;
    lv.classes[lv.beta].sig_a = lv.classes[lv.alpha].sig_a;
    lv.classes[lv.beta].sig_b = lv.classes[lv.alpha].sig_b;
    ValidityReport rep = check_saturation_tower(t);
    CHECK_FALSE(rep.ok);
  }
}

TEST_CASE("tower serialization round-trips and is deterministic") {
  Diagram host = gap(8);
  SaturationTower t = build_saturation_tower(host, gap_stream(4), 4);
  auto j = tower_to_json(t);
  CHECK(tower_from_json(j) == t);
  SaturationTower again = build_saturation_tower(host, gap_stream(4), 4);
  CHECK(tower_to_json(again).dump() == j.dump());
  CHECK(j.contains("pairs"));
  CHECK(j.contains("exceptional") == false); // per level, not top level
  CHECK(j.at("levels").at(0).contains("exceptional"));
}
