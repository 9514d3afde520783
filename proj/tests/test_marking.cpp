#include <doctest.h>

#include <random>

#include "cantor/fixtures.hpp"
#include "cantor/marking.hpp"
#include "cantor/serialize.hpp"

using namespace cantor;

namespace {

Marking leftmost_path_marking(const Diagram& d) {
  Marking m;
  m.levels.resize(d.depth());
  for (int32_t n = 0; n < d.depth(); ++n) {
    m.levels[n].marked = {0};
    m.levels[n].k_orbit = {0};
  }
  return m;
}

// Random parent-closed marking with at least one marked child per marked atom.
std::vector<std::vector<AtomId>> random_raw_marking(const Diagram& d, std::mt19937_64& rng) {
  std::vector<std::vector<AtomId>> raw(d.depth());
  for (AtomId a = 0; a < d.levels[0].atom_count; ++a)
    if (rng() % 2) raw[0].push_back(a);
  if (raw[0].empty()) raw[0].push_back(0);
  for (int32_t n = 1; n < d.depth(); ++n) {
    for (AtomId p : raw[n - 1]) {
      auto ch = children_of(d, n - 1, p);
      bool any = false;
      for (AtomId c : ch)
        if (rng() % 2) { raw[n].push_back(c); any = true; }
      if (!any && !ch.empty()) raw[n].push_back(ch[static_cast<size_t>(rng() % ch.size())]);
    }
    std::sort(raw[n].begin(), raw[n].end());
  }
  return raw;
}

} // namespace

TEST_CASE("marking validation on the two-orbit fixture") {
  Diagram d = two_orbit(2);
  Marking good;
  good.levels.resize(2);
  good.levels[0] = {{0, 1}, {0, 0}};   // a, b in one K-orbit
  good.levels[1] = {{0, 2}, {0, 0}};   // a0, b0 in one K-orbit
  CHECK(validate_marking(good, d).ok);

  // a contributes a0 and a1, b only b0: uneven marked-child counts
  Marking uneven = good;
  uneven.levels[1] = {{0, 1, 2}, {0, 1, 0}};
  auto rep = validate_marking(uneven, d);
  CHECK(!rep.ok);
  CHECK(rep.violations[0].kind == Violation::Kind::fragment);

  // a K-orbit spanning two diagram orbits is structural
  Marking spanning = good;
  spanning.levels[1] = {{0, 1}, {0, 0}};
  auto rep2 = validate_marking(spanning, d);
  CHECK(!rep2.ok);
  CHECK(rep2.violations[0].kind == Violation::Kind::structural);

  // unmarked parent
  Marking orphan = good;
  orphan.levels[0] = {{0}, {0}};
  CHECK(!validate_marking(orphan, d).ok);

  // marked atom without marked child
  Marking childless = good;
  childless.levels[1] = {{0}, {0}};
  CHECK(!validate_marking(childless, d).ok);
}

TEST_CASE("refinement resolves the uneven example without touching the diagram") {
  Diagram d = two_orbit(2);
  auto [d2, m] = refine_to_K_compatible(d, {{0, 1}, {0, 1, 2}});
  CHECK(d2 == d);
  CHECK(validate_marking(m, d2).ok);
  // a (two marked children) and b (one) cannot share a K-orbit
  CHECK(m.k_orbit_of(0, 0) != m.k_orbit_of(0, 1));
}

TEST_CASE("refinement is idempotent and leaves valid markings coarse") {
  Diagram d = two_orbit(3);
  auto [d1, m1] = refine_to_K_compatible(d, {{0, 1}, {0, 2}, {0, 4}});
  CHECK(validate_marking(m1, d1).ok);
  auto [d2, m2] = refine_to_K_compatible(d1, {m1.levels[0].marked, m1.levels[1].marked,
                                              m1.levels[2].marked});
  CHECK(m1 == m2);
  // the symmetric marking keeps a and b in one K-orbit
  CHECK(m1.k_orbit_of(0, 0) == m1.k_orbit_of(0, 1));
}

TEST_CASE("refinement output always validates on random raw markings") {
  std::mt19937_64 rng(123);
  int total = 0, uneven = 0;
  while (uneven < 60) {
    Diagram d = random_simple(4, rng());
    auto raw = random_raw_marking(d, rng);
    auto [d2, m] = refine_to_K_compatible(d, raw);
    CHECK(d2 == d);
    CHECK(validate_marking(m, d2).ok);
    for (int32_t n = 0; n < d.depth(); ++n)
      CHECK(m.levels[n].marked == raw[n]);
    // was the coarse assignment (K-orbit = diagram orbit) invalid?
    Marking coarse;
    coarse.levels.resize(d.depth());
    for (int32_t n = 0; n < d.depth(); ++n) {
      coarse.levels[n].marked = raw[n];
      std::map<int32_t, int32_t> ids;
      for (AtomId a : raw[n]) {
        auto [it, fresh] = ids.emplace(d.levels[n].orbit_of[a],
                                       static_cast<int32_t>(ids.size()));
        coarse.levels[n].k_orbit.push_back(it->second);
      }
    }
    if (!validate_marking(coarse, d).ok) ++uneven;
    ++total;
    REQUIRE(total < 5000);
  }
  CHECK(uneven >= 50);
}

TEST_CASE("subdiagram extraction and the evenness duality") {
  Diagram d = two_orbit(3);
  auto [d1, m] = refine_to_K_compatible(d, {{0, 1}, {0, 2}, {0, 4}});
  SubDiagram sub = extract_subdiagram(m, d);
  CHECK(validate_diagram(sub.diagram).ok);
  CHECK(sub.atom_map[1] == std::vector<AtomId>{0, 2});

  // a marking that fails the evenness condition yields an invalid sub-diagram
  Marking uneven;
  uneven.levels.resize(2);
  uneven.levels[0] = {{0, 1}, {0, 0}};
  uneven.levels[1] = {{0, 1, 2}, {0, 0, 0}};
  Diagram d2 = two_orbit(2);
  CHECK(!validate_marking(uneven, d2).ok);
  CHECK(!validate_diagram(extract_subdiagram(uneven, d2).diagram).ok);

  Marking nothing;
  nothing.levels.resize(d.depth());
  CHECK_THROWS_AS((void)extract_subdiagram(nothing, d), Error);
}

TEST_CASE("evenness duality holds on random refined markings") {
  std::mt19937_64 rng(77);
  for (int iter = 0; iter < 120; ++iter) {
    Diagram d = random_simple(4, rng());
    auto raw = random_raw_marking(d, rng);
    auto [d2, m] = refine_to_K_compatible(d, raw);
    SubDiagram sub = extract_subdiagram(m, d2);
    CHECK(validate_diagram(sub.diagram).ok);
  }
}

TEST_CASE("realize: odometer two-atom target with a forced trace") {
  Diagram d = odometer(6);
  Marking m = leftmost_path_marking(d);
  RealizeResult r = realize_clopen_with_trace(make_clopen(3, {4, 5}), make_clopen(3, {0}),
                                              make_clopen(3, {0, 1, 2, 3, 4, 5}), d, m, 3);
  REQUIRE(r.status == RealizeResult::Status::found);
  CHECK(r.witness == make_clopen(3, {0, 1}));
  // result meets the marked set exactly in the trace and matches the counts
  CHECK(check_equiv(r.witness, make_clopen(3, {4, 5}), d, 3));
}

TEST_CASE("realize distinguishes premise failure from search failure") {
  Diagram d = odometer(6);
  Marking m = leftmost_path_marking(d);
  ClopenSet cont = make_clopen(3, {0, 1, 2, 3, 4, 5});
  // target = container: no measure gap, and the marked path obstructs
  RealizeResult r = realize_clopen_with_trace(cont, make_clopen(3, {}), cont, d, m, 5);
  CHECK(r.status == RealizeResult::Status::premise_unmet);

  // gap holds but the trace demands an atom outside the container
  RealizeResult r2 = realize_clopen_with_trace(make_clopen(3, {4}), make_clopen(3, {0}),
                                               make_clopen(3, {4, 5, 6, 7}), d, m, 5);
  CHECK(r2.status == RealizeResult::Status::not_found);
}

TEST_CASE("realize goes deeper when the shallow level is too tight") {
  Diagram d = odometer(6);
  // two marked paths: left edge of each half
  Marking m;
  m.levels.resize(6);
  m.levels[0] = {{0}, {0}};
  m.levels[1] = {{0, 1}, {0, 0}};
  for (int32_t n = 2; n < 6; ++n)
    m.levels[n] = {{0, 1 << (n - 1)}, {0, 0}};
  REQUIRE(validate_marking(m, d).ok);
  // at level 2 the trace already holds two atoms but the target only one, so
  // the first level where the counts can match is 3
  RealizeResult r = realize_clopen_with_trace(make_clopen(2, {3}), make_clopen(2, {0, 2}),
                                              make_clopen(2, {0, 1, 2, 3}), d, m, 5);
  REQUIRE(r.status == RealizeResult::Status::found);
  CHECK(r.witness.level == 3);
  CHECK(r.witness == make_clopen(3, {0, 4}));
}

TEST_CASE("mark-preserving lift on the two-orbit fixture") {
  Diagram d = two_orbit(2);
  Marking m;
  m.levels.resize(2);
  m.levels[0] = {{0, 1}, {0, 0}};
  m.levels[1] = {{0, 2}, {0, 0}};
  GroupElement swap{0, {1, 0}};
  GroupElement lift = lift_mark_preserving(swap, d, m);
  CHECK(lift.perm[0] == 2); // a0 -> b0, both marked
  CHECK(lift.perm[2] == 0);
  CHECK(lift.perm[1] == 3); // a1 -> b1, both unmarked
  CHECK(m.is_marked(1, lift.perm[0]));
}

TEST_CASE("lift refuses when marks cannot be preserved") {
  Diagram d = odometer(3);
  Marking m = leftmost_path_marking(d);
  GroupElement bad{1, {1, 0}}; // sends the marked atom to an unmarked one
  CHECK_THROWS_AS((void)lift_mark_preserving(bad, d, m), Error);
  try {
    (void)lift_mark_preserving(bad, d, m);
  } catch (const Error& e) {
    CHECK(e.code == Errc::no_lift);
  }
}

TEST_CASE("mark-preserving lifts on random refined markings") {
  std::mt19937_64 rng(31);
  int done = 0;
  for (int iter = 0; iter < 400 && done < 100; ++iter) {
    Diagram d = random_simple(4, rng());
    auto raw = random_raw_marking(d, rng);
    auto [d2, m] = refine_to_K_compatible(d, raw);
    int32_t n = static_cast<int32_t>(rng() % (d.depth() - 1));
    const Level& lv = d.levels[n];
    // random permutation preserving diagram orbits, K-membership and K-orbits
    std::map<std::pair<int32_t, int32_t>, std::vector<AtomId>> cls;
    for (AtomId a = 0; a < lv.atom_count; ++a) {
      auto ko = m.k_orbit_of(n, a);
      cls[{lv.orbit_of[a], ko ? *ko : -1}].push_back(a);
    }
    GroupElement g{n, std::vector<AtomId>(lv.atom_count)};
    for (auto& [key, atoms] : cls) {
      auto shuffled = atoms;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      for (size_t i = 0; i < atoms.size(); ++i) g.perm[atoms[i]] = shuffled[i];
    }
    GroupElement h = lift_mark_preserving(g, d2, m);
    const Level& lo = d.levels[n + 1];
    for (AtomId b = 0; b < lo.atom_count; ++b) {
      CHECK(lo.parent_of[h.perm[b]] == g.perm[lo.parent_of[b]]);
      CHECK(lo.orbit_of[h.perm[b]] == lo.orbit_of[b]);
      CHECK(m.is_marked(n + 1, h.perm[b]) == m.is_marked(n + 1, b));
      if (auto ko = m.k_orbit_of(n + 1, b); ko && m.k_orbit_of(n, g.perm[lo.parent_of[b]]) ==
                                                      m.k_orbit_of(n, lo.parent_of[b]))
        CHECK(m.k_orbit_of(n + 1, h.perm[b]) == ko);
    }
    ++done;
  }
  CHECK(done >= 100);
}

TEST_CASE("marking json round trip") {
  Diagram d = two_orbit(3);
  auto [d1, m] = refine_to_K_compatible(d, {{0, 1}, {0, 2}, {0, 4}});
  CHECK(marking_from_json(to_json(m)) == m);
}
