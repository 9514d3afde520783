#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "cantor/diagram.hpp"
#include "cantor/fixtures.hpp"
#include "cantor/serialize.hpp"

using namespace cantor;

// ---------------------------------------------------------------------------
// Brute-force oracle: enumerate all orbit-preserving permutations of a level
// and ask whether any of them carries the promoted a onto the promoted b.
// Only usable for small levels; the library must agree with it exactly.
// ---------------------------------------------------------------------------
namespace {

bool oracle_equiv(const ClopenSet& a, const ClopenSet& b, const Diagram& d, int32_t n) {
  ClopenSet pa = promote(a, d, n), pb = promote(b, d, n);
  const Level& lv = d.levels[n];
  auto orbits = lv.atoms_by_orbit();
  std::vector<char> target(lv.atom_count, 0);
  for (AtomId x : pb.atoms) target[x] = 1;

  // Per-orbit permutations, composed via odometer-style iteration.
  std::vector<std::vector<AtomId>> perms(orbits.size());
  for (size_t o = 0; o < orbits.size(); ++o) {
    perms[o] = orbits[o];
    std::sort(perms[o].begin(), perms[o].end());
  }
  // iterate the product of all per-orbit permutations
  std::vector<std::vector<AtomId>> cur = perms;
  while (true) {
    std::vector<AtomId> g(lv.atom_count);
    for (size_t o = 0; o < orbits.size(); ++o)
      for (size_t i = 0; i < orbits[o].size(); ++i) g[orbits[o][i]] = cur[o][i];
    std::vector<char> img(lv.atom_count, 0);
    for (AtomId x : pa.atoms) img[g[x]] = 1;
    if (img == target) return true;
    // advance
    size_t o = 0;
    for (; o < cur.size(); ++o) {
      if (std::next_permutation(cur[o].begin(), cur[o].end())) break;
    }
    if (o == cur.size()) return false;
  }
}

Diagram small_random(std::mt19937_64& rng) {
  // valid-by-construction diagram, <= 3 levels, <= 8 atoms per level
  int32_t levels = 2 + static_cast<int32_t>(rng() % 2);
  Diagram d;
  Level l0;
  l0.atom_count = 1 + static_cast<int32_t>(rng() % 3);
  for (AtomId a = 0; a < l0.atom_count; ++a)
    l0.orbit_of.push_back(static_cast<int32_t>(rng() % 2));
  l0.orbit_of[0] = 0;
  // make orbit ids contiguous
  {
    bool has1 = false, has0 = false;
    for (int32_t o : l0.orbit_of) (o ? has1 : has0) = true;
    if (has1 && !has0)
      for (auto& o : l0.orbit_of) o = 0;
  }
  d.levels.push_back(l0);
  for (int32_t n = 1; n < levels; ++n) {
    const Level& up = d.levels[n - 1];
    int32_t po = up.orbit_count();
    int32_t co = 1 + static_cast<int32_t>(rng() % 2);
    std::vector<std::vector<int32_t>> cnt(po, std::vector<int32_t>(co, 0));
    // keep the level under 8 atoms: per-atom total children <= 8/atoms
    int32_t budget = std::max<int32_t>(1, 8 / up.atom_count);
    for (int32_t r = 0; r < po; ++r) {
      for (int32_t t = 0; t < co; ++t) cnt[r][t] = static_cast<int32_t>(rng() % (budget + 1));
      bool all0 = std::all_of(cnt[r].begin(), cnt[r].end(), [](int32_t c) { return c == 0; });
      if (all0) cnt[r][rng() % co] = 1;
      int32_t tot = std::accumulate(cnt[r].begin(), cnt[r].end(), 0);
      while (tot > budget) {
        for (int32_t t = 0; t < co && tot > budget; ++t)
          if (cnt[r][t] > (t == 0 ? 1 : 0)) { cnt[r][t]--; tot--; }
      }
    }
    Level lv;
    for (AtomId a = 0; a < up.atom_count; ++a)
      for (int32_t t = 0; t < co; ++t)
        for (int32_t k = 0; k < cnt[up.orbit_of[a]][t]; ++k) {
          lv.orbit_of.push_back(t);
          lv.parent_of.push_back(a);
        }
    // drop empty child orbits to keep ids contiguous
    {
      std::vector<int32_t> seen;
      for (int32_t o : lv.orbit_of)
        if (std::find(seen.begin(), seen.end(), o) == seen.end()) seen.push_back(o);
      std::sort(seen.begin(), seen.end());
      for (auto& o : lv.orbit_of)
        o = static_cast<int32_t>(std::lower_bound(seen.begin(), seen.end(), o) - seen.begin());
    }
    lv.atom_count = static_cast<int32_t>(lv.orbit_of.size());
    if (lv.atom_count == 0) break;
    d.levels.push_back(std::move(lv));
  }
  return d;
}

ClopenSet random_subset(const Diagram& d, int32_t level, std::mt19937_64& rng) {
  std::vector<AtomId> atoms;
  for (AtomId a = 0; a < d.levels[level].atom_count; ++a)
    if (rng() % 2) atoms.push_back(a);
  return make_clopen(level, std::move(atoms));
}

} // namespace

TEST_CASE("fixtures validate") {
  CHECK(validate_diagram(odometer(6)).ok);
  CHECK(validate_diagram(two_orbit(4)).ok);
  CHECK(validate_diagram(gap(6)).ok);
  CHECK(validate_diagram(disconnected(5)).ok);
  for (uint64_t s = 0; s < 20; ++s) CHECK(validate_diagram(random_simple(5, s)).ok);
}

TEST_CASE("validator flags fragment violations and structural errors") {
  Diagram d = odometer(3);
  d.levels[2].orbit_of = {0, 0, 0, 1}; // atom 3 alone in a new orbit: unbalanced
  auto rep = validate_diagram(d);
  CHECK(!rep.ok);
  CHECK(rep.violations[0].kind == Violation::Kind::fragment);

  Diagram bad = odometer(3);
  bad.levels[1].parent_of = {0, 7}; // parent out of range
  auto rep2 = validate_diagram(bad);
  CHECK(!rep2.ok);
  CHECK(rep2.violations[0].kind == Violation::Kind::structural);

  Diagram gap_ids = odometer(2);
  gap_ids.levels[1].orbit_of = {0, 2}; // non-contiguous orbit ids
  CHECK(!validate_diagram(gap_ids).ok);
}

TEST_CASE("promotion and count vectors on the odometer") {
  Diagram d = odometer(5);
  ClopenSet c = make_clopen(1, {0});
  ClopenSet p = promote(c, d, 3);
  CHECK(p.atoms == std::vector<AtomId>{0, 1, 2, 3});
  CHECK(count_vector(c, d, 4).counts == std::vector<int64_t>{8});
  CHECK_THROWS_AS((void)promote(c, d, 7), Error);
}

TEST_CASE("equivalence on the odometer and two-orbit fixtures") {
  Diagram d = odometer(4);
  // any two equal-sized sets at a level are equivalent (single orbit)
  CHECK(check_equiv(make_clopen(2, {0, 1}), make_clopen(2, {2, 3}), d, 2));
  auto g = find_witness_permutation(make_clopen(2, {0, 1}), make_clopen(2, {2, 3}), d, 2);
  REQUIRE(g.has_value());
  CHECK(g->perm == std::vector<AtomId>{2, 3, 0, 1});
  CHECK(!check_equiv(make_clopen(2, {0}), make_clopen(2, {1, 2}), d, 2));

  Diagram t = two_orbit(3);
  // a0 and b0 share an orbit; a0 and a1 do not
  CHECK(check_equiv(make_clopen(1, {0}), make_clopen(1, {2}), t, 1));
  CHECK(!check_equiv(make_clopen(1, {0}), make_clopen(1, {1}), t, 1));
}

TEST_CASE("witness permutation maps a onto b and is orbit-preserving") {
  std::mt19937_64 rng(20260826);
  for (int iter = 0; iter < 300; ++iter) {
    Diagram d = small_random(rng);
    int32_t n = d.depth() - 1;
    ClopenSet a = random_subset(d, n, rng);
    ClopenSet b = random_subset(d, n, rng);
    auto g = find_witness_permutation(a, b, d, n);
    if (!g) continue;
    const Level& lv = d.levels[n];
    for (AtomId x = 0; x < lv.atom_count; ++x)
      CHECK(lv.orbit_of[x] == lv.orbit_of[g->perm[x]]);
    CHECK(apply(*g, a, d) == promote(b, d, n));
    // involution: identity outside a union b union g(a)
    for (AtomId x = 0; x < lv.atom_count; ++x)
      CHECK(g->perm[g->perm[x]] == x);
  }
}

TEST_CASE("check_equiv agrees with the brute-force permutation oracle") {
  std::mt19937_64 rng(42);
  int checked = 0;
  for (int iter = 0; iter < 220; ++iter) {
    Diagram d = small_random(rng);
    REQUIRE(validate_diagram(d).ok);
    int32_t n = d.depth() - 1;
    for (int p = 0; p < 12; ++p) {
      ClopenSet a = random_subset(d, n, rng);
      ClopenSet b = random_subset(d, n, rng);
      CHECK(check_equiv(a, b, d, n) == oracle_equiv(a, b, d, n));
      ++checked;
    }
  }
  CHECK(checked >= 2000);
}

TEST_CASE("promotion keeps equivalence decisions consistent") {
  std::mt19937_64 rng(7);
  for (int iter = 0; iter < 100; ++iter) {
    Diagram d = small_random(rng);
    if (d.depth() < 3) continue;
    ClopenSet a = random_subset(d, 1, rng);
    ClopenSet b = random_subset(d, 1, rng);
    if (check_equiv(a, b, d, 1)) CHECK(check_equiv(a, b, d, 2));
  }
}

TEST_CASE("telescope composes parents and keeps orbit data") {
  Diagram d = odometer(5);
  Diagram t = telescope(d, {0, 2, 4});
  REQUIRE(t.depth() == 3);
  CHECK(t.levels[1].atom_count == 4);
  CHECK(t.levels[2].atom_count == 16);
  for (AtomId a = 0; a < 16; ++a) CHECK(t.levels[2].parent_of[a] == a / 4);
  CHECK(validate_diagram(t).ok);
  CHECK_THROWS_AS((void)telescope(d, {1, 2}), Error);
  CHECK_THROWS_AS((void)telescope(d, {0, 2, 2}), Error);
  CHECK_THROWS_AS((void)telescope(d, {0, 9}), Error);
  // keeping everything is the identity
  CHECK(telescope(d, {0, 1, 2, 3, 4}) == d);
}

TEST_CASE("cut_orbit: odometer level-1 cut splits deeper orbits") {
  Diagram d = odometer(4);
  Diagram c = cut_orbit(d, 1, 0, {{0}, {1}});
  CHECK(validate_diagram(c).ok);
  CHECK(c.levels[1].orbit_count() == 2);
  // the split propagates: level-2 orbit separates descendants of 0 and 1
  CHECK(c.levels[2].orbit_count() == 2);
  CHECK(c.levels[2].orbit_of[0] == c.levels[2].orbit_of[1]);
  CHECK(c.levels[2].orbit_of[0] != c.levels[2].orbit_of[2]);
  CHECK(c.levels[3].orbit_count() == 2);
}

TEST_CASE("cut_orbit: two-orbit fixture cut refines the root orbit") {
  Diagram t = two_orbit(2);
  // cut the level-1 orbit {a0, b0} into singletons
  Diagram c = cut_orbit(t, 1, 0, {{0}, {2}});
  CHECK(validate_diagram(c).ok);
  CHECK(c.levels[1].orbit_count() == 3);
}

TEST_CASE("cut_orbit input validation") {
  Diagram d = odometer(3);
  CHECK_THROWS_AS((void)cut_orbit(d, 1, 5, {{0}, {1}}), Error);
  CHECK_THROWS_AS((void)cut_orbit(d, 1, 0, {{0}}), Error);
  CHECK_THROWS_AS((void)cut_orbit(d, 1, 0, {{0}, {0, 1}}), Error);
  CHECK_THROWS_AS((void)cut_orbit(d, 2, 0, {{0}, {1}}), Error);
}

TEST_CASE("cut_orbit on random diagrams always yields a valid diagram") {
  std::mt19937_64 rng(99);
  int done = 0;
  for (int iter = 0; iter < 200 && done < 60; ++iter) {
    Diagram d = small_random(rng);
    int32_t n = static_cast<int32_t>(rng() % d.depth());
    auto orbits = d.levels[n].atoms_by_orbit();
    int32_t o = static_cast<int32_t>(rng() % orbits.size());
    if (orbits[o].size() < 2) continue;
    // random 2-part split
    std::vector<std::vector<AtomId>> parts(2);
    for (size_t i = 0; i < orbits[o].size(); ++i)
      parts[i == 0 ? 0 : rng() % 2].push_back(orbits[o][i]);
    if (parts[1].empty()) parts[1].push_back(parts[0].back()), parts[0].pop_back();
    if (parts[0].empty()) continue;
    Diagram c = cut_orbit(d, n, o, parts);
    CHECK(validate_diagram(c).ok);
    ++done;
  }
  CHECK(done >= 50);
}

TEST_CASE("lift_element restricts to the input element") {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 100; ++iter) {
    Diagram d = small_random(rng);
    if (d.depth() < 2) continue;
    int32_t n = d.depth() - 2;
    const Level& lv = d.levels[n];
    // random orbit-preserving permutation
    auto orbits = lv.atoms_by_orbit();
    GroupElement g{n, std::vector<AtomId>(lv.atom_count)};
    for (auto& orb : orbits) {
      auto shuffled = orb;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      for (size_t i = 0; i < orb.size(); ++i) g.perm[orb[i]] = shuffled[i];
    }
    GroupElement h = lift_element(g, d);
    const Level& lo = d.levels[n + 1];
    for (AtomId b = 0; b < lo.atom_count; ++b) {
      CHECK(lo.parent_of[h.perm[b]] == g.perm[lo.parent_of[b]]);
      CHECK(lo.orbit_of[h.perm[b]] == lo.orbit_of[b]);
    }
    // bijectivity
    std::vector<char> seen(lo.atom_count, 0);
    for (AtomId b = 0; b < lo.atom_count; ++b) seen[h.perm[b]] = 1;
    CHECK(std::count(seen.begin(), seen.end(), 1) == lo.atom_count);
  }
}

TEST_CASE("json round trip is the identity") {
  for (const Diagram& d :
       {odometer(5), two_orbit(3), gap(5), disconnected(4), random_simple(5, 11)}) {
    json j = to_json(d);
    CHECK(diagram_from_json(j) == d);
    // byte-identical re-serialization
    CHECK(to_json(diagram_from_json(j)).dump() == j.dump());
  }
  ClopenSet c = make_clopen(2, {3, 1, 3});
  CHECK(c.atoms == std::vector<AtomId>{1, 3});
  CHECK(clopen_from_json(to_json(c)) == c);
}

TEST_CASE("malformed json is a structural error") {
  CHECK_THROWS_AS((void)diagram_from_json(json::parse("{}")), Error);
  CHECK_THROWS_AS((void)diagram_from_json(json::parse(R"({"levels":[{"atoms":1}]})")), Error);
  CHECK_THROWS_AS(
      (void)diagram_from_json(json::parse(
          R"({"levels":[{"atoms":1,"orbits":[0],"parents":[0]}]})")),
      Error);
}

TEST_CASE("rational string round trip") {
  CHECK(rat_to_string(mpq_class(1, 3)) == "1/3");
  CHECK(rat_from_string("2/6") == mpq_class(1, 3));
  CHECK(rat_from_string("5") == mpq_class(5));
  CHECK_THROWS_AS((void)rat_from_string("1/0"), Error);
  CHECK_THROWS_AS((void)rat_from_string("zzz"), Error);
}

TEST_CASE("dot export mentions every atom") {
  std::string dot = to_dot(odometer(3));
  CHECK(dot.find("n2_3") != std::string::npos);
  CHECK(dot.find("->") != std::string::npos);
}
