#include <doctest.h>

#include <random>

#include "cantor/fixtures.hpp"
#include "cantor/measures.hpp"

using namespace cantor;

namespace {

// Vertex measure: all mass on one orbit of the given level, propagated up.
MeasureTruncation vertex_measure(const Diagram& d, int32_t depth, int32_t orbit) {
  MeasureTruncation m;
  m.mass.resize(depth + 1);
  const Level& lv = d.levels[depth];
  int64_t sz = 0;
  for (int32_t o : lv.orbit_of)
    if (o == orbit) ++sz;
  m.mass[depth].assign(lv.orbit_count(), 0);
  m.mass[depth][orbit] = mpq_class(1, static_cast<long>(sz));
  m.mass[depth][orbit].canonicalize();
  for (int32_t n = depth - 1; n >= 0; --n) {
    auto counts = child_count_matrix(d, n);
    m.mass[n].assign(counts.size(), 0);
    for (size_t r = 0; r < counts.size(); ++r)
      for (size_t t = 0; t < counts[r].size(); ++t)
        m.mass[n][r] += mpq_class(static_cast<long>(counts[r][t])) * m.mass[n + 1][t];
  }
  return m;
}

mpq_class measure_of(const MeasureTruncation& m, const ClopenSet& c, const Diagram& d,
                     int32_t n) {
  CountVector cv = count_vector(c, d, n);
  mpq_class v = 0;
  for (size_t o = 0; o < cv.counts.size(); ++o)
    v += mpq_class(static_cast<long>(cv.counts[o])) * m.mass[n][o];
  return v;
}

} // namespace

TEST_CASE("vertex measures validate; broken ones do not") {
  for (const Diagram& d : {odometer(5), gap(5), disconnected(4), random_simple(5, 3)}) {
    for (int32_t o = 0; o < d.levels[3].orbit_count(); ++o) {
      MeasureTruncation m = vertex_measure(d, 3, o);
      CHECK(validate_measure(m, d).ok);
      m.mass[1][0] += 1;
      CHECK(!validate_measure(m, d).ok);
    }
  }
}

TEST_CASE("odometer bounds pin the dyadic value exactly") {
  Diagram d = odometer(8);
  for (int32_t k = 0; k <= 6; ++k) {
    ClopenSet c = make_clopen(k, {0});
    for (int32_t depth = k; depth <= 6; ++depth) {
      BoundsResult b = invariant_bounds(c, d, depth);
      mpq_class expect(1, 1L << k);
      expect.canonicalize();
      CHECK(b.min == expect);
      CHECK(b.max == expect);
    }
  }
  ClopenSet two = make_clopen(3, {1, 4});
  BoundsResult b = invariant_bounds(two, d, 6);
  CHECK(b.min == mpq_class(1, 4));
  CHECK(b.max == mpq_class(1, 4));
}

TEST_CASE("disconnected towers leave the full ambiguity interval") {
  Diagram d = disconnected(5);
  ClopenSet tower1 = make_clopen(0, {0});
  BoundsResult b = invariant_bounds(tower1, d, 4);
  CHECK(b.min == 0);
  CHECK(b.max == 1);
}

TEST_CASE("bounds are nested as the depth grows and cover sampled measures") {
  std::mt19937_64 rng(17);
  for (uint64_t s = 0; s < 12; ++s) {
    Diagram d = random_simple(5, s);
    ClopenSet c = make_clopen(1, {0});
    BoundsResult prev = invariant_bounds(c, d, 1);
    for (int32_t depth = 2; depth < d.depth(); ++depth) {
      BoundsResult b = invariant_bounds(c, d, depth);
      CHECK(b.min >= prev.min);
      CHECK(b.max <= prev.max);
      prev = b;
    }
    // independent cross-check: mu(c) of random convex combinations of the
    // vertex measures always lies inside the certified interval
    int32_t depth = d.depth() - 1;
    BoundsResult b = invariant_bounds(c, d, depth);
    int32_t oc = d.levels[depth].orbit_count();
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<long> w(oc);
      long tot = 0;
      for (auto& x : w) tot += (x = static_cast<long>(rng() % 7) + 1);
      MeasureTruncation mix;
      mix.mass.resize(depth + 1);
      for (int32_t o = 0; o < oc; ++o) {
        MeasureTruncation v = vertex_measure(d, depth, o);
        mpq_class weight(w[o], tot);
        weight.canonicalize();
        for (int32_t n = 0; n <= depth; ++n) {
          if (mix.mass[n].empty()) mix.mass[n].assign(v.mass[n].size(), 0);
          for (size_t i = 0; i < v.mass[n].size(); ++i)
            mix.mass[n][i] += v.mass[n][i] * weight;
        }
      }
      REQUIRE(validate_measure(mix, d).ok);
      mpq_class mu = measure_of(mix, c, d, depth);
      CHECK(mu >= b.min);
      CHECK(mu <= b.max);
    }
    // attainment: some vertex measure hits each endpoint
    bool hit_min = false, hit_max = false;
    for (int32_t o = 0; o < oc; ++o) {
      mpq_class mu = measure_of(vertex_measure(d, depth, o), c, d, depth);
      hit_min = hit_min || mu == b.min;
      hit_max = hit_max || mu == b.max;
    }
    CHECK(hit_min);
    CHECK(hit_max);
  }
}

TEST_CASE("thinness certificate on the leftmost odometer path") {
  Diagram d = odometer(5);
  Marking m;
  m.levels.resize(5);
  for (int32_t n = 0; n < 5; ++n) {
    m.levels[n].marked = {0};
    m.levels[n].k_orbit = {0};
  }
  ThinnessResult t = thinness_certificate(m, d, mpq_class(1, 8));
  REQUIRE(t.bounds.size() == 5);
  CHECK(t.bounds[0] == 1);
  CHECK(t.bounds[1] == mpq_class(1, 2));
  CHECK(t.bounds[2] == mpq_class(1, 4));
  CHECK(t.bounds[3] == mpq_class(1, 8));
  REQUIRE(t.certified_level.has_value());
  CHECK(*t.certified_level == 3);
}

TEST_CASE("thinness refusal is not a refutation") {
  Diagram d = odometer(4);
  Marking m; // everything marked: bound stays 1
  m.levels.resize(4);
  for (int32_t n = 0; n < 4; ++n)
    for (AtomId a = 0; a < d.levels[n].atom_count; ++a) {
      m.levels[n].marked.push_back(a);
      m.levels[n].k_orbit.push_back(0);
    }
  ThinnessResult t = thinness_certificate(m, d, mpq_class(1, 2));
  CHECK(!t.certified_level.has_value());
  for (const auto& b : t.bounds) CHECK(b == 1);
}

TEST_CASE("simplicity certificates") {
  CHECK(simplicity_certificate(odometer(6), 1).certified);
  CHECK(simplicity_certificate(gap(6), 1).certified);
  for (uint64_t s = 0; s < 10; ++s) CHECK(simplicity_certificate(random_simple(5, s), 2).certified);
  SimplicityResult r = simplicity_certificate(disconnected(5), 3);
  CHECK(!r.certified);
  REQUIRE(r.failing_level.has_value());
  CHECK(*r.failing_level == 0);
  CHECK(!simplicity_certificate(two_orbit(5), 4).certified);
  CHECK_THROWS_AS((void)simplicity_certificate(odometer(3), 0), Error);
}

TEST_CASE("domination level on the odometer") {
  Diagram d = odometer(6);
  DominationResult r =
      gw_domination_level(make_clopen(2, {0}), make_clopen(1, {0}), d, 5);
  REQUIRE(r.level.has_value());
  CHECK(*r.level == 2);
  REQUIRE(r.gamma.has_value());
  // the witness moves a inside b
  ClopenSet moved = apply(*r.gamma, make_clopen(2, {0}), d);
  ClopenSet pb = promote(make_clopen(1, {0}), d, 2);
  for (AtomId x : moved.atoms)
    CHECK(std::binary_search(pb.atoms.begin(), pb.atoms.end(), x));

  // the empty set is dominated immediately
  DominationResult e = gw_domination_level(make_clopen(0, {}), make_clopen(1, {0}), d, 5);
  REQUIRE(e.level.has_value());

  // equal measures never strictly dominate
  DominationResult never =
      gw_domination_level(make_clopen(1, {0}), make_clopen(1, {1}), d, 5);
  CHECK(!never.level.has_value());
}

TEST_CASE("positivity certificate") {
  Diagram d = odometer(6);
  PositivityResult p = positivity_certificate(make_clopen(2, {0}), d, 5);
  CHECK(p.positive);
  CHECK(p.lower == mpq_class(1, 4));

  Diagram disc = disconnected(5);
  PositivityResult q = positivity_certificate(make_clopen(0, {0}), disc, 4);
  CHECK(!q.positive);
  CHECK(q.lower == 0);
}
