#include "cantor/saturation.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include "cantor/measures.hpp"
#include "cantor/serialize.hpp"

namespace cantor {

namespace {

// Child-count parameters of a two-family host: every materialized level pair
// above the root must have the symmetric matrix [[c, d], [d, c]].
struct HostShape {
  int64_t c = 0, d = 0;
};

std::optional<HostShape> two_family_shape(const Diagram& host) {
  if (host.depth() < 3) return std::nullopt;
  if (host.level(0).atom_count != 1) return std::nullopt;
  if (host.level(1).atom_count != 2 || host.level(1).orbit_count() != 2) return std::nullopt;
  HostShape s;
  for (int32_t n = 1; n + 1 < host.depth(); ++n) {
    if (host.level(n + 1).orbit_count() != 2) return std::nullopt;
    auto m = child_count_matrix(host, n);
    if (m.size() != 2 || m[0].size() != 2) return std::nullopt;
    if (m[0][0] != m[1][1] || m[0][1] != m[1][0]) return std::nullopt;
    if (n == 1) {
      s.c = m[0][0];
      s.d = m[0][1];
    } else if (m[0][0] != s.c || m[0][1] != s.d) {
      return std::nullopt;
    }
  }
  if (s.c - s.d != 1 || s.d < 1) return std::nullopt;
  return s;
}

// Re-expresses a per-family count vector one host level deeper.
void evolve(mpz_class& a, mpz_class& b, const HostShape& s) {
  mpz_class na = s.c * a + s.d * b;
  mpz_class nb = s.d * a + s.c * b;
  a = na;
  b = nb;
}

void evolve_steps(mpz_class& a, mpz_class& b, const HostShape& s, int64_t steps) {
  for (int64_t i = 0; i < steps; ++i) evolve(a, b, s);
}

// Atoms per family at host level t >= 1.
mpz_class family_size(const HostShape& s, int64_t t) {
  mpz_class out;
  mpz_ui_pow_ui(out.get_mpz_t(), static_cast<unsigned long>(s.c + s.d),
                static_cast<unsigned long>(t - 1));
  return out;
}

std::string bounds_str(const BoundsResult& b) {
  return "[" + rat_to_string(b.min) + ", " + rat_to_string(b.max) + "]";
}

// Count vector of a clopen set as (family-A, family-B) at its own level.
std::pair<mpz_class, mpz_class> family_counts(const ClopenSet& c, const Diagram& host) {
  CountVector cv = count_vector(c, host, c.level);
  if (cv.counts.size() != 2)
    throw Error(Errc::refusal, "stream sets must live on a two-orbit host level");
  return {mpz_class(cv.counts[0]), mpz_class(cv.counts[1])};
}

// Aggregated per-parent child counts: u[class at level n][orbit at level n+1].
std::vector<std::vector<mpz_class>> orbit_use(const SaturationLevel& up,
                                              const SaturationLevel& lo) {
  int32_t orbits = 0;
  for (const SatClass& q : lo.classes) orbits = std::max(orbits, q.orbit + 1);
  std::vector<std::vector<mpz_class>> u(up.classes.size(), std::vector<mpz_class>(orbits, 0));
  for (const SatClass& q : lo.classes) u[q.parent][q.orbit] += q.per_parent;
  return u;
}

void fail(ValidityReport& rep, Violation::Kind kind, int32_t level, const std::string& what) {
  rep.ok = false;
  rep.violations.push_back({kind, level, what});
}

} // namespace

void require_two_family_host(const Diagram& host) {
  require_valid(host);
  if (!two_family_shape(host))
    throw Error(Errc::refusal,
                "host is not a two-family tower with symmetric child counts [[c,d],[d,c]], "
                "c-d=1, d>=1");
}

void validate_stream(const PairStream& s, const Diagram& host, int32_t depth) {
  if (static_cast<int32_t>(s.pairs.size()) < depth)
    throw Error(Errc::depth, "stream supplies " + std::to_string(s.pairs.size()) +
                                 " pairs but " + std::to_string(depth) + " levels were requested");
  const int32_t deepest = host.depth() - 1;
  for (size_t i = 0; i < s.pairs.size(); ++i) {
    const ClopenSet& u = s.pairs[i].first;
    const ClopenSet& v = s.pairs[i].second;
    BoundsResult bu = invariant_bounds(u, host, deepest);
    BoundsResult bv = invariant_bounds(v, host, deepest);
    if (!(bu == bv))
      throw Error(Errc::refusal, "stream pair " + std::to_string(i) +
                                     " has unequal measure bounds: " + bounds_str(bu) +
                                     " vs " + bounds_str(bv));
    if (i == 0) {
      if (u.level != v.level || u.level < 2)
        throw Error(Errc::refusal, "seed pair must share a host level >= 2");
      auto [a, b] = family_counts(u, host);
      auto [va, vb] = family_counts(v, host);
      if (a - b != 1 || va != b || vb != a)
        throw Error(Errc::refusal,
                    "seed pair must be a mirror pair with counts (a,b)/(b,a), a-b=1");
      for (int32_t n = u.level; n <= deepest; ++n)
        if (check_equiv(u, v, host, n))
          throw Error(Errc::refusal, "seed pair is equivalent at level " + std::to_string(n));
    } else {
      int32_t lvl = std::max(u.level, v.level);
      if (!check_equiv(u, v, host, lvl) || !find_witness_permutation(u, v, host, lvl))
        throw Error(Errc::refusal, "continuation pair " + std::to_string(i) +
                                       " is not equivalent; only equivalent continuations "
                                       "can be absorbed into the refinement");
    }
  }
}

SaturationTower build_saturation_tower(const Diagram& host, const PairStream& s, int32_t depth,
                                       const mpz_class& richness_override) {
  if (depth < 1) throw Error(Errc::structural, "depth must be positive");
  require_two_family_host(host);
  validate_stream(s, host, depth);
  HostShape shape = *two_family_shape(host);

  SaturationTower t;
  t.host = host;
  t.stream = s;

  // Level 0: the two seed sets and their complement, three singleton orbits.
  {
    const ClopenSet& u = s.pairs[0].first;
    auto [a, b] = family_counts(u, host);
    mpz_class S = family_size(shape, u.level);
    if (S - a - b <= 0)
      throw Error(Errc::refusal, "seed pair leaves no room for a complement atom");
    SaturationLevel lv;
    lv.host_level = u.level;
    lv.classes.push_back({-1, 1, 0, a, b, +1, 1});
    lv.classes.push_back({-1, 1, 1, b, a, -1, 1});
    lv.classes.push_back({-1, 1, 2, S - a - b, S - a - b, 0, 1});
    lv.alpha = 0;
    lv.beta = 1;
    lv.exceptional = {0, 1};
    lv.atom_total = 3;
    t.levels.push_back(std::move(lv));
  }

  for (int32_t n = 0; n + 1 < depth; ++n) {
    const SaturationLevel& up = t.levels.back();
    const mpz_class h = up.atom_total;
    // Fragment floor for the two distinguished orbits.  The step below keeps
    // the cross-pair imbalance of every orbit at most 1, so the required
    // floor is (n+1) * h * (1 + 2).
    mpz_class floor = 3 * (n + 1) * h;
    mpz_class F = richness_override > 0 ? richness_override : floor + 1;

    // Smallest host jump so that every atom holds F singletons per family
    // beyond its distinguished allocation.
    std::vector<std::pair<mpz_class, mpz_class>> sig;
    for (const SatClass& q : up.classes) sig.emplace_back(q.sig_a, q.sig_b);
    int64_t delta = 0;
    auto roomy = [&] {
      for (auto& [a, b] : sig)
        if (std::min(a, b) < F) return false;
      return delta >= 1;
    };
    while (!roomy()) {
      for (auto& [a, b] : sig) evolve(a, b, shape);
      ++delta;
    }

    SaturationLevel lv;
    lv.host_level = up.host_level + delta;
    auto add = [&](int32_t parent, const mpz_class& per, int32_t orbit, mpz_class sa,
                   mpz_class sb, int32_t role) {
      if (per == 0) return -1;
      SatClass q{parent, per, orbit, std::move(sa), std::move(sb), role,
                 per * up.classes[parent].count};
      lv.classes.push_back(std::move(q));
      return static_cast<int32_t>(lv.classes.size() - 1);
    };
    for (int32_t qi = 0; qi < static_cast<int32_t>(up.classes.size()); ++qi) {
      const SatClass& q = up.classes[qi];
      const auto& [a2, b2] = sig[qi];
      mpz_class dq = q.sig_a - q.sig_b; // in {-1, 0, 1} by construction
      mpz_class ea = F + (dq == 1 ? 1 : 0);
      mpz_class eb = F + (dq == -1 ? 1 : 0);
      mpz_class rest = std::min(a2, b2) - F;
      if (ea + rest != a2 || eb + rest != b2)
        throw Error(Errc::step_failure, "refinement allocation does not exhaust the atom");
      if (qi == up.alpha) {
        int32_t id = add(qi, 1, 0, 1, 0, +1);
        lv.alpha = id;
        add(qi, ea - 1, 0, 1, 0, 0);
      } else {
        add(qi, ea, 0, 1, 0, 0);
      }
      if (qi == up.beta) {
        int32_t id = add(qi, 1, 1, 0, 1, -1);
        lv.beta = id;
        add(qi, eb - 1, 1, 0, 1, 0);
      } else {
        add(qi, eb, 1, 0, 1, 0);
      }
      add(qi, rest, 2, 1, 1, 0);
    }
    lv.exceptional = {0, 1};
    lv.atom_total = 0;
    for (const SatClass& q : lv.classes) lv.atom_total += q.count;
    t.levels.push_back(std::move(lv));
  }
  return t;
}

ValidityReport check_saturation_tower(const SaturationTower& t) {
  ValidityReport rep;
  auto shape = two_family_shape(t.host);
  if (!shape) {
    fail(rep, Violation::Kind::structural, -1, "host is not a symmetric two-family tower");
    return rep;
  }
  const int32_t L = static_cast<int32_t>(t.levels.size());
  if (L == 0 || static_cast<int32_t>(t.stream.pairs.size()) < L) {
    fail(rep, Violation::Kind::structural, -1, "stream shorter than the tower");
    return rep;
  }

  // Stream admission, re-derived: equal bounds everywhere, a persistent
  // non-equivalent seed pair, and consumable witnesses for every later pair.
  const int32_t deepest = t.host.depth() - 1;
  for (int32_t i = 0; i < L; ++i) {
    const ClopenSet& u = t.stream.pairs[i].first;
    const ClopenSet& v = t.stream.pairs[i].second;
    if (!(invariant_bounds(u, t.host, deepest) == invariant_bounds(v, t.host, deepest)))
      fail(rep, Violation::Kind::fragment, -1,
           "stream pair " + std::to_string(i) + " has unequal measure bounds");
    if (i == 0) {
      for (int32_t n = std::max(u.level, v.level); n <= deepest; ++n)
        if (check_equiv(u, v, t.host, n))
          fail(rep, Violation::Kind::fragment, -1, "seed pair equivalent at some level");
    } else {
      int32_t lvl = std::max(u.level, v.level);
      if (!find_witness_permutation(u, v, t.host, lvl))
        fail(rep, Violation::Kind::fragment, -1,
             "no witness for continuation pair " + std::to_string(i));
    }
  }

  for (int32_t n = 0; n < L; ++n) {
    const SaturationLevel& lv = t.levels[n];
    const int32_t C = static_cast<int32_t>(lv.classes.size());
    if (lv.alpha < 0 || lv.alpha >= C || lv.beta < 0 || lv.beta >= C || lv.alpha == lv.beta) {
      fail(rep, Violation::Kind::structural, n, "distinguished class ids out of range");
      continue;
    }
    int32_t orbits = 0;
    mpz_class total = 0;
    bool shape_ok = true;
    for (int32_t qi = 0; qi < C; ++qi) {
      const SatClass& q = lv.classes[qi];
      orbits = std::max(orbits, q.orbit + 1);
      total += q.count;
      int32_t want_role = qi == lv.alpha ? +1 : qi == lv.beta ? -1 : 0;
      if (q.role != want_role)
        fail(rep, Violation::Kind::structural, n, "role tag does not match distinguished ids");
      if (q.per_parent < 1 || q.orbit < 0 || q.sig_a < 0 || q.sig_b < 0) {
        fail(rep, Violation::Kind::structural, n, "malformed class " + std::to_string(qi));
        shape_ok = false;
        continue;
      }
      if (n == 0) {
        if (q.parent != -1 || q.count != q.per_parent)
          fail(rep, Violation::Kind::structural, 0, "level-0 class with a parent");
      } else {
        const auto& up = t.levels[n - 1];
        if (q.parent < 0 || q.parent >= static_cast<int32_t>(up.classes.size())) {
          fail(rep, Violation::Kind::structural, n, "dangling parent pointer");
          shape_ok = false;
        } else if (q.count != q.per_parent * up.classes[q.parent].count) {
          fail(rep, Violation::Kind::structural, n, "class count inconsistent with parent");
        }
      }
    }
    if (!shape_ok) continue;
    if (total != lv.atom_total)
      fail(rep, Violation::Kind::structural, n, "atom total does not sum over classes");
    if (lv.classes[lv.alpha].count != 1 || lv.classes[lv.beta].count != 1)
      fail(rep, Violation::Kind::structural, n, "distinguished atoms are not singletons");
    std::vector<std::optional<std::pair<mpz_class, mpz_class>>> orbit_sig(orbits);
    for (const SatClass& q : lv.classes) {
      auto s = std::make_pair(q.sig_a, q.sig_b);
      if (!orbit_sig[q.orbit])
        orbit_sig[q.orbit] = s;
      else if (*orbit_sig[q.orbit] != s)
        fail(rep, Violation::Kind::fragment, n, "orbit joins atoms with distinct count vectors");
    }
    for (int32_t o = 0; o < orbits; ++o)
      if (!orbit_sig[o]) fail(rep, Violation::Kind::structural, n, "orbit ids not contiguous");
    std::vector<int32_t> exc = lv.exceptional;
    std::sort(exc.begin(), exc.end());
    std::vector<int32_t> want{lv.classes[lv.alpha].orbit, lv.classes[lv.beta].orbit};
    std::sort(want.begin(), want.end());
    if (exc != want || want[0] == want[1])
      fail(rep, Violation::Kind::structural, n,
           "exceptional orbits are not the two distinguished orbits");

    // Seed level against the stream.
    if (n == 0) {
      if (C != 3 || orbits != 3)
        fail(rep, Violation::Kind::structural, 0, "level 0 must be three singleton orbits");
      auto [a, b] = family_counts(t.stream.pairs[0].first, t.host);
      auto [va, vb] = family_counts(t.stream.pairs[0].second, t.host);
      const SatClass& al = lv.classes[lv.alpha];
      const SatClass& be = lv.classes[lv.beta];
      if (lv.host_level != t.stream.pairs[0].first.level || al.sig_a != a || al.sig_b != b ||
          be.sig_a != va || be.sig_b != vb)
        fail(rep, Violation::Kind::fragment, 0, "level 0 does not present the seed pair");
      mpz_class S = family_size(*shape, lv.host_level);
      for (int32_t qi = 0; qi < C; ++qi)
        if (qi != lv.alpha && qi != lv.beta &&
            (lv.classes[qi].sig_a != S - a - b || lv.classes[qi].sig_b != S - a - b))
          fail(rep, Violation::Kind::fragment, 0, "complement atom has the wrong count vector");
    }

    // Pair separation, at this and every deeper host level.
    {
      const SatClass& al = lv.classes[lv.alpha];
      const SatClass& be = lv.classes[lv.beta];
      if (al.sig_a == be.sig_a && al.sig_b == be.sig_b)
        fail(rep, Violation::Kind::fragment, n, "distinguished pair has equal count vectors");
      if (al.sig_a - al.sig_b == be.sig_a - be.sig_b)
        fail(rep, Violation::Kind::fragment, n,
             "distinguished pair may become equivalent at a deeper host level");
    }

    if (n == 0) continue;
    const SaturationLevel& up = t.levels[n - 1];

    // Refinement bookkeeping: children of each class exhaust its evolved
    // count vector, one host level jump shared by the whole level.
    int64_t delta = lv.host_level - up.host_level;
    if (delta < 1) {
      fail(rep, Violation::Kind::structural, n, "host level must strictly increase");
      continue;
    }
    for (int32_t qi = 0; qi < static_cast<int32_t>(up.classes.size()); ++qi) {
      mpz_class ea = up.classes[qi].sig_a, eb = up.classes[qi].sig_b;
      evolve_steps(ea, eb, *shape, delta);
      mpz_class ca = 0, cb = 0;
      for (const SatClass& q : lv.classes)
        if (q.parent == qi) {
          ca += q.per_parent * q.sig_a;
          cb += q.per_parent * q.sig_b;
        }
      if (ca != ea || cb != eb)
        fail(rep, Violation::Kind::fragment, n,
             "children of class " + std::to_string(qi) + " do not exhaust it");
    }

    // Nesting of the distinguished atoms.
    if (lv.classes[lv.alpha].parent != up.alpha || lv.classes[lv.beta].parent != up.beta)
      fail(rep, Violation::Kind::fragment, n, "distinguished pair does not nest in the pair above");

    auto u = orbit_use(up, lv);
    // Fragment uniformity across classes of one orbit above.
    for (int32_t p = 0; p < static_cast<int32_t>(up.classes.size()); ++p)
      for (int32_t q = p + 1; q < static_cast<int32_t>(up.classes.size()); ++q)
        if (up.classes[p].orbit == up.classes[q].orbit && u[p] != u[q])
          fail(rep, Violation::Kind::fragment, n, "fragment counts not uniform within an orbit");

    // Balance of every non-distinguished orbit between the pair.
    std::vector<bool> is_exc(orbits, false);
    for (int32_t o : lv.exceptional)
      if (o >= 0 && o < orbits) is_exc[o] = true;
    for (int32_t o = 0; o < orbits; ++o)
      if (!is_exc[o] && u[up.alpha][o] != u[up.beta][o])
        fail(rep, Violation::Kind::fragment, n,
             "orbit " + std::to_string(o) + " is unbalanced between the distinguished pair");

    // Imbalance counter and the richness floor for the distinguished orbits.
    mpz_class N = 0;
    for (int32_t o = 0; o < orbits; ++o)
      N = std::max(N, mpz_class(abs(u[up.alpha][o] - u[up.beta][o])));
    mpz_class floor = n * up.atom_total * (N + 2);
    for (int32_t o : lv.exceptional)
      for (int32_t p = 0; p < static_cast<int32_t>(up.classes.size()); ++p)
        if (u[p][o] <= floor) {
          fail(rep, Violation::Kind::fragment, n,
               "distinguished orbit " + std::to_string(o) + " holds only " +
                   u[p][o].get_str() + " fragments of class " + std::to_string(p) +
                   ", floor is " + floor.get_str());
          break;
        }
  }
  return rep;
}

SingularLedger build_j_embeddings(const SaturationTower& t) {
  ValidityReport basic;
  if (t.levels.empty()) throw Error(Errc::structural, "empty tower");
  auto shape = two_family_shape(t.host);
  if (!shape) throw Error(Errc::structural, "host is not a symmetric two-family tower");

  SingularLedger led;
  for (int32_t n = 0; n < static_cast<int32_t>(t.levels.size()); ++n) {
    const SaturationLevel& lv = t.levels[n];
    SingularLedger::Row row;
    row.singular = {lv.alpha, lv.beta};
    mpz_class corrections = 0;
    if (n == 0) {
      row.moved = 2;
      row.moved_bound = 2;
      row.allowed = 1;
    } else {
      const SaturationLevel& up = t.levels[n - 1];
      auto u = orbit_use(up, lv);
      // The forced image of each distinguished atom removes one fragment
      // from its side; whatever imbalance remains on the two distinguished
      // orbits must be repaired by swapping that many extra pairs across.
      int32_t oa = lv.classes[lv.alpha].orbit, ob = lv.classes[lv.beta].orbit;
      mpz_class pa = abs((u[up.alpha][oa] - 1) - u[up.beta][oa]);
      mpz_class pb = abs((u[up.beta][ob] - 1) - u[up.alpha][ob]);
      corrections = pa + pb;
      row.moved = 2 + 2 * corrections;
      mpz_class N = 0;
      for (size_t o = 0; o < u[up.alpha].size(); ++o)
        N = std::max(N, mpz_class(abs(u[up.alpha][o] - u[up.beta][o])));
      row.moved_bound = up.atom_total * (N + 2);
      row.allowed = mpq_class(1, n);
      row.allowed.canonicalize();
    }
    // Worst-case measure of the moved atoms: both the distinguished pair and
    // every correction pair contribute one atom per family, all singletons
    // at the level's host depth.
    mpz_class per_family = 1 + corrections;
    // The seed pair can carry more than one host atom per family.
    if (n == 0) {
      const SaturationLevel& lv0 = t.levels[0];
      per_family = lv0.classes[lv0.alpha].sig_a + lv0.classes[lv0.beta].sig_a;
    }
    row.measure = mpq_class(per_family, family_size(*shape, lv.host_level));
    row.measure.canonicalize();
    if (row.moved > row.moved_bound || row.measure > row.allowed)
      throw Error(Errc::step_failure,
                  "singular accounting violated its own bound at level " + std::to_string(n));
    led.rows.push_back(std::move(row));
  }
  return led;
}

AssembledSaturation assemble_saturated(const SaturationTower& t, const SingularLedger& led) {
  if (t.levels.size() != led.rows.size())
    throw Error(Errc::structural, "ledger does not match the tower");
  AssembledSaturation out;
  out.lambda = t;

  for (int32_t n = 0; n < static_cast<int32_t>(t.levels.size()); ++n) {
    const SaturationLevel& lv = t.levels[n];
    SaturationLevel& joined = out.lambda.levels[n];
    out.singular.push_back(led.rows[n].singular);

    // Join the two distinguished orbits and compact the orbit ids.
    int32_t oa = lv.classes[lv.alpha].orbit, ob = lv.classes[lv.beta].orbit;
    int32_t orbits = 0;
    for (const SatClass& q : lv.classes) orbits = std::max(orbits, q.orbit + 1);
    std::vector<int32_t> relabel(orbits, -1);
    int32_t next = 0;
    for (const SatClass& q : lv.classes) {
      int32_t o = q.orbit == ob ? oa : q.orbit;
      if (relabel[o] < 0) relabel[o] = next++;
    }
    for (SatClass& q : joined.classes) q.orbit = relabel[q.orbit == ob ? oa : q.orbit];
    joined.exceptional = {relabel[oa]};

    // Relation identity: joining same-orbit classes plus the swapped pair
    // must reproduce exactly the joined orbit partition.
    {
      std::vector<int32_t> root(lv.classes.size());
      std::iota(root.begin(), root.end(), 0);
      auto find = [&](int32_t x) {
        while (root[x] != x) x = root[x] = root[root[x]];
        return x;
      };
      auto unite = [&](int32_t x, int32_t y) { root[find(x)] = find(y); };
      std::map<int32_t, int32_t> seen;
      for (int32_t qi = 0; qi < static_cast<int32_t>(lv.classes.size()); ++qi) {
        auto [it, fresh] = seen.emplace(lv.classes[qi].orbit, qi);
        if (!fresh) unite(qi, it->second);
      }
      unite(lv.alpha, lv.beta);
      bool identity = true;
      for (size_t p = 0; p < lv.classes.size(); ++p)
        for (size_t q = 0; q < lv.classes.size(); ++q)
          if ((find(static_cast<int32_t>(p)) == find(static_cast<int32_t>(q))) !=
              (joined.classes[p].orbit == joined.classes[q].orbit))
            identity = false;
      if (!identity)
        fail(out.report, Violation::Kind::fragment, n,
             "relation-identity: joined relation differs from the joined orbit partition");
    }

    // Marked-core compatibility: the moved atoms nest under moved atoms and
    // appear once on each side of the pair, in paired joined orbits.
    if (n > 0) {
      const SaturationLevel& up = t.levels[n - 1];
      const SatClass& al = lv.classes[lv.alpha];
      const SatClass& be = lv.classes[lv.beta];
      if (al.parent != up.alpha || be.parent != up.beta || al.per_parent != be.per_parent ||
          joined.classes[lv.alpha].orbit != joined.classes[lv.beta].orbit)
        fail(out.report, Violation::Kind::fragment, n,
             "etale: moved atoms are not a matched pair under the pair above");
    }
  }

  // Thinness: re-derive the measure bound from the fragment richness of the
  // distinguished orbits; the exact ledger measures alone do not certify it.
  {
    ValidityReport conditions = check_saturation_tower(t);
    for (const Violation& v : conditions.violations)
      if (v.what.find("fragments") != std::string::npos || v.what.find("floor") != std::string::npos)
        fail(out.report, Violation::Kind::fragment, v.level, "thinness: " + v.what);
    for (int32_t n = 0; n < static_cast<int32_t>(led.rows.size()); ++n) {
      const auto& row = led.rows[n];
      if (row.moved > row.moved_bound || row.measure > row.allowed)
        fail(out.report, Violation::Kind::fragment, n, "thinness: ledger row out of bounds");
    }
  }
  return out;
}

json tower_to_json(const SaturationTower& t) {
  json j;
  j["host"] = to_json(t.host);
  json pairs = json::array();
  for (const auto& [u, v] : t.stream.pairs) pairs.push_back({to_json(u), to_json(v)});
  j["pairs"] = pairs;
  json levels = json::array();
  for (const SaturationLevel& lv : t.levels) {
    json classes = json::array();
    for (const SatClass& q : lv.classes)
      classes.push_back({{"parent", q.parent},
                         {"per_parent", q.per_parent.get_str()},
                         {"orbit", q.orbit},
                         {"sig", {q.sig_a.get_str(), q.sig_b.get_str()}},
                         {"role", q.role},
                         {"count", q.count.get_str()}});
    levels.push_back({{"host_level", lv.host_level},
                      {"classes", classes},
                      {"alpha", lv.alpha},
                      {"beta", lv.beta},
                      {"exceptional", lv.exceptional},
                      {"atom_total", lv.atom_total.get_str()}});
  }
  j["levels"] = levels;
  return j;
}

SaturationTower tower_from_json(const json& j) {
  SaturationTower t;
  t.host = diagram_from_json(j.at("host"));
  for (const json& p : j.at("pairs"))
    t.stream.pairs.emplace_back(clopen_from_json(p.at(0)), clopen_from_json(p.at(1)));
  for (const json& jl : j.at("levels")) {
    SaturationLevel lv;
    lv.host_level = jl.at("host_level").get<int64_t>();
    for (const json& jq : jl.at("classes")) {
      SatClass q;
      q.parent = jq.at("parent").get<int32_t>();
      q.per_parent = mpz_class(jq.at("per_parent").get<std::string>());
      q.orbit = jq.at("orbit").get<int32_t>();
      q.sig_a = mpz_class(jq.at("sig").at(0).get<std::string>());
      q.sig_b = mpz_class(jq.at("sig").at(1).get<std::string>());
      q.role = jq.at("role").get<int32_t>();
      q.count = mpz_class(jq.at("count").get<std::string>());
      lv.classes.push_back(std::move(q));
    }
    lv.alpha = jl.at("alpha").get<int32_t>();
    lv.beta = jl.at("beta").get<int32_t>();
    lv.exceptional = jl.at("exceptional").get<std::vector<int32_t>>();
    lv.atom_total = mpz_class(jl.at("atom_total").get<std::string>());
    t.levels.push_back(std::move(lv));
  }
  return t;
}

} // namespace cantor
