#include "cantor/diagram.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace cantor {

int32_t Level::orbit_count() const {
  int32_t mx = -1;
  for (int32_t o : orbit_of) mx = std::max(mx, o);
  return mx + 1;
}

std::vector<std::vector<AtomId>> Level::atoms_by_orbit() const {
  std::vector<std::vector<AtomId>> out(orbit_count());
  for (AtomId a = 0; a < atom_count; ++a) out[orbit_of[a]].push_back(a);
  return out;
}

const Level& Diagram::level(int32_t n) const {
  if (n < 0 || n >= depth())
    throw Error(Errc::depth, "level " + std::to_string(n) + " beyond truncation depth " +
                                 std::to_string(depth()));
  return levels[n];
}

// --- validation -------------------------------------------------------------

static void check_level_structure(const Level& lv, int32_t n, int32_t prev_atoms,
                                  ValidityReport& rep) {
  auto bad = [&](const std::string& what) {
    rep.ok = false;
    rep.violations.push_back({Violation::Kind::structural, n, what});
  };
  if (lv.atom_count <= 0) bad("level has no atoms");
  if (static_cast<int32_t>(lv.orbit_of.size()) != lv.atom_count)
    bad("orbit map size does not match atom count");
  if (n == 0) {
    if (!lv.parent_of.empty()) bad("level 0 must not carry a parent map");
  } else if (static_cast<int32_t>(lv.parent_of.size()) != lv.atom_count) {
    bad("parent map size does not match atom count");
  }
  // Orbit ids must be contiguous from 0.
  int32_t mx = -1;
  for (int32_t o : lv.orbit_of) {
    if (o < 0) { bad("negative orbit id"); return; }
    mx = std::max(mx, o);
  }
  if (mx >= 0) {
    std::vector<char> seen(mx + 1, 0);
    for (int32_t o : lv.orbit_of) seen[o] = 1;
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
      bad("orbit ids are not contiguous");
  }
  for (int32_t p : lv.parent_of)
    if (p < 0 || p >= prev_atoms) { bad("parent index out of range"); break; }
}

ValidityReport validate_diagram(const Diagram& d) {
  ValidityReport rep;
  if (d.levels.empty()) {
    rep.ok = false;
    rep.violations.push_back({Violation::Kind::structural, -1, "diagram has no levels"});
    return rep;
  }
  for (int32_t n = 0; n < d.depth(); ++n)
    check_level_structure(d.levels[n], n, n == 0 ? 0 : d.levels[n - 1].atom_count, rep);
  if (!rep.ok) return rep; // fragment checks assume well-formed maps

  for (int32_t n = 0; n + 1 < d.depth(); ++n) {
    const Level& up = d.levels[n];
    const Level& lo = d.levels[n + 1];
    int32_t co = lo.orbit_count();
    // counts[a][tau] = children of atom a in child orbit tau
    std::vector<std::vector<int64_t>> counts(up.atom_count, std::vector<int64_t>(co, 0));
    for (AtomId b = 0; b < lo.atom_count; ++b) counts[lo.parent_of[b]][lo.orbit_of[b]]++;
    auto orbits = up.atoms_by_orbit();
    for (size_t rho = 0; rho < orbits.size(); ++rho) {
      const auto& atoms = orbits[rho];
      for (int32_t tau = 0; tau < co; ++tau) {
        int64_t c0 = counts[atoms[0]][tau];
        for (AtomId a : atoms) {
          if (counts[a][tau] != c0) {
            rep.ok = false;
            rep.violations.push_back(
                {Violation::Kind::fragment, n,
                 "orbit " + std::to_string(rho) + " at level " + std::to_string(n) +
                     ": unequal child counts into orbit " + std::to_string(tau) +
                     " at level " + std::to_string(n + 1) + " (" + std::to_string(c0) +
                     " vs " + std::to_string(counts[a][tau]) + ")"});
            break;
          }
        }
      }
    }
  }
  return rep;
}

void require_valid(const Diagram& d) {
  ValidityReport rep = validate_diagram(d);
  if (!rep.ok) throw Error(Errc::structural, "invalid diagram: " + rep.violations[0].what);
}

std::vector<std::vector<int64_t>> child_count_matrix(const Diagram& d, int32_t n) {
  const Level& up = d.level(n);
  const Level& lo = d.level(n + 1);
  std::vector<std::vector<int64_t>> counts(up.atom_count,
                                           std::vector<int64_t>(lo.orbit_count(), 0));
  for (AtomId b = 0; b < lo.atom_count; ++b) counts[lo.parent_of[b]][lo.orbit_of[b]]++;
  std::vector<std::vector<int64_t>> out(up.orbit_count());
  auto orbits = up.atoms_by_orbit();
  for (size_t rho = 0; rho < orbits.size(); ++rho) out[rho] = counts[orbits[rho][0]];
  return out;
}

std::vector<AtomId> children_of(const Diagram& d, int32_t n, AtomId a) {
  const Level& lo = d.level(n + 1);
  std::vector<AtomId> out;
  for (AtomId b = 0; b < lo.atom_count; ++b)
    if (lo.parent_of[b] == a) out.push_back(b);
  return out;
}

// --- clopen sets ------------------------------------------------------------

ClopenSet make_clopen(int32_t level, std::vector<AtomId> atoms) {
  std::sort(atoms.begin(), atoms.end());
  atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
  return ClopenSet{level, std::move(atoms)};
}

static void check_set(const ClopenSet& c, const Diagram& d) {
  const Level& lv = d.level(c.level);
  for (AtomId a : c.atoms)
    if (a < 0 || a >= lv.atom_count)
      throw Error(Errc::structural, "clopen set atom out of range");
}

ClopenSet promote(const ClopenSet& c, const Diagram& d, int32_t m) {
  check_set(c, d);
  if (m < c.level) throw Error(Errc::structural, "promotion target shallower than set level");
  if (m >= d.depth()) throw Error(Errc::depth, "promotion beyond truncation depth");
  std::vector<char> in(d.levels[c.level].atom_count, 0);
  for (AtomId a : c.atoms) in[a] = 1;
  for (int32_t l = c.level + 1; l <= m; ++l) {
    const Level& lv = d.levels[l];
    std::vector<char> nxt(lv.atom_count, 0);
    for (AtomId b = 0; b < lv.atom_count; ++b) nxt[b] = in[lv.parent_of[b]];
    in.swap(nxt);
  }
  ClopenSet out{m, {}};
  for (AtomId a = 0; a < static_cast<AtomId>(in.size()); ++a)
    if (in[a]) out.atoms.push_back(a);
  return out;
}

CountVector count_vector(const ClopenSet& c, const Diagram& d, int32_t n) {
  ClopenSet p = promote(c, d, n);
  const Level& lv = d.levels[n];
  CountVector cv{n, std::vector<int64_t>(lv.orbit_count(), 0)};
  for (AtomId a : p.atoms) cv.counts[lv.orbit_of[a]]++;
  return cv;
}

bool check_equiv(const ClopenSet& a, const ClopenSet& b, const Diagram& d, int32_t n) {
  return count_vector(a, d, n) == count_vector(b, d, n);
}

std::optional<GroupElement>
find_witness_permutation(const ClopenSet& a, const ClopenSet& b, const Diagram& d, int32_t n) {
  if (!check_equiv(a, b, d, n)) return std::nullopt;
  ClopenSet pa = promote(a, d, n), pb = promote(b, d, n);
  const Level& lv = d.levels[n];
  GroupElement g{n, std::vector<AtomId>(lv.atom_count)};
  std::iota(g.perm.begin(), g.perm.end(), 0);
  ClopenSet only_a = set_minus(pa, pb), only_b = set_minus(pb, pa);
  // Pair the residuals orbit by orbit, in increasing atom order, as an
  // involution; everything else (including the common part) stays fixed.
  auto by_orbit = [&](const ClopenSet& s) {
    std::vector<std::vector<AtomId>> out(lv.orbit_count());
    for (AtomId x : s.atoms) out[lv.orbit_of[x]].push_back(x);
    return out;
  };
  auto oa = by_orbit(only_a), ob = by_orbit(only_b);
  for (int32_t o = 0; o < lv.orbit_count(); ++o) {
    for (size_t i = 0; i < oa[o].size(); ++i) {
      g.perm[oa[o][i]] = ob[o][i];
      g.perm[ob[o][i]] = oa[o][i];
    }
  }
  return g;
}

ClopenSet complement(const ClopenSet& c, const Diagram& d) {
  check_set(c, d);
  const Level& lv = d.level(c.level);
  std::vector<char> in(lv.atom_count, 0);
  for (AtomId a : c.atoms) in[a] = 1;
  ClopenSet out{c.level, {}};
  for (AtomId a = 0; a < lv.atom_count; ++a)
    if (!in[a]) out.atoms.push_back(a);
  return out;
}

ClopenSet set_union(const ClopenSet& a, const ClopenSet& b) {
  if (a.level != b.level) throw Error(Errc::structural, "set_union: level mismatch");
  ClopenSet out{a.level, {}};
  std::set_union(a.atoms.begin(), a.atoms.end(), b.atoms.begin(), b.atoms.end(),
                 std::back_inserter(out.atoms));
  return out;
}

ClopenSet set_minus(const ClopenSet& a, const ClopenSet& b) {
  if (a.level != b.level) throw Error(Errc::structural, "set_minus: level mismatch");
  ClopenSet out{a.level, {}};
  std::set_difference(a.atoms.begin(), a.atoms.end(), b.atoms.begin(), b.atoms.end(),
                      std::back_inserter(out.atoms));
  return out;
}

ClopenSet set_intersect(const ClopenSet& a, const ClopenSet& b) {
  if (a.level != b.level) throw Error(Errc::structural, "set_intersect: level mismatch");
  ClopenSet out{a.level, {}};
  std::set_intersection(a.atoms.begin(), a.atoms.end(), b.atoms.begin(), b.atoms.end(),
                        std::back_inserter(out.atoms));
  return out;
}

// --- tower operations -------------------------------------------------------

Diagram telescope(const Diagram& d, const std::vector<int32_t>& keep) {
  if (keep.empty() || keep.front() != 0)
    throw Error(Errc::structural, "telescope: kept levels must start at 0");
  for (size_t i = 0; i + 1 < keep.size(); ++i)
    if (keep[i] >= keep[i + 1])
      throw Error(Errc::structural, "telescope: kept levels must be strictly increasing");
  if (keep.back() >= d.depth()) throw Error(Errc::depth, "telescope: level beyond truncation");

  Diagram out;
  for (size_t i = 0; i < keep.size(); ++i) {
    Level lv = d.levels[keep[i]];
    if (i == 0) {
      lv.parent_of.clear();
    } else {
      // Compose parent maps across dropped levels.
      std::vector<AtomId> up(lv.atom_count);
      for (AtomId a = 0; a < lv.atom_count; ++a) up[a] = a;
      for (int32_t l = keep[i]; l > keep[i - 1]; --l)
        for (AtomId a = 0; a < lv.atom_count; ++a) up[a] = d.levels[l].parent_of[up[a]];
      lv.parent_of = std::move(up);
    }
    out.levels.push_back(std::move(lv));
  }
  return out;
}

// Renumber orbit classes contiguously in order of first appearance by atom index.
static std::vector<int32_t> canonical_orbits(const std::vector<int32_t>& cls) {
  std::map<int32_t, int32_t> relabel;
  std::vector<int32_t> out(cls.size());
  for (size_t a = 0; a < cls.size(); ++a) {
    auto it = relabel.find(cls[a]);
    if (it == relabel.end())
      it = relabel.emplace(cls[a], static_cast<int32_t>(relabel.size())).first;
    out[a] = it->second;
  }
  return out;
}

Diagram cut_orbit(const Diagram& d, int32_t n, int32_t orbit,
                  const std::vector<std::vector<AtomId>>& parts) {
  require_valid(d);
  const Level& lv = d.level(n);
  if (orbit < 0 || orbit >= lv.orbit_count())
    throw Error(Errc::cut, "cut_orbit: no such orbit");
  if (parts.size() < 2) throw Error(Errc::cut, "cut_orbit: need at least two parts");
  std::vector<int32_t> part_of(lv.atom_count, -1);
  int64_t covered = 0;
  for (size_t p = 0; p < parts.size(); ++p) {
    if (parts[p].empty()) throw Error(Errc::cut, "cut_orbit: empty part");
    for (AtomId a : parts[p]) {
      if (a < 0 || a >= lv.atom_count || lv.orbit_of[a] != orbit)
        throw Error(Errc::cut, "cut_orbit: part atom not in the orbit");
      if (part_of[a] != -1) throw Error(Errc::cut, "cut_orbit: parts overlap");
      part_of[a] = static_cast<int32_t>(p);
      ++covered;
    }
  }
  for (AtomId a = 0; a < lv.atom_count; ++a)
    if (lv.orbit_of[a] == orbit && part_of[a] == -1)
      throw Error(Errc::cut, "cut_orbit: parts do not cover the orbit");
  (void)covered;

  Diagram out = d;
  int32_t base = lv.orbit_count();
  // ref[a] = index of a's new orbit within its old orbit; nonzero entries are
  // the distinctions the cut introduced, and only those propagate downward.
  std::vector<int32_t> ref(lv.atom_count, 0);
  {
    std::vector<int32_t> cls = lv.orbit_of;
    for (AtomId a = 0; a < lv.atom_count; ++a)
      if (part_of[a] != -1) {
        cls[a] = base + part_of[a];
        ref[a] = part_of[a];
      }
    out.levels[n].orbit_of = canonical_orbits(cls);
  }
  // Downward: refine each orbit by the refinement index of the parent.
  for (int32_t l = n + 1; l < d.depth(); ++l) {
    const Level& cur = out.levels[l];
    std::map<std::pair<int32_t, int32_t>, int32_t> key;
    std::vector<int32_t> cls(cur.atom_count), nref(cur.atom_count);
    for (AtomId a = 0; a < cur.atom_count; ++a) {
      auto k = std::make_pair(cur.orbit_of[a], ref[cur.parent_of[a]]);
      auto it = key.find(k);
      if (it == key.end()) it = key.emplace(k, static_cast<int32_t>(key.size())).first;
      cls[a] = it->second;
    }
    // recompute refinement indices per old orbit, by first appearance
    {
      std::map<int32_t, std::map<int32_t, int32_t>> idx; // old orbit -> cls -> index
      for (AtomId a = 0; a < cur.atom_count; ++a) {
        auto& m = idx[cur.orbit_of[a]];
        auto it = m.find(cls[a]);
        if (it == m.end()) it = m.emplace(cls[a], static_cast<int32_t>(m.size())).first;
        nref[a] = it->second;
      }
    }
    out.levels[l].orbit_of = canonical_orbits(cls);
    ref = std::move(nref);
  }
  // Upward: refine each orbit by the profile of child counts into the level
  // below's new orbits, cascading toward the root.
  for (int32_t l = n - 1; l >= 0; --l) {
    const Level& cur = out.levels[l];
    const Level& lo = out.levels[l + 1];
    int32_t co = lo.orbit_count();
    std::vector<std::vector<int64_t>> profile(cur.atom_count, std::vector<int64_t>(co, 0));
    for (AtomId b = 0; b < lo.atom_count; ++b) profile[lo.parent_of[b]][lo.orbit_of[b]]++;
    std::map<std::pair<int32_t, std::vector<int64_t>>, int32_t> key;
    std::vector<int32_t> cls(cur.atom_count);
    for (AtomId a = 0; a < cur.atom_count; ++a) {
      auto k = std::make_pair(cur.orbit_of[a], profile[a]);
      auto it = key.find(k);
      if (it == key.end()) it = key.emplace(k, static_cast<int32_t>(key.size())).first;
      cls[a] = it->second;
    }
    bool changed = false;
    auto canon = canonical_orbits(cls);
    if (canon != cur.orbit_of) changed = true;
    out.levels[l].orbit_of = std::move(canon);
    if (!changed) break; // nothing refined here, so nothing can change above
  }
  return out;
}

GroupElement lift_element(const GroupElement& g, const Diagram& d) {
  const Level& up = d.level(g.level);
  const Level& lo = d.level(g.level + 1);
  if (static_cast<int32_t>(g.perm.size()) != up.atom_count)
    throw Error(Errc::structural, "lift_element: permutation size mismatch");
  for (AtomId a = 0; a < up.atom_count; ++a)
    if (up.orbit_of[a] != up.orbit_of[g.perm[a]])
      throw Error(Errc::structural, "lift_element: element does not preserve orbits");

  // children[a][tau] = children of a in child orbit tau, increasing order
  std::vector<std::vector<std::vector<AtomId>>> children(
      up.atom_count, std::vector<std::vector<AtomId>>(lo.orbit_count()));
  for (AtomId b = 0; b < lo.atom_count; ++b)
    children[lo.parent_of[b]][lo.orbit_of[b]].push_back(b);

  GroupElement out{g.level + 1, std::vector<AtomId>(lo.atom_count)};
  for (AtomId a = 0; a < up.atom_count; ++a) {
    AtomId a2 = g.perm[a];
    for (int32_t tau = 0; tau < lo.orbit_count(); ++tau) {
      const auto& src = children[a][tau];
      const auto& dst = children[a2][tau];
      // equal sizes by the fragment condition (a and g(a) share an orbit)
      for (size_t i = 0; i < src.size(); ++i) out.perm[src[i]] = dst[i];
    }
  }
  return out;
}

ClopenSet apply(const GroupElement& g, const ClopenSet& c, const Diagram& d) {
  ClopenSet p = promote(c, d, g.level);
  ClopenSet out{g.level, {}};
  for (AtomId a : p.atoms) out.atoms.push_back(g.perm[a]);
  std::sort(out.atoms.begin(), out.atoms.end());
  return out;
}

} // namespace cantor
