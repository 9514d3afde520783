#include "cantor/marking.hpp"

#include <algorithm>
#include <map>

#include "cantor/measures.hpp"

namespace cantor {

bool Marking::is_marked(int32_t level, AtomId a) const {
  return marked_index(level, a) >= 0;
}

int32_t Marking::marked_index(int32_t level, AtomId a) const {
  if (level < 0 || level >= static_cast<int32_t>(levels.size())) return -1;
  const auto& v = levels[level].marked;
  auto it = std::lower_bound(v.begin(), v.end(), a);
  if (it == v.end() || *it != a) return -1;
  return static_cast<int32_t>(it - v.begin());
}

std::optional<int32_t> Marking::k_orbit_of(int32_t level, AtomId a) const {
  int32_t i = marked_index(level, a);
  if (i < 0) return std::nullopt;
  return levels[level].k_orbit[i];
}

bool Marking::empty() const {
  for (const auto& lv : levels)
    if (!lv.marked.empty()) return false;
  return true;
}

ValidityReport validate_marking(const Marking& m, const Diagram& d) {
  ValidityReport rep;
  auto bad = [&](int32_t lvl, Violation::Kind k, const std::string& what) {
    rep.ok = false;
    rep.violations.push_back({k, lvl, what});
  };
  if (static_cast<int32_t>(m.levels.size()) != d.depth()) {
    bad(-1, Violation::Kind::structural, "marking level count does not match the diagram");
    return rep;
  }
  for (int32_t n = 0; n < d.depth(); ++n) {
    const MarkingLevel& ml = m.levels[n];
    const Level& lv = d.levels[n];
    if (ml.marked.size() != ml.k_orbit.size()) {
      bad(n, Violation::Kind::structural, "marked/k_orbit size mismatch");
      return rep;
    }
    if (!std::is_sorted(ml.marked.begin(), ml.marked.end()) ||
        std::adjacent_find(ml.marked.begin(), ml.marked.end()) != ml.marked.end()) {
      bad(n, Violation::Kind::structural, "marked atoms must be sorted and unique");
      return rep;
    }
    for (AtomId a : ml.marked)
      if (a < 0 || a >= lv.atom_count) {
        bad(n, Violation::Kind::structural, "marked atom out of range");
        return rep;
      }
    // contiguous K-orbit ids
    int32_t mx = -1;
    for (int32_t k : ml.k_orbit) {
      if (k < 0) { bad(n, Violation::Kind::structural, "negative K-orbit id"); return rep; }
      mx = std::max(mx, k);
    }
    if (mx >= 0) {
      std::vector<char> seen(mx + 1, 0);
      for (int32_t k : ml.k_orbit) seen[k] = 1;
      if (std::find(seen.begin(), seen.end(), char(0)) != seen.end()) {
        bad(n, Violation::Kind::structural, "K-orbit ids are not contiguous");
        return rep;
      }
    }
  }
  for (int32_t n = 0; n < d.depth(); ++n) {
    const MarkingLevel& ml = m.levels[n];
    const Level& lv = d.levels[n];
    // parent of marked is marked
    if (n > 0)
      for (AtomId a : ml.marked)
        if (!m.is_marked(n - 1, lv.parent_of[a]))
          bad(n, Violation::Kind::structural,
              "marked atom " + std::to_string(a) + " has an unmarked parent");
    // marked atoms have a marked child (except at the bottom level)
    if (n + 1 < d.depth()) {
      std::vector<char> has_child(lv.atom_count, 0);
      for (AtomId b : m.levels[n + 1].marked)
        has_child[d.levels[n + 1].parent_of[b]] = 1;
      for (AtomId a : ml.marked)
        if (!has_child[a])
          bad(n, Violation::Kind::structural,
              "marked atom " + std::to_string(a) + " has no marked child");
    }
    // each K-orbit inside one diagram orbit
    std::map<int32_t, int32_t> k_home;
    for (size_t i = 0; i < ml.marked.size(); ++i) {
      auto [it, fresh] = k_home.emplace(ml.k_orbit[i], lv.orbit_of[ml.marked[i]]);
      if (!fresh && it->second != lv.orbit_of[ml.marked[i]])
        bad(n, Violation::Kind::structural,
            "K-orbit " + std::to_string(ml.k_orbit[i]) + " spans two diagram orbits");
    }
  }
  if (!rep.ok) return rep;
  // evenness: same-K-orbit atoms have equal marked-child counts per child K-orbit
  for (int32_t n = 0; n + 1 < d.depth(); ++n) {
    const MarkingLevel& ml = m.levels[n];
    const MarkingLevel& cl = m.levels[n + 1];
    int32_t child_ko = 0;
    for (int32_t k : cl.k_orbit) child_ko = std::max(child_ko, k + 1);
    // per marked atom: counts of marked children per child K-orbit
    std::map<AtomId, std::vector<int64_t>> prof;
    for (AtomId a : ml.marked) prof[a].assign(child_ko, 0);
    for (size_t i = 0; i < cl.marked.size(); ++i) {
      AtomId p = d.levels[n + 1].parent_of[cl.marked[i]];
      prof[p][cl.k_orbit[i]]++;
    }
    std::map<int32_t, std::vector<int64_t>> rep_prof;
    for (size_t i = 0; i < ml.marked.size(); ++i) {
      auto [it, fresh] = rep_prof.emplace(ml.k_orbit[i], prof[ml.marked[i]]);
      if (!fresh && it->second != prof[ml.marked[i]]) {
        bad(n, Violation::Kind::fragment,
            "K-orbit " + std::to_string(ml.k_orbit[i]) +
                ": unequal marked-child distributions");
        break;
      }
    }
  }
  return rep;
}

std::pair<Diagram, Marking>
refine_to_K_compatible(const Diagram& d, const std::vector<std::vector<AtomId>>& raw_marked) {
  require_valid(d);
  if (static_cast<int32_t>(raw_marked.size()) != d.depth())
    throw Error(Errc::structural, "raw marking level count does not match the diagram");
  Marking m;
  m.levels.resize(d.depth());
  for (int32_t n = 0; n < d.depth(); ++n) {
    m.levels[n].marked = raw_marked[n];
    std::sort(m.levels[n].marked.begin(), m.levels[n].marked.end());
    m.levels[n].marked.erase(
        std::unique(m.levels[n].marked.begin(), m.levels[n].marked.end()),
        m.levels[n].marked.end());
    for (AtomId a : m.levels[n].marked)
      if (a < 0 || a >= d.levels[n].atom_count)
        throw Error(Errc::structural, "raw marked atom out of range");
  }
  // sanity of the raw sets: parent-closed, marked child present
  for (int32_t n = 1; n < d.depth(); ++n)
    for (AtomId a : m.levels[n].marked)
      if (!m.is_marked(n - 1, d.levels[n].parent_of[a]))
        throw Error(Errc::structural, "raw marking is not parent-closed");
  for (int32_t n = 0; n + 1 < d.depth(); ++n) {
    std::vector<char> has_child(d.levels[n].atom_count, 0);
    for (AtomId b : m.levels[n + 1].marked) has_child[d.levels[n + 1].parent_of[b]] = 1;
    for (AtomId a : m.levels[n].marked)
      if (!has_child[a])
        throw Error(Errc::structural, "raw marking drops a marked branch");
  }
  // Deepest-first partition refinement.  At the bottom, classes are
  // (diagram orbit) restricted to marked atoms; above, split further by the
  // profile of marked-child counts into the classes one level down.
  for (int32_t n = d.depth() - 1; n >= 0; --n) {
    MarkingLevel& ml = m.levels[n];
    int32_t child_classes = 0;
    if (n + 1 < d.depth())
      for (int32_t k : m.levels[n + 1].k_orbit) child_classes = std::max(child_classes, k + 1);
    std::map<AtomId, std::vector<int64_t>> prof;
    for (AtomId a : ml.marked) prof[a].assign(child_classes, 0);
    if (n + 1 < d.depth()) {
      const MarkingLevel& cl = m.levels[n + 1];
      for (size_t i = 0; i < cl.marked.size(); ++i)
        prof[d.levels[n + 1].parent_of[cl.marked[i]]][cl.k_orbit[i]]++;
    }
    std::map<std::pair<int32_t, std::vector<int64_t>>, int32_t> ids;
    ml.k_orbit.resize(ml.marked.size());
    for (size_t i = 0; i < ml.marked.size(); ++i) {
      auto key = std::make_pair(d.levels[n].orbit_of[ml.marked[i]], prof[ml.marked[i]]);
      auto it = ids.find(key);
      if (it == ids.end()) it = ids.emplace(key, static_cast<int32_t>(ids.size())).first;
      ml.k_orbit[i] = it->second;
    }
  }
  return {d, m};
}

SubDiagram extract_subdiagram(const Marking& m, const Diagram& d) {
  bool any = false;
  for (const auto& lv : m.levels) any = any || !lv.marked.empty();
  if (!any) throw Error(Errc::refusal, "empty marking has no sub-diagram");
  if (static_cast<int32_t>(m.levels.size()) != d.depth())
    throw Error(Errc::structural, "marking does not match the diagram");
  SubDiagram out;
  for (int32_t n = 0; n < d.depth(); ++n) {
    const MarkingLevel& ml = m.levels[n];
    if (ml.marked.empty()) break; // marked levels are a prefix by parent-closure
    Level lv;
    lv.atom_count = static_cast<int32_t>(ml.marked.size());
    lv.orbit_of = ml.k_orbit;
    if (n > 0) {
      lv.parent_of.resize(lv.atom_count);
      for (int32_t i = 0; i < lv.atom_count; ++i) {
        AtomId host_parent = d.levels[n].parent_of[ml.marked[i]];
        int32_t pi = m.marked_index(n - 1, host_parent);
        if (pi < 0) throw Error(Errc::structural, "marking is not parent-closed");
        lv.parent_of[i] = pi;
      }
    }
    out.diagram.levels.push_back(std::move(lv));
    out.atom_map.push_back(ml.marked);
  }
  return out;
}

RealizeResult realize_clopen_with_trace(const ClopenSet& target, const ClopenSet& trace,
                                        const ClopenSet& container, const Diagram& d,
                                        const Marking& m, int32_t max_depth) {
  RealizeResult res;
  if (max_depth >= d.depth()) max_depth = d.depth() - 1;
  int32_t start = std::max({target.level, trace.level, container.level});
  bool premise = false;
  for (AtomId a : trace.atoms)
    if (!m.is_marked(trace.level, a)) {
      res.detail = "trace atom is not marked";
      return res;
    }
  for (int32_t n = start; n <= max_depth; ++n) {
    {
      BoundsResult bt = invariant_bounds(target, d, n);
      BoundsResult bc = invariant_bounds(container, d, n);
      if (bt.max < bc.min) premise = true;
    }
    CountVector need = count_vector(target, d, n);
    ClopenSet cont = promote(container, d, n);
    ClopenSet tr = promote(trace, d, n);
    const Level& lv = d.levels[n];
    const auto& marked = m.levels[n].marked;
    // required: promoted trace atoms that are marked; they must sit in the container
    std::vector<AtomId> required;
    std::set_intersection(tr.atoms.begin(), tr.atoms.end(), marked.begin(), marked.end(),
                          std::back_inserter(required));
    bool feasible = true;
    std::vector<char> in_cont(lv.atom_count, 0), is_marked(lv.atom_count, 0),
        is_req(lv.atom_count, 0);
    for (AtomId a : cont.atoms) in_cont[a] = 1;
    for (AtomId a : marked) is_marked[a] = 1;
    for (AtomId a : required) {
      is_req[a] = 1;
      if (!in_cont[a]) feasible = false;
    }
    if (!feasible) continue;
    std::vector<int64_t> have(lv.orbit_count(), 0);
    ClopenSet pick{n, {}};
    for (AtomId a : required) {
      have[lv.orbit_of[a]]++;
      pick.atoms.push_back(a);
    }
    for (int32_t o = 0; o < lv.orbit_count() && feasible; ++o)
      if (have[o] > need.counts[o]) feasible = false;
    if (!feasible) continue;
    // fill with the smallest unmarked container atoms per orbit
    for (AtomId a : cont.atoms) {
      if (is_marked[a] || is_req[a]) continue;
      int32_t o = lv.orbit_of[a];
      if (have[o] < need.counts[o]) {
        have[o]++;
        pick.atoms.push_back(a);
      }
    }
    if (have == need.counts) {
      std::sort(pick.atoms.begin(), pick.atoms.end());
      res.status = RealizeResult::Status::found;
      res.witness = std::move(pick);
      return res;
    }
  }
  res.status = premise ? RealizeResult::Status::not_found : RealizeResult::Status::premise_unmet;
  res.detail = premise ? "no realization within the depth budget"
                       : "measure-gap premise never held within the depth budget";
  return res;
}

GroupElement lift_mark_preserving(const GroupElement& g, const Diagram& d, const Marking& m) {
  const Level& up = d.level(g.level);
  const Level& lo = d.level(g.level + 1);
  if (static_cast<int32_t>(g.perm.size()) != up.atom_count)
    throw Error(Errc::structural, "lift: permutation size mismatch");
  for (AtomId a = 0; a < up.atom_count; ++a)
    if (up.orbit_of[a] != up.orbit_of[g.perm[a]])
      throw Error(Errc::structural, "lift: element does not preserve orbits");
  for (AtomId a = 0; a < up.atom_count; ++a)
    if (m.is_marked(g.level, a) && !m.is_marked(g.level, g.perm[a]))
      throw Error(Errc::no_lift,
                  "marked atom " + std::to_string(a) + " maps to an unmarked atom");

  // children grouped per (marked ? K-orbit : -1-orbit) within each diagram orbit
  struct Groups {
    // key: (diagram orbit, K-orbit or -1 for unmarked), values in index order
    std::map<std::pair<int32_t, int32_t>, std::vector<AtomId>> g;
  };
  std::vector<Groups> ch(up.atom_count);
  for (AtomId b = 0; b < lo.atom_count; ++b) {
    auto ko = m.k_orbit_of(g.level + 1, b);
    ch[lo.parent_of[b]].g[{lo.orbit_of[b], ko ? *ko : -1}].push_back(b);
  }

  GroupElement out{g.level + 1, std::vector<AtomId>(lo.atom_count)};
  for (AtomId a = 0; a < up.atom_count; ++a) {
    AtomId a2 = g.perm[a];
    auto ka = m.k_orbit_of(g.level, a), kb = m.k_orbit_of(g.level, a2);
    if (ka && kb && *ka == *kb) {
      // same K-orbit: the evenness condition aligns the groups exactly
      for (auto& [key, src] : ch[a].g) {
        auto it = ch[a2].g.find(key);
        if (it == ch[a2].g.end() || it->second.size() != src.size())
          throw Error(Errc::no_lift, "uneven marked children in K-orbit " +
                                         std::to_string(key.second) + " under atom " +
                                         std::to_string(a));
        for (size_t i = 0; i < src.size(); ++i) out.perm[src[i]] = it->second[i];
      }
    } else {
      // across K-orbits (or unmarked): match marked child groups within each
      // diagram orbit by (size, K-orbit id), unmarked children directly
      std::map<int32_t, std::vector<std::pair<std::pair<size_t, int32_t>, const std::vector<AtomId>*>>>
          by_orbit_a, by_orbit_b;
      for (auto& [key, v] : ch[a].g)
        by_orbit_a[key.first].push_back({{v.size(), key.second}, &v});
      for (auto& [key, v] : ch[a2].g)
        by_orbit_b[key.first].push_back({{v.size(), key.second}, &v});
      for (auto& [orb, la] : by_orbit_a) {
        auto itb = by_orbit_b.find(orb);
        if (itb == by_orbit_b.end())
          throw Error(Errc::no_lift, "no matching children in orbit " + std::to_string(orb));
        auto lb = itb->second;
        std::sort(la.begin(), la.end());
        std::sort(lb.begin(), lb.end());
        if (la.size() != lb.size())
          throw Error(Errc::no_lift,
                      "child group mismatch in orbit " + std::to_string(orb) +
                          " under atom " + std::to_string(a));
        for (size_t gi = 0; gi < la.size(); ++gi) {
          if (la[gi].first.first != lb[gi].first.first ||
              (la[gi].first.second < 0) != (lb[gi].first.second < 0))
            throw Error(Errc::no_lift,
                        "child group sizes differ in orbit " + std::to_string(orb) +
                            " under atom " + std::to_string(a));
          const auto& src = *la[gi].second;
          const auto& dst = *lb[gi].second;
          for (size_t i = 0; i < src.size(); ++i) out.perm[src[i]] = dst[i];
        }
      }
    }
  }
  return out;
}

} // namespace cantor
