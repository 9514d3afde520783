#include "cantor/measures.hpp"

#include <algorithm>

namespace cantor {

static std::vector<int64_t> orbit_sizes(const Level& lv) {
  std::vector<int64_t> sz(lv.orbit_count(), 0);
  for (int32_t o : lv.orbit_of) sz[o]++;
  return sz;
}

ValidityReport validate_measure(const MeasureTruncation& m, const Diagram& d) {
  ValidityReport rep;
  auto bad = [&](int32_t lvl, Violation::Kind k, const std::string& what) {
    rep.ok = false;
    rep.violations.push_back({k, lvl, what});
  };
  if (m.mass.empty() || static_cast<int32_t>(m.mass.size()) > d.depth()) {
    bad(-1, Violation::Kind::structural, "measure levels do not match the diagram");
    return rep;
  }
  for (int32_t n = 0; n < static_cast<int32_t>(m.mass.size()); ++n) {
    const Level& lv = d.levels[n];
    if (static_cast<int32_t>(m.mass[n].size()) != lv.orbit_count()) {
      bad(n, Violation::Kind::structural, "mass vector size does not match orbit count");
      return rep;
    }
    mpq_class total = 0;
    auto sz = orbit_sizes(lv);
    for (int32_t o = 0; o < lv.orbit_count(); ++o) {
      if (m.mass[n][o] < 0) bad(n, Violation::Kind::structural, "negative atom mass");
      total += m.mass[n][o] * sz[o];
    }
    if (total != 1) bad(n, Violation::Kind::structural, "level masses do not sum to 1");
  }
  // consistency: mass at level n = sum of child-count * child mass
  for (int32_t n = 0; n + 1 < static_cast<int32_t>(m.mass.size()); ++n) {
    auto counts = child_count_matrix(d, n);
    for (size_t rho = 0; rho < counts.size(); ++rho) {
      mpq_class sum = 0;
      for (size_t tau = 0; tau < counts[rho].size(); ++tau)
        sum += mpq_class(static_cast<long>(counts[rho][tau])) * m.mass[n + 1][tau];
      if (sum != m.mass[n][rho])
        bad(n, Violation::Kind::fragment,
            "orbit " + std::to_string(rho) + " mass inconsistent with its fragments");
    }
  }
  return rep;
}

BoundsResult invariant_bounds(const ClopenSet& c, const Diagram& d, int32_t depth) {
  if (depth < c.level || depth >= d.depth())
    throw Error(Errc::depth, "invariant_bounds: depth outside the truncation");
  CountVector cv = count_vector(c, d, depth);
  auto sz = orbit_sizes(d.levels[depth]);
  BoundsResult out;
  out.depth = depth;
  bool first = true;
  for (size_t o = 0; o < sz.size(); ++o) {
    mpq_class v(static_cast<long>(cv.counts[o]), static_cast<long>(sz[o]));
    v.canonicalize();
    if (first) {
      out.min = out.max = v;
      first = false;
    } else {
      out.min = std::min(out.min, v);
      out.max = std::max(out.max, v);
    }
  }
  return out;
}

ThinnessResult thinness_certificate(const Marking& m, const Diagram& d,
                                    const mpq_class& epsilon) {
  ThinnessResult out;
  for (int32_t n = 0; n < static_cast<int32_t>(m.levels.size()) && n < d.depth(); ++n) {
    const Level& lv = d.levels[n];
    std::vector<int64_t> marked(lv.orbit_count(), 0);
    for (AtomId a : m.levels[n].marked) marked[lv.orbit_of[a]]++;
    auto sz = orbit_sizes(lv);
    mpq_class bound = 0;
    for (int32_t o = 0; o < lv.orbit_count(); ++o) {
      mpq_class v(static_cast<long>(marked[o]), static_cast<long>(sz[o]));
      v.canonicalize();
      bound = std::max(bound, v);
    }
    out.bounds.push_back(bound);
    if (!out.certified_level && bound <= epsilon) out.certified_level = n;
  }
  return out;
}

SimplicityResult simplicity_certificate(const Diagram& d, int32_t window) {
  SimplicityResult out;
  out.window = window;
  if (window < 1) throw Error(Errc::structural, "simplicity window must be at least 1");
  for (int32_t n = 0; n + 1 < d.depth(); ++n) {
    // composed per-atom counts from level-n orbits into level-(n+w) orbits
    std::vector<std::vector<int64_t>> comp; // [rho][tau]
    bool ok = false;
    for (int32_t w = 1; w <= window && n + w < d.depth(); ++w) {
      auto step = child_count_matrix(d, n + w - 1);
      if (w == 1) {
        comp = step;
      } else {
        std::vector<std::vector<int64_t>> next(
            comp.size(), std::vector<int64_t>(step[0].size(), 0));
        for (size_t r = 0; r < comp.size(); ++r)
          for (size_t mid = 0; mid < step.size(); ++mid)
            for (size_t t = 0; t < step[0].size(); ++t)
              next[r][t] += comp[r][mid] * step[mid][t];
        comp = std::move(next);
      }
      bool all = true;
      for (const auto& row : comp)
        for (int64_t v : row)
          if (v == 0) all = false;
      if (all) { ok = true; break; }
    }
    if (!ok) {
      out.certified = false;
      out.failing_level = n;
      out.detail = "no fragment of some level-" + std::to_string(n) +
                   " orbit within the window";
      return out;
    }
  }
  out.certified = true;
  return out;
}

DominationResult gw_domination_level(const ClopenSet& a, const ClopenSet& b, const Diagram& d,
                                     int32_t max_depth) {
  DominationResult out;
  if (max_depth >= d.depth()) max_depth = d.depth() - 1;
  int32_t start = std::max(a.level, b.level);
  if (a.atoms.empty()) { // empty set: vacuously dominated at the first level
    out.level = start;
    out.gamma = GroupElement{start, {}};
    auto& perm = out.gamma->perm;
    perm.resize(d.levels[start].atom_count);
    for (AtomId x = 0; x < static_cast<AtomId>(perm.size()); ++x) perm[x] = x;
    return out;
  }
  for (int32_t n = start; n <= max_depth; ++n) {
    CountVector ca = count_vector(a, d, n), cb = count_vector(b, d, n);
    bool ok = true;
    for (size_t o = 0; o < ca.counts.size(); ++o) {
      if (ca.counts[o] > cb.counts[o]) { ok = false; break; }
      if (ca.counts[o] > 0 && ca.counts[o] == cb.counts[o]) { ok = false; break; }
    }
    if (!ok) continue;
    // witness: move a onto the lexicographically first matching sub-family of b
    ClopenSet pb = promote(b, d, n);
    const Level& lv = d.levels[n];
    std::vector<int64_t> need = ca.counts;
    ClopenSet bsub{n, {}};
    for (AtomId x : pb.atoms)
      if (need[lv.orbit_of[x]] > 0) {
        bsub.atoms.push_back(x);
        need[lv.orbit_of[x]]--;
      }
    out.level = n;
    out.gamma = find_witness_permutation(a, bsub, d, n);
    return out;
  }
  return out;
}

PositivityResult positivity_certificate(const ClopenSet& c, const Diagram& d, int32_t depth) {
  BoundsResult b = invariant_bounds(c, d, depth);
  return PositivityResult{b.min > 0, b.min, depth};
}

} // namespace cantor
