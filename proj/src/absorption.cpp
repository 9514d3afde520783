#include "cantor/absorption.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "cantor/measures.hpp"

namespace cantor {
namespace {

struct UnionFind {
  std::vector<int32_t> up;
  explicit UnionFind(int32_t n) : up(n) {
    for (int32_t i = 0; i < n; ++i) up[i] = i;
  }
  int32_t find(int32_t a) {
    while (up[a] != a) a = up[a] = up[up[a]];
    return a;
  }
  void join(int32_t a, int32_t b) { up[find(a)] = find(b); }
  // contiguous ids by first appearance
  std::vector<int32_t> canonical() {
    std::vector<int32_t> out(up.size()), id(up.size(), -1);
    int32_t next = 0;
    for (size_t i = 0; i < up.size(); ++i) {
      int32_t r = find(static_cast<int32_t>(i));
      if (id[r] < 0) id[r] = next++;
      out[i] = id[r];
    }
    return out;
  }
};

std::vector<int32_t> canonicalize(const std::vector<int32_t>& v) {
  std::vector<int32_t> out(v.size());
  std::map<int32_t, int32_t> id;
  for (size_t i = 0; i < v.size(); ++i) {
    auto [it, fresh] = id.emplace(v[i], static_cast<int32_t>(id.size()));
    out[i] = it->second;
  }
  return out;
}

int32_t class_count(const std::vector<int32_t>& canon) {
  int32_t m = 0;
  for (int32_t c : canon) m = std::max(m, c + 1);
  return m;
}

} // namespace

// --- extension relations ----------------------------------------------------

ValidityReport validate_extension(const ExtensionRelation& e) {
  ValidityReport rep = validate_diagram(e.base);
  if (!rep.ok) return rep;
  if (e.marking.empty()) {
    if (!e.sigma_class.empty())
      rep.violations.push_back({Violation::Kind::structural, 0,
                               "class table given for an empty marked set"});
    rep.ok = rep.violations.empty();
    return rep;
  }
  ValidityReport mv = validate_marking(e.marking, e.base);
  if (!mv.ok) return mv;
  if (e.sigma_class.size() != e.base.levels.size()) {
    rep.violations.push_back({Violation::Kind::structural, 0,
                             "class table depth does not match the tower"});
    rep.ok = false;
    return rep;
  }
  SubDiagram sub = extract_subdiagram(e.marking, e.base);
  Diagram coarse = sub.diagram;
  for (int32_t n = 0; n < coarse.depth(); ++n) {
    int32_t orbits = coarse.levels[n].orbit_count();
    if (static_cast<int32_t>(e.sigma_class[n].size()) != orbits) {
      rep.violations.push_back({Violation::Kind::structural, n,
                               "class table row does not cover the marked orbits"});
      rep.ok = false;
      return rep;
    }
    std::vector<int32_t> canon = canonicalize(e.sigma_class[n]);
    for (auto& o : coarse.levels[n].orbit_of) o = canon[o];
  }
  ValidityReport cv = validate_diagram(coarse);
  for (auto& v : cv.violations)
    rep.violations.push_back({v.kind, v.level,
                             "coarsened marked sub-tower: " + v.what});
  rep.ok = rep.violations.empty();
  return rep;
}

MergedOrbits merged_orbits(const ExtensionRelation& e, int32_t n) {
  if (n < 0 || n >= e.base.depth()) throw Error(Errc::depth, "merged_orbits: level out of range");
  const Level& lv = e.base.levels[n];
  UnionFind uf(lv.atom_count);
  std::vector<AtomId> first_of_orbit(lv.orbit_count(), -1);
  for (AtomId a = 0; a < lv.atom_count; ++a) {
    int32_t o = lv.orbit_of[a];
    if (first_of_orbit[o] < 0)
      first_of_orbit[o] = a;
    else
      uf.join(a, first_of_orbit[o]);
  }
  if (!e.marking.empty() && n < static_cast<int32_t>(e.marking.levels.size())) {
    const MarkingLevel& ml = e.marking.levels[n];
    std::map<int32_t, AtomId> first_of_class;
    for (size_t i = 0; i < ml.marked.size(); ++i) {
      int32_t cls = e.sigma_class[n][ml.k_orbit[i]];
      auto [it, fresh] = first_of_class.emplace(cls, ml.marked[i]);
      if (!fresh) uf.join(ml.marked[i], it->second);
    }
  }
  return {n, uf.canonical()};
}

// --- counters ---------------------------------------------------------------

ValidityReport check_counters(const Counters& c) {
  ValidityReport rep;
  size_t L = c.h.size();
  auto fail = [&](int32_t level, const std::string& what) {
    rep.violations.push_back({Violation::Kind::fragment, level, what});
  };
  if (c.k.size() != L || c.host_orbits.size() != L || c.min_fragments.size() + 1 != L) {
    rep.ok = false;
    rep.violations.push_back({Violation::Kind::structural, 0, "counter vectors misaligned"});
    return rep;
  }
  for (size_t n = 1; n < L; ++n)
    if (c.host_orbits[n] <= c.h[n])
      fail(static_cast<int32_t>(n), "not enough host orbits");
  for (size_t n = 0; n + 1 < L; ++n) {
    if (c.min_fragments[n] <= (c.k[n] + 1) * c.h[n + 1])
      fail(static_cast<int32_t>(n), "not enough disjoint fragments per orbit pair");
    if (n >= 1 && c.k[n] < static_cast<long>(n) * c.h[n + 1])
      fail(static_cast<int32_t>(n), "host level too small for the thinness ledger");
  }
  rep.ok = rep.violations.empty();
  return rep;
}

namespace {

Counters concrete_counters(const Diagram& d, const std::vector<int64_t>& h) {
  Counters c;
  for (int64_t v : h) c.h.emplace_back(v);
  for (int32_t n = 0; n < d.depth(); ++n) {
    c.k.emplace_back(d.levels[n].atom_count);
    c.host_orbits.emplace_back(d.levels[n].orbit_count());
  }
  for (int32_t n = 0; n + 1 < d.depth(); ++n) {
    auto mat = child_count_matrix(d, n);
    int64_t mn = -1;
    for (auto& row : mat)
      for (int64_t v : row)
        if (mn < 0 || v < mn) mn = v;
    c.min_fragments.emplace_back(mn);
  }
  return c;
}

// Splits orbits at each level (largest first, even/odd positions) until the
// orbit count exceeds the target; rebuilt from scratch at every call site.
Diagram cut_until(Diagram d, const std::vector<int64_t>& h) {
  for (int32_t n = 1; n < d.depth() && n < static_cast<int32_t>(h.size()); ++n) {
    for (;;) {
      const Level& lv = d.levels[n];
      if (lv.orbit_count() > h[n]) break;
      auto by_orbit = lv.atoms_by_orbit();
      int32_t widest = 0;
      for (int32_t o = 1; o < static_cast<int32_t>(by_orbit.size()); ++o)
        if (by_orbit[o].size() > by_orbit[widest].size()) widest = o;
      if (by_orbit[widest].size() < 2)
        throw Error(Errc::cut, "cannot split singleton orbits further");
      std::vector<std::vector<AtomId>> parts(2);
      for (size_t i = 0; i < by_orbit[widest].size(); ++i)
        parts[i % 2].push_back(by_orbit[widest][i]);
      for (auto& p : parts) std::sort(p.begin(), p.end());
      d = cut_orbit(d, n, widest, parts);
    }
  }
  return d;
}

} // namespace

std::pair<Diagram, Counters> preprocess_host(const std::vector<int64_t>& h, const Diagram& x) {
  require_valid(x);
  if (h.empty() || h[0] != 1)
    throw Error(Errc::structural, "the small tower must start from a single atom");
  SimplicityResult simp = simplicity_certificate(x, std::max(1, x.depth() - 1));
  if (!simp.certified)
    throw Error(Errc::refusal, "host has no simplicity certificate: " + simp.detail);
  int32_t L = static_cast<int32_t>(h.size());
  std::vector<int32_t> keep = {0};
  for (int32_t n = 1; n < L; ++n) {
    bool placed = false;
    for (int32_t cand = keep.back() + 1; cand < x.depth(); ++cand) {
      std::vector<int32_t> trial = keep;
      trial.push_back(cand);
      Diagram d;
      try {
        d = cut_until(telescope(x, trial), h);
      } catch (const Error&) {
        continue;
      }
      // verify the prefix of the counters that is already determined
      std::vector<int64_t> hp(h.begin(), h.begin() + n + 1);
      Counters c = concrete_counters(d, hp);
      if (check_counters(c).ok) {
        keep = trial;
        placed = true;
        break;
      }
    }
    if (!placed)
      throw Error(Errc::depth, "host truncation too shallow for level " + std::to_string(n));
  }
  Diagram d = cut_until(telescope(x, keep), h);
  Counters c = concrete_counters(d, h);
  if (!check_counters(c).ok)
    throw Error(Errc::depth, "host truncation too shallow for the full counter set");
  return {d, c};
}

// --- the small side ---------------------------------------------------------

ValidityReport validate_y_system(const YSystem& y) {
  ValidityReport rep = validate_diagram(y.a);
  if (!rep.ok) return rep;
  if (y.delta_orbit.size() != y.a.levels.size()) {
    rep.violations.push_back({Violation::Kind::structural, 0,
                             "fine orbit table depth does not match the tower"});
    rep.ok = false;
    return rep;
  }
  Diagram fine = y.a;
  for (int32_t n = 0; n < y.a.depth(); ++n) {
    const Level& lv = y.a.levels[n];
    if (static_cast<int32_t>(y.delta_orbit[n].size()) != lv.atom_count) {
      rep.violations.push_back({Violation::Kind::structural, n,
                               "fine orbit row does not cover the atoms"});
      rep.ok = false;
      return rep;
    }
    std::vector<int32_t> canon = canonicalize(y.delta_orbit[n]);
    std::map<int32_t, int32_t> coarse_of;
    for (AtomId a = 0; a < lv.atom_count; ++a) {
      auto [it, fresh] = coarse_of.emplace(canon[a], lv.orbit_of[a]);
      if (!fresh && it->second != lv.orbit_of[a]) {
        rep.violations.push_back({Violation::Kind::structural, n,
                                 "fine orbit straddles two coarse orbits"});
        rep.ok = false;
        return rep;
      }
    }
    fine.levels[n].orbit_of = canon;
  }
  ValidityReport fv = validate_diagram(fine);
  for (auto& v : fv.violations)
    rep.violations.push_back({v.kind, v.level, "fine orbit structure: " + v.what});
  rep.ok = rep.violations.empty();
  return rep;
}

// --- host planning ----------------------------------------------------------

UniformHost plan_host(const std::vector<mpz_class>& h, const Diagram& pattern) {
  require_valid(pattern);
  if (pattern.depth() < 2 || pattern.levels[0].atom_count != 1)
    throw Error(Errc::refusal, "host pattern must start from a single atom with children");
  int64_t r = -1;
  for (int32_t n = 0; n < pattern.depth(); ++n) {
    if (pattern.levels[n].orbit_count() != 1)
      throw Error(Errc::refusal, "host pattern is not single-orbit self-similar");
    if (n + 1 < pattern.depth()) {
      auto mat = child_count_matrix(pattern, n);
      if (r < 0) r = mat[0][0];
      if (mat[0][0] != r)
        throw Error(Errc::refusal, "host pattern branching is not constant");
    }
  }
  if (r < 2) throw Error(Errc::refusal, "host pattern does not branch");
  if (h.empty() || h[0] != 1)
    throw Error(Errc::structural, "the small tower must start from a single atom");

  size_t L = h.size();
  UniformHost host;
  host.branching = r;
  host.base_level = {0};
  host.orbit_count = {1};
  host.atoms_per_orbit = {1};
  mpz_class k_prev = 1; // r^{t_{n-1}}
  int64_t t_prev = 0;
  for (size_t n = 1; n < L; ++n) {
    mpz_class m = 1;
    int64_t e = 0;
    while (m <= h[n]) {
      m *= r;
      ++e;
    }
    int64_t t = std::max(t_prev + 1, e);
    mpz_class kt;
    for (;; ++t) {
      mpz_ui_pow_ui(kt.get_mpz_t(), static_cast<unsigned long>(r),
                    static_cast<unsigned long>(t));
      mpz_class spacing = kt / k_prev;
      if (spacing / m <= (k_prev + 1) * h[n]) continue;
      if (n + 1 < L && kt < static_cast<long>(n) * h[n + 1]) continue;
      break;
    }
    host.base_level.push_back(t);
    host.orbit_count.push_back(m);
    host.atoms_per_orbit.push_back(kt / m);
    host.child_per_orbit.push_back((kt / k_prev) / m);
    k_prev = kt;
    t_prev = t;
  }
  return host;
}

Counters host_counters(const UniformHost& host, const std::vector<mpz_class>& h) {
  Counters c;
  c.h = h;
  for (size_t n = 0; n < host.orbit_count.size(); ++n) {
    c.host_orbits.push_back(host.orbit_count[n]);
    c.k.push_back(host.orbit_count[n] * host.atoms_per_orbit[n]);
  }
  c.min_fragments = host.child_per_orbit;
  return c;
}

// --- the class tower --------------------------------------------------------

std::vector<std::vector<mpz_class>> class_sizes(const SmallExtensionOutput& s) {
  std::vector<std::vector<mpz_class>> sizes(s.levels.size());
  for (size_t n = 0; n < s.levels.size(); ++n) {
    sizes[n].resize(s.levels[n].size());
    for (size_t i = 0; i < s.levels[n].size(); ++i) {
      const ClassDef& c = s.levels[n][i];
      sizes[n][i] = (n == 0) ? c.per_parent : c.per_parent * sizes[n - 1][c.parent];
    }
  }
  return sizes;
}

SmallExtensionOutput build_small_extension(const YSystem& y, const Diagram& host_pattern) {
  ValidityReport yv = validate_y_system(y);
  if (!yv.ok)
    throw Error(Errc::structural, "small tower invalid: " + yv.violations.front().what);
  if (y.a.levels[0].atom_count != 1)
    throw Error(Errc::structural, "the small tower must start from a single atom");

  int32_t L = y.a.depth();
  std::vector<mpz_class> h;
  for (auto& lv : y.a.levels) h.emplace_back(lv.atom_count);

  SmallExtensionOutput s;
  s.host = plan_host(h, host_pattern);
  s.counters = host_counters(s.host, h);
  if (!check_counters(s.counters).ok)
    throw Error(Errc::structural, "host schedule misses its own counters");

  s.levels.resize(L);
  s.levels[0] = {{-1, 1, 0, 0, 0}};
  std::vector<std::vector<int32_t>> img(L); // Y atom -> class index
  img[0] = {0};

  for (int32_t n = 0; n + 1 < L; ++n) {
    const std::vector<ClassDef>& C = s.levels[n];
    int32_t n_corbits = 0;
    for (auto& c : C) n_corbits = std::max(n_corbits, c.c_orbit + 1);
    std::vector<std::vector<int32_t>> cgroup(n_corbits);
    for (size_t i = 0; i < C.size(); ++i) cgroup[C[i].c_orbit].push_back(static_cast<int32_t>(i));

    const Level& ylv = y.a.levels[n + 1];
    std::vector<int32_t> delta = canonicalize(y.delta_orbit[n + 1]);
    int32_t n_delta = class_count(delta);
    int32_t n_sigma = ylv.orbit_count();
    int32_t M = static_cast<int32_t>(s.host.orbit_count[n + 1].get_si());
    mpz_class budget = s.host.child_per_orbit[n];

    // one host orbit per coarse orbit, fine orbit ids grouped under it
    std::vector<int32_t> sigma_of_delta(n_delta, -1);
    std::vector<std::vector<int32_t>> deltas_of_sigma(n_sigma);
    for (AtomId a = 0; a < ylv.atom_count; ++a)
      if (sigma_of_delta[delta[a]] < 0) {
        sigma_of_delta[delta[a]] = ylv.orbit_of[a];
        deltas_of_sigma[ylv.orbit_of[a]].push_back(delta[a]);
      }
    std::vector<int32_t> rho_of_delta(n_delta, -1);
    int32_t rho_next = 0;
    for (int32_t sg = 0; sg < n_sigma; ++sg)
      for (int32_t d : deltas_of_sigma[sg]) rho_of_delta[d] = rho_next++;

    std::vector<ClassDef> NC;
    img[n + 1].assign(ylv.atom_count, -1);
    for (AtomId a = 0; a < ylv.atom_count; ++a) {
      img[n + 1][a] = static_cast<int32_t>(NC.size());
      NC.push_back({img[n][ylv.parent_of[a]], 1, ylv.orbit_of[a], rho_of_delta[delta[a]], a});
    }

    // completion of the embedded fragments plus one fragment of every other
    // fine orbit, so every new fine orbit covers all previous ones
    std::vector<std::vector<AtomId>> atoms_of_delta(n_delta);
    for (AtomId a = 0; a < ylv.atom_count; ++a) atoms_of_delta[delta[a]].push_back(a);
    for (int32_t d = 0; d < n_delta; ++d) {
      int32_t tau = sigma_of_delta[d];
      int32_t rho = rho_of_delta[d];
      std::map<int32_t, std::map<int32_t, int64_t>> by_g; // g -> parent class -> image count
      for (AtomId a : atoms_of_delta[d]) {
        int32_t q = img[n][ylv.parent_of[a]];
        by_g[C[q].c_orbit][q] += 1;
      }
      for (auto& [g, per_q] : by_g) {
        int64_t F = 1;
        for (auto& [q, r] : per_q) F = std::max(F, r);
        for (int32_t q : cgroup[g]) {
          int64_t have = per_q.count(q) ? per_q[q] : 0;
          if (F - have > 0) NC.push_back({q, F - have, tau, rho, -1});
        }
      }
      for (int32_t g = 0; g < n_corbits; ++g) {
        if (by_g.count(g)) continue;
        for (int32_t q : cgroup[g]) NC.push_back({q, 1, tau, rho, -1});
      }
    }

    // host orbits untouched by the embedding become a single fine orbit
    std::vector<bool> tau_used(M, false);
    for (int32_t sg = 0; sg < n_sigma; ++sg) tau_used[sg] = true;
    for (int32_t tau = 0; tau < M; ++tau) {
      if (tau_used[tau]) continue;
      int32_t rho = rho_next++;
      for (size_t q = 0; q < C.size(); ++q)
        NC.push_back({static_cast<int32_t>(q), budget, tau, rho, -1});
    }

    // spend the remaining per-parent budget of the touched host orbits in
    // whole fragments, round-robin over that orbit's fine orbits
    std::map<std::tuple<int32_t, int32_t, int32_t>, int32_t> slot; // (q, tau, rho) -> class
    for (size_t i = 0; i < NC.size(); ++i)
      if (NC[i].image_of < 0)
        slot[{NC[i].parent, NC[i].b_orbit, NC[i].c_orbit}] = static_cast<int32_t>(i);
    for (int32_t sg = 0; sg < n_sigma; ++sg) {
      int32_t tau = sg;
      const std::vector<int32_t>& rhos = deltas_of_sigma[sg];
      for (int32_t g = 0; g < n_corbits; ++g) {
        // per-parent use is uniform within a fine orbit by construction
        mpz_class used = 0;
        int32_t q0 = cgroup[g][0];
        for (auto& c : NC)
          if (c.parent == q0 && c.b_orbit == tau) used += c.per_parent;
        mpz_class leftover = budget - used;
        if (leftover < 0)
          throw Error(Errc::structural, "fragment budget exceeded at level " + std::to_string(n));
        mpz_class base = leftover / static_cast<int32_t>(rhos.size());
        mpz_class rem = leftover % static_cast<int32_t>(rhos.size());
        for (size_t i = 0; i < rhos.size(); ++i) {
          mpz_class extra = base + ((static_cast<mpz_class>(i) < rem) ? 1 : 0);
          if (extra == 0) continue;
          int32_t rho = rho_of_delta[rhos[i]];
          for (int32_t q : cgroup[g]) {
            auto key = std::make_tuple(q, tau, rho);
            auto it = slot.find(key);
            if (it != slot.end()) {
              NC[it->second].per_parent += extra;
            } else {
              slot[key] = static_cast<int32_t>(NC.size());
              NC.push_back({q, extra, tau, rho, -1});
            }
          }
        }
      }
    }
    s.levels[n + 1] = std::move(NC);
  }
  return s;
}

// --- certificates -----------------------------------------------------------

namespace {

// u[rho][q] = atoms of fine orbit rho under each atom of level-n class q
std::map<std::pair<int32_t, int32_t>, mpz_class>
fragment_table(const std::vector<ClassDef>& next) {
  std::map<std::pair<int32_t, int32_t>, mpz_class> u;
  for (auto& c : next) u[{c.c_orbit, c.parent}] += c.per_parent;
  return u;
}

} // namespace

ValidityReport check_conditions(const YSystem& y, const SmallExtensionOutput& s) {
  ValidityReport rep;
  auto fail = [&](int32_t level, Violation::Kind k, const std::string& what) {
    rep.violations.push_back({k, level, what});
  };
  int32_t L = static_cast<int32_t>(s.levels.size());
  if (L != y.a.depth()) {
    rep.ok = false;
    rep.violations.push_back({Violation::Kind::structural, 0, "depth mismatch"});
    return rep;
  }
  std::vector<std::vector<int32_t>> img(L);
  for (int32_t n = 0; n < L; ++n) {
    const auto& C = s.levels[n];
    const Level& ylv = y.a.levels[n];
    std::vector<int32_t> delta = canonicalize(y.delta_orbit[n]);

    // the embedding is injective and total
    img[n].assign(ylv.atom_count, -1);
    for (size_t i = 0; i < C.size(); ++i) {
      if (C[i].image_of < 0) continue;
      if (C[i].image_of >= ylv.atom_count || img[n][C[i].image_of] >= 0 || C[i].per_parent != 1) {
        fail(n, Violation::Kind::structural, "embedded copy is not a bijection onto singletons");
        rep.ok = false;
        return rep;
      }
      img[n][C[i].image_of] = static_cast<int32_t>(i);
    }
    for (AtomId a = 0; a < ylv.atom_count; ++a)
      if (img[n][a] < 0) {
        fail(n, Violation::Kind::structural, "atom of the small tower has no embedded image");
        rep.ok = false;
        return rep;
      }

    // condition on orbit correspondence: host orbits mirror coarse orbits,
    // fine orbits mirror the fine partition
    std::map<int32_t, int32_t> b_of_sigma, c_of_delta;
    std::map<int32_t, int32_t> sigma_of_b, delta_of_c;
    for (AtomId a = 0; a < ylv.atom_count; ++a) {
      const ClassDef& ic = C[img[n][a]];
      auto [itb, fb] = b_of_sigma.emplace(ylv.orbit_of[a], ic.b_orbit);
      auto [irb, rb] = sigma_of_b.emplace(ic.b_orbit, ylv.orbit_of[a]);
      if (itb->second != ic.b_orbit || irb->second != ylv.orbit_of[a])
        fail(n, Violation::Kind::fragment, "host orbits do not mirror the coarse orbits");
      auto [itc, fc] = c_of_delta.emplace(delta[a], ic.c_orbit);
      auto [irc, rc] = delta_of_c.emplace(ic.c_orbit, delta[a]);
      if (itc->second != ic.c_orbit || irc->second != delta[a])
        fail(n, Violation::Kind::fragment, "fine orbits do not mirror the fine partition");
    }

    // every fine orbit inside one host orbit
    std::map<int32_t, int32_t> b_of_c;
    for (auto& c : C) {
      auto [it, fresh] = b_of_c.emplace(c.c_orbit, c.b_orbit);
      if (it->second != c.b_orbit)
        fail(n, Violation::Kind::fragment, "a fine orbit straddles two host orbits");
    }

    // host orbits away from the embedding are single fine orbits; orbits
    // meeting it have an embedded atom in every fine orbit
    std::map<int32_t, std::set<int32_t>> corbits_of_b;
    std::set<int32_t> c_with_image;
    for (auto& c : C) corbits_of_b[c.b_orbit].insert(c.c_orbit);
    for (auto& c : C)
      if (c.image_of >= 0) c_with_image.insert(c.c_orbit);
    for (auto& [b, cs] : corbits_of_b) {
      bool meets = sigma_of_b.count(b) > 0;
      if (!meets && cs.size() != 1)
        fail(n, Violation::Kind::fragment, "untouched host orbit splits into several fine orbits");
      if (meets)
        for (int32_t c : cs)
          if (!c_with_image.count(c))
            fail(n, Violation::Kind::fragment, "fine orbit of a touched host orbit misses the embedding");
    }

    // nesting of the embedded copies
    if (n >= 1)
      for (AtomId a = 0; a < ylv.atom_count; ++a)
        if (C[img[n][a]].parent != img[n - 1][ylv.parent_of[a]])
          fail(n, Violation::Kind::fragment, "embedded copy does not nest along parents");

    // refinement: the per-parent fragment count into each new fine orbit is
    // constant over the previous level's fine orbits, and the per-parent
    // budget against the host is exact
    if (n >= 1) {
      const auto& P = s.levels[n - 1];
      auto u = fragment_table(C);
      std::map<int32_t, std::map<int32_t, mpz_class>> per_g; // rho -> g -> count
      for (auto& [key, v] : u) {
        auto [rho, q] = key;
        auto [it, fresh] = per_g[rho].emplace(P[q].c_orbit, v);
        if (!fresh && it->second != v)
          fail(n, Violation::Kind::fragment, "fragment counts uneven across a previous fine orbit");
      }
      // exact budget per (parent class, host orbit)
      std::map<std::pair<int32_t, int32_t>, mpz_class> spent;
      for (auto& c : C) spent[{c.parent, c.b_orbit}] += c.per_parent;
      for (size_t q = 0; q < P.size(); ++q) {
        int32_t M = static_cast<int32_t>(s.host.orbit_count[n].get_si());
        for (int32_t b = 0; b < M; ++b) {
          auto it = spent.find({static_cast<int32_t>(q), b});
          mpz_class v = (it == spent.end()) ? mpz_class(0) : it->second;
          if (v != s.host.child_per_orbit[n - 1])
            fail(n, Violation::Kind::fragment, "per-parent budget against the host is not exact");
        }
      }
    }
  }
  rep.ok = rep.violations.empty();
  return rep;
}

ValidityReport check_c_simplicity(const SmallExtensionOutput& s) {
  ValidityReport rep;
  for (size_t n = 1; n < s.levels.size(); ++n) {
    const auto& P = s.levels[n - 1];
    int32_t n_rho = 0;
    for (auto& c : s.levels[n]) n_rho = std::max(n_rho, c.c_orbit + 1);
    auto u = fragment_table(s.levels[n]);
    for (int32_t rho = 0; rho < n_rho; ++rho)
      for (size_t q = 0; q < P.size(); ++q)
        if (!u.count({rho, static_cast<int32_t>(q)}))
          rep.violations.push_back({Violation::Kind::fragment, static_cast<int32_t>(n),
                                   "fine orbit misses a fragment of a previous class"});
  }
  rep.ok = rep.violations.empty();
  return rep;
}

ThinnessLedger extension_thinness(const SmallExtensionOutput& s) {
  ThinnessLedger led;
  auto sizes = class_sizes(s);
  led.bound.emplace_back(1);
  led.allowed.emplace_back(1);
  for (size_t n = 1; n < s.levels.size(); ++n) {
    std::map<int32_t, mpz_class> total, marked;
    for (size_t i = 0; i < s.levels[n].size(); ++i) {
      const ClassDef& c = s.levels[n][i];
      total[c.c_orbit] += sizes[n][i];
      if (c.image_of >= 0) marked[c.c_orbit] += sizes[n][i];
    }
    mpq_class worst = 0;
    for (auto& [rho, m] : marked) {
      mpq_class frac(m, total[rho]);
      frac.canonicalize();
      if (frac > worst) worst = frac;
    }
    mpz_class k_prev = s.counters.k[n - 1];
    mpq_class allowed(s.counters.h[n], k_prev);
    allowed.canonicalize();
    led.bound.push_back(worst);
    led.allowed.push_back(allowed);
    if (worst > allowed) led.ok = false;
  }
  return led;
}

ValidityReport check_etale_both(const SmallExtensionOutput& s) {
  ValidityReport rep;
  for (size_t n = 0; n + 1 < s.levels.size(); ++n) {
    const auto& C = s.levels[n];
    const auto& N = s.levels[n + 1];
    // child profile of each embedded atom, over fine and host orbits
    std::map<int32_t, std::vector<int32_t>> cprof, bprof;
    for (auto& c : N) {
      if (c.image_of < 0) continue;
      cprof[c.parent].push_back(c.c_orbit);
      bprof[c.parent].push_back(c.b_orbit);
    }
    for (auto& [q, v] : cprof) std::sort(v.begin(), v.end());
    for (auto& [q, v] : bprof) std::sort(v.begin(), v.end());
    std::map<int32_t, std::vector<int32_t>> first_c, first_b;
    for (size_t i = 0; i < C.size(); ++i) {
      if (C[i].image_of < 0) continue;
      int32_t qi = static_cast<int32_t>(i);
      auto [itc, fc] = first_c.emplace(C[i].c_orbit, cprof[qi]);
      if (!fc && itc->second != cprof[qi])
        rep.violations.push_back({Violation::Kind::fragment, static_cast<int32_t>(n),
                                 "marked children uneven across a fine orbit"});
      auto [itb, fb] = first_b.emplace(C[i].b_orbit, bprof[qi]);
      if (!fb && itb->second != bprof[qi])
        rep.violations.push_back({Violation::Kind::fragment, static_cast<int32_t>(n),
                                 "marked children uneven across a host orbit"});
    }
  }
  rep.ok = rep.violations.empty();
  return rep;
}

ValidityReport check_relation_identity(const SmallExtensionOutput& s) {
  ValidityReport rep;
  for (size_t n = 0; n < s.levels.size(); ++n) {
    const auto& C = s.levels[n];
    UnionFind uf(static_cast<int32_t>(C.size()));
    std::map<int32_t, int32_t> first_c, first_b;
    for (size_t i = 0; i < C.size(); ++i) {
      auto [it, fresh] = first_c.emplace(C[i].c_orbit, static_cast<int32_t>(i));
      if (!fresh) uf.join(static_cast<int32_t>(i), it->second);
      if (C[i].image_of >= 0) {
        auto [ib, fb] = first_b.emplace(C[i].b_orbit, static_cast<int32_t>(i));
        if (!fb) uf.join(static_cast<int32_t>(i), ib->second);
      }
    }
    std::vector<int32_t> merged = uf.canonical();
    std::vector<int32_t> borb(C.size());
    for (size_t i = 0; i < C.size(); ++i) borb[i] = C[i].b_orbit;
    if (canonicalize(merged) != canonicalize(borb)) {
      rep.violations.push_back({Violation::Kind::fragment, static_cast<int32_t>(n),
                               "merged fine orbits differ from the host orbits"});
      rep.ok = false;
    }
  }
  rep.ok = rep.violations.empty();
  return rep;
}

// --- transport --------------------------------------------------------------

ValidityReport transport_extension(const ExtensionRelation& e, const ExtensionRelation& target,
                                   const AmbientContext& ctx, const TraceMap& h,
                                   const ConjugatorWitness& w) {
  ValidityReport rep = validate_extension(e);
  if (!rep.ok) return rep;
  rep = validate_extension(target);
  if (!rep.ok) return rep;
  if (!(ctx.d1 == e.base) || !(ctx.d2 == target.base)) {
    rep.ok = false;
    rep.violations.push_back({Violation::Kind::structural, 0,
                             "ambient context does not match the two relations"});
    return rep;
  }
  rep = validate_witness(ctx, h, w);
  if (!rep.ok) return rep;
  for (size_t si = 0; si < w.steps.size(); ++si) {
    const CompatibleIso& iso = w.steps[si];
    // phi labels the non-atomic side with atoms of the atomic side
    bool first_atomic = iso.dst_labeled;
    int32_t la = first_atomic ? iso.src_level : iso.dst_level;
    int32_t lp = first_atomic ? iso.dst_level : iso.src_level;
    MergedOrbits ma = merged_orbits(first_atomic ? e : target, la);
    MergedOrbits mp = merged_orbits(first_atomic ? target : e, lp);
    // the class of the label must be constant on each labeled-side class and
    // induce a bijection between the two merged partitions
    std::map<int32_t, int32_t> induced;
    std::map<int32_t, int32_t> seen_atomic;
    bool bad = false;
    for (size_t a = 0; a < iso.phi.size(); ++a) {
      int32_t from = mp.class_of[a];
      int32_t to = ma.class_of[iso.phi[a]];
      auto [it, fresh] = induced.emplace(from, to);
      if (it->second != to) bad = true;
    }
    for (auto& [from, to] : induced) {
      auto [it, fresh] = seen_atomic.emplace(to, from);
      if (!fresh) bad = true;
    }
    int32_t n_atomic = 0;
    for (int32_t c : ma.class_of) n_atomic = std::max(n_atomic, c + 1);
    if (static_cast<int32_t>(seen_atomic.size()) != n_atomic) bad = true;
    if (bad)
      rep.violations.push_back({Violation::Kind::fragment, la,
                               "step " + std::to_string(si) +
                                   " does not carry merged orbits onto merged orbits"});
  }
  rep.ok = rep.violations.empty();
  return rep;
}

// --- the pipeline -----------------------------------------------------------

namespace {

std::vector<int64_t> partition_profile(const std::vector<int32_t>& class_of) {
  std::map<int32_t, int64_t> size;
  for (int32_t c : class_of) size[c] += 1;
  std::vector<int64_t> out;
  for (auto& [c, s] : size) out.push_back(s);
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace

OrbitEquivalenceWitness absorb(const Diagram& gamma, const Marking& k,
                               const std::vector<std::vector<int32_t>>& sigma_class,
                               int32_t depth, int32_t copies) {
  ExtensionRelation e{gamma, k, sigma_class};
  ValidityReport ev = validate_extension(e);
  if (!ev.ok)
    throw Error(Errc::structural, "invalid extension relation: " + ev.violations.front().what);
  if (depth < 1 || copies < 3)
    throw Error(Errc::structural, "need depth >= 1 and at least three copies");
  if (gamma.depth() < depth + 1)
    throw Error(Errc::depth, "input tower shallower than the requested depth");
  ThinnessResult thin = thinness_certificate(k, gamma, mpq_class(1, 2));
  if (!thin.certified_level)
    throw Error(Errc::refusal, "marked set has no thinness certificate");

  OrbitEquivalenceWitness w;
  w.depth = depth;
  w.copies = copies;
  w.validity_horizon = std::min(depth, copies - 1);

  bool trivial = true;
  for (auto& row : sigma_class) {
    std::set<int32_t> seen;
    for (int32_t c : row)
      if (!seen.insert(c).second) trivial = false;
  }
  for (int32_t n = 0; n <= depth; ++n) {
    w.profile_extended.push_back(partition_profile(merged_orbits(e, n).class_of));
    w.profile_plain.push_back(partition_profile(canonicalize(gamma.levels[n].orbit_of)));
  }
  if (trivial) {
    w.identity = true;
    w.certificates.push_back("identity");
    return w;
  }

  // the truncated tower: copy i of the marked sub-tower enters at level i+1,
  // later copies and the limit point stay lumped in a single tail atom
  SubDiagram sub = extract_subdiagram(k, gamma);
  int32_t L = depth + 1;
  YSystem y;
  y.a.levels.resize(L);
  y.delta_orbit.resize(L);
  std::vector<std::vector<int32_t>> copy_of(L); // per Y atom, -1 for the tail
  y.a.levels[0] = {1, {0}, {}};
  y.delta_orbit[0] = {0};
  copy_of[0] = {-1};
  std::vector<int32_t> tail_at(L, 0);
  for (int32_t n = 1; n < L; ++n) {
    int32_t P = std::min(n, copies);
    int32_t Pp = std::min(n - 1, copies);
    const Level& sl = sub.diagram.levels[n];
    int32_t n_k = sl.orbit_count();
    std::vector<int32_t> sig = canonicalize(sigma_class[n]);
    int32_t n_s = class_count(sig);
    Level& lv = y.a.levels[n];
    lv.atom_count = P * sl.atom_count + 1;
    lv.orbit_of.resize(lv.atom_count);
    lv.parent_of.resize(lv.atom_count);
    y.delta_orbit[n].resize(lv.atom_count);
    copy_of[n].assign(lv.atom_count, -1);
    for (int32_t i = 0; i < P; ++i) {
      for (AtomId j = 0; j < sl.atom_count; ++j) {
        AtomId a = i * sl.atom_count + j;
        copy_of[n][a] = i;
        lv.orbit_of[a] = (i == 0) ? sl.orbit_of[j] : n_k + (i - 1) * n_s + sig[sl.orbit_of[j]];
        y.delta_orbit[n][a] = i * n_k + sl.orbit_of[j];
        if (i < Pp)
          lv.parent_of[a] = i * sub.diagram.levels[n - 1].atom_count + sl.parent_of[j];
        else
          lv.parent_of[a] = tail_at[n - 1];
      }
    }
    AtomId tail = lv.atom_count - 1;
    tail_at[n] = tail;
    lv.orbit_of[tail] = n_k + std::max(0, P - 1) * n_s;
    y.delta_orbit[n][tail] = P * n_k;
    lv.parent_of[tail] = tail_at[n - 1];
    lv.orbit_of = canonicalize(lv.orbit_of);
  }
  ValidityReport yv = validate_y_system(y);
  if (!yv.ok)
    throw Error(Errc::step_failure, "truncated tower invalid: " + yv.violations.front().what);

  w.extension = build_small_extension(y, gamma);
  auto need = [&](const char* name, const ValidityReport& r) {
    if (!r.ok)
      throw Error(Errc::step_failure,
                  std::string(name) + " certificate failed: " + r.violations.front().what);
    w.certificates.push_back(name);
  };
  need("conditions", check_conditions(y, w.extension));
  need("simplicity", check_c_simplicity(w.extension));
  need("etale", check_etale_both(w.extension));
  need("relation-identity", check_relation_identity(w.extension));
  ThinnessLedger led = extension_thinness(w.extension);
  if (!led.ok) throw Error(Errc::step_failure, "thinness ledger certificate failed");
  w.certificates.push_back("thinness");

  // dropping the joins through copy 0 must not change the merged orbits:
  // fine orbits already absorb the first copy's structure
  {
    bool ok = true;
    for (int32_t n = 0; n < L && ok; ++n) {
      const auto& C = w.extension.levels[n];
      UnionFind uf(static_cast<int32_t>(C.size()));
      std::map<int32_t, int32_t> first_c, first_b;
      for (size_t i = 0; i < C.size(); ++i) {
        auto [it, fresh] = first_c.emplace(C[i].c_orbit, static_cast<int32_t>(i));
        if (!fresh) uf.join(static_cast<int32_t>(i), it->second);
        if (C[i].image_of >= 0 && copy_of[n][C[i].image_of] >= 1) {
          auto [ib, fb] = first_b.emplace(C[i].b_orbit, static_cast<int32_t>(i));
          if (!fb) uf.join(static_cast<int32_t>(i), ib->second);
        }
      }
      std::vector<int32_t> borb(C.size());
      for (size_t i = 0; i < C.size(); ++i) borb[i] = C[i].b_orbit;
      ok = canonicalize(uf.canonical()) == canonicalize(borb);
    }
    if (!ok) throw Error(Errc::step_failure, "first-copy redundancy certificate failed");
    w.certificates.push_back("copy0-redundancy");
  }

  // the copy shift: consecutive copies carry identical marked structure with
  // identical class tables, up to the validity horizon
  {
    bool ok = true;
    for (int32_t n = 1; n <= w.validity_horizon && ok; ++n) {
      int32_t P = std::min(n, copies);
      const Level& sl = sub.diagram.levels[n];
      for (int32_t i = 0; i + 1 < P && ok; ++i)
        for (AtomId j = 0; j < sl.atom_count && ok; ++j) {
          AtomId a = i * sl.atom_count + j, b = (i + 1) * sl.atom_count + j;
          std::vector<int32_t> da = canonicalize(y.delta_orbit[n]);
          ok = (da[a] - da[i * sl.atom_count]) == (da[b] - da[(i + 1) * sl.atom_count]);
        }
    }
    if (!ok) throw Error(Errc::step_failure, "copy shift certificate failed");
    w.certificates.push_back("copy-shift");
  }
  return w;
}

nlohmann::json witness_to_json(const OrbitEquivalenceWitness& w) {
  nlohmann::json j;
  j["identity"] = w.identity;
  j["depth"] = w.depth;
  j["copies"] = w.copies;
  j["validity_horizon"] = w.validity_horizon;
  j["certificates"] = w.certificates;
  j["profile_extended"] = w.profile_extended;
  j["profile_plain"] = w.profile_plain;
  if (!w.identity) {
    nlohmann::json host;
    host["branching"] = w.extension.host.branching;
    host["base_level"] = w.extension.host.base_level;
    auto strs = [](const std::vector<mpz_class>& v) {
      std::vector<std::string> out;
      for (auto& x : v) out.push_back(x.get_str());
      return out;
    };
    host["orbit_count"] = strs(w.extension.host.orbit_count);
    host["atoms_per_orbit"] = strs(w.extension.host.atoms_per_orbit);
    host["child_per_orbit"] = strs(w.extension.host.child_per_orbit);
    j["host"] = host;
    nlohmann::json levels = nlohmann::json::array();
    for (auto& lv : w.extension.levels) {
      nlohmann::json cl = nlohmann::json::array();
      for (auto& c : lv)
        cl.push_back({{"parent", c.parent},
                      {"per_parent", c.per_parent.get_str()},
                      {"b_orbit", c.b_orbit},
                      {"c_orbit", c.c_orbit},
                      {"image_of", c.image_of}});
      levels.push_back(cl);
    }
    j["levels"] = levels;
  }
  return j;
}

} // namespace cantor
