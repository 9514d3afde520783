#include "cantor/krieger.hpp"

#include "cantor/measures.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace cantor {

namespace {

AtomId ancestor(const Diagram& d, int32_t from_level, AtomId a, int32_t to_level) {
  for (int32_t l = from_level; l > to_level; --l) a = d.levels[l].parent_of[a];
  return a;
}

// Per-orbit count, in the reference at its deepest level, of the
// interpretation of a set of side atoms.  This is the finite form of the
// shared class relation: two sets are ambiently equivalent iff their
// signatures agree.
std::vector<int64_t> signature(const AmbientContext& ctx, const SideInterpretation& itp,
                               int32_t level, const std::vector<AtomId>& atoms) {
  ClopenSet c{itp.ref_level[level], {}};
  for (AtomId a : atoms)
    c.atoms.insert(c.atoms.end(), itp.piece[level][a].begin(), itp.piece[level][a].end());
  std::sort(c.atoms.begin(), c.atoms.end());
  int32_t deep = ctx.reference.depth() - 1;
  return count_vector(c, ctx.reference, deep).counts;
}

// Oriented access to one side of the context.
struct Side {
  const Diagram& d;
  const Marking& m;
  const SideInterpretation& itp;
};

Side side_of(const AmbientContext& ctx, bool first) {
  return first ? Side{ctx.d1, ctx.m1, ctx.i1} : Side{ctx.d2, ctx.m2, ctx.i2};
}

bool has_marks_at(const Marking& m, int32_t level) {
  return level < static_cast<int32_t>(m.levels.size()) && !m.levels[level].marked.empty();
}

// Internal normal form of a CompatibleIso: which side is atomic, the two
// levels, and the labelling of the other side.
struct StepView {
  bool first_atomic;
  int32_t l1, l2;
  const std::vector<AtomId>* label; // on the non-atomic side
};

StepView view_of(const CompatibleIso& iso) {
  return {iso.dst_labeled, iso.src_level, iso.dst_level, &iso.phi};
}

// Class id (= atom of the atomic side) of an atom of either side.
int32_t cls_of(const StepView& v, bool first_side, AtomId a) {
  bool atomic = (first_side == v.first_atomic);
  return atomic ? a : (*v.label)[a];
}

void add_violation(ValidityReport& r, Violation::Kind k, int32_t level, std::string what) {
  r.ok = false;
  r.violations.push_back({k, level, std::move(what)});
}

} // namespace

AmbientContext identity_context(const Diagram& d, const Marking& m1, const Marking& m2) {
  require_valid(d);
  SideInterpretation itp;
  itp.ref_level.resize(d.depth());
  itp.piece.resize(d.depth());
  for (int32_t n = 0; n < d.depth(); ++n) {
    itp.ref_level[n] = n;
    itp.piece[n].resize(d.levels[n].atom_count);
    for (AtomId a = 0; a < d.levels[n].atom_count; ++a) itp.piece[n][a] = {a};
  }
  Marking f1 = m1, f2 = m2;
  f1.levels.resize(d.depth());
  f2.levels.resize(d.depth());
  return {d, d, d, std::move(f1), std::move(f2), itp, itp};
}

AmbientContext telescoped_context(const Diagram& reference, const std::vector<int32_t>& keep1,
                                  const std::vector<int32_t>& keep2) {
  require_valid(reference);
  auto make_side = [&](const std::vector<int32_t>& keep, Diagram& d, SideInterpretation& itp) {
    d = telescope(reference, keep);
    itp.ref_level = keep;
    itp.piece.resize(d.depth());
    for (int32_t n = 0; n < d.depth(); ++n) {
      itp.piece[n].resize(d.levels[n].atom_count);
      for (AtomId a = 0; a < d.levels[n].atom_count; ++a) itp.piece[n][a] = {a};
    }
  };
  AmbientContext ctx;
  ctx.reference = reference;
  SideInterpretation i1, i2;
  make_side(keep1, ctx.d1, i1);
  make_side(keep2, ctx.d2, i2);
  ctx.i1 = std::move(i1);
  ctx.i2 = std::move(i2);
  ctx.m1.levels.resize(ctx.d1.depth());
  ctx.m2.levels.resize(ctx.d2.depth());
  return ctx;
}

ValidityReport validate_ambient(const AmbientContext& ctx) {
  ValidityReport r;
  for (bool first : {true, false}) {
    Side s = side_of(ctx, first);
    const char* name = first ? "side 1" : "side 2";
    if (static_cast<int32_t>(s.itp.ref_level.size()) != s.d.depth() ||
        static_cast<int32_t>(s.itp.piece.size()) != s.d.depth()) {
      add_violation(r, Violation::Kind::structural, -1,
                    std::string(name) + ": interpretation depth mismatch");
      continue;
    }
    for (int32_t n = 0; n < s.d.depth(); ++n) {
      int32_t rl = s.itp.ref_level[n];
      if (rl < 0 || rl >= ctx.reference.depth()) {
        add_violation(r, Violation::Kind::structural, n,
                      std::string(name) + ": reference level out of range");
        continue;
      }
      if (static_cast<int32_t>(s.itp.piece[n].size()) != s.d.levels[n].atom_count) {
        add_violation(r, Violation::Kind::structural, n,
                      std::string(name) + ": one piece per atom required");
        continue;
      }
      // pieces must partition the reference level
      std::vector<AtomId> all;
      for (const auto& p : s.itp.piece[n]) all.insert(all.end(), p.begin(), p.end());
      std::sort(all.begin(), all.end());
      bool cover = static_cast<int32_t>(all.size()) == ctx.reference.levels[rl].atom_count;
      for (size_t i = 0; cover && i < all.size(); ++i) cover = all[i] == static_cast<AtomId>(i);
      if (!cover)
        add_violation(r, Violation::Kind::structural, n,
                      std::string(name) + ": pieces do not partition the reference level");
      // same-orbit atoms must be ambiently equivalent
      std::map<int32_t, std::vector<int64_t>> orbit_sig;
      for (AtomId a = 0; a < s.d.levels[n].atom_count; ++a) {
        auto sig = signature(ctx, s.itp, n, {a});
        auto [it, fresh] = orbit_sig.emplace(s.d.levels[n].orbit_of[a], sig);
        if (!fresh && it->second != sig)
          add_violation(r, Violation::Kind::fragment, n,
                        std::string(name) + ": atoms of one orbit have inequivalent interpretations");
      }
    }
  }
  return r;
}

AtomId TraceMap::forward(int32_t level, AtomId a) const {
  if (level < static_cast<int32_t>(pairs.size()))
    for (auto& [x, y] : pairs[level])
      if (x == a) return y;
  throw Error(Errc::structural, "trace map has no image for the given marked atom");
}

AtomId TraceMap::backward(int32_t level, AtomId b) const {
  if (level < static_cast<int32_t>(pairs.size()))
    for (auto& [x, y] : pairs[level])
      if (y == b) return x;
  throw Error(Errc::structural, "trace map has no preimage for the given marked atom");
}

ValidityReport validate_trace_map(const AmbientContext& ctx, const TraceMap& h) {
  ValidityReport r;
  int32_t depth = std::max(ctx.d1.depth(), ctx.d2.depth());
  for (int32_t n = 0; n < depth; ++n) {
    std::vector<AtomId> src, dst;
    if (n < static_cast<int32_t>(h.pairs.size()))
      for (auto& [x, y] : h.pairs[n]) {
        src.push_back(x);
        dst.push_back(y);
      }
    std::sort(src.begin(), src.end());
    std::sort(dst.begin(), dst.end());
    auto marked1 = n < ctx.d1.depth() && n < static_cast<int32_t>(ctx.m1.levels.size())
                       ? ctx.m1.levels[n].marked
                       : std::vector<AtomId>{};
    auto marked2 = n < ctx.d2.depth() && n < static_cast<int32_t>(ctx.m2.levels.size())
                       ? ctx.m2.levels[n].marked
                       : std::vector<AtomId>{};
    if (src != marked1 || dst != marked2 ||
        std::adjacent_find(src.begin(), src.end()) != src.end() ||
        std::adjacent_find(dst.begin(), dst.end()) != dst.end()) {
      add_violation(r, Violation::Kind::structural, n,
                    "trace map is not a bijection of the marked atoms");
      continue;
    }
    if (n == 0 || n >= static_cast<int32_t>(h.pairs.size())) continue;
    for (auto& [x, y] : h.pairs[n]) {
      AtomId px = ctx.d1.levels[n].parent_of[x];
      AtomId py = ctx.d2.levels[n].parent_of[y];
      if (h.forward(n - 1, px) != py)
        add_violation(r, Violation::Kind::structural, n, "trace map does not commute with parents");
    }
  }
  // K-orbit structure must transfer: same K-orbit iff images in same K-orbit.
  for (int32_t n = 0; n < static_cast<int32_t>(h.pairs.size()); ++n)
    for (auto& [x1, y1] : h.pairs[n])
      for (auto& [x2, y2] : h.pairs[n]) {
        bool same_src = ctx.m1.k_orbit_of(n, x1) == ctx.m1.k_orbit_of(n, x2);
        bool same_dst = ctx.m2.k_orbit_of(n, y1) == ctx.m2.k_orbit_of(n, y2);
        if (same_src != same_dst)
          add_violation(r, Violation::Kind::fragment, n,
                        "trace map does not conjugate the marked orbit structures");
      }
  return r;
}

namespace {

// The step engine.  `prev` == nullptr builds the starting iso matching the
// two root levels.  `advance_first` picks which side becomes atomic.
CompatibleIso advance(const AmbientContext& ctx, const TraceMap& h, const CompatibleIso* prev,
                      bool advance_first) {
  Side act = side_of(ctx, advance_first);
  Side pas = side_of(ctx, !advance_first);

  int32_t la_prev = -1, lp_prev = -1;
  bool act_was_atomic = true;
  StepView pv{true, -1, -1, nullptr};
  if (prev) {
    pv = view_of(*prev);
    la_prev = advance_first ? pv.l1 : pv.l2;
    lp_prev = advance_first ? pv.l2 : pv.l1;
    act_was_atomic = (pv.first_atomic == advance_first);
  }
  // a labelled side whose blocks are all singletons is already atomic in
  // substance, so the step must move to the next level to make progress
  bool effectively_atomic = act_was_atomic;
  if (prev && !act_was_atomic) {
    std::set<AtomId> values(prev->phi.begin(), prev->phi.end());
    effectively_atomic = values.size() == prev->phi.size();
  }
  int32_t la = prev ? (effectively_atomic ? la_prev + 1 : la_prev) : 0;
  if (la >= act.d.depth())
    throw Error(Errc::step_failure, "active tower exhausted before the requested depth");

  auto act_class = [&](AtomId x) {
    if (!prev) return 0;
    return cls_of(pv, advance_first, ancestor(act.d, la, x, la_prev));
  };
  // passive marked atoms are claimed by the active atom h sends onto them
  auto h_p2a = [&](int32_t level, AtomId y) {
    return advance_first ? h.backward(level, y) : h.forward(level, y);
  };

  const Level& alv = act.d.levels[la];
  bool needs_trace = has_marks_at(act.m, la);
  int32_t lp_min = std::max(prev ? lp_prev : 0, needs_trace ? la : 0);

  // orbit representatives on the active side: least atom, marked preferred
  auto orbits = alv.atoms_by_orbit();
  std::vector<AtomId> rep(orbits.size());
  for (size_t o = 0; o < orbits.size(); ++o) {
    rep[o] = orbits[o].front();
    for (AtomId x : orbits[o])
      if (act.m.is_marked(la, x)) {
        rep[o] = x;
        break;
      }
  }

  std::vector<std::vector<int64_t>> sig_act(alv.atom_count);
  for (AtomId x = 0; x < alv.atom_count; ++x) sig_act[x] = signature(ctx, act.itp, la, {x});

  std::string blocked = "no candidate level tried";
  for (int32_t lp = lp_min; lp < pas.d.depth(); ++lp) {
    const Level& plv = pas.d.levels[lp];
    std::vector<std::vector<int64_t>> sig_pas(plv.atom_count);
    for (AtomId y = 0; y < plv.atom_count; ++y) sig_pas[y] = signature(ctx, pas.itp, lp, {y});

    auto pas_class = [&](AtomId y) {
      if (!prev) return 0;
      return cls_of(pv, !advance_first, ancestor(pas.d, lp, y, lp_prev));
    };
    // forced marked passive atoms of each active atom, from the trace map
    std::vector<std::vector<AtomId>> forced(alv.atom_count);
    bool trace_ok = true;
    if (needs_trace) {
      for (AtomId y = 0; y < plv.atom_count && trace_ok; ++y) {
        if (!pas.m.is_marked(lp, y)) continue;
        AtomId up = ancestor(pas.d, lp, y, la);
        if (!pas.m.is_marked(la, up)) {
          trace_ok = false; // marked atom under an unmarked ancestor: no home
          break;
        }
        forced[h_p2a(la, up)].push_back(y);
      }
    } else if (has_marks_at(pas.m, lp)) {
      blocked = "passive marked atoms with no active counterpart";
      continue;
    }
    if (!trace_ok) {
      blocked = "marked structure not parent-closed on the passive side";
      continue;
    }

    std::vector<AtomId> owner(plv.atom_count, -1);
    using Shape = std::map<std::pair<int32_t, std::vector<int64_t>>, int64_t>;

    bool level_ok = true;
    for (size_t o = 0; o < orbits.size() && level_ok; ++o) {
      // representative first, then the rest in increasing order; every other
      // member copies the representative's per-(orbit, class) shape so that
      // same-orbit images stay swappable in the passive tower
      std::vector<AtomId> order{rep[o]};
      for (AtomId x : orbits[o])
        if (x != rep[o]) order.push_back(x);
      Shape rep_total;
      for (AtomId x : order) {
        std::vector<int64_t> need = sig_act[x];
        Shape mine;
        auto take = [&](AtomId y) {
          owner[y] = x;
          mine[{plv.orbit_of[y], sig_pas[y]}]++;
          for (size_t i = 0; i < need.size(); ++i) need[i] -= sig_pas[y][i];
        };
        for (AtomId y : forced[x]) {
          if (pas_class(y) != act_class(x)) {
            level_ok = false;
            break;
          }
          take(y);
        }
        if (!level_ok) break;
        if (x == rep[o]) {
          // greedy: least unmarked atoms of the right class that still fit
          for (AtomId y = 0; y < plv.atom_count; ++y) {
            if (owner[y] != -1 || pas.m.is_marked(lp, y)) continue;
            if (pas_class(y) != act_class(x)) continue;
            bool fits = true;
            for (size_t i = 0; i < need.size(); ++i)
              if (sig_pas[y][i] > need[i]) fits = false;
            if (fits) take(y);
          }
          rep_total = mine;
        } else {
          for (auto& [key, cnt] : mine)
            if (cnt > rep_total[key]) level_ok = false; // forced part over budget
          for (auto& [key, cnt] : rep_total) {
            int64_t left = cnt - mine[key];
            for (AtomId y = 0; y < plv.atom_count && left > 0; ++y) {
              if (owner[y] != -1 || pas.m.is_marked(lp, y)) continue;
              if (pas_class(y) != act_class(x)) continue;
              if (plv.orbit_of[y] != key.first || sig_pas[y] != key.second) continue;
              take(y);
              --left;
            }
            if (left > 0) level_ok = false;
          }
          if (!level_ok) break;
        }
        if (std::any_of(need.begin(), need.end(), [](int64_t v) { return v != 0; })) {
          level_ok = false;
          break;
        }
      }
      if (!level_ok) {
        std::ostringstream os;
        os << "active orbit " << o << " at level " << la
           << " cannot be realized at passive level " << lp;
        blocked = os.str();
      }
    }
    if (level_ok &&
        std::any_of(owner.begin(), owner.end(), [](AtomId v) { return v == -1; })) {
      blocked = "passive atoms left over after all images were placed";
      level_ok = false;
    }
    if (!level_ok) continue;

    CompatibleIso out;
    out.dst_labeled = advance_first;
    out.src_level = advance_first ? la : lp;
    out.dst_level = advance_first ? lp : la;
    out.phi = owner;
    for (AtomId x = 0; x < alv.atom_count; ++x)
      for (AtomId y : forced[x]) {
        if (advance_first)
          out.trace.emplace_back(x, y);
        else
          out.trace.emplace_back(y, x);
      }
    std::sort(out.trace.begin(), out.trace.end());
    return out;
  }
  throw Error(Errc::step_failure, blocked);
}

} // namespace

CompatibleIso seed_iso(const AmbientContext& ctx, const TraceMap& h) {
  return advance(ctx, h, nullptr, true);
}

CompatibleIso extend_iso_step(const AmbientContext& ctx, const TraceMap& h,
                              const CompatibleIso& iso, bool advance_first_side) {
  return advance(ctx, h, &iso, advance_first_side);
}

ValidityReport validate_compatible_iso(const AmbientContext& ctx, const TraceMap& h,
                                       const CompatibleIso& iso) {
  ValidityReport r;
  StepView v = view_of(iso);
  Side at = side_of(ctx, v.first_atomic);
  Side lb = side_of(ctx, !v.first_atomic);
  int32_t la = v.first_atomic ? v.l1 : v.l2;
  int32_t ll = v.first_atomic ? v.l2 : v.l1;
  if (la < 0 || la >= at.d.depth() || ll < 0 || ll >= lb.d.depth()) {
    add_violation(r, Violation::Kind::structural, -1, "iso levels out of range");
    return r;
  }
  const Level& alv = at.d.levels[la];
  const Level& llv = lb.d.levels[ll];
  if (static_cast<int32_t>(iso.phi.size()) != llv.atom_count) {
    add_violation(r, Violation::Kind::structural, ll, "phi must label every atom");
    return r;
  }
  std::vector<std::vector<AtomId>> block(alv.atom_count);
  for (AtomId y = 0; y < llv.atom_count; ++y) {
    if (iso.phi[y] < 0 || iso.phi[y] >= alv.atom_count) {
      add_violation(r, Violation::Kind::structural, ll, "phi label out of range");
      return r;
    }
    block[iso.phi[y]].push_back(y);
  }
  for (AtomId x = 0; x < alv.atom_count; ++x)
    if (block[x].empty())
      add_violation(r, Violation::Kind::structural, la, "an atom has an empty image");

  // ambient class preservation, atom by atom
  for (AtomId x = 0; x < alv.atom_count; ++x)
    if (!block[x].empty() &&
        signature(ctx, at.itp, la, {x}) != signature(ctx, lb.itp, ll, block[x]))
      add_violation(r, Violation::Kind::fragment, la,
                    "image of atom " + std::to_string(x) + " is not ambiently equivalent");

  // orbit conjugation: same-orbit atoms must have images swappable by the
  // labelled tower's group, i.e. equal per-orbit counts; when both images
  // meet the marked set, the swap must also carry marked part to marked
  // part, so the marked per-(orbit, K-orbit) profiles must agree too
  auto orbit_profile = [&](AtomId x) {
    std::map<int32_t, int64_t> p;
    for (AtomId y : block[x]) p[llv.orbit_of[y]]++;
    return p;
  };
  auto marked_profile = [&](AtomId x) {
    std::map<std::pair<int32_t, int32_t>, int64_t> p;
    for (AtomId y : block[x])
      if (auto ko = lb.m.k_orbit_of(ll, y)) p[{llv.orbit_of[y], *ko}]++;
    return p;
  };
  for (const auto& orbit : alv.atoms_by_orbit()) {
    for (size_t i = 0; i + 1 < orbit.size(); ++i)
      for (size_t j = i + 1; j < orbit.size(); ++j) {
        AtomId x = orbit[i], y = orbit[j];
        if (orbit_profile(x) != orbit_profile(y)) {
          add_violation(r, Violation::Kind::fragment, la,
                        "images of one orbit are not conjugate in the other tower");
          goto conjugation_done;
        }
        auto mx = marked_profile(x), my = marked_profile(y);
        if (!mx.empty() && !my.empty() && mx != my) {
          add_violation(r, Violation::Kind::fragment, la,
                        "a required swap of images cannot respect the marked set");
          goto conjugation_done;
        }
      }
  }
conjugation_done:;

  // exact trace equation: marked part of the image of x is the h-image of x
  std::vector<std::pair<AtomId, AtomId>> expected;
  for (AtomId x = 0; x < alv.atom_count; ++x) {
    std::vector<AtomId> want;
    if (at.m.is_marked(la, x)) {
      if (ll < la) {
        add_violation(r, Violation::Kind::structural, ll,
                      "labelled level too shallow to carry the marked trace");
        return r;
      }
      AtomId img;
      try {
        img = v.first_atomic ? h.forward(la, x) : h.backward(la, x);
      } catch (const Error&) {
        add_violation(r, Violation::Kind::structural, la, "trace map undefined on a marked atom");
        continue;
      }
      for (AtomId y : block[x])
        if (lb.m.is_marked(ll, y) && ancestor(lb.d, ll, y, la) == img) want.push_back(y);
    }
    std::vector<AtomId> got;
    for (AtomId y : block[x])
      if (lb.m.is_marked(ll, y)) got.push_back(y);
    if (got != want) {
      add_violation(r, Violation::Kind::fragment, la,
                    "marked part of the image of atom " + std::to_string(x) +
                        " differs from its trace image");
      continue;
    }
    for (AtomId y : want)
      expected.emplace_back(v.first_atomic ? x : y, v.first_atomic ? y : x);
  }
  std::sort(expected.begin(), expected.end());
  auto rec = iso.trace;
  std::sort(rec.begin(), rec.end());
  if (rec != expected)
    add_violation(r, Violation::Kind::structural, la,
                  "recorded trace pairs differ from the matched marked atoms");
  return r;
}

ValidityReport check_extension(const AmbientContext& ctx, const CompatibleIso& coarse,
                               const CompatibleIso& fine) {
  ValidityReport r;
  StepView vc = view_of(coarse), vf = view_of(fine);
  if (vf.l1 < vc.l1 || vf.l2 < vc.l2) {
    add_violation(r, Violation::Kind::structural, -1, "refining step moved to a shallower level");
    return r;
  }
  // the class of a fine atom's ancestor must match across the two sides
  std::map<int32_t, std::set<int32_t>> coarse_of; // fine class -> coarse classes met
  for (AtomId x = 0; x < ctx.d1.levels[vf.l1].atom_count; ++x)
    coarse_of[cls_of(vf, true, x)].insert(cls_of(vc, true, ancestor(ctx.d1, vf.l1, x, vc.l1)));
  for (AtomId y = 0; y < ctx.d2.levels[vf.l2].atom_count; ++y)
    coarse_of[cls_of(vf, false, y)].insert(cls_of(vc, false, ancestor(ctx.d2, vf.l2, y, vc.l2)));
  for (auto& [cls, met] : coarse_of)
    if (met.size() != 1)
      add_violation(r, Violation::Kind::structural, vf.l1,
                    "a refined block straddles blocks of the coarser step");
  return r;
}

ConjugatorWitness build_conjugator(const AmbientContext& ctx, const TraceMap& h, int32_t depth) {
  {
    ValidityReport a = validate_ambient(ctx);
    if (!a.ok) throw Error(Errc::structural, "ambient context invalid: " + a.violations[0].what);
    ValidityReport t = validate_trace_map(ctx, h);
    if (!t.ok) throw Error(Errc::structural, "trace map invalid: " + t.violations[0].what);
    for (bool first : {true, false}) {
      Side s = side_of(ctx, first);
      if (s.m.empty()) continue;
      ValidityReport mv = validate_marking(s.m, s.d);
      if (!mv.ok) throw Error(Errc::structural, "marking invalid: " + mv.violations[0].what);
      ThinnessResult th = thinness_certificate(s.m, s.d, mpq_class(1, 2));
      if (!th.certified_level)
        throw Error(Errc::refusal, "marking is not certified thin below 1/2");
    }
  }
  int32_t t1 = std::min(depth, ctx.d1.depth() - 1);
  int32_t t2 = std::min(depth, ctx.d2.depth() - 1);

  ConjugatorWitness w;
  w.steps.push_back(seed_iso(ctx, h));
  int32_t atomic1 = 0, atomic2 = -1; // deepest level at which each side was atomic
  bool fwd = false;                  // the seed was a forward step
  int32_t guard = 2 * (t1 + t2) + 8;
  while ((atomic1 < t1 || atomic2 < t2) && guard-- > 0) {
    if (fwd && atomic1 >= t1) fwd = false;
    if (!fwd && atomic2 >= t2) fwd = true;
    CompatibleIso next = extend_iso_step(ctx, h, w.steps.back(), fwd);
    (fwd ? atomic1 : atomic2) = fwd ? next.src_level : next.dst_level;
    w.steps.push_back(std::move(next));
    fwd = !fwd;
  }
  if (atomic1 < t1 || atomic2 < t2)
    throw Error(Errc::step_failure, "back-and-forth stalled before the requested depth");
  return w;
}

ValidityReport validate_witness(const AmbientContext& ctx, const TraceMap& h,
                                const ConjugatorWitness& w) {
  ValidityReport r = validate_ambient(ctx);
  ValidityReport t = validate_trace_map(ctx, h);
  r.ok = r.ok && t.ok;
  r.violations.insert(r.violations.end(), t.violations.begin(), t.violations.end());
  if (w.steps.empty()) {
    add_violation(r, Violation::Kind::structural, -1, "empty witness");
    return r;
  }
  for (size_t i = 0; i < w.steps.size(); ++i) {
    ValidityReport s = validate_compatible_iso(ctx, h, w.steps[i]);
    r.ok = r.ok && s.ok;
    r.violations.insert(r.violations.end(), s.violations.begin(), s.violations.end());
    if (i > 0) {
      ValidityReport e = check_extension(ctx, w.steps[i - 1], w.steps[i]);
      r.ok = r.ok && e.ok;
      r.violations.insert(r.violations.end(), e.violations.begin(), e.violations.end());
    }
  }
  return r;
}

nlohmann::json witness_to_json(const ConjugatorWitness& w) {
  nlohmann::json arr = nlohmann::json::array();
  for (const CompatibleIso& s : w.steps) {
    nlohmann::json step;
    step["src_level"] = s.src_level;
    step["dst_level"] = s.dst_level;
    step["atomic_side"] = s.dst_labeled ? 1 : 2;
    step["phi"] = s.phi;
    nlohmann::json tr = nlohmann::json::array();
    for (auto& [a, b] : s.trace) tr.push_back(nlohmann::json::array({a, b}));
    step["trace"] = tr;
    arr.push_back(std::move(step));
  }
  return arr;
}

} // namespace cantor
