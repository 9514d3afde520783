#include "cantor/fixtures.hpp"

#include <random>

namespace cantor {

static void need_levels(int32_t levels) {
  if (levels < 1) throw Error(Errc::structural, "fixture needs at least one level");
}

Diagram odometer(int32_t levels) {
  need_levels(levels);
  Diagram d;
  for (int32_t n = 0; n < levels; ++n) {
    Level lv;
    lv.atom_count = 1 << n;
    lv.orbit_of.assign(lv.atom_count, 0);
    if (n > 0) {
      lv.parent_of.resize(lv.atom_count);
      for (AtomId a = 0; a < lv.atom_count; ++a) lv.parent_of[a] = a / 2;
    }
    d.levels.push_back(std::move(lv));
  }
  return d;
}

Diagram two_orbit(int32_t levels) {
  need_levels(levels);
  Diagram d;
  {
    Level lv;
    lv.atom_count = 2;
    lv.orbit_of = {0, 0};
    d.levels.push_back(std::move(lv));
  }
  for (int32_t n = 1; n < levels; ++n) {
    int32_t half = 1 << n; // atoms per family
    Level lv;
    lv.atom_count = 2 * half;
    lv.orbit_of.resize(lv.atom_count);
    lv.parent_of.resize(lv.atom_count);
    for (AtomId j = 0; j < half; ++j) {
      lv.orbit_of[j] = j;               // a-side
      lv.orbit_of[half + j] = j;        // matching b-side atom
      lv.parent_of[j] = j / 2;
      lv.parent_of[half + j] = (n == 1) ? 1 : (half / 2 + j / 2);
    }
    d.levels.push_back(std::move(lv));
  }
  return d;
}

Diagram gap(int32_t levels) {
  need_levels(levels);
  Diagram d;
  {
    Level lv;
    lv.atom_count = 1;
    lv.orbit_of = {0};
    d.levels.push_back(std::move(lv));
  }
  int64_t s = 1; // family size at the previous level (3^(n-2))
  for (int32_t n = 1; n < levels; ++n) {
    Level lv;
    if (n == 1) {
      lv.atom_count = 2;
      lv.orbit_of = {0, 1};
      lv.parent_of = {0, 0};
    } else {
      int64_t ns = 3 * s; // family size at this level
      lv.atom_count = static_cast<int32_t>(2 * ns);
      lv.orbit_of.resize(lv.atom_count);
      lv.parent_of.resize(lv.atom_count);
      for (int64_t j = 0; j < ns; ++j) {
        lv.orbit_of[j] = 0;
        lv.orbit_of[ns + j] = 1;
        // family A: two children per A-atom, then one per B-atom
        lv.parent_of[j] =
            static_cast<AtomId>(j < 2 * s ? j / 2 : s + (j - 2 * s));
        // family B: one child per A-atom, then two per B-atom
        lv.parent_of[ns + j] =
            static_cast<AtomId>(j < s ? j : s + (j - s) / 2);
      }
      s = ns;
    }
    d.levels.push_back(std::move(lv));
  }
  return d;
}

Diagram disconnected(int32_t levels) {
  need_levels(levels);
  Diagram d;
  for (int32_t n = 0; n < levels; ++n) {
    int32_t half = 1 << n;
    Level lv;
    lv.atom_count = 2 * half;
    lv.orbit_of.resize(lv.atom_count);
    for (AtomId a = 0; a < lv.atom_count; ++a) lv.orbit_of[a] = a < half ? 0 : 1;
    if (n > 0) {
      lv.parent_of.resize(lv.atom_count);
      for (AtomId j = 0; j < half; ++j) {
        lv.parent_of[j] = j / 2;
        lv.parent_of[half + j] = half / 2 + j / 2;
      }
    }
    d.levels.push_back(std::move(lv));
  }
  return d;
}

Diagram random_simple(int32_t levels, uint64_t seed) {
  need_levels(levels);
  std::mt19937_64 rng(seed);
  Diagram d;
  {
    Level lv;
    lv.atom_count = 1;
    lv.orbit_of = {0};
    d.levels.push_back(std::move(lv));
  }
  for (int32_t n = 1; n < levels; ++n) {
    const Level& up = d.levels[n - 1];
    int32_t po = up.orbit_count();
    bool big = up.atom_count > 200;
    int32_t co = big ? 1 : static_cast<int32_t>(rng() % 3) + 1;
    // per-atom counts per (parent orbit, child orbit); >= 1 keeps it simple
    std::vector<std::vector<int32_t>> cnt(po, std::vector<int32_t>(co));
    for (int32_t r = 0; r < po; ++r)
      for (int32_t t = 0; t < co; ++t) cnt[r][t] = big ? 1 : static_cast<int32_t>(rng() % 2) + 1;
    Level lv;
    for (AtomId a = 0; a < up.atom_count; ++a)
      for (int32_t t = 0; t < co; ++t)
        for (int32_t k = 0; k < cnt[up.orbit_of[a]][t]; ++k) {
          lv.orbit_of.push_back(t);
          lv.parent_of.push_back(a);
        }
    lv.atom_count = static_cast<int32_t>(lv.orbit_of.size());
    d.levels.push_back(std::move(lv));
  }
  return d;
}

} // namespace cantor
