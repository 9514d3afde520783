#pragma once

#include <optional>

#include "cantor/diagram.hpp"

namespace cantor {

// Marked atoms of one level together with their closed-set orbit ids
// ("K-orbits").  `marked` is sorted; `k_orbit` is aligned with it and uses
// contiguous ids from 0 per level.
struct MarkingLevel {
  std::vector<AtomId> marked;
  std::vector<int32_t> k_orbit;

  bool operator==(const MarkingLevel&) const = default;
};

// Per-level marked sets describing a closed subset K of the path space plus
// the orbit structure of the group restricted to K.
struct Marking {
  std::vector<MarkingLevel> levels;

  bool operator==(const Marking&) const = default;
  bool is_marked(int32_t level, AtomId a) const;
  // index into marked[], -1 if absent
  int32_t marked_index(int32_t level, AtomId a) const;
  std::optional<int32_t> k_orbit_of(int32_t level, AtomId a) const;
  bool empty() const;
};

// The tower K inherits: levels are the marked atoms (renumbered), orbits are
// the K-orbits, parents inherited from the host.  `atom_map[l][i]` is the
// host atom behind sub-atom i of level l.
struct SubDiagram {
  Diagram diagram;
  std::vector<std::vector<AtomId>> atom_map;

  bool operator==(const SubDiagram&) const = default;
};

// Checks, in order: one marking level per diagram level; marked atoms exist;
// parent of a marked atom is marked; every marked atom above the last level
// has a marked child; each K-orbit stays inside one diagram orbit; and the
// evenness condition: same-K-orbit atoms have identical counts of marked
// children in each child K-orbit.
ValidityReport validate_marking(const Marking& m, const Diagram& d);

// From raw per-level marked sets (parent-closed, marked children present),
// derives the coarsest K-orbit structure that passes validate_marking: a
// deepest-first partition refinement that starts from (diagram orbit  x
// marked) and splits by the profile of marked-child counts into the classes
// one level below.  The diagram itself is returned unchanged, so the input
// is trivially a telescoping of the output.  Idempotent.
std::pair<Diagram, Marking>
refine_to_K_compatible(const Diagram& d, const std::vector<std::vector<AtomId>>& raw_marked);

// Throws Errc::refusal on an empty marking.
SubDiagram extract_subdiagram(const Marking& m, const Diagram& d);

struct RealizeResult {
  enum class Status { found, premise_unmet, not_found };
  Status status = Status::not_found;
  ClopenSet witness;   // only meaningful when found
  std::string detail;  // diagnostic for the failure cases
};

// Finds the lexicographically least clopen set U' at the shallowest feasible
// level <= max_depth with: U' inside `container`, U' equivalent to `target`,
// and U' meeting the marked atoms exactly in `trace`.  The premise that the
// target's upper measure bound is strictly below the container's lower bound
// is checked internally and reported in the result.
RealizeResult realize_clopen_with_trace(const ClopenSet& target, const ClopenSet& trace,
                                        const ClopenSet& container, const Diagram& d,
                                        const Marking& m, int32_t max_depth);

// Lifts an orbit-preserving, mark-compatible element one level so that marked
// children map to marked children within matching K-orbits.  Throws
// Errc::no_lift (naming the obstructing atom/K-orbit) when impossible.
GroupElement lift_mark_preserving(const GroupElement& g, const Diagram& d, const Marking& m);

} // namespace cantor
