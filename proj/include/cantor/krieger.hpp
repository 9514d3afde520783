#pragma once

#include <utility>

#include "cantor/diagram.hpp"
#include "cantor/marking.hpp"

#include <nlohmann/json.hpp>

namespace cantor {

// The two towers being conjugated live in one ambient space, played here by a
// reference diagram: every atom of either side is interpreted as a clopen set
// of the reference, and "A ~ B" between the sides means the interpretations
// are equivalent in the reference.
struct SideInterpretation {
  // ref_level[n] is the reference level at which level n of the side diagram
  // is expressed; piece[n][a] lists the reference atoms covered by atom a.
  std::vector<int32_t> ref_level;
  std::vector<std::vector<std::vector<AtomId>>> piece;
};

struct AmbientContext {
  Diagram reference;
  Diagram d1, d2;
  Marking m1, m2; // same shape as d1/d2; may have no marked atoms
  SideInterpretation i1, i2;
};

// Both sides are the same diagram, interpreted identically in itself.
AmbientContext identity_context(const Diagram& d, const Marking& m1, const Marking& m2);

// Each side is a telescoping of the reference; atoms are interpreted as
// themselves at the kept reference level.  Markings are empty.
AmbientContext telescoped_context(const Diagram& reference,
                                  const std::vector<int32_t>& keep1,
                                  const std::vector<int32_t>& keep2);

// Structural checks plus the standing hypothesis: atoms in one orbit of a
// side have equivalent interpretations, and each side level's interpretation
// partitions the reference level it lives at.
ValidityReport validate_ambient(const AmbientContext& ctx);

// Finite shadow of the homeomorphism h between the two marked sets: for each
// level n, a bijection between the marked atoms of d1 and of d2 at level n.
struct TraceMap {
  std::vector<std::vector<std::pair<AtomId, AtomId>>> pairs;

  // h (resp. h^-1) on one marked atom; throws Errc::structural when absent.
  AtomId forward(int32_t level, AtomId a) const;
  AtomId backward(int32_t level, AtomId b) const;
};

// Checks that the trace map is a levelwise bijection of marked atoms which is
// an isomorphism of the two marked sub-diagrams (orbits and parents agree).
ValidityReport validate_trace_map(const AmbientContext& ctx, const TraceMap& h);

// One step of the back-and-forth.  The atomic side's algebra is a full level
// of its diagram; the other side's algebra is the partition of its level
// `phi`-labelled by atoms of the atomic side.  Backward steps are stored
// inverted, so phi always labels d2 by d1 or d1 by d2 as dst_labeled says.
struct CompatibleIso {
  int32_t src_level = 0; // level in d1
  int32_t dst_level = 0; // level in d2
  bool dst_labeled = true; // true: phi[d2 atom] = d1 atom; false: phi[d1 atom] = d2 atom
  std::vector<AtomId> phi;
  std::vector<std::pair<AtomId, AtomId>> trace; // matched (d1 marked, d2 marked) pairs

  bool operator==(const CompatibleIso&) const = default;
};

// Independent validator: phi is a partition labelled by all atoms of the
// atomic side, every atom's image has an equivalent interpretation in the
// reference, atoms in one orbit have images swappable inside the other tower
// (equal per-orbit and per-marked-class counts), and the trace equation holds
// exactly: the marked part of the image of A is the h-image of the marked
// part of A.
ValidityReport validate_compatible_iso(const AmbientContext& ctx, const TraceMap& h,
                                       const CompatibleIso& iso);

// Coherence of two consecutive steps: `fine` restricted to the algebra of
// `coarse` equals `coarse`.
ValidityReport check_extension(const AmbientContext& ctx, const CompatibleIso& coarse,
                               const CompatibleIso& fine);

// Starting point of the back-and-forth: matches the two root levels.
CompatibleIso seed_iso(const AmbientContext& ctx, const TraceMap& h);

// One refinement step.  With advance_first_side the d1 algebra is refined to
// its next full level and images are rebuilt inside the old blocks on the d2
// side (possibly at a deeper d2 level); otherwise the roles are swapped.
// Per orbit of the refined side a representative block is built greedily
// (forced marked atoms from h, then lexicographically least unmarked atoms of
// each ambient class) and the remaining blocks copy its per-orbit shape.
// Throws Errc::step_failure naming the blocking orbit when no level of the
// passive tower can accommodate the images.
CompatibleIso extend_iso_step(const AmbientContext& ctx, const TraceMap& h,
                              const CompatibleIso& iso, bool advance_first_side);

struct ConjugatorWitness {
  std::vector<CompatibleIso> steps;
};

// Strictly alternating back-and-forth, d1 first, until both sides are atomic
// at level `depth` (or their truncation, whichever is shallower).  Preconds:
// ambient context and trace map valid, markings valid, and any nonempty
// marking thin somewhere below 1 (Errc::refusal otherwise).
ConjugatorWitness build_conjugator(const AmbientContext& ctx, const TraceMap& h, int32_t depth);

// Every step valid plus pairwise extension coherence.
ValidityReport validate_witness(const AmbientContext& ctx, const TraceMap& h,
                                const ConjugatorWitness& w);

nlohmann::json witness_to_json(const ConjugatorWitness& w);

} // namespace cantor
