#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cantor {

// Error taxonomy shared across the library.  `structural` covers malformed
// inputs (bad indices, non-contiguous orbit ids, size mismatches), the rest
// are operation-specific failure modes that a caller may want to distinguish
// without string matching.
enum class Errc {
  structural,
  depth,        // operation needs levels beyond the truncation
  cut,          // invalid orbit cut request
  no_lift,      // no mark-preserving lift exists
  refusal,      // semi-decision: cannot certify (never a refutation)
  not_found,    // search exhausted without a witness
  step_failure, // back-and-forth step could not be completed
};

class Error : public std::runtime_error {
public:
  Error(Errc c, const std::string& msg) : std::runtime_error(msg), code(c) {}
  Errc code;
};

using AtomId = int32_t;

// One level of a tower of finite unit systems.  Atoms are 0..atom_count-1,
// orbit ids are contiguous from 0.  parent_of is empty exactly at level 0.
struct Level {
  int32_t atom_count = 0;
  std::vector<int32_t> orbit_of;
  std::vector<int32_t> parent_of;

  int32_t orbit_count() const;
  std::vector<std::vector<AtomId>> atoms_by_orbit() const;

  bool operator==(const Level&) const = default;
};

struct Diagram {
  std::vector<Level> levels;

  int32_t depth() const { return static_cast<int32_t>(levels.size()); }
  const Level& level(int32_t n) const;

  bool operator==(const Diagram&) const = default;
};

// Level-tagged set of atoms, kept sorted and duplicate-free.
struct ClopenSet {
  int32_t level = 0;
  std::vector<AtomId> atoms;

  bool operator==(const ClopenSet&) const = default;
};

// Per-orbit atom counts of a clopen set at a fixed level.
struct CountVector {
  int32_t level = 0;
  std::vector<int64_t> counts;

  bool operator==(const CountVector&) const = default;
};

// Orbit-preserving permutation of one level's atoms.
struct GroupElement {
  int32_t level = 0;
  std::vector<AtomId> perm;

  bool operator==(const GroupElement&) const = default;
};

struct Violation {
  enum class Kind { structural, fragment };
  Kind kind = Kind::structural;
  int32_t level = -1;
  std::string what;
};

struct ValidityReport {
  bool ok = true;
  std::vector<Violation> violations;
};

// --- structure --------------------------------------------------------------

// Full validation: structural checks first (throwing nothing; malformations
// are reported as structural violations), then the fragment condition: for
// each consecutive pair of levels and each child orbit, every atom of a given
// parent orbit has the same number of children in that orbit.
ValidityReport validate_diagram(const Diagram& d);

// Throws Errc::structural on malformed input instead of returning a report.
void require_valid(const Diagram& d);

// Per-atom child counts between levels n and n+1: result[parent_orbit][child_orbit].
// Requires the fragment condition to hold between the two levels.
std::vector<std::vector<int64_t>> child_count_matrix(const Diagram& d, int32_t n);

// Children of one atom at the next level, in increasing index order.
std::vector<AtomId> children_of(const Diagram& d, int32_t n, AtomId a);

// --- clopen sets ------------------------------------------------------------

ClopenSet make_clopen(int32_t level, std::vector<AtomId> atoms);

// Canonical promotion: replace each atom by all of its level-m descendants.
// m >= c.level; throws Errc::depth if m is beyond the truncation.
ClopenSet promote(const ClopenSet& c, const Diagram& d, int32_t m);

CountVector count_vector(const ClopenSet& c, const Diagram& d, int32_t n);

// Equality of per-orbit counts at level n, equivalent to the existence of an
// orbit-preserving permutation carrying one promotion onto the other.
bool check_equiv(const ClopenSet& a, const ClopenSet& b, const Diagram& d, int32_t n);

// Deterministic witness for check_equiv: the involution fixing the common
// part and pairing the residuals orbit-by-orbit in increasing atom order.
// nullopt when the count vectors differ.
std::optional<GroupElement>
find_witness_permutation(const ClopenSet& a, const ClopenSet& b, const Diagram& d, int32_t n);

ClopenSet complement(const ClopenSet& c, const Diagram& d);

ClopenSet set_union(const ClopenSet& a, const ClopenSet& b);
ClopenSet set_minus(const ClopenSet& a, const ClopenSet& b);
ClopenSet set_intersect(const ClopenSet& a, const ClopenSet& b);

// --- tower operations -------------------------------------------------------

// Restriction to the sub-tower of levels `keep` (strictly increasing,
// containing 0); parent maps are composed across dropped levels.
Diagram telescope(const Diagram& d, const std::vector<int32_t>& keep);

// Splits one orbit of level n into the given parts (a partition of its
// atoms).  The split propagates: deeper orbits are refined by the new orbit
// of the parent atom, and shallower orbits are refined by the profile of
// child counts into the new parts, so the result always validates.
Diagram cut_orbit(const Diagram& d, int32_t n, int32_t orbit,
                  const std::vector<std::vector<AtomId>>& parts);

// Canonical lift of an orbit-preserving permutation to the next level:
// children are matched block-by-block (per child orbit) in increasing index
// order, so the restriction of the lift to parents is the input element.
GroupElement lift_element(const GroupElement& g, const Diagram& d);

// Applies a permutation at level g.level to a set promoted to that level.
ClopenSet apply(const GroupElement& g, const ClopenSet& c, const Diagram& d);

} // namespace cantor
