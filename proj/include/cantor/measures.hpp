#pragma once

#include <gmpxx.h>
#include <optional>

#include "cantor/diagram.hpp"
#include "cantor/marking.hpp"

namespace cantor {

// Per-orbit atom masses for levels 0..depth-1 of a tower; a truncation of an
// invariant probability measure.
struct MeasureTruncation {
  std::vector<std::vector<mpq_class>> mass; // mass[n][orbit]
};

// Nonnegativity, per-level normalization (sum of orbit size * mass = 1) and
// consistency across levels via the fragment counts.
ValidityReport validate_measure(const MeasureTruncation& m, const Diagram& d);

struct BoundsResult {
  mpq_class min, max;
  int32_t depth = 0; // level at which the bounds were computed

  bool operator==(const BoundsResult&) const = default;
};

// Exact min/max of mu(c) over all measure truncations consistent to `depth`.
// Over a valid tower that feasible set is the simplex of level-`depth`
// per-orbit masses, so the bounds are attained at its vertices: the extreme
// values of count/orbit-size over the level's orbits.
BoundsResult invariant_bounds(const ClopenSet& c, const Diagram& d, int32_t depth);

struct ThinnessResult {
  // least level with bound <= epsilon; nullopt means "not certified within
  // the truncation" (never a refutation)
  std::optional<int32_t> certified_level;
  std::vector<mpq_class> bounds; // per level: max over orbits of marked/size
};

// Levelwise upper bound sup_mu mu(K_n) = max over orbits of the marked
// fraction, and the first level at which it drops to epsilon.
ThinnessResult thinness_certificate(const Marking& m, const Diagram& d, const mpq_class& epsilon);

struct SimplicityResult {
  bool certified = false;
  int32_t window = 0;
  // when not certified: a level pair with a starved orbit pair
  std::optional<int32_t> failing_level;
  std::string detail;
};

// Certifies that within `window` steps every deeper orbit contains a fragment
// of every shallower orbit (composed child counts all positive).  A negative
// answer is a refusal to certify, not a refutation.
SimplicityResult simplicity_certificate(const Diagram& d, int32_t window);

struct DominationResult {
  std::optional<int32_t> level;      // least level with strict domination
  std::optional<GroupElement> gamma; // witness: gamma(a) subset of b at that level
};

// Least n at which count_vector(a,n) is dominated orbitwise by
// count_vector(b,n), strictly on every orbit where a is present; searches up
// to max_depth.  With a witness permutation moving a inside b.
DominationResult gw_domination_level(const ClopenSet& a, const ClopenSet& b, const Diagram& d,
                                     int32_t max_depth);

struct PositivityResult {
  bool positive = false;
  mpq_class lower; // exact infimum of mu(c) at the certificate depth
  int32_t depth = 0;
};

// Positive lower bound certificate; not positive at this truncation depth is
// a refusal, not a refutation.
PositivityResult positivity_certificate(const ClopenSet& c, const Diagram& d, int32_t depth);

} // namespace cantor
