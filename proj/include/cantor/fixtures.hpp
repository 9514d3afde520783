#pragma once

#include <cstdint>

#include "cantor/diagram.hpp"

namespace cantor {

// Binary odometer tower: level n has 2^n atoms in a single orbit,
// parent(a) = a / 2.
Diagram odometer(int32_t levels);

// Two-orbit fixture: level 0 is one orbit {a=0, b=1}; level n >= 1 has
// 2^n atoms over each of a and b, orbits pairing the matching children.
Diagram two_orbit(int32_t levels);

// Two-family simple diagram whose families have identical invariant-measure
// bounds at every level but are never equivalent: level 0 is a single atom,
// level n >= 1 has two orbits of size 3^(n-1); each family-A atom has two
// children in family A and one in family B, and symmetrically.
Diagram gap(int32_t levels);

// Two parallel towers with no interaction: doubles the odometer, one orbit
// per tower per level.  Not simple; the two towers carry disjoint measures.
Diagram disconnected(int32_t levels);

// Seeded valid diagram with a single orbit at level 0 and random (but
// fragment-consistent) branching; same seed, same diagram.
Diagram random_simple(int32_t levels, uint64_t seed);

} // namespace cantor
