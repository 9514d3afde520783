#pragma once

#include <gmpxx.h>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cantor/diagram.hpp"

namespace cantor {

// Input oracle for the pair-joining construction: a sequence of clopen-set
// pairs over the host, all with equal invariant-measure bounds.  The first
// pair must be non-equivalent (equal bounds, distinct count vectors at every
// checked level); later pairs must be equivalent, and the construction
// consumes an explicit permutation witness for each of them.
struct PairStream {
  std::vector<std::pair<ClopenSet, ClopenSet>> pairs;

  bool operator==(const PairStream&) const = default;
};

// One class of atoms in the quotient presentation of a refinement level.
// All atoms of a class sit inside atoms of the same parent class, with
// `per_parent` of them per parent atom, share one orbit, and have the same
// per-family count vector (sig_a, sig_b) at the level's host depth.  The
// distinguished pair atoms are singleton classes tagged by `role`.
struct SatClass {
  int32_t parent = -1;      // class id at the previous level, -1 at level 0
  mpz_class per_parent = 1; // atoms per parent atom
  int32_t orbit = 0;
  mpz_class sig_a, sig_b; // host count vector of one atom of the class
  int32_t role = 0;       // +1 distinguished left atom, -1 right, 0 bulk
  mpz_class count;        // total atoms in the class

  bool operator==(const SatClass&) const = default;
};

struct SaturationLevel {
  int64_t host_level = 0; // host depth at which the sigs are expressed
  std::vector<SatClass> classes;
  int32_t alpha = -1; // class id of the distinguished left atom
  int32_t beta = -1;  // class id of the distinguished right atom
  std::vector<int32_t> exceptional; // orbit ids of the two distinguished orbits
  mpz_class atom_total;             // number of atoms at this level

  bool operator==(const SaturationLevel&) const = default;
};

// A refinement tower over a two-family host: level 0 splits the space into
// the two seed sets and their complement; each later level refines the
// previous one so that every orbit other than the two distinguished ones is
// exactly balanced between the distinguished pair, and the distinguished
// orbits are rich in fragments of every coarser orbit.
struct SaturationTower {
  Diagram host;
  PairStream stream;
  std::vector<SaturationLevel> levels;

  bool operator==(const SaturationTower&) const = default;
};

// Host pattern for the construction: a single root, then two orbits per
// level whose child counts form a symmetric matrix [[c,d],[d,c]] with
// c - d == 1 and d >= 1 on every materialized level.  Throws Errc::refusal
// when the host does not fit the pattern.
void require_two_family_host(const Diagram& host);

// Stream admission: every pair has equal invariant-measure bounds (violation
// rejected with the two bound intervals in the message, Errc::refusal); the
// first pair is a mirror pair of non-equivalent sets with count vectors
// (a, b) / (b, a), a - b == 1; later pairs are equivalent with a consumable
// permutation witness.  Throws Errc::depth when fewer than `depth` pairs are
// supplied.
void validate_stream(const PairStream& s, const Diagram& host, int32_t depth);

// Builds the tower with `depth` levels (0..depth-1), consuming one stream
// pair per level.  `richness_override`, when positive, replaces the computed
// per-orbit fragment floor; the default floor exceeds
// (n+1) * atom_total * (imbalance + 2) at every step.
SaturationTower build_saturation_tower(const Diagram& host, const PairStream& s, int32_t depth,
                                       const mpz_class& richness_override = 0);

// Independent per-level checker for the seven construction invariants:
// seed shape, refinement with exact count-vector bookkeeping, balance of
// every non-distinguished orbit between the pair with consumed stream
// witnesses, persistent non-equivalence of the pair, nesting of the
// distinguished atoms, recomputed imbalance counters, and the fragment
// richness of the distinguished orbits.  Shares no code with the builder.
ValidityReport check_saturation_tower(const SaturationTower& t);

// Per-level accounting for the sequence of cross-level permutations: how
// many atoms are moved across their orbit, against the bound
// atom_total(n) * (imbalance + 2), and the worst measure those atoms can
// carry, against 1/(n+1).
struct SingularLedger {
  struct Row {
    mpz_class moved;        // atoms mapped outside their orbit at this level
    mpz_class moved_bound;  // allowed ceiling for `moved`
    mpq_class measure;      // exact worst-case measure of the moved atoms
    mpq_class allowed;      // ceiling for `measure`
    std::vector<int32_t> singular; // class ids of the moved atoms
  };
  std::vector<Row> rows;
};

// Derives the ledger from the tower.  Throws Errc::step_failure if either
// bound fails on any row: the construction itself guarantees both.
SingularLedger build_j_embeddings(const SaturationTower& t);

// Final assembly: the same tower with the two distinguished orbits joined on
// every level, the moved atoms as the marked core, and three certificates
// ("etale", "thinness", "relation-identity") evaluated exactly on classes.
// The thinness certificate re-derives the measure bound from the fragment
// richness of the distinguished orbits and fails when that richness is
// below the required floor, even if the exact measures happen to be small.
struct AssembledSaturation {
  SaturationTower lambda;
  std::vector<std::vector<int32_t>> singular; // per level, moved class ids
  ValidityReport report;
};

AssembledSaturation assemble_saturated(const SaturationTower& t, const SingularLedger& led);

nlohmann::json tower_to_json(const SaturationTower& t);
SaturationTower tower_from_json(const nlohmann::json& j);

} // namespace cantor
