#pragma once

#include <gmpxx.h>

#include "cantor/diagram.hpp"
#include "cantor/krieger.hpp"
#include "cantor/marking.hpp"

namespace cantor {

// R_base(K, Sigma): the orbit relation of `base` extended by joining orbits
// through marked atoms whose K-orbits fall in a common Sigma class.
struct ExtensionRelation {
  Diagram base;
  Marking marking;
  // sigma_class[n][k] = Sigma class of K-orbit k at level n; must coarsen the
  // K-orbit partition into a structure that still satisfies the fragment
  // condition on the marked sub-tower
  std::vector<std::vector<int32_t>> sigma_class;
};

ValidityReport validate_extension(const ExtensionRelation& e);

struct MergedOrbits {
  int32_t level = 0;
  std::vector<int32_t> class_of; // per atom, ids contiguous by first appearance

  bool operator==(const MergedOrbits&) const = default;
};

// Union-find closure: orbits joined through Sigma-related marked atoms.
MergedOrbits merged_orbits(const ExtensionRelation& e, int32_t n);

// Cardinality bookkeeping of a host tower against a small tower's per-level
// atom counts h_n: more than h_n orbits, every next-level orbit holds more
// than (k_n+1)h_{n+1} disjoint fragments of every orbit, and k_n >= n h_{n+1}.
struct Counters {
  std::vector<mpz_class> h;             // atoms of the small tower
  std::vector<mpz_class> k;             // atoms of the host
  std::vector<mpz_class> host_orbits;   // orbits of the host
  std::vector<mpz_class> min_fragments; // between n and n+1, worst orbit pair
};

ValidityReport check_counters(const Counters& c);

// Concretely telescopes and residue-cuts x until the counters hold against h.
// Deterministic; throws Errc::depth when x is too shallow and Errc::refusal
// when x has no simplicity certificate.
std::pair<Diagram, Counters> preprocess_host(const std::vector<int64_t>& h, const Diagram& x);

// The small side: a tower whose diagram orbits are the coarse (Sigma) orbit
// partition, refined levelwise by delta_orbit (the Delta orbits).
struct YSystem {
  Diagram a;
  std::vector<std::vector<int32_t>> delta_orbit;
};

ValidityReport validate_y_system(const YSystem& y);

// The counters force inter-level growth that cannot be materialized atom by
// atom, so the host is kept in quotient form: at level n it has orbit_count
// equal orbits of atoms_per_orbit atoms each, and every atom has exactly
// child_per_orbit children in every orbit one level down.  Such a host is
// realized by telescoping and residue-cutting a self-similar pattern.
struct UniformHost {
  int64_t branching = 2;                  // children per atom of the pattern
  std::vector<int64_t> base_level;        // pattern level realizing level n
  std::vector<mpz_class> orbit_count;
  std::vector<mpz_class> atoms_per_orbit;
  std::vector<mpz_class> child_per_orbit; // size depth-1
};

// Deterministic schedule meeting the counters for the given h; the pattern
// supplies the branching factor and must be single-orbit self-similar.
UniformHost plan_host(const std::vector<mpz_class>& h, const Diagram& pattern);

Counters host_counters(const UniformHost& host, const std::vector<mpz_class>& h);

// One class of interchangeable atoms of the built tower: same parent class,
// same host orbit (b_orbit), same fine orbit (c_orbit), same count under
// every atom of the parent class.  image_of tags the singleton classes that
// carry the embedded copy of the small tower.
struct ClassDef {
  int32_t parent = -1;
  mpz_class per_parent = 1;
  int32_t b_orbit = 0;
  int32_t c_orbit = 0;
  int32_t image_of = -1;
};

struct SmallExtensionOutput {
  UniformHost host;
  std::vector<std::vector<ClassDef>> levels;
  Counters counters;
};

// Atom count of each class (per_parent compounded along the parent chain).
std::vector<std::vector<mpz_class>> class_sizes(const SmallExtensionOutput& s);

// The small-extension construction: embeds y into the host so that host
// orbits mirror the coarse orbits, fine orbits mirror the delta orbits, and
// every fine orbit picks up a fragment of every previous-level fine orbit.
SmallExtensionOutput build_small_extension(const YSystem& y, const Diagram& host_pattern);

// Certificates, each independent of the builder's bookkeeping.
ValidityReport check_conditions(const YSystem& y, const SmallExtensionOutput& s);
ValidityReport check_c_simplicity(const SmallExtensionOutput& s);

struct ThinnessLedger {
  bool ok = true;
  std::vector<mpq_class> bound;   // per level: marked fraction of worst fine orbit
  std::vector<mpq_class> allowed; // per level: h_n / k_{n-1}
};
ThinnessLedger extension_thinness(const SmallExtensionOutput& s);

ValidityReport check_etale_both(const SmallExtensionOutput& s);

// merged fine orbits, joined through images sharing a host orbit, must give
// back exactly the host orbit partition at every level.
ValidityReport check_relation_identity(const SmallExtensionOutput& s);

// Verifies that a conjugator witness carries the merged orbits of e onto the
// merged orbits of target at every witnessed level.
ValidityReport transport_extension(const ExtensionRelation& e, const ExtensionRelation& target,
                                   const AmbientContext& ctx, const TraceMap& h,
                                   const ConjugatorWitness& w);

struct OrbitEquivalenceWitness {
  bool identity = false;   // Sigma equals the K-orbit partition
  int32_t depth = 0;
  int32_t copies = 0;
  int32_t validity_horizon = 0; // levels where the copy shift is total
  SmallExtensionOutput extension; // empty when identity
  std::vector<std::string> certificates; // names of the checks that passed
  // per level of the input tower: sorted merged-class sizes for the extended
  // relation and for the plain orbit relation
  std::vector<std::vector<int64_t>> profile_extended, profile_plain;
};

// The absorption pipeline: builds the truncated tower of `copies` copies of
// the marked sub-tower plus a residual tail, runs the small-extension
// builder over the self-similar pattern of `gamma`, checks the certificate
// chain, and reports the levelwise merged-orbit profiles.
OrbitEquivalenceWitness absorb(const Diagram& gamma, const Marking& k,
                               const std::vector<std::vector<int32_t>>& sigma_class,
                               int32_t depth, int32_t copies);

nlohmann::json witness_to_json(const OrbitEquivalenceWitness& w);

} // namespace cantor
