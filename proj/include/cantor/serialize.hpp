#pragma once

#include <gmpxx.h>
#include <nlohmann/json.hpp>

#include "cantor/diagram.hpp"
#include "cantor/marking.hpp"

namespace cantor {

using json = nlohmann::json;

json to_json(const Diagram& d);
Diagram diagram_from_json(const json& j);

json to_json(const ClopenSet& c);
ClopenSet clopen_from_json(const json& j);

json to_json(const GroupElement& g);
GroupElement group_element_from_json(const json& j);

json to_json(const Marking& m);
Marking marking_from_json(const json& j);

// Rationals serialize as "p/q" strings (always with an explicit denominator).
std::string rat_to_string(const mpq_class& q);
mpq_class rat_from_string(const std::string& s);

// Graphviz export: one node per atom, ranked by level, edges parent->child,
// atoms grouped by orbit via color classes.
std::string to_dot(const Diagram& d);

// Same drawing with the marked atoms flagged by a double border.
std::string to_dot(const Diagram& d, const Marking& m);

} // namespace cantor
