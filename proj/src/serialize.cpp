#include "cantor/serialize.hpp"

#include <sstream>

namespace cantor {

json to_json(const Diagram& d) {
  json levels = json::array();
  for (int32_t n = 0; n < d.depth(); ++n) {
    const Level& lv = d.levels[n];
    json jl;
    jl["atoms"] = lv.atom_count;
    jl["orbits"] = lv.orbit_of;
    if (n > 0) jl["parents"] = lv.parent_of;
    levels.push_back(std::move(jl));
  }
  return json{{"levels", std::move(levels)}};
}

Diagram diagram_from_json(const json& j) {
  if (!j.is_object() || !j.contains("levels") || !j["levels"].is_array())
    throw Error(Errc::structural, "diagram json: missing levels array");
  Diagram d;
  int32_t n = 0;
  for (const auto& jl : j["levels"]) {
    if (!jl.is_object() || !jl.contains("atoms") || !jl.contains("orbits"))
      throw Error(Errc::structural, "diagram json: malformed level");
    Level lv;
    lv.atom_count = jl["atoms"].get<int32_t>();
    lv.orbit_of = jl["orbits"].get<std::vector<int32_t>>();
    if (n == 0) {
      if (jl.contains("parents"))
        throw Error(Errc::structural, "diagram json: level 0 must not have parents");
    } else {
      if (!jl.contains("parents"))
        throw Error(Errc::structural, "diagram json: missing parents");
      lv.parent_of = jl["parents"].get<std::vector<int32_t>>();
    }
    d.levels.push_back(std::move(lv));
    ++n;
  }
  return d;
}

json to_json(const ClopenSet& c) { return json{{"level", c.level}, {"atoms", c.atoms}}; }

ClopenSet clopen_from_json(const json& j) {
  if (!j.is_object() || !j.contains("level") || !j.contains("atoms"))
    throw Error(Errc::structural, "clopen json: need level and atoms");
  return make_clopen(j["level"].get<int32_t>(), j["atoms"].get<std::vector<AtomId>>());
}

json to_json(const GroupElement& g) { return json{{"level", g.level}, {"perm", g.perm}}; }

GroupElement group_element_from_json(const json& j) {
  if (!j.is_object() || !j.contains("level") || !j.contains("perm"))
    throw Error(Errc::structural, "group element json: need level and perm");
  return GroupElement{j["level"].get<int32_t>(), j["perm"].get<std::vector<AtomId>>()};
}

json to_json(const Marking& m) {
  json levels = json::array();
  for (const auto& ml : m.levels)
    levels.push_back(json{{"marked", ml.marked}, {"k_orbits", ml.k_orbit}});
  return json{{"levels", std::move(levels)}};
}

Marking marking_from_json(const json& j) {
  if (!j.is_object() || !j.contains("levels") || !j["levels"].is_array())
    throw Error(Errc::structural, "marking json: missing levels array");
  Marking m;
  for (const auto& jl : j["levels"]) {
    if (!jl.is_object() || !jl.contains("marked") || !jl.contains("k_orbits"))
      throw Error(Errc::structural, "marking json: malformed level");
    MarkingLevel ml;
    ml.marked = jl["marked"].get<std::vector<AtomId>>();
    ml.k_orbit = jl["k_orbits"].get<std::vector<int32_t>>();
    if (ml.marked.size() != ml.k_orbit.size())
      throw Error(Errc::structural, "marking json: marked/k_orbits length mismatch");
    m.levels.push_back(std::move(ml));
  }
  return m;
}

std::string rat_to_string(const mpq_class& q) {
  mpq_class c = q;
  c.canonicalize();
  return c.get_num().get_str() + "/" + c.get_den().get_str();
}

mpq_class rat_from_string(const std::string& s) {
  auto slash = s.find('/');
  try {
    mpq_class q;
    if (slash == std::string::npos)
      q = mpq_class(mpz_class(s), 1);
    else
      q = mpq_class(mpz_class(s.substr(0, slash)), mpz_class(s.substr(slash + 1)));
    if (q.get_den() == 0) throw Error(Errc::structural, "rational with zero denominator");
    q.canonicalize();
    return q;
  } catch (const std::invalid_argument&) {
    throw Error(Errc::structural, "malformed rational: " + s);
  }
}

namespace {
std::string dot_impl(const Diagram& d, const Marking* m) {
  static const char* palette[] = {"lightblue",  "lightsalmon", "palegreen", "khaki",
                                  "plum",       "lightcyan",   "wheat",     "pink",
                                  "lightgray",  "aquamarine",  "thistle",   "peachpuff"};
  std::ostringstream os;
  os << "digraph tower {\n  rankdir=TB;\n  node [shape=circle, style=filled];\n";
  for (int32_t n = 0; n < d.depth(); ++n) {
    const Level& lv = d.levels[n];
    os << "  { rank=same;";
    for (AtomId a = 0; a < lv.atom_count; ++a) os << " n" << n << "_" << a << ";";
    os << " }\n";
    for (AtomId a = 0; a < lv.atom_count; ++a) {
      os << "  n" << n << "_" << a << " [label=\"" << a << "\", fillcolor=\""
         << palette[lv.orbit_of[a] % 12] << "\"";
      if (m && m->is_marked(n, a)) os << ", peripheries=2";
      os << "];\n";
    }
    if (n > 0)
      for (AtomId a = 0; a < lv.atom_count; ++a)
        os << "  n" << (n - 1) << "_" << lv.parent_of[a] << " -> n" << n << "_" << a << ";\n";
  }
  os << "}\n";
  return os.str();
}
} // namespace

std::string to_dot(const Diagram& d) { return dot_impl(d, nullptr); }
std::string to_dot(const Diagram& d, const Marking& m) { return dot_impl(d, &m); }

} // namespace cantor
