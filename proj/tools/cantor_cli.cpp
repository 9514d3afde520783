// Batch front end: fixture generation, validation, equivalence and measure
// queries, marking certificates, conjugator / absorption / saturation
// pipelines, and JSON/DOT exports.  Exit codes: 0 success or certified,
// 2 refusal or not-found (a limit property that could not be certified),
// 1 structural errors.  Diagnostics go to standard error as JSON lines.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "cantor/absorption.hpp"
#include "cantor/diagram.hpp"
#include "cantor/fixtures.hpp"
#include "cantor/krieger.hpp"
#include "cantor/marking.hpp"
#include "cantor/measures.hpp"
#include "cantor/saturation.hpp"
#include "cantor/serialize.hpp"

using namespace cantor;
using nlohmann::json;

namespace {

void diag(const std::string& event, const std::string& message) {
  json j{{"event", event}, {"message", message}};
  std::cerr << j.dump() << "\n";
}

void diag_report(const ValidityReport& rep) {
  for (const Violation& v : rep.violations) {
    json j{{"event", "violation"},
           {"kind", v.kind == Violation::Kind::fragment ? "fragment" : "structural"},
           {"level", v.level},
           {"message", v.what}};
    std::cerr << j.dump() << "\n";
  }
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    if (text.empty() || text.back() != '\n') std::cout << "\n";
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw Error(Errc::structural, "cannot open output file " + out_path);
  f << text;
  if (text.empty() || text.back() != '\n') f << "\n";
}

void emit_json(const json& j, const std::string& out_path) { emit(j.dump(2), out_path); }

json load_json(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::structural, "cannot open input file " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw Error(Errc::structural, path + ": " + e.what());
  }
  return j;
}

Diagram load_diagram(const std::string& path) {
  Diagram d = diagram_from_json(load_json(path));
  require_valid(d);
  return d;
}

// Clopen sets on the command line are written "level:atom,atom,...".
ClopenSet parse_clopen(const std::string& s) {
  auto colon = s.find(':');
  if (colon == std::string::npos)
    throw Error(Errc::structural, "clopen set must be written level:a0,a1,...");
  ClopenSet c;
  try {
    c.level = std::stoi(s.substr(0, colon));
    std::stringstream atoms(s.substr(colon + 1));
    std::string tok;
    while (std::getline(atoms, tok, ',')) c.atoms.push_back(std::stoi(tok));
  } catch (const std::exception&) {
    throw Error(Errc::structural, "cannot parse clopen set: " + s);
  }
  return make_clopen(c.level, c.atoms);
}

std::vector<int32_t> parse_levels(const std::string& s) {
  std::vector<int32_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
  return out;
}

json report_to_json(const ValidityReport& rep) {
  json violations = json::array();
  for (const Violation& v : rep.violations)
    violations.push_back({{"kind", v.kind == Violation::Kind::fragment ? "fragment" : "structural"},
                          {"level", v.level},
                          {"message", v.what}});
  return {{"ok", rep.ok}, {"violations", violations}};
}

// A layered drawing of a conjugator witness: one layer per refinement step,
// one node per block of the step's labelled partition.
std::string witness_to_dot(const json& w) {
  std::ostringstream os;
  os << "digraph witness {\n  rankdir=TB;\n  node [shape=box];\n";
  const json& steps = w.at("steps");
  for (size_t i = 0; i < steps.size(); ++i) {
    const json& st = steps[i];
    os << "  s" << i << " [label=\"step " << i << "\\nlevels " << st.at("src_level") << "/"
       << st.at("dst_level") << "\\nblocks " << st.at("phi").size() << "\"];\n";
    if (i > 0) os << "  s" << (i - 1) << " -> s" << i << ";\n";
  }
  os << "}\n";
  return os.str();
}

int run(int argc, char** argv) {
  CLI::App app{"finite tower toolbox"};
  app.require_subcommand(1);

  std::string out_path;
  app.add_option("--out", out_path, "output file (default: standard output)")->capture_default_str();

  // gen
  auto* gen = app.add_subcommand("gen", "generate a fixture diagram");
  std::string fixture;
  int32_t depth = 0;
  uint64_t seed = 0;
  gen->add_option("--fixture", fixture, "odometer|two_orbit|gap|random_simple")->required();
  gen->add_option("--depth", depth, "number of levels")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "seed for random_simple only");

  // validate
  auto* validate = app.add_subcommand("validate", "validate a diagram (and optional marking)");
  std::string diagram_path, marking_path;
  validate->add_option("--diagram", diagram_path)->required();
  validate->add_option("--marking", marking_path);

  // equiv
  auto* equiv = app.add_subcommand("equiv", "decide equivalence of two clopen sets");
  std::string set_a, set_b;
  std::optional<int32_t> at_level;
  equiv->add_option("--diagram", diagram_path)->required();
  equiv->add_option("--a", set_a, "clopen set, level:atoms")->required();
  equiv->add_option("--b", set_b, "clopen set, level:atoms")->required();
  equiv->add_option("--depth", at_level, "level at which to compare (default: the sets' level)");

  // bounds
  auto* bounds = app.add_subcommand("bounds", "invariant-measure bounds of a clopen set");
  bounds->add_option("--diagram", diagram_path)->required();
  bounds->add_option("--set", set_a, "clopen set, level:atoms")->required();
  bounds->add_option("--depth", at_level, "truncation depth (default: deepest level)");

  // mark
  auto* mark = app.add_subcommand("mark", "validate a marking and certify its thinness");
  std::string epsilon = "1/2";
  mark->add_option("--diagram", diagram_path)->required();
  mark->add_option("--marking", marking_path)->required();
  mark->add_option("--epsilon", epsilon, "thinness threshold as p/q")->capture_default_str();

  // conjugate
  auto* conjugate =
      app.add_subcommand("conjugate", "back-and-forth conjugator between two telescopings");
  std::string keep1, keep2;
  conjugate->add_option("--diagram", diagram_path, "reference diagram")->required();
  conjugate->add_option("--keep1", keep1, "levels kept by the first telescoping")->required();
  conjugate->add_option("--keep2", keep2, "levels kept by the second telescoping")->required();
  conjugate->add_option("--depth", depth, "target depth")->required()->check(CLI::PositiveNumber);

  // absorb
  auto* absorb_cmd = app.add_subcommand("absorb", "orbit-extension absorption pipeline");
  std::string scenario_path;
  int32_t copies = 0;
  absorb_cmd->add_option("--scenario", scenario_path, "JSON with diagram, marking, sigma")
      ->required();
  absorb_cmd->add_option("--depth", depth)->required()->check(CLI::PositiveNumber);
  absorb_cmd->add_option("--copies", copies)->required()->check(CLI::PositiveNumber);

  // saturate
  auto* saturate = app.add_subcommand("saturate", "pair-joining refinement tower pipeline");
  std::string host_path, stream_path, richness;
  saturate->add_option("--host", host_path, "two-family host diagram")->required();
  saturate->add_option("--stream", stream_path, "JSON with the clopen pair stream")->required();
  saturate->add_option("--depth", depth)->required()->check(CLI::PositiveNumber);
  saturate->add_option("--richness", richness, "override the fragment floor (testing aid)");

  // export
  auto* export_cmd = app.add_subcommand("export", "canonical JSON or DOT export");
  std::string in_path, format = "json";
  export_cmd->add_option("--in", in_path, "diagram or witness JSON")->required();
  export_cmd->add_option("--format", format, "json|dot")
      ->check(CLI::IsMember({"json", "dot"}))
      ->capture_default_str();
  export_cmd->add_option("--marking", marking_path, "overlay marking (DOT only)");

  for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    diag("usage", e.what());
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (*gen) {
    Diagram d;
    if (fixture == "odometer")
      d = odometer(depth);
    else if (fixture == "two_orbit")
      d = two_orbit(depth);
    else if (fixture == "gap")
      d = gap(depth);
    else if (fixture == "random_simple")
      d = random_simple(depth, seed);
    else
      throw Error(Errc::structural, "unknown fixture " + fixture);
    emit_json(to_json(d), out_path);
    return 0;
  }

  if (*validate) {
    Diagram d = diagram_from_json(load_json(diagram_path));
    ValidityReport rep = validate_diagram(d);
    if (rep.ok && !marking_path.empty()) {
      Marking m = marking_from_json(load_json(marking_path));
      ValidityReport mrep = validate_marking(m, d);
      rep.ok = rep.ok && mrep.ok;
      rep.violations.insert(rep.violations.end(), mrep.violations.begin(), mrep.violations.end());
    }
    diag_report(rep);
    emit_json(report_to_json(rep), out_path);
    return rep.ok ? 0 : 1;
  }

  if (*equiv) {
    Diagram d = load_diagram(diagram_path);
    ClopenSet a = parse_clopen(set_a), b = parse_clopen(set_b);
    int32_t n = at_level ? *at_level : std::max(a.level, b.level);
    bool eq = check_equiv(a, b, d, n);
    emit(eq ? "true" : "false", out_path);
    return eq ? 0 : 2;
  }

  if (*bounds) {
    Diagram d = load_diagram(diagram_path);
    ClopenSet c = parse_clopen(set_a);
    int32_t n = at_level ? *at_level : d.depth() - 1;
    BoundsResult r = invariant_bounds(c, d, n);
    emit_json({{"min", rat_to_string(r.min)}, {"max", rat_to_string(r.max)}, {"depth", r.depth}},
              out_path);
    return 0;
  }

  if (*mark) {
    Diagram d = load_diagram(diagram_path);
    Marking m = marking_from_json(load_json(marking_path));
    ValidityReport rep = validate_marking(m, d);
    diag_report(rep);
    if (!rep.ok) {
      emit_json(report_to_json(rep), out_path);
      return 1;
    }
    ThinnessResult thin = thinness_certificate(m, d, rat_from_string(epsilon));
    json jb = json::array();
    for (const mpq_class& q : thin.bounds) jb.push_back(rat_to_string(q));
    bool certified = thin.certified_level.has_value();
    emit_json({{"valid", true},
               {"thin", certified},
               {"certified_level", certified ? json(*thin.certified_level) : json(nullptr)},
               {"bounds", jb}},
              out_path);
    return certified ? 0 : 2;
  }

  if (*conjugate) {
    Diagram d = load_diagram(diagram_path);
    AmbientContext ctx = telescoped_context(d, parse_levels(keep1), parse_levels(keep2));
    TraceMap h;
    ConjugatorWitness w = build_conjugator(ctx, h, depth);
    ValidityReport rep = validate_witness(ctx, h, w);
    diag_report(rep);
    emit_json({{"steps", witness_to_json(w)}, {"certified", rep.ok}}, out_path);
    return rep.ok ? 0 : 2;
  }

  if (*absorb_cmd) {
    json sc = load_json(scenario_path);
    Diagram d = diagram_from_json(sc.at("diagram"));
    Marking k = marking_from_json(sc.at("marking"));
    auto sigma = sc.at("sigma").get<std::vector<std::vector<int32_t>>>();
    OrbitEquivalenceWitness w = absorb(d, k, sigma, depth, copies);
    emit_json(witness_to_json(w), out_path);
    return 0;
  }

  if (*saturate) {
    Diagram host = load_diagram(host_path);
    json js = load_json(stream_path);
    PairStream stream;
    for (const json& p : js.at("pairs"))
      stream.pairs.emplace_back(clopen_from_json(p.at(0)), clopen_from_json(p.at(1)));
    mpz_class floor = richness.empty() ? mpz_class(0) : mpz_class(richness);
    SaturationTower t = build_saturation_tower(host, stream, depth, floor);
    ValidityReport conditions = check_saturation_tower(t);
    diag_report(conditions);
    SingularLedger led = build_j_embeddings(t);
    AssembledSaturation a = assemble_saturated(t, led);
    diag_report(a.report);
    json rows = json::array();
    for (const auto& row : led.rows)
      rows.push_back({{"moved", row.moved.get_str()},
                      {"moved_bound", row.moved_bound.get_str()},
                      {"measure", rat_to_string(row.measure)},
                      {"allowed", rat_to_string(row.allowed)}});
    bool certified = conditions.ok && a.report.ok;
    emit_json({{"tower", tower_to_json(t)},
               {"ledger", rows},
               {"conditions", report_to_json(conditions)},
               {"certificates", report_to_json(a.report)},
               {"certified", certified}},
              out_path);
    return certified ? 0 : 2;
  }

  if (*export_cmd) {
    json j = load_json(in_path);
    if (j.contains("steps")) { // a conjugator witness bundle
      if (format == "dot")
        emit(witness_to_dot(j), out_path);
      else
        emit_json(j, out_path);
      return 0;
    }
    Diagram d = diagram_from_json(j);
    if (format == "dot") {
      if (!marking_path.empty())
        emit(to_dot(d, marking_from_json(load_json(marking_path))), out_path);
      else
        emit(to_dot(d), out_path);
    } else {
      emit_json(to_json(d), out_path);
    }
    return 0;
  }

  return 1;
}

} // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    const char* code = e.code == Errc::refusal     ? "refusal"
                       : e.code == Errc::not_found ? "not_found"
                       : e.code == Errc::depth     ? "depth"
                                                   : "structural";
    json j{{"event", "error"}, {"code", code}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    return (e.code == Errc::refusal || e.code == Errc::not_found) ? 2 : 1;
  } catch (const std::exception& e) {
    json j{{"event", "error"}, {"code", "structural"}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    return 1;
  }
}
