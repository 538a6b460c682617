#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "phases/io.hpp"

namespace phases::io {

namespace {

[[noreturn]] void fail(const std::string& source, const std::string& field, const std::string& what) {
  throw InputError(source + ": field '" + field + "': " + what);
}

std::string child(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string child(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void expect_object(const json& j, const std::string& source, const std::string& path,
                   std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(source, path.empty() ? "<root>" : path, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) fail(source, child(path, key), "unknown key");
}

const json& member(const json& j, const std::string& key, const std::string& source, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) fail(source, child(path, key), "missing");
  return *it;
}

double real(const json& j, const std::string& source, const std::string& field) {
  if (!j.is_number()) fail(source, field, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) fail(source, field, "not finite");
  return x;
}

std::optional<double> optional_real(const json& j, const std::string& source, const std::string& field) {
  if (j.is_null()) return std::nullopt;
  return real(j, source, field);
}

std::uint64_t count(const json& j, const std::string& source, const std::string& field) {
  if (!j.is_number_integer() || (!j.is_number_unsigned() && j.get<std::int64_t>() < 0))
    fail(source, field, "expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

std::int64_t integer(const json& j, const std::string& source, const std::string& field) {
  if (!j.is_number_integer()) fail(source, field, "expected an integer");
  return j.get<std::int64_t>();
}

bool boolean(const json& j, const std::string& source, const std::string& field) {
  if (!j.is_boolean()) fail(source, field, "expected true or false");
  return j.get<bool>();
}

const json& array(const json& j, const std::string& source, const std::string& field) {
  if (!j.is_array()) fail(source, field, "expected an array");
  return j;
}

std::vector<double> reals(const json& j, const std::string& source, const std::string& field) {
  std::vector<double> out;
  for (std::size_t i = 0; i < array(j, source, field).size(); ++i) out.push_back(real(j[i], source, child(field, i)));
  return out;
}

std::vector<std::vector<double>> matrix(const json& j, const std::string& source, const std::string& field) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < array(j, source, field).size(); ++i) rows.push_back(reals(j[i], source, child(field, i)));
  return rows;
}

template <class F>
auto guarded(const std::string& source, const std::string& field, F&& build) {
  try {
    return build();
  } catch (const DomainError& e) {
    fail(source, field, e.what());
  }
}

std::vector<PatternEdge> pattern_pairs(const json& j, bool present, int k, const std::string& source,
                                       const std::string& field) {
  std::vector<PatternEdge> out;
  for (std::size_t i = 0; i < array(j, source, field).size(); ++i) {
    const auto f = child(field, i);
    const json& pair = array(j[i], source, f);
    if (pair.size() != 2) fail(source, f, "expected a vertex pair [u, v]");
    const auto u = integer(pair[0], source, child(f, 0));
    const auto v = integer(pair[1], source, child(f, 1));
    if (u < 1 || v < 1 || u > k || v > k) fail(source, f, "vertices are numbered 1..k");
    out.push_back({static_cast<int>(u) - 1, static_cast<int>(v) - 1, present});
  }
  return out;
}

std::vector<CountWindow> windows_from_json(const json& j, const std::string& source, const std::string& field) {
  std::vector<CountWindow> out;
  for (std::size_t i = 0; i < array(j, source, field).size(); ++i) {
    const auto f = child(field, i);
    expect_object(j[i], source, f, {"lo", "hi"});
    out.push_back({integer(member(j[i], "lo", source, f), source, child(f, "lo")),
                   integer(member(j[i], "hi", source, f), source, child(f, "hi"))});
  }
  return out;
}

std::vector<std::uint64_t> counts(const json& j, const std::string& source, const std::string& field) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < array(j, source, field).size(); ++i) out.push_back(count(j[i], source, child(field, i)));
  return out;
}

json windows_json(const std::vector<CountWindow>& ws) {
  json out = json::array();
  for (const auto& w : ws) out.push_back(to_json(w));
  return out;
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw InputError(path.string() + ": write failed");
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(source + ": invalid JSON: " + e.what());
  }
}

json read_json(const std::filesystem::path& path) { return parse_json(read_text(path), path.string()); }

json to_json(const StepGraphon& q) {
  json values = json::array();
  for (const auto& row : q.rows()) values.push_back(row);
  return json{{"masses", std::vector<double>(q.masses().begin(), q.masses().end())}, {"values", values}};
}

StepGraphon graphon_from_json(const json& j, const std::string& source) {
  expect_object(j, source, "", {"masses", "values"});
  auto masses = reals(member(j, "masses", source, ""), source, "masses");
  auto rows = matrix(member(j, "values", source, ""), source, "values");
  return guarded(source, "values", [&] { return StepGraphon::from_rows(std::move(masses), rows); });
}

json to_json(const SubgraphPattern& p) {
  json edges = json::array(), absent = json::array();
  for (const auto& e : p.edges()) (e.present ? edges : absent).push_back({e.u + 1, e.v + 1});
  json out{{"k", p.vertex_count()}, {"edges", edges}, {"absent", absent}};
  if (!p.name().empty()) out["name"] = p.name();
  return out;
}

SubgraphPattern pattern_from_json(const json& j, const std::string& source) {
  expect_object(j, source, "", {"k", "edges", "absent", "name"});
  const auto k = integer(member(j, "k", source, ""), source, "k");
  if (k < 1 || k > 64) fail(source, "k", "vertex count must lie in 1..64");
  auto edges = pattern_pairs(member(j, "edges", source, ""), true, static_cast<int>(k), source, "edges");
  if (j.contains("absent")) {
    auto absent = pattern_pairs(j["absent"], false, static_cast<int>(k), source, "absent");
    edges.insert(edges.end(), absent.begin(), absent.end());
  }
  std::string name;
  if (j.contains("name")) {
    if (!j["name"].is_string()) fail(source, "name", "expected a string");
    name = j["name"].get<std::string>();
  }
  return guarded(source, "edges", [&] { return SubgraphPattern(static_cast<int>(k), std::move(edges), name); });
}

FiniteGraph graph_from_edge_list(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::optional<std::size_t> declared;
  std::size_t n = 0;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const auto field = "line " + std::to_string(lineno);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first[0] == '#') {
      std::string word;
      std::size_t nodes = 0;
      if (ls >> word && word == "nodes") {
        if (!(ls >> nodes)) fail(source, field, "expected '# nodes N'");
        declared = nodes;
      }
      continue;
    }
    std::istringstream pair(line);
    long long u = -1, v = -1;
    std::string extra;
    if (!(pair >> u >> v) || (pair >> extra)) fail(source, field, "expected two node indices 'u v'");
    if (u < 0 || v < 0) fail(source, field, "node indices are 0-based and nonnegative");
    if (u == v) fail(source, field, "self-loops are not allowed");
    edges.emplace_back(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
    n = std::max(n, static_cast<std::size_t>(std::max(u, v)) + 1);
  }
  if (declared) {
    if (*declared < n) fail(source, "nodes", "declared node count is smaller than an edge index");
    n = *declared;
  }
  if (n == 0) fail(source, "edges", "graph has no nodes");
  return guarded(source, "edges", [&] { return FiniteGraph::from_edges(n, edges); });
}

std::string to_edge_list(const FiniteGraph& g) {
  std::string out = "# nodes " + std::to_string(g.node_count()) + "\n";
  for (const auto& [u, v] : g.edge_list()) out += std::to_string(u) + " " + std::to_string(v) + "\n";
  return out;
}

json adjacency_json(const FiniteGraph& g) {
  json rows = json::array();
  for (std::size_t u = 0; u < g.node_count(); ++u) {
    json row = json::array();
    for (std::size_t v = 0; v < g.node_count(); ++v) row.push_back(g.has_edge(u, v) ? 1 : 0);
    rows.push_back(row);
  }
  return json{{"n", g.node_count()}, {"adjacency", rows}};
}

FiniteGraph graph_from_json(const json& j, const std::string& source) {
  const json* rows = &j;
  std::string field = "adjacency";
  if (j.is_object()) {
    expect_object(j, source, "", {"n", "adjacency"});
    rows = &member(j, "adjacency", source, "");
  }
  const std::size_t n = array(*rows, source, field).size();
  if (j.is_object() && j.contains("n") && count(j["n"], source, "n") != n)
    fail(source, "n", "does not match the adjacency size");
  if (n == 0) fail(source, field, "graph has no nodes");
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::vector<int>> a(n);
  for (std::size_t u = 0; u < n; ++u) {
    const auto f = child(field, u);
    const json& row = array((*rows)[u], source, f);
    if (row.size() != n) fail(source, f, "adjacency rows must have n entries");
    for (std::size_t v = 0; v < n; ++v) {
      const auto x = integer(row[v], source, child(f, v));
      if (x != 0 && x != 1) fail(source, child(f, v), "entries must be 0 or 1");
      a[u].push_back(static_cast<int>(x));
    }
  }
  for (std::size_t u = 0; u < n; ++u) {
    if (a[u][u]) fail(source, child(child(field, u), u), "self-loops are not allowed");
    for (std::size_t v = u + 1; v < n; ++v) {
      if (a[u][v] != a[v][u]) fail(source, child(child(field, u), v), "adjacency must be symmetric");
      if (a[u][v]) edges.emplace_back(u, v);
    }
  }
  return guarded(source, field, [&] { return FiniteGraph::from_edges(n, edges); });
}

FiniteGraph read_graph(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  const auto start = text.find_first_not_of(" \t\r\n");
  if (start != std::string::npos && (text[start] == '{' || text[start] == '['))
    return graph_from_json(parse_json(text, path.string()), path.string());
  return graph_from_edge_list(text, path.string());
}

json to_json(const Rational& r) { return json{{"num", r.num}, {"den", r.den}, {"value", r.value()}}; }

json to_json(const CountWindow& w) { return json{{"lo", w.lo}, {"hi", w.hi}}; }

json to_json(const OptimizerResult& r) {
  return json{{"feasible", r.feasible},
              {"entropy", r.entropy},
              {"objective", r.objective},
              {"podality", r.podality},
              {"searched_podality", r.searched_podality},
              {"graphon", to_json(r.graphon)},
              {"residuals", r.residuals},
              {"flags", {{"symmetric_bipodal", r.flags.symmetric_bipodal}, {"constant", r.flags.constant}}},
              {"multistart_spread", r.multistart_spread ? json(*r.multistart_spread) : json(nullptr)},
              {"feasible_starts", r.feasible_starts},
              {"total_starts", r.total_starts}};
}

OptimizerResult optimizer_result_from_json(const json& j, const std::string& source) {
  expect_object(j, source, "",
                {"feasible", "entropy", "objective", "podality", "searched_podality", "graphon", "residuals", "flags",
                 "multistart_spread", "feasible_starts", "total_starts"});
  OptimizerResult r;
  r.feasible = boolean(member(j, "feasible", source, ""), source, "feasible");
  r.entropy = real(member(j, "entropy", source, ""), source, "entropy");
  r.objective = real(member(j, "objective", source, ""), source, "objective");
  r.podality = static_cast<int>(integer(member(j, "podality", source, ""), source, "podality"));
  r.searched_podality =
      static_cast<int>(integer(member(j, "searched_podality", source, ""), source, "searched_podality"));
  r.graphon = graphon_from_json(member(j, "graphon", source, ""), source + " (graphon)");
  r.residuals = reals(member(j, "residuals", source, ""), source, "residuals");
  const json& flags = member(j, "flags", source, "");
  expect_object(flags, source, "flags", {"symmetric_bipodal", "constant"});
  r.flags.symmetric_bipodal =
      boolean(member(flags, "symmetric_bipodal", source, "flags"), source, "flags.symmetric_bipodal");
  r.flags.constant = boolean(member(flags, "constant", source, "flags"), source, "flags.constant");
  r.multistart_spread = optional_real(member(j, "multistart_spread", source, ""), source, "multistart_spread");
  r.feasible_starts = static_cast<int>(count(member(j, "feasible_starts", source, ""), source, "feasible_starts"));
  r.total_starts = static_cast<int>(count(member(j, "total_starts", source, ""), source, "total_starts"));
  if (static_cast<std::size_t>(r.podality) != r.graphon.podality())
    fail(source, "podality", "does not match the graphon");
  if (r.feasible_starts > r.total_starts) fail(source, "feasible_starts", "exceeds total_starts");
  if (r.entropy < -1e-12 || r.entropy > 0.5 * std::log(2.0) + 1e-12)
    fail(source, "entropy", "outside [0, ln 2 / 2]");
  return r;
}

json to_json(const EnumerationReport& r) {
  json hist = json::array();
  for (const auto& b : r.histogram) hist.push_back({b.edges, b.triangles, b.graphs});
  return json{{"n", r.n},
              {"count", r.count},
              {"normalized_log_count", r.normalized_log_count ? json(*r.normalized_log_count) : json(nullptr)},
              {"windows", windows_json(r.windows)},
              {"denominators", r.denominators},
              {"histogram", hist}};
}

EnumerationReport enumeration_report_from_json(const json& j, const std::string& source) {
  expect_object(j, source, "", {"n", "count", "normalized_log_count", "windows", "denominators", "histogram"});
  EnumerationReport r;
  r.n = count(member(j, "n", source, ""), source, "n");
  if (r.n < 1 || r.n > 7) fail(source, "n", "must lie in 1..7");
  r.count = count(member(j, "count", source, ""), source, "count");
  r.normalized_log_count =
      optional_real(member(j, "normalized_log_count", source, ""), source, "normalized_log_count");
  r.windows = windows_from_json(member(j, "windows", source, ""), source, "windows");
  r.denominators = counts(member(j, "denominators", source, ""), source, "denominators");
  if (r.windows.size() != r.denominators.size()) fail(source, "denominators", "one per window expected");
  const json& hist = member(j, "histogram", source, "");
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < array(hist, source, "histogram").size(); ++i) {
    const auto f = child(std::string("histogram"), i);
    if (!hist[i].is_array() || hist[i].size() != 3) fail(source, f, "expected [edges, triangles, graphs]");
    r.histogram.push_back({count(hist[i][0], source, child(f, 0)), count(hist[i][1], source, child(f, 1)),
                           count(hist[i][2], source, child(f, 2))});
    total += r.histogram.back().graphs;
  }
  const std::uint64_t all = std::uint64_t{1} << (r.n * (r.n - 1) / 2);
  if (total != all) fail(source, "histogram", "does not cover all 2^(n choose 2) labeled graphs");
  if (r.count > all) fail(source, "count", "exceeds the number of labeled graphs");
  if ((r.count > 0) != r.normalized_log_count.has_value())
    fail(source, "normalized_log_count", "must be null exactly when count is 0");
  return r;
}

std::string histogram_csv(const EnumerationReport& r) {
  std::string out = "edges,triangles,graphs\n";
  for (const auto& b : r.histogram)
    out += std::to_string(b.edges) + "," + std::to_string(b.triangles) + "," + std::to_string(b.graphs) + "\n";
  return out;
}

std::string sample_manifest_csv(const std::vector<ChainResult>& chains, const ConstraintVector& constraints,
                                const std::vector<std::vector<std::string>>& files) {
  std::string out = "chain,sample,step";
  for (const auto& c : constraints.constraints) out += "," + (c.pattern.name().empty() ? "density" : c.pattern.name());
  out += ",file\n";
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (std::size_t s = 0; s < chains[c].records.size(); ++s) {
      const auto& rec = chains[c].records[s];
      out += std::to_string(c) + "," + std::to_string(s) + "," + std::to_string(rec.step);
      for (double d : rec.densities) out += "," + format_real(d);
      out += "," + (c < files.size() && s < files[c].size() ? files[c][s] : std::string()) + "\n";
    }
  return out;
}

Permutation permutation_from_text(const std::string& text, const std::string& source) {
  try {
    return Permutation::parse(text);
  } catch (const InputError& e) {
    fail(source, "values", e.what());
  }
}

json to_json(const GridPermuton& p) {
  const std::size_t k = p.resolution();
  json g = json::array();
  for (std::size_t i = 0; i < k; ++i)
    g.push_back(std::vector<double>(p.cells().begin() + static_cast<std::ptrdiff_t>(i * k),
                                    p.cells().begin() + static_cast<std::ptrdiff_t>((i + 1) * k)));
  return json{{"k", k}, {"g", g}};
}

GridPermuton permuton_from_json(const json& j, const std::string& source) {
  expect_object(j, source, "", {"k", "g"});
  const std::size_t k = count(member(j, "k", source, ""), source, "k");
  if (k == 0) fail(source, "k", "resolution must be positive");
  const auto rows = matrix(member(j, "g", source, ""), source, "g");
  if (rows.size() != k) fail(source, "g", "expected k rows");
  std::vector<double> cells;
  for (std::size_t i = 0; i < k; ++i) {
    if (rows[i].size() != k) fail(source, child(std::string("g"), i), "expected k entries");
    cells.insert(cells.end(), rows[i].begin(), rows[i].end());
  }
  return guarded(source, "g", [&] { return GridPermuton(k, std::move(cells)); });
}

json to_json(const PermutonResult& r) {
  return json{{"feasible", r.feasible},
              {"entropy", r.entropy},
              {"degenerate", r.degenerate},
              {"residuals", r.residuals},
              {"feasible_starts", r.feasible_starts},
              {"total_starts", r.total_starts},
              {"permuton", to_json(r.permuton)}};
}

PermutonResult permuton_result_from_json(const json& j, const std::string& source) {
  expect_object(j, source, "",
                {"feasible", "entropy", "degenerate", "residuals", "feasible_starts", "total_starts", "permuton"});
  PermutonResult r;
  r.feasible = boolean(member(j, "feasible", source, ""), source, "feasible");
  r.entropy = real(member(j, "entropy", source, ""), source, "entropy");
  r.degenerate = boolean(member(j, "degenerate", source, ""), source, "degenerate");
  r.residuals = reals(member(j, "residuals", source, ""), source, "residuals");
  r.feasible_starts = static_cast<int>(count(member(j, "feasible_starts", source, ""), source, "feasible_starts"));
  r.total_starts = static_cast<int>(count(member(j, "total_starts", source, ""), source, "total_starts"));
  r.permuton = permuton_from_json(member(j, "permuton", source, ""), source + " (permuton)");
  if (r.entropy > 1e-12) fail(source, "entropy", "permuton entropy is never positive");
  if (r.feasible_starts > r.total_starts) fail(source, "feasible_starts", "exceeds total_starts");
  return r;
}

json to_json(const PermutationCount& c) {
  return json{{"n", c.n},
              {"count", c.count},
              {"normalized_log", c.normalized_log ? json(*c.normalized_log) : json(nullptr)},
              {"windows", windows_json(c.windows)},
              {"denominators", c.denominators}};
}

PermutationCount permutation_count_from_json(const json& j, const std::string& source) {
  expect_object(j, source, "", {"n", "count", "normalized_log", "windows", "denominators"});
  PermutationCount c;
  c.n = count(member(j, "n", source, ""), source, "n");
  if (c.n < 1 || c.n > 9) fail(source, "n", "must lie in 1..9");
  c.count = count(member(j, "count", source, ""), source, "count");
  c.normalized_log = optional_real(member(j, "normalized_log", source, ""), source, "normalized_log");
  c.windows = windows_from_json(member(j, "windows", source, ""), source, "windows");
  c.denominators = counts(member(j, "denominators", source, ""), source, "denominators");
  std::uint64_t factorial = 1;
  for (std::size_t i = 2; i <= c.n; ++i) factorial *= i;
  if (c.count > factorial) fail(source, "count", "exceeds n!");
  if (c.windows.size() != c.denominators.size()) fail(source, "denominators", "one per window expected");
  if ((c.count > 0) != c.normalized_log.has_value())
    fail(source, "normalized_log", "must be null exactly when count is 0");
  if (c.normalized_log && *c.normalized_log > 1e-12) fail(source, "normalized_log", "must be <= 0");
  return c;
}

}  // namespace phases::io
