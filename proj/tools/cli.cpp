#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "phases/io.hpp"

namespace phases::cli {

namespace {

using io::json;
namespace fs = std::filesystem;

constexpr const char* kTool = "phases";

struct Common {
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out;
  std::string manifest;
};

struct Output {
  std::ostream& out;
  std::ostream& err;
  const Common& common;

  void emit(const std::string& text) const {
    if (common.out.empty())
      out << text;
    else
      io::write_text(common.out, text);
  }
  void emit(const json& j) const { emit(j.dump(2) + "\n"); }
};

using Handler = std::function<int(const Output&)>;

void add_common(CLI::App* sub, Common& c, bool seeded, bool threaded) {
  if (seeded) sub->add_option("--seed", c.seed, "Base RNG seed");
  if (threaded)
    sub->add_option("--threads", c.threads, "Worker threads (0: PHASES_THREADS or hardware concurrency)")
        ->check(CLI::NonNegativeNumber);
  sub->add_option("--out", c.out, "Primary output file (default: standard output)");
  sub->add_option("--manifest", c.manifest,
                  "Manifest file (default: <out>.manifest.json, or phases-<subcommand>.manifest.json)");
}

ConstraintVector model_constraints(const std::string& model, double x, double y, double delta) {
  const ModelSpec spec = ModelSpec::from_name(model);
  ConstraintVector cv{{{spec.first, x}, {spec.second, y}}, delta};
  return cv;
}

std::vector<PatternConstraint> perm_constraints(const std::vector<std::string>& patterns,
                                                const std::vector<double>& alphas) {
  if (patterns.size() != alphas.size())
    throw InputError("--pattern and --alpha must be given the same number of times");
  std::vector<PatternConstraint> out;
  for (std::size_t i = 0; i < patterns.size(); ++i) out.push_back({StarPattern::parse(patterns[i]), alphas[i]});
  return out;
}

std::pair<int, int> parse_grid(const std::string& text) {
  const auto x = text.find_first_of("xX");
  try {
    if (x == std::string::npos) throw std::invalid_argument("");
    std::size_t a = 0, b = 0;
    const int nx = std::stoi(text.substr(0, x), &a);
    const int ny = std::stoi(text.substr(x + 1), &b);
    if (a != x || b != text.size() - x - 1 || nx < 1 || ny < 1) throw std::invalid_argument("");
    return {nx, ny};
  } catch (const std::exception&) {
    throw InputError("--grid expects NXxNY with positive integers, got '" + text + "'");
  }
}

std::string scalar_text(const json& v, const std::string& source, const std::string& field) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number() || v.is_boolean()) return v.dump();
  throw InputError(source + ": field '" + field + "': expected a string, number or boolean");
}

bool given_on_command_line(const std::vector<std::string>& tokens, const std::string& name) {
  const std::string flag = "--" + name;
  return std::any_of(tokens.begin(), tokens.end(),
                     [&](const std::string& t) { return t == flag || t.rfind(flag + "=", 0) == 0; });
}

bool is_flag(const CLI::Option* o) { return o->get_type_size_max() == 0; }
bool is_list(const CLI::Option* o) { return o->get_expected_max() > 1; }

/// Converts config options into command-line tokens for `sub`, skipping the
/// options also given on the command line.
std::vector<std::string> config_tokens(const json& options, CLI::App* sub, const std::string& source,
                                       const std::vector<std::string>& command_line) {
  std::vector<std::string> tokens;
  for (const auto& [key, value] : options.items()) {
    const std::string field = "options." + key;
    const CLI::Option* o = sub->get_option_no_throw("--" + key);
    if (o == nullptr || key == "help" || key == "manifest")
      throw InputError(source + ": field '" + field + "': unknown option for subcommand " + sub->get_name());
    if (given_on_command_line(command_line, key) || value.is_null()) continue;
    if (is_flag(o)) {
      if (!value.is_boolean()) throw InputError(source + ": field '" + field + "': expected true or false");
      if (value.get<bool>()) tokens.push_back("--" + key);
    } else if (value.is_array()) {
      if (!is_list(o)) throw InputError(source + ": field '" + field + "': takes a single value");
      for (std::size_t i = 0; i < value.size(); ++i) {
        tokens.push_back("--" + key);
        tokens.push_back(scalar_text(value[i], source, field + "[" + std::to_string(i) + "]"));
      }
    } else {
      tokens.push_back("--" + key);
      tokens.push_back(scalar_text(value, source, field));
    }
  }
  return tokens;
}

json resolved_options(const CLI::App* sub) {
  json opts = json::object();
  for (const CLI::Option* o : sub->get_options()) {
    const std::string name = o->get_single_name();
    if (name == "help" || name == "manifest") continue;
    if (is_flag(o)) {
      opts[name] = o->count() > 0;
    } else if (is_list(o)) {
      opts[name] = o->count() > 0 ? json(o->results()) : json::array();
    } else if (o->count() > 0) {
      opts[name] = o->results().back();
    } else if (!o->get_default_str().empty()) {
      opts[name] = o->get_default_str();
    } else {
      opts[name] = nullptr;
    }
  }
  return opts;
}

int run_parsed(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  // Pull out --config before CLI11 sees the arguments.
  std::vector<std::string> rest;
  std::optional<std::string> config_path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw InputError("--config needs a file argument");
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }

  CLI::App app{"Constrained-entropy optimizers, samplers and counters for graphons and permutons", kTool};
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", PHASES_VERSION);
  app.require_subcommand(1);
  app.add_option("--config", "JSON config or manifest; command-line options take precedence");

  std::map<std::string, Handler> handlers;
  std::map<std::string, Common> commons;
  auto subcommand = [&](const std::string& name, const std::string& description, bool seeded, bool threaded) {
    CLI::App* sub = app.add_subcommand(name, description);
    add_common(sub, commons[name], seeded, threaded);
    return sub;
  };

  // density
  std::string d_graphon, d_graph;
  std::vector<std::string> d_patterns, d_pattern_files;
  int d_max_vertices = 6;
  {
    auto* sub = subcommand("density", "Pattern densities of a step graphon or a finite graph", false, false);
    auto* g1 = sub->add_option("--graphon", d_graphon, "StepGraphon JSON file")->check(CLI::ExistingFile);
    auto* g2 = sub->add_option("--graph", d_graph, "Finite graph: edge list or JSON adjacency")->check(CLI::ExistingFile);
    g1->excludes(g2);
    sub->add_option("--pattern", d_patterns, "Builtin pattern name (default: edge and triangle)")->take_all();
    sub->add_option("--pattern-file", d_pattern_files, "SubgraphPattern JSON file")->take_all();
    sub->add_option("--max-pattern-vertices", d_max_vertices, "Cap on pattern size for graphon densities");
    handlers["density"] = [&](const Output& o) {
      if (d_graphon.empty() == d_graph.empty()) throw InputError("density needs exactly one of --graphon or --graph");
      std::vector<SubgraphPattern> patterns;
      for (const auto& n : d_patterns) patterns.push_back(SubgraphPattern::from_name(n));
      for (const auto& f : d_pattern_files) patterns.push_back(io::pattern_from_json(io::read_json(f), f));
      if (patterns.empty()) patterns = {SubgraphPattern::edge(), SubgraphPattern::triangle()};
      json list = json::array();
      if (!d_graphon.empty()) {
        const StepGraphon q = io::graphon_from_json(io::read_json(d_graphon), d_graphon);
        for (const auto& p : patterns)
          list.push_back({{"pattern", io::to_json(p)}, {"value", subgraph_density(q, p, {d_max_vertices})}});
        o.emit(json{{"kind", "homomorphism"}, {"densities", list}});
      } else {
        const FiniteGraph g = io::read_graph(d_graph);
        for (const auto& p : patterns) {
          const Rational r = finite_density(g, p);
          list.push_back({{"pattern", io::to_json(p)}, {"value", r.value()}, {"exact", io::to_json(r)}});
        }
        o.emit(json{{"kind", "injective"}, {"nodes", g.node_count()}, {"densities", list}});
      }
      return kSuccess;
    };
  }

  // entropy
  std::string e_graphon;
  double e_merge_tol = 1e-4;
  {
    auto* sub = subcommand("entropy", "Entropy of a step graphon", false, false);
    sub->add_option("--graphon", e_graphon, "StepGraphon JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--merge-tol", e_merge_tol, "Block merge tolerance for the canonical form");
    handlers["entropy"] = [&](const Output& o) {
      const StepGraphon q = io::graphon_from_json(io::read_json(e_graphon), e_graphon);
      const StepGraphon c = canonicalize(q, e_merge_tol);
      o.emit(json{{"entropy", graphon_entropy(q)},
                  {"edge_density", q.edge_density()},
                  {"podality", c.podality()},
                  {"canonical", io::to_json(c)}});
      return kSuccess;
    };
  }

  // optimize
  std::string o_model = "edge-triangle";
  double o_eps = 0.0, o_tau = 0.0;
  int o_podality = 0;
  OptimizerOptions o_opts;
  {
    auto* sub = subcommand("optimize", "Maximize graphon entropy under two density constraints", true, true);
    sub->add_option("--model", o_model, "edge-triangle, edge-kstar:K or half-blip");
    sub->add_option("--eps", o_eps, "Target for the first pattern")->required();
    sub->add_option("--tau", o_tau, "Target for the second pattern")->required();
    sub->add_option("--podality", o_podality, "Fixed podality; 0 escalates up to --max-podality");
    sub->add_option("--max-podality", o_opts.max_podality, "Largest podality tried when escalating");
    sub->add_option("--starts", o_opts.starts, "Random starts per podality");
    sub->add_option("--feasibility-tol", o_opts.feasibility_tol, "Largest accepted constraint residual");
    sub->add_option("--merge-tol", o_opts.merge_tol, "Block merge tolerance for the canonical form");
    handlers["optimize"] = [&](const Output& o) {
      o_opts.seed = commons["optimize"].seed;
      o_opts.threads = commons["optimize"].threads;
      const ConstraintVector cv = model_constraints(o_model, o_eps, o_tau, 0.0);
      const OptimizerResult r =
          o_podality > 0 ? maximize_entropy(cv, o_podality, o_opts) : constrained_entropy(cv, o_opts);
      o.emit(io::to_json(r));
      if (!r.feasible) {
        o.err << "infeasible: no graphon met the constraints within " << o_opts.feasibility_tol << "\n";
        return kInfeasible;
      }
      return kSuccess;
    };
  }

  // scan
  std::string s_model = "edge-triangle", s_grid = "12x12", s_svg, s_color = "podality";
  ScanGrid s_range{0.05, 0.95, 0.0, 0.95, 12, 12, false};
  ScanOptions s_opts;
  s_opts.optimizer.starts = 8;
  s_opts.optimizer.max_podality = 4;
  {
    auto* sub = subcommand("scan", "Grid scan of the constrained-entropy optimizer", true, true);
    sub->add_option("--model", s_model, "edge-triangle, edge-kstar:K or half-blip");
    sub->add_option("--grid", s_grid, "Cells per axis, NXxNY");
    sub->add_option("--x-min", s_range.x_min);
    sub->add_option("--x-max", s_range.x_max);
    sub->add_option("--y-min", s_range.y_min);
    sub->add_option("--y-max", s_range.y_max);
    sub->add_flag("--relative-to-er", s_range.y_relative_to_er, "y is an offset from the Erdos-Renyi curve");
    sub->add_option("--starts", s_opts.optimizer.starts, "Random starts per podality");
    sub->add_option("--max-podality", s_opts.optimizer.max_podality, "Largest podality tried");
    sub->add_option("--spike-factor", s_opts.spike_factor, "Transition threshold over the median derivative");
    sub->add_option("--svg", s_svg, "Also write an SVG heatmap here");
    sub->add_option("--color", s_color, "Heatmap coloring")->check(CLI::IsMember({"entropy", "podality"}));
    handlers["scan"] = [&](const Output& o) {
      const auto [nx, ny] = parse_grid(s_grid);
      s_range.nx = nx;
      s_range.ny = ny;
      s_opts.optimizer.seed = commons["scan"].seed;
      s_opts.optimizer.threads = commons["scan"].threads;
      const PhaseMap map = phase_scan(ModelSpec::from_name(s_model), s_range, s_opts);
      o.emit(io::phase_map_csv(map));
      if (!s_svg.empty())
        io::write_text(s_svg, io::phase_map_svg(map, s_color == "entropy" ? io::HeatmapColor::Entropy
                                                                          : io::HeatmapColor::Podality));
      return kSuccess;
    };
  }

  // reference
  double r_eps = 0.0, r_tau = 0.0;
  {
    auto* sub = subcommand("reference", "Closed-form edge/triangle reference graphon", false, false);
    sub->add_option("--eps", r_eps, "Edge density")->required();
    sub->add_option("--tau", r_tau, "Triangle density")->required();
    handlers["reference"] = [&](const Output& o) {
      const StepGraphon q = reference_construction(r_eps, r_tau);
      o.emit(json{{"graphon", io::to_json(q)},
                  {"entropy", graphon_entropy(q)},
                  {"edge_density", subgraph_density(q, SubgraphPattern::edge())},
                  {"triangle_density", subgraph_density(q, SubgraphPattern::triangle())}});
      return kSuccess;
    };
  }

  // sample
  std::string m_model = "edge-triangle", m_dir = "samples";
  double m_eps = 0.0, m_tau = 0.0, m_delta = 0.0;
  std::size_t m_n = 0, m_samples = 10, m_chains = 1, m_blocks = 0;
  std::int64_t m_burn_in = -1, m_interval = -1;
  {
    auto* sub = subcommand("sample", "Microcanonical edge-toggle chains on n-node graphs", true, true);
    sub->add_option("--model", m_model, "edge-triangle or edge-kstar:K");
    sub->add_option("--n", m_n, "Nodes")->required();
    sub->add_option("--eps", m_eps, "Target for the first pattern")->required();
    sub->add_option("--tau", m_tau, "Target for the second pattern")->required();
    sub->add_option("--delta", m_delta, "Window half-width")->required();
    sub->add_option("--samples", m_samples, "Samples per chain");
    sub->add_option("--burn-in", m_burn_in, "Burn-in proposals (-1: 50 n^2)");
    sub->add_option("--interval", m_interval, "Proposals between samples (-1: n^2)");
    sub->add_option("--chains", m_chains, "Independent chains");
    sub->add_option("--out-dir", m_dir, "Directory for edge lists and manifest.csv");
    sub->add_option("--estimate-blocks", m_blocks, "Fit an m-block graphon to each chain's last sample (0: off)");
    handlers["sample"] = [&](const Output& o) {
      ChainConfig cfg;
      cfg.n = m_n;
      cfg.constraints = model_constraints(m_model, m_eps, m_tau, m_delta);
      cfg.seed = commons["sample"].seed;
      if (m_burn_in >= 0) cfg.burn_in = static_cast<std::uint64_t>(m_burn_in);
      if (m_interval >= 0) cfg.interval = static_cast<std::uint64_t>(m_interval);
      cfg.samples = m_samples;
      cfg.validate();
      std::vector<ChainResult> chains;
      try {
        chains = sample_chains(cfg, m_chains, commons["sample"].threads);
      } catch (const DomainError& e) {
        o.err << "infeasible: " << e.what() << "\n";
        return kInfeasible;
      }
      fs::create_directories(m_dir);
      std::vector<std::vector<std::string>> files(chains.size());
      json summary = json::array();
      for (std::size_t c = 0; c < chains.size(); ++c) {
        const auto& ch = chains[c];
        for (std::size_t s = 0; s < ch.samples.size(); ++s) {
          const std::string name = "chain" + std::to_string(c) + "_sample" + std::to_string(s) + ".edges";
          io::write_text(fs::path(m_dir) / name, io::to_edge_list(ch.samples[s]));
          files[c].push_back(name);
        }
        json entry{{"chain", c},
                   {"seed", derive_seed(cfg.seed, c)},
                   {"proposals", ch.proposals},
                   {"accepted", ch.accepted},
                   {"stalled", ch.stalled},
                   {"warnings", ch.warnings}};
        if (m_blocks > 0 && !ch.samples.empty()) {
          const BlockEstimate b = estimate_block_structure(ch.samples.back(), m_blocks, cfg.seed);
          entry["block_estimate"] = {{"graphon", io::to_json(canonicalize(b.graphon))}, {"objective", b.objective}};
        }
        for (const auto& w : ch.warnings) o.err << "warning: chain " << c << ": " << w << "\n";
        summary.push_back(entry);
      }
      io::write_text(fs::path(m_dir) / "manifest.csv", io::sample_manifest_csv(chains, cfg.constraints, files));
      o.emit(json{{"n", cfg.n},
                  {"burn_in", cfg.resolved_burn_in()},
                  {"interval", cfg.resolved_interval()},
                  {"out_dir", m_dir},
                  {"chains", summary}});
      return kSuccess;
    };
  }

  // enumerate
  std::string z_model = "edge-triangle", z_hist;
  double z_eps = 0.0, z_tau = 0.0, z_delta = 0.0;
  std::size_t z_n = 0;
  {
    auto* sub = subcommand("enumerate", "Exact count of labeled graphs inside the density windows", false, true);
    sub->add_option("--model", z_model, "edge-triangle or edge-kstar:K");
    sub->add_option("--n", z_n, "Nodes (at most 7)")->required();
    sub->add_option("--eps", z_eps, "Target for the first pattern")->required();
    sub->add_option("--tau", z_tau, "Target for the second pattern")->required();
    sub->add_option("--delta", z_delta, "Window half-width")->required();
    sub->add_option("--histogram", z_hist, "Write the (edges, triangles) histogram CSV here");
    handlers["enumerate"] = [&](const Output& o) {
      const EnumerationReport r =
          enumerate_Z(z_n, model_constraints(z_model, z_eps, z_tau, z_delta), commons["enumerate"].threads);
      o.emit(io::to_json(r));
      if (!z_hist.empty()) io::write_text(z_hist, io::histogram_csv(r));
      return kSuccess;
    };
  }

  // perm-density
  std::string p_perm, p_perm_file, p_permuton, p_method = "exact";
  std::vector<std::string> p_patterns;
  std::uint64_t p_samples = 100000;
  {
    auto* sub = subcommand("perm-density", "Pattern densities of a permutation or grid permuton", true, false);
    auto* a = sub->add_option("--perm", p_perm, "Permutation values, e.g. \"2 4 1 3\"");
    auto* b = sub->add_option("--perm-file", p_perm_file, "Permutation file")->check(CLI::ExistingFile);
    auto* c = sub->add_option("--permuton", p_permuton, "GridPermuton JSON file")->check(CLI::ExistingFile);
    a->excludes(b)->excludes(c);
    b->excludes(c);
    sub->add_option("--pattern", p_patterns, "Pattern such as 12, 132 or *2*")->required()->take_all();
    sub->add_option("--method", p_method, "Permuton evaluation")->check(CLI::IsMember({"exact", "montecarlo"}));
    sub->add_option("--samples", p_samples, "Monte Carlo samples");
    handlers["perm-density"] = [&](const Output& o) {
      json list = json::array();
      if (!p_permuton.empty()) {
        const GridPermuton g = io::permuton_from_json(io::read_json(p_permuton), p_permuton);
        for (const auto& text : p_patterns) {
          const StarPattern tau = StarPattern::parse(text);
          if (p_method == "exact") {
            list.push_back({{"pattern", tau.to_string()}, {"value", permuton_pattern_density(g, tau)}});
          } else {
            const auto mc = permuton_pattern_density_mc(g, tau, p_samples, commons["perm-density"].seed);
            list.push_back({{"pattern", tau.to_string()},
                            {"value", mc.value},
                            {"standard_error", mc.standard_error},
                            {"samples", mc.samples}});
          }
        }
        o.emit(json{{"kind", "permuton"}, {"method", p_method}, {"densities", list}});
        return kSuccess;
      }
      if (p_perm.empty() == p_perm_file.empty())
        throw InputError("perm-density needs one of --perm, --perm-file or --permuton");
      const Permutation pi = p_perm.empty() ? io::permutation_from_text(io::read_text(p_perm_file), p_perm_file)
                                            : io::permutation_from_text(p_perm, "--perm");
      for (const auto& text : p_patterns) {
        const StarPattern tau = StarPattern::parse(text);
        const Rational r = perm_pattern_density(pi, tau);
        list.push_back({{"pattern", tau.to_string()}, {"value", r.value()}, {"exact", io::to_json(r)}});
      }
      o.emit(json{{"kind", "permutation"}, {"n", pi.size()}, {"densities", list}});
      return kSuccess;
    };
  }

  // perm-optimize
  std::vector<std::string> q_patterns;
  std::vector<double> q_alphas;
  std::size_t q_k = 20;
  PermutonOptions q_opts;
  {
    auto* sub = subcommand("perm-optimize", "Maximize grid permuton entropy under pattern densities", true, true);
    sub->add_option("--pattern", q_patterns, "Constrained pattern (repeat with --alpha)")->take_all();
    sub->add_option("--alpha", q_alphas, "Target density for the matching --pattern")->take_all();
    sub->add_option("--k", q_k, "Grid resolution (at most 40)");
    sub->add_option("--starts", q_opts.starts, "Starts (the first is uniform)");
    sub->add_option("--feasibility-tol", q_opts.feasibility_tol, "Largest accepted constraint residual");
    handlers["perm-optimize"] = [&](const Output& o) {
      q_opts.seed = commons["perm-optimize"].seed;
      q_opts.threads = commons["perm-optimize"].threads;
      const PermutonResult r = maximize_permuton_entropy(perm_constraints(q_patterns, q_alphas), q_k, q_opts);
      o.emit(io::to_json(r));
      if (r.degenerate) o.err << "warning: optimum approaches a singular permuton at this resolution\n";
      if (!r.feasible) {
        o.err << "infeasible: no permuton met the constraints within " << q_opts.feasibility_tol << "\n";
        return kInfeasible;
      }
      return kSuccess;
    };
  }

  // perm-count
  std::vector<std::string> c_patterns;
  std::vector<double> c_alphas;
  std::size_t c_n = 0;
  double c_delta = 0.0;
  {
    auto* sub = subcommand("perm-count", "Exact count of permutations inside pattern-density windows", false, true);
    sub->add_option("--n", c_n, "Permutation length (at most 9)")->required();
    sub->add_option("--pattern", c_patterns, "Constrained pattern (repeat with --alpha)")->take_all();
    sub->add_option("--alpha", c_alphas, "Target density for the matching --pattern")->take_all();
    sub->add_option("--delta", c_delta, "Window half-width")->required();
    handlers["perm-count"] = [&](const Output& o) {
      o.emit(io::to_json(
          count_constrained_perms(c_n, perm_constraints(c_patterns, c_alphas), c_delta, commons["perm-count"].threads)));
      return kSuccess;
    };
  }

  // cut-distance
  std::string k_a, k_b;
  int k_dbar = 0;
  {
    auto* sub = subcommand("cut-distance", "Block-permutation cut distance between two step graphons", false, false);
    sub->add_option("--a", k_a, "First StepGraphon JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--b", k_b, "Second StepGraphon JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--dbar-order", k_dbar, "Also report the density distance up to this order (0: off)");
    handlers["cut-distance"] = [&](const Output& o) {
      const StepGraphon a = io::graphon_from_json(io::read_json(k_a), k_a);
      const StepGraphon b = io::graphon_from_json(io::read_json(k_b), k_b);
      json j{{"cut_distance_upper", cut_distance_upper(a, b)}};
      if (k_dbar > 0) {
        const DbarResult d = dbar_distance(a, b, k_dbar);
        j["dbar"] = {{"value", d.value}, {"max_order", d.max_order}, {"terms", d.terms}};
      }
      o.emit(j);
      return kSuccess;
    };
  }

  // Locate the subcommand and merge the config file.
  // Options all belong to subcommands, so only the first token can name one.
  std::string sub_name;
  std::size_t sub_pos = rest.size();
  if (!rest.empty() && (app.get_subcommand_no_throw(rest[0]) != nullptr || (!config_path && rest[0][0] != '-'))) {
    sub_name = rest[0];
    sub_pos = 0;
  }
  std::vector<std::string> tokens;
  if (config_path) {
    const json cfg = io::read_json(*config_path);
    if (!cfg.is_object()) throw InputError(*config_path + ": field '<root>': expected an object");
    json options = json::object();
    std::string cfg_sub;
    for (const auto& [key, value] : cfg.items()) {
      if (key == "tool" || key == "version" || key == "threads_used") continue;
      if (key == "subcommand") {
        if (!value.is_string()) throw InputError(*config_path + ": field 'subcommand': expected a string");
        cfg_sub = value.get<std::string>();
      } else if (key == "options") {
        if (!value.is_object()) throw InputError(*config_path + ": field 'options': expected an object");
        for (const auto& [k2, v2] : value.items()) options[k2] = v2;
      } else {
        options[key] = value;
      }
    }
    if (sub_name.empty()) sub_name = cfg_sub;
    if (!cfg_sub.empty() && cfg_sub != sub_name)
      throw InputError(*config_path + ": field 'subcommand': '" + cfg_sub + "' does not match '" + sub_name + "'");
    CLI::App* sub = app.get_subcommand_no_throw(sub_name);
    if (sub == nullptr) throw InputError("unknown subcommand '" + sub_name + "'");
    tokens = config_tokens(options, sub, *config_path, rest);
  }
  std::vector<std::string> argv_tokens;
  if (!sub_name.empty()) argv_tokens.push_back(sub_name);
  argv_tokens.insert(argv_tokens.end(), tokens.begin(), tokens.end());
  for (std::size_t i = sub_pos == 0 ? 1 : 0; i < rest.size(); ++i) argv_tokens.push_back(rest[i]);

  try {
    std::vector<std::string> reversed(argv_tokens.rbegin(), argv_tokens.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kError;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  const Common& common = commons[name];
  json manifest{{"tool", kTool},
                {"version", PHASES_VERSION},
                {"subcommand", name},
                {"options", resolved_options(sub)}};
  if (sub->get_option_no_throw("--threads") != nullptr) manifest["threads_used"] = resolve_threads(common.threads);
  std::string manifest_path = common.manifest;
  if (manifest_path.empty())
    manifest_path = common.out.empty() ? std::string(kTool) + "-" + name + ".manifest.json"
                                       : common.out + ".manifest.json";
  io::write_text(manifest_path, manifest.dump(2) + "\n");

  return handlers.at(name)(Output{out, err, common});
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return run_parsed(args, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kError;
}

}  // namespace phases::cli
