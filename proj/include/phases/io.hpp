#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "phases/graphon.hpp"
#include "phases/optimizer.hpp"
#include "phases/permuton.hpp"
#include "phases/sampler.hpp"

namespace phases::io {

using json = nlohmann::ordered_json;

/// Reads a whole file; InputError names the path on failure.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
/// Parses JSON text. `source` names the file in error messages.
json parse_json(const std::string& text, const std::string& source);
json read_json(const std::filesystem::path& path);

// Every *_from_json reports malformed input as InputError naming `source`
// and the offending field.

json to_json(const StepGraphon& q);
StepGraphon graphon_from_json(const json& j, const std::string& source);

/// {"k":4,"edges":[[1,2],...],"absent":[[2,3],...]}, vertices 1-based.
json to_json(const SubgraphPattern& p);
SubgraphPattern pattern_from_json(const json& j, const std::string& source);

/// Edge-list text: one "u v" pair per line, 0-indexed; blank lines and lines
/// starting with '#' are skipped. The node count is one more than the largest
/// index unless a "# nodes N" line is present.
FiniteGraph graph_from_edge_list(const std::string& text, const std::string& source);
std::string to_edge_list(const FiniteGraph& g);
/// {"n":N,"adjacency":[[0,1,...],...]}; also accepts a bare adjacency matrix.
json adjacency_json(const FiniteGraph& g);
FiniteGraph graph_from_json(const json& j, const std::string& source);
/// Chooses JSON when the text starts with '{' or '[', edge list otherwise.
FiniteGraph read_graph(const std::filesystem::path& path);

json to_json(const Rational& r);
json to_json(const CountWindow& w);

json to_json(const OptimizerResult& r);
OptimizerResult optimizer_result_from_json(const json& j, const std::string& source);

json to_json(const EnumerationReport& r);
EnumerationReport enumeration_report_from_json(const json& j, const std::string& source);
/// Columns: edges,triangles,graphs
std::string histogram_csv(const EnumerationReport& r);

/// One row per sample: chain,sample,step,<one density column per constraint>,file
std::string sample_manifest_csv(const std::vector<ChainResult>& chains,
                                const ConstraintVector& constraints,
                                const std::vector<std::vector<std::string>>& files);

/// Permutation file: one line of integers.
Permutation permutation_from_text(const std::string& text, const std::string& source);

/// {"k":K,"g":[[...],...]} with g[i][j] the density on cell (i, j).
json to_json(const GridPermuton& p);
GridPermuton permuton_from_json(const json& j, const std::string& source);

json to_json(const PermutonResult& r);
PermutonResult permuton_result_from_json(const json& j, const std::string& source);

json to_json(const PermutationCount& c);
PermutationCount permutation_count_from_json(const json& j, const std::string& source);

/// Columns: ix,iy,x,y,feasible,entropy,podality,symmetric_bipodal,constant,
/// transition,d_x,d_y,derivative_norm,p0..p{P-1}. Parameters are the canonical
/// masses followed by the row-major upper triangle of values, padded to the
/// map-wide podality P; infeasible cells leave numeric fields empty.
std::string phase_map_csv(const PhaseMap& map);

enum class HeatmapColor { Entropy, Podality };

/// Rect grid, x to the right and y upward. Linear ramp through the stops
/// #440154 #3b528b #21918c #5ec962 #fde725; infeasible cells #d9d9d9;
/// transition cells outlined in #e31a1c.
std::string phase_map_svg(const PhaseMap& map, HeatmapColor color);

}  // namespace phases::io
