#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gibbslab/config_space.hpp"
#include "gibbslab/transfer_operator.hpp"

namespace gibbslab {

// Declarative function-on-words description, kept in the raw file form so a
// document round-trips losslessly. System-dependent checks (admissibility
// of an indicator word, value vector length) run in materialize.
struct PotentialSpec {
  enum class Kind { Constant, Expression, Indicator, Explicit };

  Kind kind = Kind::Constant;
  double value = 0.0;  // Constant

  std::string word;  // Indicator: 1 on the cylinder of this word

  int depth = 1;  // Expression / Explicit

  // Expression: value(w) = offset + sum_j coefficients[j] * points[w_j].
  double offset = 0.0;
  std::vector<double> coefficients;

  // Explicit: either one value per admissible word in table order, or a
  // word-keyed list. Exactly one of the two is populated.
  bool values_by_word = false;
  std::vector<double> values;
  std::vector<std::pair<std::string, double>> named_values;

  bool operator==(const PotentialSpec&) const = default;
};

DepthKFunction materialize(WordSpace& ws, const PotentialSpec& spec);

// Inverse of format_word for an n-letter grid.
Word parse_word(int grid_size, const std::string& text);

struct SystemDocument {
  std::string name;

  bool has_grid = false;
  bool metric_uniform = true;  // coordinate metric vs explicit matrix
  bool nu_uniform = true;      // uniform weights vs explicit vector
  std::string a_expr;          // named interaction; empty = matrix form
  SpinGrid grid;
  AdmissibilitySystem system;

  bool has_potential = false;
  PotentialSpec potential;

  std::vector<std::pair<std::string, PotentialSpec>> observables;

  // Defaults applied while loading, e.g. missing weights.
  std::vector<std::string> notices;
};

// Parses and validates a document. `origin` names the source in messages.
SystemDocument parse_system_text(const std::string& text,
                                 const std::string& origin);

// Full system file: grid, interaction and potential are required.
SystemDocument load_system(const std::string& path);

// Observable-only file in the same schema; requires a nonempty observables
// table and must not carry grid or potential sections.
SystemDocument load_observable_file(const std::string& path);

// Canonical emission of the schema; parse(dump(parse(x))) preserves content.
std::string dump_system(const SystemDocument& doc);

}  // namespace gibbslab
