#include "gibbslab/system_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gibbslab/errors.hpp"
#include "gibbslab/reporting.hpp"

namespace gibbslab {
namespace {

using ojson = nlohmann::ordered_json;

int line_of_offset(const std::string& text, std::size_t pos) {
  pos = std::min(pos, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

[[noreturn]] void parse_fail(const std::string& origin, const std::string& field,
                             const std::string& what) {
  fail(errc::parse_error, origin + ": field " + field + ": " + what);
}

struct Violations {
  std::string origin;
  std::vector<std::string> list;

  void add(std::string v) { list.push_back(std::move(v)); }
  void raise_if_any() const {
    if (list.empty()) return;
    std::string msg = origin + ": ";
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (i > 0) msg += "; ";
      msg += list[i];
    }
    fail(errc::validation_error, msg);
  }
};

void reject_unknown(const ojson& obj, const std::string& path,
                    std::initializer_list<const char*> allowed,
                    const std::string& origin) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      parse_fail(origin, path.empty() ? it.key() : path + "." + it.key(),
                 "unknown field");
    }
  }
}

const ojson& require_field(const ojson& obj, const std::string& path,
                           const char* key, const std::string& origin) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    parse_fail(origin, path.empty() ? key : path + "." + key,
               "required field missing");
  }
  return *it;
}

double as_double(const ojson& v, const std::string& path,
                 const std::string& origin) {
  if (!v.is_number()) parse_fail(origin, path, "expected a number");
  return v.get<double>();
}

std::string as_string(const ojson& v, const std::string& path,
                      const std::string& origin) {
  if (!v.is_string()) parse_fail(origin, path, "expected a string");
  return v.get<std::string>();
}

std::vector<double> as_double_array(const ojson& v, const std::string& path,
                                    const std::string& origin) {
  if (!v.is_array()) parse_fail(origin, path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(as_double(v[i], path + "[" + std::to_string(i) + "]", origin));
  }
  return out;
}

std::vector<std::vector<double>> as_matrix(const ojson& v,
                                           const std::string& path,
                                           const std::string& origin) {
  if (!v.is_array()) parse_fail(origin, path, "expected an array of rows");
  std::vector<std::vector<double>> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(
        as_double_array(v[i], path + "[" + std::to_string(i) + "]", origin));
  }
  return out;
}

std::vector<std::vector<double>> expr_matrix(const std::vector<double>& pts,
                                             const std::string& expr,
                                             const std::string& path,
                                             const std::string& origin) {
  auto apply = [&](double a, double b) -> double {
    if (expr == "product") return a * b;
    if (expr == "sum") return a + b;
    if (expr == "difference") return a - b;
    if (expr == "abs_difference") return std::abs(a - b);
    if (expr == "max") return std::max(a, b);
    if (expr == "min") return std::min(a, b);
    if (expr == "zero") return 0.0;
    parse_fail(origin, path,
               "unknown expression '" + expr +
                   "' (expected product, sum, difference, abs_difference, "
                   "max, min or zero)");
  };
  std::size_t n = pts.size();
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m[i][j] = apply(pts[i], pts[j]);
  }
  return m;
}

PotentialSpec parse_potential(const ojson& p, const std::string& path,
                              const std::string& origin) {
  if (!p.is_object()) parse_fail(origin, path, "expected an object");
  PotentialSpec spec;
  std::string kind =
      as_string(require_field(p, path, "kind", origin), path + ".kind", origin);
  if (kind == "constant") {
    reject_unknown(p, path, {"kind", "value"}, origin);
    spec.kind = PotentialSpec::Kind::Constant;
    spec.value = as_double(require_field(p, path, "value", origin),
                           path + ".value", origin);
  } else if (kind == "expression") {
    reject_unknown(p, path, {"kind", "depth", "offset", "coefficients"},
                   origin);
    spec.kind = PotentialSpec::Kind::Expression;
    const ojson& d = require_field(p, path, "depth", origin);
    if (!d.is_number_integer()) {
      parse_fail(origin, path + ".depth", "expected an integer");
    }
    spec.depth = d.get<int>();
    if (spec.depth < 1 || spec.depth > 32) {
      parse_fail(origin, path + ".depth", "depth must be in [1, 32]");
    }
    if (auto it = p.find("offset"); it != p.end()) {
      spec.offset = as_double(*it, path + ".offset", origin);
    }
    spec.coefficients =
        as_double_array(require_field(p, path, "coefficients", origin),
                        path + ".coefficients", origin);
    if (static_cast<int>(spec.coefficients.size()) != spec.depth) {
      parse_fail(origin, path + ".coefficients",
                 "expected exactly depth = " + std::to_string(spec.depth) +
                     " entries");
    }
  } else if (kind == "indicator") {
    reject_unknown(p, path, {"kind", "word"}, origin);
    spec.kind = PotentialSpec::Kind::Indicator;
    spec.word = as_string(require_field(p, path, "word", origin),
                          path + ".word", origin);
    if (spec.word.empty()) {
      parse_fail(origin, path + ".word", "word must be nonempty");
    }
  } else if (kind == "explicit") {
    reject_unknown(p, path, {"kind", "depth", "values"}, origin);
    spec.kind = PotentialSpec::Kind::Explicit;
    const ojson& d = require_field(p, path, "depth", origin);
    if (!d.is_number_integer()) {
      parse_fail(origin, path + ".depth", "expected an integer");
    }
    spec.depth = d.get<int>();
    if (spec.depth < 1 || spec.depth > 32) {
      parse_fail(origin, path + ".depth", "depth must be in [1, 32]");
    }
    const ojson& vals = require_field(p, path, "values", origin);
    if (vals.is_array()) {
      spec.values_by_word = false;
      spec.values = as_double_array(vals, path + ".values", origin);
    } else if (vals.is_object()) {
      spec.values_by_word = true;
      for (auto it = vals.begin(); it != vals.end(); ++it) {
        spec.named_values.emplace_back(
            it.key(), as_double(it.value(), path + ".values." + it.key(),
                                origin));
      }
    } else {
      parse_fail(origin, path + ".values",
                 "expected an array or a word-keyed object");
    }
  } else {
    parse_fail(origin, path + ".kind",
               "unknown kind '" + kind +
                   "' (expected constant, expression, indicator or explicit)");
  }
  return spec;
}

ojson potential_to_json(const PotentialSpec& spec) {
  ojson p = ojson::object();
  switch (spec.kind) {
    case PotentialSpec::Kind::Constant:
      p["kind"] = "constant";
      p["value"] = spec.value;
      break;
    case PotentialSpec::Kind::Expression:
      p["kind"] = "expression";
      p["depth"] = spec.depth;
      p["offset"] = spec.offset;
      p["coefficients"] = spec.coefficients;
      break;
    case PotentialSpec::Kind::Indicator:
      p["kind"] = "indicator";
      p["word"] = spec.word;
      break;
    case PotentialSpec::Kind::Explicit:
      p["kind"] = "explicit";
      p["depth"] = spec.depth;
      if (spec.values_by_word) {
        ojson vals = ojson::object();
        for (const auto& [w, v] : spec.named_values) vals[w] = v;
        p["values"] = std::move(vals);
      } else {
        p["values"] = spec.values;
      }
      break;
  }
  return p;
}

}  // namespace

Word parse_word(int grid_size, const std::string& text) {
  Word w;
  if (grid_size <= 10) {
    for (char c : text) {
      if (c < '0' || c > '9') {
        fail(errc::validation_error,
             "word '" + text + "' contains a non-digit letter");
      }
      w.push_back(c - '0');
    }
  } else {
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, '-')) {
      try {
        std::size_t used = 0;
        int v = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        w.push_back(v);
      } catch (const std::exception&) {
        fail(errc::validation_error,
             "word '" + text + "' has a malformed letter '" + tok + "'");
      }
    }
  }
  for (int letter : w) {
    if (letter < 0 || letter >= grid_size) {
      fail(errc::validation_error,
           "word '" + text + "' uses a letter outside the grid");
    }
  }
  if (w.empty()) {
    fail(errc::validation_error, "word '" + text + "' is empty");
  }
  return w;
}

DepthKFunction materialize(WordSpace& ws, const PotentialSpec& spec) {
  const AdmissibilitySystem& sys = ws.system();
  const int n = sys.grid.size();
  switch (spec.kind) {
    case PotentialSpec::Kind::Constant:
      return constant_function(ws, 1, spec.value);
    case PotentialSpec::Kind::Expression: {
      const AdmissibleWordTable& t = ws.table(spec.depth);
      DepthKFunction f{spec.depth,
                       std::vector<double>(static_cast<std::size_t>(t.size()))};
      for (std::int64_t i = 0; i < t.size(); ++i) {
        WordView w = t.word(i);
        double v = spec.offset;
        for (int j = 0; j < spec.depth; ++j) {
          v += spec.coefficients[static_cast<std::size_t>(j)] *
               sys.grid.points[static_cast<std::size_t>(w[static_cast<std::size_t>(j)])];
        }
        f.values[static_cast<std::size_t>(i)] = v;
      }
      return f;
    }
    case PotentialSpec::Kind::Indicator: {
      Word w = parse_word(n, spec.word);
      if (!sys.word_admissible(w)) {
        fail(errc::validation_error,
             "indicator word '" + spec.word + "' is not admissible");
      }
      const AdmissibleWordTable& t = ws.table(static_cast<int>(w.size()));
      DepthKFunction f{static_cast<int>(w.size()),
                       std::vector<double>(static_cast<std::size_t>(t.size()), 0.0)};
      f.values[static_cast<std::size_t>(t.index_of(w))] = 1.0;
      return f;
    }
    case PotentialSpec::Kind::Explicit: {
      const AdmissibleWordTable& t = ws.table(spec.depth);
      DepthKFunction f{spec.depth,
                       std::vector<double>(static_cast<std::size_t>(t.size()), 0.0)};
      if (spec.values_by_word) {
        std::vector<char> seen(static_cast<std::size_t>(t.size()), 0);
        for (const auto& [key, v] : spec.named_values) {
          Word w = parse_word(n, key);
          if (static_cast<int>(w.size()) != spec.depth) {
            fail(errc::validation_error,
                 "value word '" + key + "' does not have the declared depth " +
                     std::to_string(spec.depth));
          }
          std::int64_t idx = t.find(w);
          if (idx < 0) {
            fail(errc::validation_error,
                 "value word '" + key + "' is not admissible");
          }
          if (seen[static_cast<std::size_t>(idx)]) {
            fail(errc::validation_error,
                 "duplicate value for word '" + key + "'");
          }
          seen[static_cast<std::size_t>(idx)] = 1;
          f.values[static_cast<std::size_t>(idx)] = v;
        }
        for (std::int64_t i = 0; i < t.size(); ++i) {
          if (!seen[static_cast<std::size_t>(i)]) {
            fail(errc::validation_error,
                 "missing value for word '" +
                     format_word(sys.grid, t.word(i)) + "'");
          }
        }
      } else {
        if (static_cast<std::int64_t>(spec.values.size()) != t.size()) {
          fail(errc::validation_error,
               "expected " + std::to_string(t.size()) + " values for depth " +
                   std::to_string(spec.depth) + ", got " +
                   std::to_string(spec.values.size()));
        }
        f.values = spec.values;
      }
      return f;
    }
  }
  fail(errc::validation_error, "unreachable potential kind");
}

SystemDocument parse_system_text(const std::string& text,
                                 const std::string& origin) {
  ojson root;
  try {
    root = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    fail(errc::parse_error, origin + ": line " +
                                std::to_string(line_of_offset(text, e.byte)) +
                                ": malformed JSON");
  }
  if (!root.is_object()) {
    parse_fail(origin, "(document)", "expected a top-level object");
  }
  reject_unknown(root, "",
                 {"version", "name", "grid", "interaction", "potential",
                  "observables"},
                 origin);

  Violations bad{origin, {}};

  const ojson& version = require_field(root, "", "version", origin);
  if (!version.is_number_integer()) {
    parse_fail(origin, "version", "expected an integer");
  }
  if (version.get<int>() != 1) {
    bad.add("version: unsupported value " + std::to_string(version.get<int>()) +
            " (this loader reads version 1)");
  }

  SystemDocument doc;
  if (auto it = root.find("name"); it != root.end()) {
    doc.name = as_string(*it, "name", origin);
  }

  bool has_grid_section = root.find("grid") != root.end();
  bool has_interaction = root.find("interaction") != root.end();
  if (has_grid_section != has_interaction) {
    parse_fail(origin, has_grid_section ? "interaction" : "grid",
               "grid and interaction must be given together");
  }

  std::vector<double> points;
  std::vector<std::vector<double>> metric;
  std::vector<double> nu;
  std::vector<std::vector<double>> a_matrix;
  std::vector<Interval> intervals;

  if (has_grid_section) {
    doc.has_grid = true;
    const ojson& g = root["grid"];
    if (!g.is_object()) parse_fail(origin, "grid", "expected an object");
    reject_unknown(g, "grid", {"points", "metric", "nu_weights"}, origin);
    points = as_double_array(require_field(g, "grid", "points", origin),
                             "grid.points", origin);
    if (points.empty()) bad.add("grid.points: must be nonempty");
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!std::isfinite(points[i]) || points[i] < 0.0 || points[i] > 1.0) {
        bad.add("grid.points[" + std::to_string(i) +
                "]: coordinates must lie in [0, 1]");
      }
    }

    if (auto it = g.find("metric"); it != g.end()) {
      if (it->is_string()) {
        if (it->get<std::string>() != "uniform") {
          parse_fail(origin, "grid.metric",
                     "expected \"uniform\" or a matrix");
        }
        doc.metric_uniform = true;
      } else {
        doc.metric_uniform = false;
        metric = as_matrix(*it, "grid.metric", origin);
        if (metric.size() != points.size()) {
          bad.add("grid.metric: expected " + std::to_string(points.size()) +
                  " rows");
        } else {
          for (std::size_t i = 0; i < metric.size(); ++i) {
            if (metric[i].size() != points.size()) {
              bad.add("grid.metric[" + std::to_string(i) + "]: expected " +
                      std::to_string(points.size()) + " columns");
            }
          }
        }
      }
    } else {
      doc.metric_uniform = true;
      doc.notices.push_back(
          "grid.metric missing; defaulting to the coordinate metric");
    }
    if (doc.metric_uniform) metric = coordinate_distance(points);

    if (auto it = g.find("nu_weights"); it != g.end()) {
      if (it->is_string()) {
        if (it->get<std::string>() != "uniform") {
          parse_fail(origin, "grid.nu_weights",
                     "expected \"uniform\" or an array of weights");
        }
        doc.nu_uniform = true;
      } else {
        doc.nu_uniform = false;
        nu = as_double_array(*it, "grid.nu_weights", origin);
        if (nu.size() != points.size()) {
          bad.add("grid.nu_weights: expected " +
                  std::to_string(points.size()) + " weights");
        }
      }
    } else {
      doc.nu_uniform = true;
      doc.notices.push_back(
          "grid.nu_weights missing; defaulting to uniform weights");
    }
    if (doc.nu_uniform) nu = uniform_weights(static_cast<int>(points.size()));

    const ojson& inter = root["interaction"];
    if (!inter.is_object()) {
      parse_fail(origin, "interaction", "expected an object");
    }
    reject_unknown(inter, "interaction", {"a_values", "intervals"}, origin);
    const ojson& av = require_field(inter, "interaction", "a_values", origin);
    if (!av.is_object()) {
      parse_fail(origin, "interaction.a_values",
                 "expected {\"expr\": name} or {\"matrix\": rows}");
    }
    reject_unknown(av, "interaction.a_values", {"expr", "matrix"}, origin);
    bool has_expr = av.find("expr") != av.end();
    bool has_matrix = av.find("matrix") != av.end();
    if (has_expr == has_matrix) {
      parse_fail(origin, "interaction.a_values",
                 "give exactly one of expr or matrix");
    }
    if (has_expr) {
      doc.a_expr = as_string(av["expr"], "interaction.a_values.expr", origin);
      a_matrix =
          expr_matrix(points, doc.a_expr, "interaction.a_values.expr", origin);
    } else {
      a_matrix = as_matrix(av["matrix"], "interaction.a_values.matrix", origin);
    }

    const ojson& iv = require_field(inter, "interaction", "intervals", origin);
    if (!iv.is_array()) {
      parse_fail(origin, "interaction.intervals",
                 "expected an array of [lo, hi] pairs");
    }
    for (std::size_t i = 0; i < iv.size(); ++i) {
      std::string path = "interaction.intervals[" + std::to_string(i) + "]";
      std::vector<double> pair = as_double_array(iv[i], path, origin);
      if (pair.size() != 2) {
        parse_fail(origin, path, "expected exactly [lo, hi]");
      }
      if (!std::isfinite(pair[0]) || !std::isfinite(pair[1])) {
        bad.add(path + ": endpoints must be finite");
      } else if (pair[0] > pair[1]) {
        bad.add(path + ": lo exceeds hi");
      }
      intervals.push_back(Interval{pair[0], pair[1]});
    }
  }

  if (auto it = root.find("potential"); it != root.end()) {
    doc.has_potential = true;
    doc.potential = parse_potential(*it, "potential", origin);
  }
  if (auto it = root.find("observables"); it != root.end()) {
    if (!it->is_object()) {
      parse_fail(origin, "observables", "expected a name-keyed object");
    }
    for (auto o = it->begin(); o != it->end(); ++o) {
      doc.observables.emplace_back(
          o.key(),
          parse_potential(o.value(), "observables." + o.key(), origin));
    }
  }

  bad.raise_if_any();

  if (doc.has_grid) {
    doc.grid = make_grid(points, metric, nu);
    doc.system = build_system(doc.grid, a_matrix, intervals);

    // Materialize every declared function once so admissibility and value
    // counts are checked at load, not first use.
    WordSpace probe(doc.system);
    if (doc.has_potential) materialize(probe, doc.potential);
    for (const auto& [name, spec] : doc.observables) {
      (void)name;
      materialize(probe, spec);
    }
  }

  return doc;
}

SystemDocument load_system(const std::string& path) {
  SystemDocument doc = parse_system_text(read_file(path), path);
  if (!doc.has_grid) {
    parse_fail(path, "grid", "a system file must declare a grid");
  }
  if (!doc.has_potential) {
    parse_fail(path, "potential", "a system file must declare a potential");
  }
  return doc;
}

SystemDocument load_observable_file(const std::string& path) {
  SystemDocument doc = parse_system_text(read_file(path), path);
  if (doc.has_grid) {
    parse_fail(path, "grid", "an observable file must not declare a grid");
  }
  if (doc.has_potential) {
    parse_fail(path, "potential",
               "an observable file must not declare a potential");
  }
  if (doc.observables.empty()) {
    parse_fail(path, "observables",
               "an observable file must declare at least one observable");
  }
  return doc;
}

std::string dump_system(const SystemDocument& doc) {
  ojson j = ojson::object();
  j["version"] = 1;
  if (!doc.name.empty()) j["name"] = doc.name;
  if (doc.has_grid) {
    ojson g = ojson::object();
    g["points"] = doc.grid.points;
    if (doc.metric_uniform) {
      g["metric"] = "uniform";
    } else {
      g["metric"] = doc.grid.distance;
    }
    if (doc.nu_uniform) {
      g["nu_weights"] = "uniform";
    } else {
      g["nu_weights"] = doc.grid.nu;
    }
    j["grid"] = std::move(g);

    ojson inter = ojson::object();
    ojson av = ojson::object();
    if (!doc.a_expr.empty()) {
      av["expr"] = doc.a_expr;
    } else {
      av["matrix"] = doc.system.a_values;
    }
    inter["a_values"] = std::move(av);
    ojson iv = ojson::array();
    for (const Interval& i : doc.system.constraint_set) {
      iv.push_back(ojson::array({i.lo, i.hi}));
    }
    inter["intervals"] = std::move(iv);
    j["interaction"] = std::move(inter);
  }
  if (doc.has_potential) j["potential"] = potential_to_json(doc.potential);
  if (!doc.observables.empty()) {
    ojson obs = ojson::object();
    for (const auto& [name, spec] : doc.observables) {
      obs[name] = potential_to_json(spec);
    }
    j["observables"] = std::move(obs);
  }
  return j.dump(2) + "\n";
}

}  // namespace gibbslab
