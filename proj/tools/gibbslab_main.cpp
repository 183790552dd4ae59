#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gibbslab/clt_lab.hpp"
#include "gibbslab/config_space.hpp"
#include "gibbslab/errors.hpp"
#include "gibbslab/gibbs_diagnostics.hpp"
#include "gibbslab/measure_transport.hpp"
#include "gibbslab/reporting.hpp"
#include "gibbslab/system_io.hpp"
#include "gibbslab/transfer_operator.hpp"
#include "gibbslab/version.hpp"

namespace {

using namespace gibbslab;

struct Options {
  std::string system_path;
  std::string observable_file;
  std::string observable;  // clt / sample observable name
  std::string phi_name;    // decay pair
  std::string psi_name;
  std::string out_dir = ".";
  int depth = 6;
  double tol = 1e-10;
  std::uint64_t seed = 7;
  int max_iters = 500;
  int pairs_depth = 3;
  int bowen_depth = 0;  // 0 = solution depth - 1
  int lags = 16;
  int variance_lags = kDefaultVarianceLags;
  int block = 1000;
  std::int64_t samples = 20000;
  std::int64_t length = 10000;
  std::int64_t burn = -1;  // -1 = derived from the decay-rate estimate
  bool json_errors = false;
};

class StageTimer {
 public:
  StageTimer(RunManifest& manifest, std::string name)
      : manifest_(manifest),
        name_(std::move(name)),
        start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    std::chrono::duration<double> dt =
        std::chrono::steady_clock::now() - start_;
    manifest_.stage_seconds.emplace_back(name_, dt.count());
  }

 private:
  RunManifest& manifest_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

void check_options(const Options& o) {
  std::vector<std::string> bad;
  if (o.depth < 1 || o.depth > 24) bad.push_back("depth must be in [1, 24]");
  if (!(o.tol > 0.0)) bad.push_back("tol must be positive");
  if (o.max_iters < 1) bad.push_back("max-iters must be at least 1");
  if (o.pairs_depth < 1) bad.push_back("pairs-depth must be at least 1");
  if (o.bowen_depth < 0) bad.push_back("max-depth must be at least 1");
  if (o.lags < 1) bad.push_back("lags must be at least 1");
  if (o.variance_lags < 1) bad.push_back("variance-lags must be at least 1");
  if (o.block < 1) bad.push_back("block must be at least 1");
  if (o.samples < 1) bad.push_back("samples must be at least 1");
  if (o.length < 1) bad.push_back("length must be at least 1");
  if (!bad.empty()) {
    std::string msg;
    for (std::size_t i = 0; i < bad.size(); ++i) {
      if (i > 0) msg += "; ";
      msg += bad[i];
    }
    fail(errc::validation_error, msg);
  }
}

struct Session {
  Options opts;
  RunManifest manifest;
  SystemDocument doc;
  std::unique_ptr<WordSpace> ws;
  DepthKFunction phi;
  NormalizationData eigen;
  DepthKFunction phi_bar;
  GibbsSolution solution;
};

std::string out_path(const Session& s, const std::string& file) {
  return (std::filesystem::path(s.opts.out_dir) / file).string();
}

const PotentialSpec& pick_observable(const Session& s, const std::string& name,
                                     const char* role) {
  const auto& table = s.doc.observables;
  if (table.empty()) {
    fail(errc::validation_error,
         std::string("no observables available for ") + role);
  }
  if (name.empty()) return table.front().second;
  for (const auto& [n, spec] : table) {
    if (n == name) return spec;
  }
  fail(errc::validation_error,
       "observable '" + name + "' not found for " + role);
}

Session open_session(const Options& o) {
  Session s;
  s.opts = o;
  check_options(o);
  if (o.system_path.empty()) {
    fail(errc::validation_error, "--system is required");
  }

  std::string bytes = read_file(o.system_path);
  s.manifest.system_path = o.system_path;
  s.manifest.system_sha256 = sha256_hex(bytes);
  s.manifest.depth = o.depth;
  s.manifest.tol = o.tol;
  s.manifest.seed = o.seed;
  s.manifest.tool_version = kToolVersion;

  {
    StageTimer t(s.manifest, "load");
    s.doc = parse_system_text(bytes, o.system_path);
    if (!s.doc.has_grid) {
      fail(errc::parse_error,
           o.system_path + ": field grid: a system file must declare a grid");
    }
    if (!s.doc.has_potential) {
      fail(errc::parse_error, o.system_path +
                                  ": field potential: a system file must "
                                  "declare a potential");
    }
  }
  for (const std::string& n : s.doc.notices) {
    std::cerr << "gibbslab: notice: " << n << "\n";
  }
  if (!o.observable_file.empty()) {
    SystemDocument extra = load_observable_file(o.observable_file);
    for (auto& kv : extra.observables) {
      s.doc.observables.push_back(std::move(kv));
    }
  }

  s.ws = std::make_unique<WordSpace>(s.doc.system);
  return s;
}

void run_solve_stage(Session& s) {
  StageTimer t(s.manifest, "solve");
  WordSpace& ws = *s.ws;
  s.phi = materialize(ws, s.doc.potential);
  s.eigen = leading_eigendata(ws, s.phi);
  s.phi_bar = normalize_potential(ws, s.phi, s.eigen);
  int depth = std::max(s.opts.depth, s.phi_bar.depth);
  WordMeasure mu0 = uniform_measure(ws, depth);
  s.solution =
      solve_gibbs(ws, s.phi_bar, mu0, s.opts.tol, s.opts.max_iters, &s.eigen);
}

JsonValue certificate_json(const ContractionCertificate& c, bool with_ratios) {
  JsonValue j = JsonValue::object();
  j["alpha"] = c.alpha;
  j["m0"] = c.m0;
  j["m1"] = c.m1;
  j["steps"] = c.steps;
  j["beta"] = c.beta;
  j["violations"] = c.violations;
  if (with_ratios) {
    JsonValue r = JsonValue::array();
    for (double v : c.measured_ratios) r.push_back(v);
    j["measured_ratios"] = std::move(r);
  }
  return j;
}

void write_json(const Session& s, const std::string& file, JsonValue& body) {
  JsonValue doc = JsonValue::object();
  doc["manifest"] = manifest_fields(s.manifest);
  doc["report"] = std::move(body);
  write_file_atomic(out_path(s, file), doc.dump(2));
}

void emit_gibbs(Session& s) {
  StageTimer t(s.manifest, "emit_gibbs");
  WordSpace& ws = *s.ws;
  JsonValue j = JsonValue::object();
  j["system"] = s.doc.name;
  j["lambda"] = s.eigen.lambda;
  j["eigen_residual"] = s.eigen.residual;
  j["normalization_residual"] = normalization_residual(ws, s.phi_bar);
  j["depth"] = s.solution.measure.depth;
  j["iterations"] = s.solution.iterations;
  j["final_gap"] = s.solution.final_gap;
  j["shift_residual"] = s.solution.shift_residual;
  j["exact_steps"] = s.solution.exact_steps;
  JsonValue hist = JsonValue::array();
  for (double v : s.solution.step_history) hist.push_back(v);
  j["step_history"] = std::move(hist);
  j["certificate"] = certificate_json(s.solution.certificate, false);
  JsonValue masses = JsonValue::object();
  const AdmissibleWordTable& table = ws.table(s.solution.measure.depth);
  for (std::int64_t i = 0; i < table.size(); ++i) {
    masses[format_word(s.doc.grid, table.word(i))] =
        s.solution.measure.masses[static_cast<std::size_t>(i)];
  }
  j["masses"] = std::move(masses);
  write_json(s, "gibbs.json", j);
}

void run_certify(Session& s) {
  StageTimer t(s.manifest, "certify");
  WordSpace& ws = *s.ws;
  double lip_e = [&] {
    DepthKFunction e = s.phi_bar;
    for (double& v : e.values) v = std::exp(v);
    return lipschitz_seminorm(ws, e, e.depth);
  }();
  MetricConfig cfg = choose_delta(std::max(1.0, lip_e));
  int pd = std::min(s.opts.pairs_depth, s.solution.measure.depth);
  const AdmissibleWordTable& table = ws.table(pd);
  std::vector<std::pair<Word, Word>> pairs;
  for (std::int64_t i = 0; i < table.size(); ++i) {
    for (std::int64_t j = i + 1; j < table.size(); ++j) {
      WordView a = table.word(i);
      WordView b = table.word(j);
      pairs.emplace_back(Word(a.begin(), a.end()), Word(b.begin(), b.end()));
    }
  }
  ContractionCertificate cert = certify_contraction(
      ws, s.phi_bar, cfg, pairs, required_iterate_count(cfg));
  JsonValue j = JsonValue::object();
  j["system"] = s.doc.name;
  j["delta"] = cfg.delta;
  j["lip_e_phi"] = cfg.lip_e_phi;
  j["pairs_depth"] = pd;
  j["pair_count"] = static_cast<std::int64_t>(pairs.size());
  j["certificate"] = certificate_json(cert, true);
  write_json(s, "certificate.json", j);
}

void run_bowen(Session& s) {
  StageTimer t(s.manifest, "bowen");
  WordSpace& ws = *s.ws;
  int max_depth = s.opts.bowen_depth > 0 ? s.opts.bowen_depth
                                         : s.solution.measure.depth - 1;
  BowenReport report = bowen_scan(ws, s.solution, s.phi_bar, max_depth);

  std::vector<double> lo(static_cast<std::size_t>(max_depth) + 1,
                         std::numeric_limits<double>::infinity());
  std::vector<double> hi(static_cast<std::size_t>(max_depth) + 1, 0.0);
  for (const BowenEntry& e : report.entries) {
    lo[static_cast<std::size_t>(e.m)] = std::min(lo[static_cast<std::size_t>(e.m)], e.ratio);
    hi[static_cast<std::size_t>(e.m)] = std::max(hi[static_cast<std::size_t>(e.m)], e.ratio);
  }
  CsvWriter csv({"m", "cylinder", "ratio", "lower", "upper"});
  for (const BowenEntry& e : report.entries) {
    const AdmissibleWordTable& table = ws.table(e.m);
    csv.row({std::to_string(e.m),
             format_word(s.doc.grid, table.word(e.word)),
             format_double(e.ratio),
             format_double(lo[static_cast<std::size_t>(e.m)]),
             format_double(hi[static_cast<std::size_t>(e.m)])});
  }
  write_file_atomic(out_path(s, "bowen.csv"), csv.text());

  JsonValue j = JsonValue::object();
  j["system"] = s.doc.name;
  j["min_depth"] = report.min_depth;
  j["max_depth"] = report.max_depth;
  j["c_lower"] = report.c_lower;
  j["c_upper"] = report.c_upper;
  if (report.theory_c) j["theory_c"] = *report.theory_c;
  if (report.mixing_p) j["mixing_p"] = *report.mixing_p;
  j["lip_phi_bar"] = report.lip_phi_bar;
  j["inf_weight"] = report.inf_weight;
  j["entries"] = static_cast<std::int64_t>(report.entries.size());
  j["csv_sha256"] = sha256_hex(csv.text());
  write_json(s, "bowen.json", j);
}

void run_decay(Session& s) {
  StageTimer t(s.manifest, "decay");
  WordSpace& ws = *s.ws;
  if (!mixing_exponent(s.doc.system, 64)) {
    fail(errc::insufficient_decay_data,
         "the admissibility graph has no uniform mixing exponent; "
         "correlations need not decay");
  }
  const PotentialSpec& phi_spec = pick_observable(s, s.opts.phi_name, "decay");
  const PotentialSpec& psi_spec = pick_observable(
      s, s.opts.psi_name.empty() ? s.opts.phi_name : s.opts.psi_name, "decay");
  DepthKFunction phi_obs = materialize(ws, phi_spec);
  DepthKFunction psi_obs = materialize(ws, psi_spec);

  CorrelationCurve curve =
      decay_fit(ws, s.solution, phi_obs, psi_obs, s.opts.lags, s.phi_bar);
  double lambda_hat = spectral_gap_estimate(ws, s.phi_bar,
                                            default_probe_count(ws));

  CsvWriter csv({"m", "correlation", "envelope"});
  for (std::size_t m = 0; m < curve.values.size(); ++m) {
    csv.row({std::to_string(m), format_double(curve.values[m]),
             format_double(curve.c_theory *
                           std::pow(lambda_hat, static_cast<double>(m)))});
  }
  write_file_atomic(out_path(s, "correlations.csv"), csv.text());

  JsonValue j = JsonValue::object();
  j["system"] = s.doc.name;
  j["lambda_fit"] = curve.lambda_fit;
  j["c_fit"] = curve.c_fit;
  j["slope"] = curve.slope;
  j["usable_points"] = curve.usable_points;
  j["c_theory"] = curve.c_theory;
  j["lambda_hat"] = lambda_hat;
  JsonValue vals = JsonValue::array();
  for (double v : curve.values) vals.push_back(v);
  j["values"] = std::move(vals);
  j["csv_sha256"] = sha256_hex(csv.text());
  write_json(s, "decay.json", j);
}

void run_clt(Session& s) {
  StageTimer t(s.manifest, "clt");
  WordSpace& ws = *s.ws;
  const auto& [obs_name, spec] = [&]() -> const auto& {
    const auto& table = s.doc.observables;
    if (table.empty()) {
      fail(errc::validation_error, "no observables available for clt");
    }
    if (s.opts.observable.empty()) return table.front();
    for (const auto& kv : table) {
      if (kv.first == s.opts.observable) return kv;
    }
    fail(errc::validation_error,
         "observable '" + s.opts.observable + "' not found for clt");
  }();
  DepthKFunction psi = materialize(ws, spec);

  VarianceReport vr =
      green_kubo_variance(ws, psi, s.solution, s.phi_bar, s.opts.variance_lags);
  CoboundaryVerdict verdict =
      coboundary_test(ws, psi, s.solution, s.phi_bar, 1e-8);
  CltReport rep = empirical_clt(ws, s.phi_bar, s.solution, psi, s.opts.block,
                                s.opts.samples, s.opts.seed);
  vr.sigma2_batch = rep.batch_variance;

  CsvWriter csv({"bin_lo", "bin_hi", "mass"});
  for (std::size_t b = 0; b + 1 < rep.bin_edges.size(); ++b) {
    csv.row({format_double(rep.bin_edges[b]), format_double(rep.bin_edges[b + 1]),
             format_double(rep.bin_masses[b])});
  }
  write_file_atomic(out_path(s, "clt_hist.csv"), csv.text());

  JsonValue j = JsonValue::object();
  j["system"] = s.doc.name;
  j["observable"] = obs_name;
  j["block"] = rep.block;
  j["samples"] = rep.samples;
  j["burn_in"] = rep.burn_in;
  j["ks"] = rep.ks;
  j["p_value_proxy"] = rep.p_value_proxy;
  j["batch_mean"] = rep.batch_mean;
  j["batch_variance"] = rep.batch_variance;
  JsonValue var = JsonValue::object();
  var["sigma2_green_kubo"] = vr.sigma2_green_kubo;
  var["sigma2_rho"] = vr.sigma2_rho;
  if (vr.sigma2_batch) var["sigma2_batch"] = *vr.sigma2_batch;
  var["tail_bound"] = vr.tail_bound;
  var["gap"] = vr.gap;
  var["lags"] = vr.lags;
  var["series_terms"] = vr.series_terms;
  JsonValue partial = JsonValue::array();
  for (double v : vr.partial_sums) partial.push_back(v);
  var["partial_sums"] = std::move(partial);
  j["variance"] = std::move(var);
  JsonValue cb = JsonValue::object();
  cb["is_coboundary"] = verdict.is_coboundary;
  cb["residual"] = verdict.residual;
  cb["sigma2_rho"] = verdict.sigma2_rho;
  j["coboundary"] = std::move(cb);
  j["csv_sha256"] = sha256_hex(csv.text());
  write_json(s, "clt.json", j);
}

void run_sample(Session& s) {
  StageTimer t(s.manifest, "sample");
  WordSpace& ws = *s.ws;
  std::int64_t burn = s.opts.burn;
  if (burn < 0) {
    double gap = spectral_gap_estimate(ws, s.phi_bar, default_probe_count(ws));
    if (gap >= 1.0 - 1e-6) {
      fail(errc::no_gap,
           "decay-rate estimate is " + format_double(gap) +
               "; give --burn explicitly to sample a non-mixing system");
    }
    double mixing_time = std::ceil(-1.0 / std::log(gap));
    burn = std::max<std::int64_t>(
        5 * static_cast<std::int64_t>(mixing_time), 100);
  }
  std::vector<int> orbit =
      sample_orbit(ws, s.phi_bar, s.solution, s.opts.length, burn, s.opts.seed);
  CsvWriter csv({"index", "symbol"});
  for (std::size_t i = 0; i < orbit.size(); ++i) {
    csv.row({std::to_string(i), std::to_string(orbit[i])});
  }
  write_file_atomic(out_path(s, "sample.csv"), csv.text());

  JsonValue j = JsonValue::object();
  j["system"] = s.doc.name;
  j["length"] = static_cast<std::int64_t>(orbit.size());
  j["burn_in"] = burn;
  j["csv_sha256"] = sha256_hex(csv.text());
  write_json(s, "sample.json", j);
}

void finish(Session& s) {
  write_file_atomic(out_path(s, "manifest.json"),
                    manifest_with_timing(s.manifest).dump(2));
}

int dispatch(const std::string& command, const Options& o) {
  Session s = open_session(o);
  std::filesystem::create_directories(o.out_dir);
  run_solve_stage(s);
  if (command == "solve") {
    emit_gibbs(s);
  } else if (command == "certify") {
    run_certify(s);
  } else if (command == "bowen") {
    run_bowen(s);
  } else if (command == "decay") {
    run_decay(s);
  } else if (command == "clt") {
    run_clt(s);
  } else if (command == "sample") {
    run_sample(s);
  } else if (command == "all") {
    emit_gibbs(s);
    run_certify(s);
    run_bowen(s);
    run_decay(s);
    run_clt(s);
  }
  finish(s);
  return 0;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--system", o.system_path, "system description file")
      ->required();
  sub->add_option("--out", o.out_dir, "output directory");
  sub->add_option("--depth", o.depth, "working word depth");
  sub->add_option("--tol", o.tol, "fixed-point tolerance");
  sub->add_option("--seed", o.seed, "master random seed");
  sub->add_option("--max-iters", o.max_iters, "dual iteration cap");
  sub->add_flag("--json-errors", o.json_errors,
                "print errors as a JSON envelope on stdout");
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{
      "gibbslab: Gibbs states of Lipschitz potentials on markovian lattice "
      "systems via dual transfer-operator iteration"};
  app.require_subcommand(1);

  CLI::App* solve = app.add_subcommand("solve", "iterate to the Gibbs state");
  add_common(solve, o);

  CLI::App* certify =
      app.add_subcommand("certify", "measure contraction ratios");
  add_common(certify, o);
  certify->add_option("--pairs-depth", o.pairs_depth,
                      "depth of the Dirac pair family");

  CLI::App* bowen = app.add_subcommand("bowen", "cylinder ratio scan");
  add_common(bowen, o);
  bowen->add_option("--max-depth", o.bowen_depth,
                    "deepest cylinder depth (default: solution depth - 1)");

  CLI::App* decay = app.add_subcommand("decay", "correlation decay fit");
  add_common(decay, o);
  decay->add_option("--phi", o.phi_name, "left observable name");
  decay->add_option("--psi", o.psi_name, "right observable name");
  decay->add_option("--lags", o.lags, "largest correlation lag");

  CLI::App* clt = app.add_subcommand("clt", "block-sum normality check");
  add_common(clt, o);
  clt->add_option("--observable", o.observable, "observable name");
  clt->add_option("--observable-file", o.observable_file,
                  "extra observable definitions");
  clt->add_option("--block", o.block, "block length");
  clt->add_option("--samples", o.samples, "number of blocks");
  clt->add_option("--variance-lags", o.variance_lags,
                  "series lags in the variance estimate");

  CLI::App* sample = app.add_subcommand("sample", "draw one orbit");
  add_common(sample, o);
  sample->add_option("--length", o.length, "symbols to keep");
  sample->add_option("--burn", o.burn, "symbols to discard first");

  CLI::App* all = app.add_subcommand("all", "full pipeline");
  add_common(all, o);
  all->add_option("--lags", o.lags, "largest correlation lag");
  all->add_option("--block", o.block, "block length");
  all->add_option("--samples", o.samples, "number of blocks");
  all->add_option("--observable", o.observable, "clt observable name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::string command = app.get_subcommands().front()->get_name();
  try {
    return dispatch(command, o);
  } catch (const Error& e) {
    int code = errc_is_input_fault(e.code()) ? 2 : 3;
    if (o.json_errors) {
      JsonValue env = JsonValue::object();
      JsonValue body = JsonValue::object();
      body["code"] = std::string(errc_name(e.code()));
      body["exit"] = code;
      body["message"] = std::string(e.what());
      env["error"] = std::move(body);
      std::cout << env.dump(2);
    } else {
      std::cerr << "gibbslab: " << errc_name(e.code()) << ": " << e.what()
                << "\n";
    }
    return code;
  } catch (const std::exception& e) {
    std::cerr << "gibbslab: internal error: " << e.what() << "\n";
    return 3;
  }
}
