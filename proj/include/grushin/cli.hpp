#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "grushin/classifier.hpp"
#include "grushin/errors.hpp"
#include "grushin/expr_parser.hpp"
#include "grushin/json_io.hpp"
#include "grushin/reduction_engine.hpp"
#include "grushin/spectral_core.hpp"
#include "grushin/symbol_lab.hpp"

namespace grushin::cli {

using io::Json;

inline constexpr const char* kToolName = "grushin-lab";
inline constexpr const char* kVersion = "0.1.0";

enum ExitCode { Decided = 0, Failure = 1, Undecided = 2 };

struct RunResult {
  int code = Decided;
  std::string out;
  std::string err;
};

struct Settings {
  std::size_t grid_n = 2047;
  double tol = 1e-3;
  unsigned jobs = 1;
  std::string output;
  std::string format = "json";

  SpectralOptions spectral() const {
    SpectralOptions o;
    o.convergence_tol = tol;
    return o;
  }
  Grid grid(double T = 0.0) const { return Grid{T, grid_n}; }

  Json provenance() const {
    return Json{{"tool", kToolName}, {"version", kVersion}, {"grid_n", grid_n}, {"refined_n", 2 * grid_n + 1},
                {"convergence_tol", tol}, {"tail_tol", SpectralOptions{}.tail_tol}, {"richardson", true}};
  }
};

inline unsigned default_jobs() {
  if (const char* env = std::getenv("GRUSHIN_LAB_JOBS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigurationError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(origin + ": invalid JSON", e.byte > 0 ? e.byte - 1 : 0, {"JSON value"}, "");
  }
}

inline Json read_json(const std::string& path) { return parse_json_text(read_file(path), path); }

inline RVector parse_list(const std::string& text, const std::string& what) {
  RVector out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigurationError(what + ": cannot read '" + item + "' as a number");
    }
  }
  return out;
}

// "re" or "re,im".
inline cplx parse_complex(const std::string& text, const std::string& what) {
  const RVector v = parse_list(text, what);
  if (v.size() == 1) return v[0];
  if (v.size() == 2) return {v[0], v[1]};
  throw ConfigurationError(what + ": expected re or re,im");
}

inline Json error_json(const std::exception& e) {
  Json j{{"error", e.what()}};
  if (const auto* a = dynamic_cast<const AccuracyError*>(&e)) {
    j["kind"] = "accuracy";
    j["coarse"] = a->coarse();
    j["fine"] = a->fine();
  } else if (const auto* p = dynamic_cast<const ParseError*>(&e)) {
    j["kind"] = dynamic_cast<const ModeViolationError*>(&e) ? "mode-violation" : "parse";
    j["offset"] = p->offset();
    j["expected"] = p->expected();
    j["lexeme"] = p->lexeme();
  } else if (dynamic_cast<const ConfigurationError*>(&e)) {
    j["kind"] = "configuration";
  } else if (dynamic_cast<const DomainError*>(&e)) {
    j["kind"] = "domain";
  } else if (dynamic_cast<const PreconditionError*>(&e)) {
    j["kind"] = "precondition";
  } else if (dynamic_cast<const DegeneracyError*>(&e)) {
    j["kind"] = "degeneracy";
  } else if (dynamic_cast<const UnsupportedCaseError*>(&e)) {
    j["kind"] = "unsupported";
  } else {
    j["kind"] = "internal";
  }
  return j;
}

inline std::string num(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

// ---- commands -------------------------------------------------------------

struct Report {
  Json body;
  int code = Decided;
  std::string csv;  // filled when the command has a tabular form
};

struct SpectrumArgs {
  int h = 1;
  double c2 = 1.0;
  std::string c1 = "0";
  std::size_t count = 3;
  double T = 0.0;
  int moments = 0;
  long eigenfunction = -1;
};

inline Report cmd_spectrum(const SpectrumArgs& a, const Settings& s) {
  const OscillatorSpec spec{a.h, a.c2, parse_complex(a.c1, "--c1"), s.grid(a.T)};
  if (a.count < 1) throw ConfigurationError("--count must be at least 1");
  const SpectralSolution sol = eigenpairs(spec, a.count, s.spectral());
  Report r;
  r.body = io::to_json(sol, a.moments);
  std::ostringstream csv;
  if (a.eigenfunction >= 0) {
    const auto j = static_cast<std::size_t>(a.eigenfunction);
    if (j >= sol.eigenfunctions.size()) throw ConfigurationError("--eigenfunction index beyond the computed eigenpairs");
    csv << "t,re,im\n";
    for (std::size_t k = 0; k < sol.t.size(); ++k)
      csv << num(sol.t[k]) << ',' << num(sol.eigenfunctions[j][k].real()) << ',' << num(sol.eigenfunctions[j][k].imag()) << '\n';
  } else {
    csv << "j,re,im,error\n";
    for (std::size_t j = 0; j < a.count; ++j)
      csv << j << ',' << num(sol.eigenvalues[j].real()) << ',' << num(sol.eigenvalues[j].imag()) << ',' << num(sol.eigen_error[j]) << '\n';
  }
  r.csv = csv.str();
  return r;
}

inline Report cmd_critical_spectrum(int h, int j0, double a, double xi, const Settings& s) {
  const auto crit = critical_b1(h, j0, a, xi);
  Json rows = Json::array();
  bool all = true;
  for (const cplx& c1 : crit) {
    const OscillatorSpec spec{h, a * xi * xi, c1, s.grid()};
    const SpectralSolution sol = eigenpairs(spec, static_cast<std::size_t>(j0) + 2, s.spectral());
    const auto j = static_cast<std::size_t>(j0);
    double gap = std::abs(sol.eigenvalues[j + 1] - sol.eigenvalues[j]);
    if (j > 0) gap = std::min(gap, std::abs(sol.eigenvalues[j] - sol.eigenvalues[j - 1]));
    const double lam = std::abs(sol.eigenvalues[j]);
    const bool ok = lam <= 1e-3 * gap;
    all = all && ok;
    rows.push_back({{"c1", io::to_json(c1)}, {"lambda_j0", io::to_json(sol.eigenvalues[j])}, {"gap", gap}, {"certified", ok}});
  }
  Report r;
  r.body = Json{{"h", h}, {"j0", j0}, {"a", a}, {"xi", xi}, {"critical", rows}, {"certified", all}};
  return r;
}

inline Report cmd_reduce(const Json& model_json, const Settings& s) {
  const CoefficientModel m = io::model_from(model_json);
  EllOptions o;
  o.spectral = s.spectral();
  o.grid = s.grid();
  const EllTable t = ell_symbols(m, o);
  Report r;
  r.body = io::to_json(t);
  std::ostringstream csv;
  csv << "j,order,re,im,error,structural_zero\n";
  for (int j = 0; j < 3; ++j) {
    const auto k = static_cast<std::size_t>(j);
    csv << j << ',' << t.order(j) << ',' << num(t.ell[k].real()) << ',' << num(t.ell[k].imag()) << ',' << num(t.error[k]) << ','
        << t.certificates[k].reason << '\n';
  }
  r.csv = csv.str();
  return r;
}

inline Report verdict_report(const Verdict& v) {
  Report r;
  r.body = io::to_json(v);
  r.code = v.decided() ? Decided : Undecided;
  r.csv = std::string("status,loss\n") + to_string(v.status) + ',' + (v.loss ? to_string(*v.loss) : std::string()) + '\n';
  return r;
}

inline Verdict classify_assemble(const Json& model_json, const Settings& s) {
  const CoefficientModel m = io::model_from(model_json);
  EllOptions o;
  o.spectral = s.spectral();
  o.grid = s.grid();
  return assemble_verdict(ell_symbols(m, o));
}

inline Report cmd_check_symbol(const Json& field_json, const std::string& mode, std::optional<double> c) {
  const SymbolField f = io::field_from(field_json);
  Report r;
  if (mode == "H2") {
    const CheckReport rep = check_H2(f, c);
    r.body = io::to_json(rep);
    r.body["mode"] = mode;
  } else if (mode == "h3") {
    const CheckReport rep = check_h3(f, c);
    r.body = io::to_json(rep);
    r.body["mode"] = mode;
    // A failed sufficient test does not decide anything unless the necessity clause fired.
    if (!rep.pass && !rep.necessary_failure) r.code = Undecided;
  } else if (mode == "tangential") {
    const SignReport rep = tangential_sign(f);
    r.body = Json{{"mode", mode}, {"bracket", rep.value}, {"error", rep.error}, {"outcome", to_string(rep.outcome)}};
    if (rep.outcome == SignOutcome::Undetermined) r.code = Undecided;
  } else {
    throw ConfigurationError("--mode must be H2, h3 or tangential");
  }
  return r;
}

// "a:b" geometric with ratio 2, or "t1,t2,...".
inline RVector parse_scales(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) return parse_list(text, "--t");
  const RVector lo = parse_list(text.substr(0, colon), "--t"), hi = parse_list(text.substr(colon + 1), "--t");
  if (lo.size() != 1 || hi.size() != 1 || !(lo[0] > 0.0) || !(hi[0] > lo[0])) throw ConfigurationError("--t expects a:b with 0 < a < b");
  return ProbeConfig::geometric(lo[0], hi[0]);
}

inline Report cmd_probe(const Json& field_json, const std::string& scales, std::size_t n) {
  const SymbolField f = io::field_from(field_json);
  ProbeConfig cfg;
  cfg.t_values = parse_scales(scales);
  cfg.n = n;
  const ProbeReport rep = localization_probe(f, cfg);
  Report r;
  r.body = io::to_json(rep);
  r.code = rep.conclusive ? Decided : Undecided;
  return r;
}

// One sweep row; throws on malformed input.
inline constexpr const char* kSweepCommands[] = {"critical-b1+spectrum", "spectrum", "reduce", "classify-kohn",
                                                 "classify-squares", "classify-even-example", "classify-gilioli",
                                                 "classify-assemble"};

inline Json sweep_row(const std::string& command, const Json& row, const Settings& s) {
  if (!row.is_object()) throw ConfigurationError("row must be a JSON object");
  auto get_int = [&](const char* k) { return io::field<int>(row, k, "row"); };
  auto get_num = [&](const char* k, double d) { return io::field_or<double>(row, k, d, "row"); };
  Report r;
  if (command == "critical-b1+spectrum") {
    r = cmd_critical_spectrum(get_int("h"), get_int("j0"), get_num("a", 1.0), get_num("xi", 1.0), s);
  } else if (command == "spectrum") {
    SpectrumArgs a;
    a.h = get_int("h");
    a.c2 = get_num("c2", 1.0);
    const cplx c1 = row.contains("c1") ? io::complex_from(row["c1"], "row c1") : cplx(0.0);
    a.c1 = num(c1.real()) + "," + num(c1.imag());
    a.count = io::field_or<std::size_t>(row, "count", 3, "row");
    r = cmd_spectrum(a, s);
  } else if (command == "reduce") {
    r = cmd_reduce(row, s);
  } else if (command == "classify-kohn") {
    r = verdict_report(kohn_loss(expr::parse_poly(io::field<std::string>(row, "g", "row")),
                                 expr::parse_poly(io::field<std::string>(row, "f", "row"))));
  } else if (command == "classify-squares") {
    r = verdict_report(squares_loss(get_int("k1"), get_int("k2")));
  } else if (command == "classify-even-example") {
    r = verdict_report(even_example_loss(get_int("h"), get_int("k")));
  } else if (command == "classify-gilioli") {
    EllOptions o;
    o.spectral = s.spectral();
    o.grid = s.grid();
    r = verdict_report(gilioli_treves(get_int("h"), get_num("a", 1.0), io::field<RVector>(row, "beta", "row"),
                                      io::field_or<int>(row, "xi", 1, "row"), o));
  } else if (command == "classify-assemble") {
    r = verdict_report(classify_assemble(row, s));
  } else {
    throw ConfigurationError("unknown sweep command '" + command + "'");
  }
  return r.body;
}

inline std::string cmd_sweep(const std::string& command, const std::string& grid_text, const Settings& s) {
  std::vector<std::string> lines;
  {
    std::stringstream ss(grid_text);
    std::string line;
    while (std::getline(ss, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      lines.push_back(line);
    }
  }
  if (std::find_if(std::begin(kSweepCommands), std::end(kSweepCommands), [&](const char* c) { return command == c; }) ==
      std::end(kSweepCommands))
    throw ConfigurationError("unknown sweep command '" + command + "'");
  std::vector<std::string> results(lines.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < lines.size(); i = next++) {
      Json out{{"index", i}};
      try {
        const Json row = parse_json_text(lines[i], "row " + std::to_string(i));
        out["ok"] = true;
        out["input"] = row;
        out["result"] = sweep_row(command, row, s);
      } catch (const std::exception& e) {
        out["ok"] = false;
        out["error"] = error_json(e);
      }
      results[i] = out.dump();
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(s.jobs, static_cast<unsigned>(std::max<std::size_t>(1, lines.size()))));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::string out;
  for (const auto& r : results) out += r + '\n';
  return out;
}

// ---- entry point ----------------------------------------------------------

inline RunResult run(const std::vector<std::string>& args) {
  CLI::App app{"Spectral reduction and hypoellipticity classifier for Grushin-type operators", kToolName};
  app.set_help_flag("--help", "print help and exit");  // -h would clash with --h
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kVersion);

  Settings s;
  s.jobs = default_jobs();
  app.add_option("--grid-n", s.grid_n, "interior grid points of the coarse level")->check(CLI::Range(16, 1 << 22));
  app.add_option("--tol", s.tol, "two-grid convergence tolerance")->check(CLI::Range(100 * std::numeric_limits<double>::epsilon(), 1.0));
  app.add_option("--jobs", s.jobs, "worker threads for sweeps (default $GRUSHIN_LAB_JOBS or 1)")->check(CLI::PositiveNumber);
  app.add_option("--output,-o", s.output, "write the report to a file instead of stdout");
  app.add_option("--format", s.format, "report format")->check(CLI::IsMember({"json", "csv"}));

  SpectrumArgs sp;
  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues of D^2 + c2 t^{2h} + c1 t^{h-1}");
  spectrum->add_option("--h", sp.h)->required()->check(CLI::PositiveNumber);
  spectrum->add_option("--c2", sp.c2, "coefficient of t^{2h}")->check(CLI::PositiveNumber);
  spectrum->add_option("--c1", sp.c1, "coefficient of t^{h-1}: re or re,im")->allow_extra_args(false);
  spectrum->add_option("--count", sp.count, "number of eigenvalues");
  spectrum->add_option("--T", sp.T, "half-width (0 = automatic)")->check(CLI::NonNegativeNumber);
  spectrum->add_option("--moments", sp.moments, "report <t^k phi1, phi1> for k up to this value")->check(CLI::NonNegativeNumber);
  spectrum->add_option("--eigenfunction", sp.eigenfunction, "with --format csv: dump this eigenfunction as t,re,im");

  int crit_h = 1, crit_j0 = 0;
  double crit_a = 1.0, crit_xi = 1.0;
  auto* critical = app.add_subcommand("critical-b1", "critical b1 values and the eigenvalue they cancel");
  critical->add_option("--h", crit_h)->required()->check(CLI::PositiveNumber);
  critical->add_option("--j0", crit_j0)->required()->check(CLI::NonNegativeNumber);
  critical->add_option("--a", crit_a)->check(CLI::PositiveNumber);
  critical->add_option("--xi", crit_xi)->check(CLI::PositiveNumber);

  std::string model_path;
  auto* reduce = app.add_subcommand("reduce", "l-symbols of a coefficient model");
  reduce->add_option("--model", model_path, "model JSON file")->required();

  auto* classify = app.add_subcommand("classify", "hypoellipticity verdicts");
  classify->require_subcommand(1);
  std::string g_text, f_text = "0";
  auto* kohn = classify->add_subcommand("kohn", "L L* + (fL)*(fL) with L = D1 + i g(x1) D2");
  kohn->add_option("--g", g_text, "polynomial g")->required();
  kohn->add_option("--f", f_text, "polynomial f");
  int k1 = 1, k2 = 1;
  auto* squares = classify->add_subcommand("squares", "complex plus real squares");
  squares->add_option("--k1", k1)->required()->check(CLI::PositiveNumber);
  squares->add_option("--k2", k2)->required()->check(CLI::PositiveNumber);
  int ev_h = 2, ev_k = 1;
  auto* even = classify->add_subcommand("even-example", "large loss with even h");
  even->add_option("--h", ev_h)->required();
  even->add_option("--k", ev_k)->required();
  int gt_h = 2, gt_xi = 1;
  double gt_a = 1.0;
  std::string gt_beta;
  auto* gilioli = classify->add_subcommand("gilioli", "D1^2 + a x1^{2h} D2^2 + beta(x1) x1^{h-1} D2");
  gilioli->add_option("--h", gt_h)->required()->check(CLI::PositiveNumber);
  gilioli->add_option("--a", gt_a)->check(CLI::PositiveNumber);
  gilioli->add_option("--beta", gt_beta, "beta(0),beta'(0),beta''(0)")->required();
  gilioli->add_option("--xi", gt_xi, "sign of xi2")->check(CLI::IsMember({-1, 1}));
  std::string tan_model;
  auto* tangential = classify->add_subcommand("tangential", "bracket test for x1-independent coefficients");
  tangential->add_option("--model", tan_model)->required();
  std::string asm_model;
  auto* assemble = classify->add_subcommand("assemble", "verdict from the computed l-symbols of a model");
  assemble->add_option("--model", asm_model)->required();

  std::string field_path, mode = "H2";
  std::optional<double> c_value;
  auto* check = app.add_subcommand("check-symbol", "symbol criteria on a sampled neighborhood");
  check->add_option("--file", field_path)->required();
  check->add_option("--mode", mode)->check(CLI::IsMember({"H2", "h3", "tangential"}));
  check->add_option("--c", c_value, "constant in the parabola condition");

  std::string probe_path, scales = "4:256";
  std::size_t probe_n = 512;
  auto* probe = app.add_subcommand("probe-loss", "log-log slope of |A u_t|^2");
  probe->add_option("--file", probe_path)->required();
  probe->add_option("--t", scales, "scales a:b (ratio 2) or a list");
  probe->add_option("--n", probe_n, "quadrature points")->check(CLI::Range(64, 8192));

  std::string sweep_command = "critical-b1+spectrum", sweep_grid;
  auto* sweep = app.add_subcommand("sweep", "run a command over a JSON Lines parameter grid");
  sweep->add_option("--grid", sweep_grid, "JSON Lines file, one parameter object per line")->required();
  sweep->add_option("--command", sweep_command, "critical-b1+spectrum, spectrum, reduce, classify-kohn, classify-squares, classify-even-example, classify-gilioli, classify-assemble");

  RunResult result;
  std::vector<std::string> argv_store;
  argv_store.push_back(kToolName);
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    std::ostringstream out, err;
    const int code = app.exit(e, out, err);
    result.out = out.str();
    result.err = err.str();
    result.code = code == 0 ? Decided : Failure;
    return result;
  }

  Report report;
  bool raw_text = false;
  try {
    if (spectrum->parsed()) {
      report = cmd_spectrum(sp, s);
    } else if (critical->parsed()) {
      report = cmd_critical_spectrum(crit_h, crit_j0, crit_a, crit_xi, s);
    } else if (reduce->parsed()) {
      report = cmd_reduce(read_json(model_path), s);
    } else if (kohn->parsed()) {
      report = verdict_report(kohn_loss(expr::parse_poly(g_text), expr::parse_poly(f_text)));
    } else if (squares->parsed()) {
      report = verdict_report(squares_loss(k1, k2));
    } else if (even->parsed()) {
      report = verdict_report(even_example_loss(ev_h, ev_k));
    } else if (gilioli->parsed()) {
      EllOptions o;
      o.spectral = s.spectral();
      o.grid = s.grid();
      report = verdict_report(gilioli_treves(gt_h, gt_a, parse_list(gt_beta, "--beta"), gt_xi, o));
    } else if (tangential->parsed()) {
      report = verdict_report(tangential_bracket_test(io::model_from(read_json(tan_model)), s.spectral()));
    } else if (assemble->parsed()) {
      report = verdict_report(classify_assemble(read_json(asm_model), s));
    } else if (check->parsed()) {
      report = cmd_check_symbol(read_json(field_path), mode, c_value);
    } else if (probe->parsed()) {
      report = cmd_probe(read_json(probe_path), scales, probe_n);
    } else if (sweep->parsed()) {
      if (s.format != "json") throw ConfigurationError("sweep writes JSON Lines only");
      report.csv = cmd_sweep(sweep_command, read_file(sweep_grid), s);
      raw_text = true;
    }
  } catch (const std::exception& e) {
    result.code = Failure;
    Json j = error_json(e);
    j["provenance"] = s.provenance();
    result.err = j.dump() + '\n';
    return result;
  }

  std::string text;
  if (raw_text) {
    text = report.csv;
  } else if (s.format == "csv") {
    if (report.csv.empty()) {
      result.code = Failure;
      result.err = error_json(ConfigurationError("csv output is not available for this command")).dump() + '\n';
      return result;
    }
    text = report.csv;
  } else {
    report.body["provenance"] = s.provenance();
    text = report.body.dump(2) + '\n';
  }
  result.code = report.code;
  if (!s.output.empty()) {
    std::ofstream out(s.output, std::ios::binary);
    if (!out || !(out << text)) {
      result.code = Failure;
      result.err = error_json(ConfigurationError("cannot write " + s.output)).dump() + '\n';
    }
  } else {
    result.out = std::move(text);
  }
  return result;
}

}  // namespace grushin::cli
