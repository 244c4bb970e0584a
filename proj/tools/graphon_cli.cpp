// Command-line front end for the graphon games library.
//
//   graphon <subcommand> [options]
//
// Every option can also be given in a JSON file passed with --config, keyed
// by the long option name without dashes. Flags override the file. Results
// and a manifest.json describing the run are written to --out.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "graphon/graphon.hpp"

#ifndef GRAPHON_VERSION
#define GRAPHON_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace graphon;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

constexpr const char* kCsvSchemaVersion = "1";

// Option registry: raw strings from the command line, merged over the
// optional config file, then read back with typed getters that record the
// effective value of every parameter in `resolved`.

class Params {
 public:
  void add(CLI::App* app, const std::string& name, const std::string& help) {
    auto* opt = app->add_option("--" + name, raw_[name], help);
    options_[name] = opt;
  }

  void add_flag(CLI::App* app, const std::string& name, const std::string& help) {
    auto* opt = app->add_flag("--" + name, flags_[name], help);
    options_[name] = opt;
  }

  /// Fills `merged` from the config file and command line.
  void merge(const std::string& config_path) {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw DomainError("cannot read config file '" + config_path + "'");
      try {
        merged_ = json::parse(in);
      } catch (const json::exception& e) {
        throw DomainError("config file is not valid JSON: " + std::string(e.what()));
      }
      if (!merged_.is_object()) throw DomainError("config file must hold a JSON object");
      for (const auto& [key, value] : merged_.items()) {
        (void)value;
        if (!options_.count(key))
          throw DomainError("unknown config key '" + key + "'");
      }
    }
    for (const auto& [name, opt] : options_) {
      if (opt->count() == 0) continue;
      if (flags_.count(name)) merged_[name] = flags_[name];
      else merged_[name] = raw_[name];
    }
  }

  bool has(const std::string& key) const { return merged_.contains(key); }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) throw DomainError("missing required option --" + key);
      resolved[key] = *fallback;
      return *fallback;
    }
    const double v = to_number(merged_[key], key);
    resolved[key] = v;
    return v;
  }

  int integer(const std::string& key, std::optional<int> fallback = std::nullopt) {
    const double v = number(key, fallback ? std::optional<double>(*fallback) : std::nullopt);
    if (v != std::floor(v) || std::abs(v) > 2e9)
      throw DomainError("option --" + key + " must be an integer");
    resolved[key] = static_cast<int>(v);
    return static_cast<int>(v);
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) {
      resolved[key] = fallback;
      return fallback;
    }
    const auto& v = merged_[key];
    std::uint64_t out = 0;
    if (v.is_number_unsigned()) {
      out = v.get<std::uint64_t>();
    } else if (v.is_string()) {
      const auto s = v.get<std::string>();
      std::size_t used = 0;
      try {
        if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
        out = std::stoull(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != s.size())
        throw DomainError("option --" + key + " must be a nonnegative integer");
    } else {
      throw DomainError("option --" + key + " must be a nonnegative integer");
    }
    resolved[key] = out;
    return out;
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) throw DomainError("missing required option --" + key);
      resolved[key] = *fallback;
      return *fallback;
    }
    const auto& v = merged_[key];
    std::string out = v.is_string() ? v.get<std::string>() : v.dump();
    resolved[key] = out;
    return out;
  }

  bool flag(const std::string& key) {
    bool out = false;
    if (has(key)) {
      const auto& v = merged_[key];
      if (v.is_boolean()) out = v.get<bool>();
      else throw DomainError("option --" + key + " must be a boolean");
    }
    resolved[key] = out;
    return out;
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    std::vector<double> out;
    if (!has(key)) {
      out = std::move(fallback);
    } else {
      const auto& v = merged_[key];
      if (v.is_array()) {
        for (const auto& x : v) out.push_back(to_number(x, key));
      } else if (v.is_string()) {
        std::stringstream ss(v.get<std::string>());
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(to_number(json(item), key));
      } else {
        out.push_back(to_number(v, key));
      }
    }
    if (out.empty()) throw DomainError("option --" + key + " needs at least one value");
    resolved[key] = out;
    return out;
  }

  std::vector<int> integers(const std::string& key, std::vector<int> fallback) {
    std::vector<double> d(fallback.begin(), fallback.end());
    std::vector<int> out;
    for (double v : numbers(key, d)) {
      if (v != std::floor(v) || std::abs(v) > 2e9)
        throw DomainError("option --" + key + " must list integers");
      out.push_back(static_cast<int>(v));
    }
    resolved[key] = out;
    return out;
  }

  json resolved = json::object();

 private:
  static double to_number(const json& v, const std::string& key) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      std::size_t used = 0;
      double out = 0.0;
      try {
        out = std::stod(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != 0 && used == s.size()) return out;
    }
    throw DomainError("option --" + key + " expects a number, got '" +
                      (v.is_string() ? v.get<std::string>() : v.dump()) + "'");
  }

  std::map<std::string, std::string> raw_;
  std::map<std::string, bool> flags_;
  std::map<std::string, CLI::Option*> options_;
  json merged_ = json::object();
};

struct Common {
  std::string config;
  std::string out = ".";
  std::string format = "csv";
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DomainError("'" + path + "' is not valid JSON: " + std::string(e.what()));
  }
}

// Graphon selection

void add_graphon_options(Params& p, CLI::App* app) {
  p.add(app, "graphon", "graphon kind: minmax, er, sbm or grid (default minmax)");
  p.add(app, "er", "shorthand for --graphon er --p <value>");
  p.add(app, "p", "Erdos-Renyi edge probability");
  p.add(app, "gin", "SBM within-community probability");
  p.add(app, "gout", "SBM across-community probability");
  p.add(app, "w", "SBM community masses, comma separated");
  p.add(app, "grid-file", "JSON file with a symmetric matrix (grid graphon)");
  p.add(app, "graphon-file", "JSON file describing a graphon {\"kind\": ...}");
}

GraphonSpec resolve_graphon(Params& p) {
  if (p.has("graphon-file")) return graphon_from_json(read_json_file(p.text("graphon-file")));
  if (p.has("er")) {
    p.resolved["graphon"] = "er";
    return GraphonSpec::erdos_renyi(p.number("er"));
  }
  const std::string kind = p.text("graphon", "minmax");
  if (kind == "minmax") return GraphonSpec::minmax();
  if (kind == "er") return GraphonSpec::erdos_renyi(p.number("p"));
  if (kind == "sbm") {
    const auto w = p.numbers("w", {0.75, 0.25});
    return GraphonSpec::sbm(p.number("gin", 0.8), p.number("gout", 0.1),
                            Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())));
  }
  if (kind == "grid") {
    auto j = read_json_file(p.text("grid-file"));
    if (j.is_object()) j = j.contains("values") ? j.at("values") : j.at("matrix");
    try {
      return GraphonSpec::grid(detail::matrix_from_json(j));
    } catch (const json::exception& e) {
      throw DomainError("malformed grid file: " + std::string(e.what()));
    }
  }
  throw DomainError("unknown graphon kind '" + kind + "'");
}

// Network selection: --matrix file, or sampled from the graphon.

void add_network_options(Params& p, CLI::App* app) {
  add_graphon_options(p, app);
  p.add(app, "matrix", "JSON network bundle {\"matrix\": [[...]], \"types\": [...]}");
  p.add(app, "N", "number of agents when sampling a network");
  p.add(app, "network", "sampled network: weighted or simple");
}

struct Network {
  Eigen::MatrixXd P;
  TypeVector types;
};

Network resolve_network(Params& p, std::uint64_t seed, const std::string& default_kind) {
  if (p.has("matrix")) {
    auto w = network_from_json(read_json_file(p.text("matrix")));
    return {std::move(w.P), std::move(w.types)};
  }
  const auto spec = resolve_graphon(p);
  const int N = p.integer("N");
  const auto types = sample_types(N, derive_seed(seed, {0}));
  const auto Pw = weighted_network(spec, types);
  const std::string kind = p.text("network", default_kind);
  if (kind == "weighted") return {Pw.P, types};
  if (kind == "simple") return {simple_network(Pw, derive_seed(seed, {1})).A, types};
  throw DomainError("--network must be weighted or simple");
}

// Output

class Output {
 public:
  Output(fs::path dir, std::string format) : dir_(std::move(dir)), format_(std::move(format)) {
    if (format_ != "csv" && format_ != "json") throw DomainError("--format must be csv or json");
    fs::create_directories(dir_);
  }

  bool csv() const { return format_ == "csv"; }
  const std::string& format() const { return format_; }

  std::ofstream open(const std::string& name) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw DomainError("cannot write '" + (dir_ / name).string() + "'");
    files_.push_back(name);
    return os;
  }

  void write_json(const std::string& name, const json& j) { open(name) << j.dump(2) << '\n'; }

  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::string format_;
  std::vector<std::string> files_;
};

std::string num(double v) { return detail::fmt_double(v); }

json versions() {
  return {{"graphon", GRAPHON_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                        "." + std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cli11", CLI11_VERSION},
          {"compiler", __VERSION__},
          {"cxx_standard", static_cast<long>(__cplusplus)},
          {"csv_schema", kCsvSchemaVersion}};
}

// Subcommands. Each reads its parameters through Params and writes results.

void run_sample(Params& p, std::uint64_t seed, Output& out) {
  const auto spec = resolve_graphon(p);
  const int N = p.integer("N");
  const auto types = sample_types(N, derive_seed(seed, {0}));
  const auto Pw = weighted_network(spec, types);
  const auto Ps = simple_network(Pw, derive_seed(seed, {1}));
  if (out.csv()) {
    auto os = out.open("types.csv");
    os << "index,type\n";
    for (int i = 0; i < N; ++i) os << i << ',' << num(types.types(i)) << '\n';
    auto ow = out.open("weighted_edges.csv");
    write_edge_list_csv(ow, Pw.P);
    auto oss = out.open("simple_edges.csv");
    write_edge_list_csv(oss, Ps.A);
  } else {
    out.write_json("weighted_network.json", network_bundle(Pw.P, types));
    out.write_json("simple_network.json", network_bundle(Ps.A, types));
  }
}

void run_eigen(Params& p, std::uint64_t, Output& out) {
  const auto spec = resolve_graphon(p);
  const int M = p.integer("M", 1000);
  const int k = p.integer("k", 1);
  const auto op = discretize(spec, M);
  std::vector<EigenPair> pairs;
  if (k == 1) pairs.push_back(dominant_eigenpair(op, p.number("tol", 1e-10)));
  else pairs = top_k_eigen(op, k, p.number("tol", 1e-10));
  if (out.csv()) {
    auto ov = out.open("eigenvalues.csv");
    ov << "index,value\n";
    for (std::size_t r = 0; r < pairs.size(); ++r) ov << r + 1 << ',' << num(pairs[r].value) << '\n';
    auto of = out.open("eigenfunctions.csv");
    of << 'x';
    for (std::size_t r = 0; r < pairs.size(); ++r) of << ",psi" << r + 1;
    of << '\n';
    for (int i = 0; i < M; ++i) {
      of << num(GridFunction::midpoint(i, M));
      for (const auto& e : pairs) of << ',' << num(e.function.values()(i));
      of << '\n';
    }
  } else {
    json arr = json::array();
    for (const auto& e : pairs) arr.push_back(to_json(e));
    out.write_json("eigen.json", {{"M", M}, {"pairs", arr}});
  }
}

LqPayoff resolve_lq(Params& p, double default_alpha) {
  return {p.number("alpha", default_alpha), p.number("beta", 1.0)};
}

SolverOptions resolve_solver(Params& p) {
  SolverOptions o;
  o.tol = p.number("tol", 1e-10);
  o.max_iter = p.integer("max-iter", 1'000'000);
  return o;
}

void write_profile(Output& out, const EquilibriumReport& r, const Eigen::VectorXd* types) {
  if (out.csv()) {
    auto os = out.open("equilibrium.csv");
    os << (types ? "index,type,value\n" : "x,value\n");
    const auto n = static_cast<int>(r.profile.size());
    for (int i = 0; i < n; ++i) {
      if (types) os << i << ',' << num((*types)(i));
      else os << num(GridFunction::midpoint(i, n));
      os << ',' << num(r.profile(i)) << '\n';
    }
    auto od = out.open("diagnostics.csv");
    od << "method,iterations,residual,contraction_factor,lambda_max\n"
       << to_string(r.method) << ',' << r.iterations << ',' << num(r.residual) << ','
       << num(r.contraction_factor) << ',' << num(r.lambda_max) << '\n';
  } else {
    out.write_json("equilibrium.json", to_json(r));
  }
}

void run_solve_network(Params& p, std::uint64_t seed, Output& out) {
  const auto net = resolve_network(p, seed, "weighted");
  const auto payoff = resolve_lq(p, 0.5);
  const auto r = solve_network_lq(net.P, payoff, resolve_solver(p));
  write_profile(out, r, &net.types.types);
}

void run_solve_graphon(Params& p, std::uint64_t, Output& out) {
  const auto spec = resolve_graphon(p);
  const auto payoff = resolve_lq(p, 0.5);
  const int M = p.integer("M", 1000);
  const auto r = solve_graphon_lq(spec, payoff, M, resolve_solver(p));
  write_profile(out, r, nullptr);
}

void run_intervene(Params& p, std::uint64_t seed, Output& out) {
  const auto net = resolve_network(p, seed, "simple");
  const int N = static_cast<int>(net.P.rows());
  const double alpha = p.number("alpha", 5.0);
  const double beta = p.number("beta", 1.0);
  double C = 0.0;
  if (p.has("C") && p.has("c-per-agent")) throw DomainError("give either --C or --c-per-agent");
  if (p.has("C")) C = p.number("C");
  else C = p.number("c-per-agent", 0.01) * N;
  p.resolved["budget"] = C;
  const std::string which = p.text("policy", "all");
  const int eigen_M = p.integer("eigen-M", 0);

  const LqNetwork lq(net.P, alpha);
  std::vector<InterventionResult> results;
  auto want = [&](const char* name) { return which == "all" || which == name; };
  if (want("none")) results.push_back(lq.evaluate(no_intervention(beta, N)));
  if (want("homogeneous")) results.push_back(lq.evaluate(homogeneous_policy(beta, C, N)));
  if (want("network-heuristic")) results.push_back(lq.evaluate(network_heuristic(net.P, beta, C)));
  if (want("graphon-heuristic")) {
    if (p.has("matrix") && !p.has("graphon") && !p.has("er") && !p.has("graphon-file"))
      throw DomainError("graphon-heuristic needs a graphon (--graphon, --er or --graphon-file)");
    results.push_back(
        lq.evaluate(graphon_heuristic(resolve_graphon(p), net.types, beta, C, eigen_M)));
  }
  if (want("optimal")) results.push_back(optimal_intervention(net.P, alpha, beta, C));
  if (results.empty()) throw DomainError("unknown --policy '" + which + "'");

  if (out.csv()) {
    auto os = out.open("interventions.csv");
    os << "policy,welfare,budget_used,warning\n";
    for (const auto& r : results)
      os << to_string(r.policy) << ',' << num(r.welfare) << ',' << num(r.budget_used) << ','
         << r.warning << '\n';
    auto ob = out.open("beta_hat.csv");
    ob << "index,type";
    for (const auto& r : results) ob << ',' << to_string(r.policy);
    ob << '\n';
    for (int i = 0; i < N; ++i) {
      ob << i << ',' << num(net.types.types(i));
      for (const auto& r : results) ob << ',' << num(r.beta_hat(i));
      ob << '\n';
    }
  } else {
    json arr = json::array();
    for (const auto& r : results) arr.push_back(to_json(r));
    out.write_json("interventions.json", {{"C", C}, {"results", arr}});
  }
}

void run_distance_exp(Params& p, std::uint64_t seed, int jobs, Output& out) {
  const auto spec = resolve_graphon(p);
  const auto payoff = resolve_lq(p, 0.5);
  DistanceConfig cfg;
  cfg.Ns = p.integers("Ns", {50, 100, 200, 400, 800});
  cfg.trials = p.integer("trials", 50);
  cfg.delta = p.number("delta", 0.05);
  int max_N = 0;
  for (int N : cfg.Ns) max_N = std::max(max_N, N);
  cfg.M = p.integer("M", std::max(2000, 2 * max_N));
  cfg.types_at_midpoints = p.flag("midpoints");
  cfg.seed = seed;
  cfg.jobs = jobs;
  const auto e = distance_experiment(spec, payoff, cfg);

  json fits = json::object();
  for (NetworkKind kind : {NetworkKind::weighted, NetworkKind::simple}) {
    std::vector<int> Ns;
    std::vector<double> med;
    for (int N : cfg.Ns) {
      const double m = e.find(N, kind).percentiles.p50;
      if (m > 0.0) {
        Ns.push_back(N);
        med.push_back(m);
      }
    }
    const std::string key(1, static_cast<char>(kind));
    if (Ns.size() >= 2) {
      try {
        const auto f = rate_fit(Ns, med, cfg.delta);
        fits[key] = {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"gamma", f.gamma}};
      } catch (const DomainError&) {
        fits[key] = nullptr;
      }
    } else {
      fits[key] = nullptr;
    }
  }

  if (out.csv()) {
    auto od = out.open("distances.csv");
    write_distance_csv(od, e);
    auto os = out.open("distance_stats.csv");
    write_distance_stats_csv(os, e);
    auto of = out.open("rate_fit.csv");
    of << "kind,slope,intercept,r2,gamma\n";
    for (const auto& [kind, f] : fits.items()) {
      if (f.is_null()) continue;
      of << kind << ',' << num(f["slope"].get<double>()) << ',' << num(f["intercept"].get<double>())
         << ',' << num(f["r2"].get<double>()) << ',' << num(f["gamma"].get<double>()) << '\n';
    }
    auto og = out.open("reference_equilibrium.csv");
    write_grid_csv(og, e.reference);
  } else {
    json records = json::array();
    for (const auto& r : e.records)
      records.push_back({{"N", r.N},
                         {"trial", r.trial},
                         {"kind", std::string(1, static_cast<char>(r.kind))},
                         {"distance", r.failed ? json(nullptr) : json(r.distance)},
                         {"bound", r.bound},
                         {"d_N_event", r.d_N_event}});
    json stats = json::array();
    for (const auto& s : e.stats)
      stats.push_back({{"N", s.N},
                       {"kind", std::string(1, static_cast<char>(s.kind))},
                       {"trials", s.trials},
                       {"failures", s.failures},
                       {"percentiles",
                        {{"p0", s.percentiles.p0},
                         {"p25", s.percentiles.p25},
                         {"p50", s.percentiles.p50},
                         {"p75", s.percentiles.p75},
                         {"p95", s.percentiles.p95}}},
                       {"d_N", s.d_N},
                       {"rho", s.rho},
                       {"bound_weighted", s.bound_weighted},
                       {"bound_simple", s.bound_simple}});
    out.write_json("distance.json", {{"lambda_max", e.lambda_max},
                                     {"s_max", e.s_max},
                                     {"Ktilde", e.Ktilde},
                                     {"records", records},
                                     {"stats", stats},
                                     {"rate_fit", fits}});
  }
}

void run_welfare_exp(Params& p, std::uint64_t seed, int jobs, Output& out) {
  const auto spec = resolve_graphon(p);
  WelfareConfig cfg;
  cfg.Ns = p.integers("Ns", {100, 200, 400, 800});
  cfg.trials = p.integer("trials", 20);
  cfg.alpha = p.number("alpha", 5.0);
  cfg.beta = p.number("beta", 1.0);
  cfg.c_per_agent = p.number("c-per-agent", 0.01);
  cfg.optimal_cap = p.integer("optimal-cap", 150);
  cfg.eigen_M = p.integer("eigen-M", 0);
  cfg.seed = seed;
  cfg.jobs = jobs;
  const auto e = intervention_experiment(spec, cfg);
  if (out.csv()) {
    auto ow = out.open("welfare.csv");
    write_welfare_csv(ow, e);
    auto os = out.open("welfare_stats.csv");
    write_welfare_stats_csv(os, e);
  } else {
    json records = json::array();
    for (const auto& r : e.records) {
      json j = {{"N", r.N}, {"trial", r.trial}, {"failed", r.failed}};
      if (!r.failed) {
        j["T"] = r.T;
        j["T_hom"] = r.T_hom;
        j["T_nh"] = r.T_nh;
        j["T_gh"] = r.T_gh;
        j["T_opt"] = r.T_opt ? json(*r.T_opt) : json(nullptr);
        j["gap"] = r.gap;
      }
      records.push_back(std::move(j));
    }
    json stats = json::array();
    for (const auto& s : e.stats)
      stats.push_back({{"N", s.N},
                       {"trials", s.trials},
                       {"failures", s.failures},
                       {"mean_T", s.mean_T},
                       {"mean_T_hom", s.mean_T_hom},
                       {"mean_T_nh", s.mean_T_nh},
                       {"mean_T_gh", s.mean_T_gh},
                       {"mean_T_opt", s.mean_T_opt ? json(*s.mean_T_opt) : json(nullptr)},
                       {"gap_p50", s.gap.p50},
                       {"ratio_gh_nh_p50", s.ratio_gh_nh.p50}});
    out.write_json("welfare.json", {{"records", records}, {"stats", stats}});
  }
}

void run_bne_epsilon(Params& p, std::uint64_t seed, int jobs, Output& out) {
  const auto spec = resolve_graphon(p);
  const auto payoff = resolve_lq(p, 3.0);
  const auto Ns = p.integers("Ns", {100, 200, 400, 800, 1600});
  const int trials = p.integer("trials", 2000);
  const int M = p.integer("M", 1000);
  const auto eq = solve_graphon_lq(spec, payoff, M);
  const double L_U = std::abs(payoff.alpha) * default_s_max(payoff, eq.lambda_max);
  std::vector<EpsilonEstimate> est(Ns.size());
  parallel_for(static_cast<int>(Ns.size()), jobs, [&](int k) {
    const int N = Ns[static_cast<std::size_t>(k)];
    est[static_cast<std::size_t>(k)] = estimate_epsilon(
        spec, eq.as_grid(), L_U, N, trials, derive_seed(seed, {static_cast<std::uint64_t>(N)}));
  });
  if (out.csv()) {
    auto os = out.open("epsilon.csv");
    os << "N,epsilon_hat,stderr,L_U,trials\n";
    for (const auto& e : est)
      os << e.N << ',' << num(e.epsilon_hat) << ',' << num(e.std_error) << ',' << num(e.L_U) << ','
         << e.trials << '\n';
  } else {
    json arr = json::array();
    for (const auto& e : est) arr.push_back(to_json(e));
    out.write_json("epsilon.json", arr);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graphon games: equilibria, interventions and Monte Carlo experiments", "graphon"};
  app.require_subcommand(1);
  app.set_version_flag("--version", GRAPHON_VERSION);

  struct Sub {
    CLI::App* app;
    Params params;
    Common common;
  };
  std::map<std::string, Sub> subs;

  auto make = [&](const std::string& name, const std::string& help) -> Sub& {
    Sub& s = subs[name];
    s.app = app.add_subcommand(name, help);
    s.app->add_option("--config", s.common.config, "JSON file with option values");
    s.app->add_option("--out", s.common.out, "output directory")->capture_default_str();
    s.app->add_option("--format", s.common.format, "output format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    s.params.add(s.app, "seed", "base seed for all randomness (default 0)");
    s.params.add(s.app, "jobs", "worker threads, 0 = all cores (results do not depend on it)");
    return s;
  };

  {
    auto& s = make("sample", "sample types, a weighted network and a 0-1 network");
    add_graphon_options(s.params, s.app);
    s.params.add(s.app, "N", "number of agents");
  }
  {
    auto& s = make("eigen", "leading eigenvalues and eigenfunctions of a graphon");
    add_graphon_options(s.params, s.app);
    s.params.add(s.app, "M", "grid resolution (default 1000)");
    s.params.add(s.app, "k", "number of eigenpairs (default 1)");
    s.params.add(s.app, "tol", "eigenvector residual tolerance (default 1e-10)");
  }
  for (const char* name : {"solve-network", "solve-graphon"}) {
    const bool network = std::string(name) == "solve-network";
    auto& s = make(name, network ? "LQ equilibrium of a network game"
                                 : "LQ equilibrium of a graphon game on an M-grid");
    if (network) add_network_options(s.params, s.app);
    else add_graphon_options(s.params, s.app);
    if (!network) s.params.add(s.app, "M", "grid resolution (default 1000)");
    s.params.add(s.app, "alpha", "peer-effect weight (default 0.5)");
    s.params.add(s.app, "beta", "standalone marginal return (default 1)");
    s.params.add(s.app, "tol", "fixed-point tolerance (default 1e-10)");
    s.params.add(s.app, "max-iter", "best-response iteration cap (default 1e6)");
  }
  {
    auto& s = make("intervene", "targeted interventions on an LQ complements network game");
    add_network_options(s.params, s.app);
    s.params.add(s.app, "alpha", "peer-effect weight, > 0 (default 5)");
    s.params.add(s.app, "beta", "baseline standalone return (default 1)");
    s.params.add(s.app, "C", "absolute budget");
    s.params.add(s.app, "c-per-agent", "budget per agent, C = c N (default 0.01)");
    s.params.add(s.app, "policy",
                 "all, optimal, network-heuristic, graphon-heuristic, homogeneous or none");
    s.params.add(s.app, "eigen-M", "grid for a numerical graphon eigenfunction (default analytic)");
  }
  {
    auto& s = make("distance-exp", "distance between sampled-network and graphon equilibria");
    add_graphon_options(s.params, s.app);
    s.params.add(s.app, "alpha", "peer-effect weight (default 0.5)");
    s.params.add(s.app, "beta", "standalone marginal return (default 1)");
    s.params.add(s.app, "Ns", "population sizes, comma separated");
    s.params.add(s.app, "trials", "trials per population size (default 50)");
    s.params.add(s.app, "delta", "confidence parameter in (0, 1/e] (default 0.05)");
    s.params.add(s.app, "M", "reference grid resolution (default max(2000, 2 max N))");
    s.params.add_flag(s.app, "midpoints", "place agent types at cell midpoints");
  }
  {
    auto& s = make("welfare-exp", "welfare of intervention policies on sampled networks");
    add_graphon_options(s.params, s.app);
    s.params.add(s.app, "alpha", "peer-effect weight, > 0 (default 5)");
    s.params.add(s.app, "beta", "baseline standalone return (default 1)");
    s.params.add(s.app, "c-per-agent", "budget per agent (default 0.01)");
    s.params.add(s.app, "Ns", "population sizes, comma separated");
    s.params.add(s.app, "trials", "trials per population size (default 20)");
    s.params.add(s.app, "optimal-cap", "largest N for the exact optimum (default 150)");
    s.params.add(s.app, "eigen-M", "grid for a numerical graphon eigenfunction (default analytic)");
  }
  {
    auto& s = make("bne-epsilon", "Monte Carlo estimate of the Bayesian-Nash epsilon");
    add_graphon_options(s.params, s.app);
    s.params.add(s.app, "alpha", "peer-effect weight (default 3)");
    s.params.add(s.app, "beta", "standalone marginal return (default 1)");
    s.params.add(s.app, "Ns", "population sizes, comma separated");
    s.params.add(s.app, "trials", "Monte Carlo trials per N (default 2000)");
    s.params.add(s.app, "M", "grid resolution of the graphon equilibrium (default 1000)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  std::string name;
  for (auto& [key, s] : subs)
    if (s.app->parsed()) name = key;
  Sub& sub = subs.at(name);
  Params& p = sub.params;

  try {
    p.merge(sub.common.config);
    const std::uint64_t seed = p.unsigned_integer("seed", 0);
    const int jobs = p.integer("jobs", 0);
    if (jobs < 0) throw DomainError("--jobs must be nonnegative");
    Output out(sub.common.out, sub.common.format);

    if (name == "sample") run_sample(p, seed, out);
    else if (name == "eigen") run_eigen(p, seed, out);
    else if (name == "solve-network") run_solve_network(p, seed, out);
    else if (name == "solve-graphon") run_solve_graphon(p, seed, out);
    else if (name == "intervene") run_intervene(p, seed, out);
    else if (name == "distance-exp") run_distance_exp(p, seed, jobs, out);
    else if (name == "welfare-exp") run_welfare_exp(p, seed, jobs, out);
    else if (name == "bne-epsilon") run_bne_epsilon(p, seed, jobs, out);

    json config = p.resolved;
    config.erase("jobs");
    const json manifest = {{"subcommand", name},
                           {"format", out.format()},
                           {"seed", seed},
                           {"config", config},
                           {"versions", versions()},
                           {"outputs", out.files()}};
    std::ofstream(fs::path(sub.common.out) / "manifest.json", std::ios::binary)
        << manifest.dump(2) << '\n';
    return kExitOk;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed JSON input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}
