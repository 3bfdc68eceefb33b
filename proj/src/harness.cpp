#include "mfchain/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "mfchain/kolmogorov.hpp"
#include "mfchain/linearized.hpp"
#include "mfchain/master_eq.hpp"
#include "mfchain/models.hpp"
#include "mfchain/observables.hpp"
#include "mfchain/particle_sim.hpp"
#include "mfchain/report_io.hpp"
#include "mfchain/stats.hpp"

namespace mfchain::harness {

using nlohmann::json;

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"model.name", "weak_interaction", "registered model name"},
      {"model.params", "1,1,0.25", "comma-separated model parameters"},
      {"phi.name", "squared_distance",
       "test function: squared_distance, linear, entropy_like, constant"},
      {"phi.params", "", "test function parameters; squared_distance without a target uses nu_inf"},
      {"init.mu", "0.9,0.1", "initial measure mu0 (empty: barycenter)"},
      {"mc.N", "8,16,32,64,128,256", "strictly increasing particle counts"},
      {"mc.R", "20000", "Monte Carlo replications per N (>= 2)"},
      {"grid.horizon", "20", "time horizon"},
      {"grid.spacing", "0.25", "output grid spacing"},
      {"ode.step", "0.001", "RK4 step (capped at the grid spacing)"},
      {"run.seed", "1", "master seed"},
      {"run.out", "out", "output directory"},
      {"certify.resolution", "0", "simplex lattice resolution (0: by dimension)"},
      {"decay.samples", "20", "random starts for the decay fits"},
      {"decay.horizon", "20", "horizon of the linearized decay fit"},
      {"decay.contraction_horizon", "6", "horizon of the nonlinear contraction fit"},
      {"master.points", "100", "random (t, mu) points in the residual scan"},
      {"master.t_min", "0.1", "smallest scan time"},
      {"master.t_max", "5", "largest scan time"},
      {"master.tol", "1e-5", "residual tolerance"},
  };
  return keys;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw std::invalid_argument("config " + key + ": '" + text + "' is not a number");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("config " + key + ": '" + text + "' is not a nonnegative integer");
  }
  return v;
}

}  // namespace

Config::Config() {
  for (const auto& k : config_keys()) values_[k.name] = k.default_value;
}

Config Config::parse(std::string_view text) {
  Config c;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    c.set(trim(std::string_view(content).substr(0, eq)), trim(std::string_view(content).substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("unknown config key '" + key + "'");
  it->second = value;
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("unknown config key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const {
  return parse_double(key, trim(get(key)));
}

std::uint64_t Config::get_u64(const std::string& key) const {
  return parse_u64(key, trim(get(key)));
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(get(key))) out.push_back(parse_double(key, item));
  return out;
}

std::vector<std::uint32_t> Config::get_counts(const std::string& key) const {
  std::vector<std::uint32_t> out;
  for (const auto& item : split_list(get(key))) {
    const std::uint64_t v = parse_u64(key, item);
    if (v == 0 || v > UINT32_MAX) throw std::invalid_argument("config " + key + ": N out of range");
    out.push_back(static_cast<std::uint32_t>(v));
  }
  return out;
}

std::map<std::string, std::string> Config::echo() const {
  std::map<std::string, std::string> e = values_;
  e.erase("run.out");
  return e;
}

std::string Config::canonical_text() const {
  std::string s;
  for (const auto& [k, v] : echo()) s += k + " = " + v + "\n";
  return s;
}

const std::string& RunResult::report_text() const {
  for (const auto& f : files) {
    if (f.name.size() > 5 && f.name.compare(f.name.size() - 5, 5, ".json") == 0) return f.content;
  }
  throw std::logic_error("run produced no report");
}

namespace {

// Shared setup read from a config.
struct Setup {
  Model model;
  TimeGrid grid;
  double step;
  std::uint64_t seed;
};

Setup make_setup(const Config& c) {
  Model model = make_model(c.get("model.name"), c.get_doubles("model.params"));
  const double horizon = c.get_double("grid.horizon");
  const double spacing = c.get_double("grid.spacing");
  if (!(horizon > 0.0)) throw std::invalid_argument("grid.horizon must be > 0");
  TimeGrid grid = TimeGrid::uniform(horizon, spacing);
  const double step = std::min(c.get_double("ode.step"), grid.min_spacing());
  return {std::move(model), std::move(grid), step, c.get_u64("run.seed")};
}

Measure initial_measure(const Config& c, std::size_t d) {
  const std::vector<double> w = c.get_doubles("init.mu");
  if (w.empty()) return Measure::barycenter(d);
  if (w.size() != d) throw std::invalid_argument("init.mu must have d entries");
  return Measure(w);
}

std::vector<std::uint32_t> particle_counts(const Config& c) {
  const auto ns = c.get_counts("mc.N");
  if (ns.empty()) throw std::invalid_argument("mc.N is empty");
  for (std::size_t i = 1; i < ns.size(); ++i) {
    if (ns[i] <= ns[i - 1]) throw std::invalid_argument("mc.N must be strictly increasing");
  }
  return ns;
}

std::size_t replications(const Config& c) {
  const std::uint64_t R = c.get_u64("mc.R");
  if (R < 2) throw std::invalid_argument("mc.R must be >= 2");
  return static_cast<std::size_t>(R);
}

StationaryResult stationary(const Setup& s) {
  return stationary_distribution(s.model, 1e-12, 1000.0, std::min(s.step, kDefaultOdeStep));
}

ScalarField make_phi(const Config& c, const Model& model, const StationaryResult& nu) {
  if (c.get("phi.name") == "squared_distance" && c.get_doubles("phi.params").empty() &&
      !nu.converged) {
    throw std::runtime_error("stationary distribution did not converge: " + nu.message);
  }
  return observables::make(c.get("phi.name"), c.get_doubles("phi.params"), model.dim(),
                           nu.weights);
}

json grid_json(const TimeGrid& grid) {
  return {{"horizon", grid.back()}, {"points", grid.size()}, {"min_spacing", grid.min_spacing()}};
}

std::string status_name(int code) {
  switch (code) {
    case kExitPass: return "pass";
    case kExitInconclusive: return "inconclusive";
    case kExitFailure: return "fail";
    default: return "error";
  }
}

RunResult finish(const std::string& command, const Config& c, json result, int code,
                 std::vector<OutputFile> extra = {}) {
  RunResult out;
  out.exit_code = code;
  out.report = {{"schema", kSchemaVersion},
                {"tool", kToolName},
                {"version", kVersion},
                {"command", command},
                {"config", c.echo()},
                {"input_hash", git_blob_hash(command + "\n" + c.canonical_text())},
                {"seed", c.get_u64("run.seed")},
                {"force", c.force},
                {"status", status_name(code)},
                {"exit_code", code},
                {"result", std::move(result)}};
  std::string name = command;
  std::replace(name.begin(), name.end(), '-', '_');
  out.files.push_back({name + ".json", out.report.dump(2) + "\n"});
  for (auto& f : extra) out.files.push_back(std::move(f));
  return out;
}

// Runs both conditions and the decay fit.
struct Certificate {
  json bundle;
  Verdict overall = Verdict::Inconclusive;
  DecayEstimate decay;
};

Certificate certify_model(const Model& model, const Config& c, double step) {
  Certificate cert;
  ErgodicityReport c1 = check_condition1(model);
  std::size_t res = c.get_u64("certify.resolution");
  if (res == 0) res = default_lattice_resolution(model.dim());
  ErgodicityReport c2 = check_condition2(model, res);

  json decay_json;
  try {
    DecayOptions opt;
    opt.step = step;
    opt.seed = c.get_u64("run.seed");
    cert.decay = estimate_decay(model, c.get_u64("decay.samples"), c.get_double("decay.horizon"), opt);
    decay_json = to_json(cert.decay);
    for (ErgodicityReport* r : {&c1, &c2}) {
      r->constants.lambda = cert.decay.rate;
      r->constants.c2 = cert.decay.c2;
    }
  } catch (const std::exception& e) {
    decay_json = {{"error", e.what()}};
  }

  if (c1.verdict == Verdict::Pass || c2.verdict == Verdict::Pass) {
    cert.overall = Verdict::Pass;
  } else if (c1.verdict == Verdict::Inconclusive || c2.verdict == Verdict::Inconclusive) {
    cert.overall = Verdict::Inconclusive;
  } else {
    cert.overall = Verdict::Fail;
  }
  cert.bundle = {{"model", model.name()},
                 {"d", model.dim()},
                 {"condition1", to_json(c1)},
                 {"condition2", to_json(c2)},
                 {"decay", decay_json},
                 {"verdict", to_string(cert.overall)}};
  return cert;
}

int verdict_code(Verdict v) {
  switch (v) {
    case Verdict::Pass: return kExitPass;
    case Verdict::Fail: return kExitFailure;
    case Verdict::Inconclusive: return kExitInconclusive;
  }
  return kExitInconclusive;
}

// Returns the refusal result if the model is not certified and --force is off.
std::optional<RunResult> require_certificate(const std::string& command, const Config& c,
                                             const Certificate& cert, json& result) {
  result["certificate"] = cert.bundle;
  if (cert.overall == Verdict::Pass) return std::nullopt;
  if (c.force) {
    result["forced"] = "model not certified; run forced by the user";
    return std::nullopt;
  }
  result["refused"] = "model not certified; rerun with --force to proceed anyway";
  return finish(command, c, std::move(result), verdict_code(cert.overall));
}

json fit_json(const std::vector<double>& ns, const std::vector<double>& values) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (values[i] > 0.0) {
      lx.push_back(std::log(ns[i]));
      ly.push_back(std::log(values[i]));
    }
  }
  if (lx.size() < 2 || lx.size() != ns.size()) {
    return {{"slope", nullptr}, {"intercept", nullptr}, {"residual_std", nullptr},
            {"note", "needs at least two N with positive values"}};
  }
  const LineFit f = fit_line(lx, ly);
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"residual_std", f.residual_std}};
}

std::string csv_line(std::initializer_list<std::string> cells) {
  std::string s;
  bool first = true;
  for (const auto& cell : cells) {
    if (!first) s += ',';
    s += cell;
    first = false;
  }
  return s + "\n";
}

}  // namespace

RunResult run_solve(const Config& c) {
  const Setup s = make_setup(c);
  const Measure mu0 = initial_measure(c, s.model.dim());
  const Trajectory traj = solve_kolmogorov(s.model, mu0, s.grid, s.step);
  std::ostringstream csv;
  write_trajectory_csv(csv, traj);
  const Measure& last = traj.states.back();
  json result = {{"model", s.model.name()},
                 {"grid", grid_json(s.grid)},
                 {"ode_step", s.step},
                 {"mu0", mu0.vec()},
                 {"final", last.vec()},
                 {"final_drift_l1", l1_norm(kolmogorov_drift(s.model, last.weights()))},
                 {"max_clip", traj.max_clip}};
  return finish("solve", c, std::move(result), kExitPass, {{"trajectory.csv", csv.str()}});
}

RunResult run_simulate(const Config& c) {
  const Setup s = make_setup(c);
  const Measure mu0 = initial_measure(c, s.model.dim());
  const std::uint32_t N = particle_counts(c).front();
  const std::size_t R = replications(c);
  const StationaryResult nu = stationary(s);
  const ScalarField phi = make_phi(c, s.model, nu);
  const std::uint64_t batch = replication_seed(s.seed, N);

  Rng rng(replication_seed(batch, 0));
  const ParticleConfig init = sample_initial(mu0, N, rng);
  const EmpiricalPath path = simulate(s.model, init, s.grid, rng);
  const MCEstimate est = mc_observable(s.model, phi, mu0, N, R, s.grid, batch, c.threads);

  std::ostringstream path_csv, mc_csv;
  write_path_csv(path_csv, path);
  write_mc_csv(mc_csv, est);
  json result = {{"model", s.model.name()},
                 {"observable", phi.name},
                 {"N", N},
                 {"R", R},
                 {"batch_seed", batch},
                 {"grid", grid_json(s.grid)},
                 {"path_events", path.events},
                 {"final_mean", est.mean.back()},
                 {"final_stderr", est.stderr_.back()}};
  return finish("simulate", c, std::move(result), kExitPass,
                {{"path.csv", path_csv.str()}, {"mc.csv", mc_csv.str()}});
}

RunResult run_weak_error(const Config& c) {
  const Setup s = make_setup(c);
  const std::size_t d = s.model.dim();
  const Measure mu0 = initial_measure(c, d);
  const auto ns = particle_counts(c);
  const std::size_t R = replications(c);
  const StationaryResult nu = stationary(s);
  const ScalarField phi = make_phi(c, s.model, nu);

  json result = {{"model", s.model.name()},
                 {"observable", phi.name},
                 {"grid", grid_json(s.grid)},
                 {"ode_step", s.step},
                 {"R", R},
                 {"nu_inf", nu.weights}};
  const Certificate cert = certify_model(s.model, c, s.step);
  if (auto refused = require_certificate("weak-error", c, cert, result)) return *refused;

  const std::size_t K = s.grid.size();
  const Trajectory limit_traj = solve_kolmogorov(s.model, mu0, s.grid, s.step);
  std::vector<double> limit(K);
  for (std::size_t k = 0; k < K; ++k) limit[k] = phi(limit_traj.states[k]);

  std::string csv = "N,t,mean,stderr,limit,error,T1,T2\n";
  json per_n = json::array();
  std::vector<double> nx, sup_errors;
  std::size_t r_needed = 0;
  bool inconclusive = false;

  for (const std::uint32_t N : ns) {
    const std::uint64_t batch = replication_seed(s.seed, N);
    const auto rows = run_replications(R, c.threads, [&](std::size_t r) {
      Rng rng(replication_seed(batch, r));
      const ParticleConfig init = sample_initial(mu0, N, rng);
      const EmpiricalPath path = simulate(s.model, init, s.grid, rng);
      std::vector<double> v(K + d);
      for (std::size_t k = 0; k < K; ++k) v[k] = phi(path.states[k].empirical());
      for (std::size_t x = 0; x < d; ++x) v[K + x] = init[x];
      return v;
    });

    // U(t, mu^N_0) per distinct initial configuration, filled in replication order.
    std::map<std::vector<double>, std::vector<double>> cache;
    std::vector<std::vector<double>> phi_rows(R), u_rows(R), diff_rows(R);
    for (std::size_t r = 0; r < R; ++r) {
      std::vector<double> counts(rows[r].begin() + static_cast<std::ptrdiff_t>(K), rows[r].end());
      auto it = cache.find(counts);
      if (it == cache.end()) {
        std::vector<double> w(d);
        for (std::size_t x = 0; x < d; ++x) w[x] = counts[x] / static_cast<double>(N);
        const Trajectory tr = solve_kolmogorov(s.model, Measure(std::move(w)), s.grid, s.step);
        std::vector<double> u(K);
        for (std::size_t k = 0; k < K; ++k) u[k] = phi(tr.states[k]);
        it = cache.emplace(std::move(counts), std::move(u)).first;
      }
      phi_rows[r].assign(rows[r].begin(), rows[r].begin() + static_cast<std::ptrdiff_t>(K));
      u_rows[r] = it->second;
      diff_rows[r].resize(K);
      for (std::size_t k = 0; k < K; ++k) diff_rows[r][k] = phi_rows[r][k] - u_rows[r][k];
    }
    std::vector<double> mean, se, u_mean, u_se, t1, t1_se;
    column_moments(phi_rows, mean, se);
    column_moments(u_rows, u_mean, u_se);
    column_moments(diff_rows, t1, t1_se);

    std::vector<double> err(K), t2(K);
    double sup = -1.0, gap = 0.0;
    std::size_t arg = 0;
    for (std::size_t k = 0; k < K; ++k) {
      err[k] = mean[k] - limit[k];
      t2[k] = u_mean[k] - limit[k];
      if (std::abs(err[k]) > sup) {
        sup = std::abs(err[k]);
        arg = k;
      }
      if (se[k] > 0.0) gap = std::max(gap, std::abs(t1[k] + t2[k] - err[k]) / se[k]);
      csv += csv_line({std::to_string(N), format_double(s.grid[k]), format_double(mean[k]),
                       format_double(se[k]), format_double(limit[k]), format_double(err[k]),
                       format_double(t1[k]), format_double(t2[k])});
    }
    const double half_width = 1.96 * se[arg];
    if (half_width > 0.5 * sup) {
      inconclusive = true;
      const double ratio = sup > 0.0 ? half_width / (0.5 * sup) : 1e6;
      r_needed = std::max(r_needed, static_cast<std::size_t>(std::ceil(static_cast<double>(R) * ratio * ratio)));
    }
    nx.push_back(N);
    sup_errors.push_back(sup);
    per_n.push_back({{"N", N},
                     {"batch_seed", batch},
                     {"sup_error", sup},
                     {"sup_time", s.grid[arg]},
                     {"half_width", half_width},
                     {"tail_error", std::abs(err.back())},
                     {"distinct_initial_configs", cache.size()},
                     {"error", err},
                     {"stderr", se},
                     {"T1", t1},
                     {"T1_stderr", t1_se},
                     {"T2", t2},
                     {"T2_stderr", u_se},
                     {"decomposition_gap_in_stderr", gap}});
  }

  result["times"] = s.grid.times();
  result["limit"] = limit;
  result["per_N"] = per_n;
  result["fit"] = fit_json(nx, sup_errors);
  result["sup_ratio_first_last"] = sup_errors.back() > 0.0 ? json(sup_errors.front() / sup_errors.back()) : json(nullptr);
  result["sup_note"] = "sup over the configured grid; tail_error is the error at the last grid time";
  int code = kExitPass;
  if (inconclusive) {
    code = kExitInconclusive;
    result["inconclusive"] = "MC half-width exceeds half the sup error";
    result["R_needed"] = r_needed;
  }
  return finish("weak-error", c, std::move(result), code, {{"weak_error_curves.csv", csv}});
}

RunResult run_stationary_gap(const Config& c) {
  const Setup s = make_setup(c);
  const std::size_t d = s.model.dim();
  const Measure mu0 = initial_measure(c, d);
  const auto ns = particle_counts(c);
  const std::size_t R = replications(c);
  const StationaryResult nu = stationary(s);
  if (!nu.converged) throw std::runtime_error("stationary distribution did not converge: " + nu.message);
  const ScalarField gap_fn = observables::squared_distance(nu.measure());

  json result = {{"model", s.model.name()}, {"R", R}, {"nu_inf", nu.weights}};
  const Certificate cert = certify_model(s.model, c, s.step);
  if (auto refused = require_certificate("stationary-gap", c, cert, result)) return *refused;

  const double burn_in = cert.decay.decaying ? 10.0 / cert.decay.rate : 0.0;
  const double horizon = s.grid.back();
  const double spacing = c.get_double("grid.spacing");
  std::vector<double> times;
  if (burn_in > 0.0) times.push_back(0.0);
  const auto samples = static_cast<std::size_t>(std::floor(horizon / spacing + 1e-9));
  for (std::size_t k = 0; k <= samples; ++k) times.push_back(burn_in + static_cast<double>(k) * spacing);
  const TimeGrid grid(times);
  const std::size_t first = burn_in > 0.0 ? 1 : 0;

  json per_n = json::array();
  std::vector<double> nx, gaps;
  std::size_t r_needed = 0;
  bool inconclusive = false;
  std::string csv = "N,gap,stderr,N_times_gap\n";
  for (const std::uint32_t N : ns) {
    const std::uint64_t batch = replication_seed(s.seed, N);
    const auto rows = run_replications(R, c.threads, [&](std::size_t r) {
      Rng rng(replication_seed(batch, r));
      const ParticleConfig init = sample_initial(mu0, N, rng);
      const EmpiricalPath path = simulate(s.model, init, grid, rng);
      double acc = 0.0;
      for (std::size_t k = first; k < grid.size(); ++k) acc += gap_fn(path.states[k].empirical());
      return std::vector<double>{acc / static_cast<double>(grid.size() - first)};
    });
    std::vector<double> mean, se;
    column_moments(rows, mean, se);
    const double hw = 1.96 * se[0];
    if (hw > 0.5 * mean[0]) {
      inconclusive = true;
      const double ratio = mean[0] > 0.0 ? hw / (0.5 * mean[0]) : 1e6;
      r_needed = std::max(r_needed, static_cast<std::size_t>(std::ceil(static_cast<double>(R) * ratio * ratio)));
    }
    nx.push_back(N);
    gaps.push_back(mean[0]);
    per_n.push_back({{"N", N}, {"batch_seed", batch}, {"gap", mean[0]}, {"stderr", se[0]},
                     {"half_width", hw}, {"N_times_gap", N * mean[0]}});
    csv += csv_line({std::to_string(N), format_double(mean[0]), format_double(se[0]),
                     format_double(N * mean[0])});
  }
  result["burn_in"] = burn_in;
  result["burn_in_note"] = cert.decay.decaying ? "10 / lambda_hat" : "no decay detected; no burn-in";
  result["sampling"] = {{"window", horizon}, {"spacing", spacing}, {"samples", grid.size() - first}};
  result["per_N"] = per_n;
  result["fit"] = fit_json(nx, gaps);
  int code = kExitPass;
  if (inconclusive) {
    code = kExitInconclusive;
    result["inconclusive"] = "MC half-width exceeds half the gap";
    result["R_needed"] = r_needed;
  }
  return finish("stationary-gap", c, std::move(result), code, {{"stationary_gap.csv", csv}});
}

RunResult run_certify(const Config& c) {
  const Setup s = make_setup(c);
  const Certificate cert = certify_model(s.model, c, s.step);
  return finish("certify", c, cert.bundle, verdict_code(cert.overall));
}

RunResult run_master_check(const Config& c) {
  const Setup s = make_setup(c);
  const StationaryResult nu = stationary(s);
  const ScalarField phi = make_phi(c, s.model, nu);
  const PropagatedObservable obs(s.model, phi, s.step);
  const double tol = c.get_double("master.tol");
  const auto rows = residual_scan(obs, c.get_u64("master.points"), c.get_double("master.t_min"),
                                  c.get_double("master.t_max"), s.seed);
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, r.residual);
  std::ostringstream csv;
  write_residual_csv(csv, rows);
  json result = {{"model", s.model.name()},
                 {"observable", phi.name},
                 {"fd_fallback", obs.uses_fd_fallback()},
                 {"points", rows.size()},
                 {"max_residual", worst},
                 {"tolerance", tol}};
  return finish("master-check", c, std::move(result), worst < tol ? kExitPass : kExitFailure,
                {{"master_check.csv", csv.str()}});
}

RunResult run_decay_fit(const Config& c) {
  const Setup s = make_setup(c);
  DecayOptions opt;
  opt.step = s.step;
  opt.seed = s.seed;
  const std::size_t samples = c.get_u64("decay.samples");
  const DecayEstimate lin = estimate_decay(s.model, samples, c.get_double("decay.horizon"), opt);
  const DecayEstimate nonlin = estimate_nonlinear_contraction(
      s.model, samples, c.get_double("decay.contraction_horizon"), opt);
  json result = {{"model", s.model.name()}, {"linearized", to_json(lin)}, {"nonlinear", to_json(nonlin)}};
  if (lin.decaying && nonlin.decaying) {
    result["relative_difference"] = std::abs(lin.rate - nonlin.rate) / nonlin.rate;
  }
  return finish("decay-fit", c, std::move(result), lin.decaying ? kExitPass : kExitFailure);
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"solve",   "simulate",     "weak-error",
                                                 "stationary-gap", "certify", "master-check",
                                                 "decay-fit"};
  return names;
}

RunResult run_command(const std::string& command, const Config& c) {
  if (command == "solve") return run_solve(c);
  if (command == "simulate") return run_simulate(c);
  if (command == "weak-error") return run_weak_error(c);
  if (command == "stationary-gap") return run_stationary_gap(c);
  if (command == "certify") return run_certify(c);
  if (command == "master-check") return run_master_check(c);
  if (command == "decay-fit") return run_decay_fit(c);
  throw std::invalid_argument("unknown command '" + command + "'");
}

void write_outputs(const RunResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& f : result.files) {
    std::ofstream out(dir / f.name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / f.name).string());
    out << f.content;
  }
}

}  // namespace mfchain::harness
