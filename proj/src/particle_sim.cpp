#include "mfchain/particle_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mfchain/report_io.hpp"

namespace mfchain {

ParticleConfig::ParticleConfig(std::vector<std::uint32_t> counts)
    : counts_(std::move(counts)) {
  if (counts_.empty()) throw std::invalid_argument("empty particle configuration");
  std::uint64_t n = 0;
  for (auto c : counts_) n += c;
  if (n == 0) throw std::invalid_argument("particle configuration has N = 0");
  if (n > UINT32_MAX) throw std::invalid_argument("too many particles");
  n_ = static_cast<std::uint32_t>(n);
}

Measure ParticleConfig::empirical() const {
  std::vector<double> w(counts_.size());
  const double inv = 1.0 / static_cast<double>(n_);
  for (std::size_t x = 0; x < w.size(); ++x) w[x] = counts_[x] * inv;
  return Measure(std::move(w));
}

ParticleConfig sample_initial(const Measure& mu0, std::uint32_t N, Rng& rng) {
  if (N < 1) throw std::invalid_argument("need N >= 1");
  const std::size_t d = mu0.dim();
  std::vector<double> cdf(d);
  std::partial_sum(mu0.vec().begin(), mu0.vec().end(), cdf.begin());
  std::vector<std::uint32_t> counts(d, 0);
  for (std::uint32_t i = 0; i < N; ++i) {
    const double u = uniform01(rng) * cdf.back();
    std::size_t x = 0;
    // Skip zero-weight states so a draw can never land on them.
    while (x + 1 < d && (u >= cdf[x] || mu0[x] == 0.0)) ++x;
    while (mu0[x] == 0.0) --x;
    ++counts[x];
  }
  return ParticleConfig(std::move(counts));
}

EmpiricalPath simulate(const Model& model, const ParticleConfig& init,
                       const TimeGrid& grid, Rng& rng) {
  const std::size_t d = model.dim();
  if (init.dim() != d) throw std::invalid_argument("dimension mismatch");
  EmpiricalPath path{grid, {}, init.N(), 0, 0};
  path.states.reserve(grid.size());
  path.states.push_back(init);

  std::vector<std::uint32_t> c = init.counts();
  std::vector<double> mu(d), a(d * d), out_rate(d);
  const double inv_n = 1.0 / static_cast<double>(init.N());
  const bool check_region = model.region().min_weight > 0.0;
  const double horizon = grid.back();

  double t = 0.0;
  std::size_t next = 1;
  while (next < grid.size()) {
    for (std::size_t x = 0; x < d; ++x) mu[x] = c[x] * inv_n;
    if (check_region) model.check_region(mu, t);
    model.rates_into(mu, a);
    double lambda = 0.0;
    for (std::size_t x = 0; x < d; ++x) {
      double r = 0.0;
      if (c[x] != 0) {
        for (std::size_t y = 0; y < d; ++y) {
          if (y != x) r += a[x * d + y];
        }
        r *= c[x];
      }
      out_rate[x] = r;
      lambda += r;
    }
    if (!std::isfinite(lambda)) {
      std::ostringstream msg;
      msg << "total jump rate is not finite at t = " << t;
      throw IntegrationError(msg.str(), t);
    }
    const double t_next = lambda > 0.0 ? t + exponential(rng, lambda)
                                       : std::numeric_limits<double>::infinity();
    while (next < grid.size() && grid[next] < t_next) {
      path.states.emplace_back(c);
      ++next;
    }
    if (t_next > horizon) break;

    // Pick the source state, then the target, by inversion.
    double u = uniform01(rng) * lambda;
    std::size_t x = 0;
    while (x + 1 < d && (u >= out_rate[x] || out_rate[x] == 0.0)) {
      u -= out_rate[x];
      ++x;
    }
    while (out_rate[x] == 0.0) --x;
    u = std::min(u, out_rate[x]) / c[x];
    std::size_t y = 0;
    std::size_t last = d;
    for (; y < d; ++y) {
      if (y == x) continue;
      const double r = a[x * d + y];
      if (r > 0.0) last = y;
      if (u < r) break;
      u -= r;
    }
    if (y == d) y = last;  // roundoff at the end of the row
    --c[x];
    ++c[y];
    ++path.events;
    t = t_next;
  }
  return path;
}

std::vector<std::vector<double>> run_replications(
    std::size_t R, unsigned threads,
    const std::function<std::vector<double>(std::size_t)>& work) {
  std::vector<std::vector<double>> results(R);
  std::vector<std::exception_ptr> errors(R);
  std::atomic<std::size_t> counter{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t r = counter.fetch_add(1);
      if (r >= R) return;
      try {
        results[r] = work(r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(R, 1))));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

void column_moments(const std::vector<std::vector<double>>& rows,
                    std::vector<double>& mean, std::vector<double>& stderr_) {
  const std::size_t R = rows.size();
  if (R < 2) throw std::invalid_argument("need at least 2 replications");
  const std::size_t m = rows.front().size();
  mean.assign(m, 0.0);
  stderr_.assign(m, 0.0);
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < m; ++k) mean[k] += row[k];
  }
  for (double& v : mean) v /= static_cast<double>(R);
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < m; ++k) {
      const double dev = row[k] - mean[k];
      stderr_[k] += dev * dev;
    }
  }
  for (double& v : stderr_) {
    v = std::sqrt(v / static_cast<double>(R - 1)) / std::sqrt(static_cast<double>(R));
  }
}

MCEstimate mc_observable(const Model& model, const ScalarField& phi,
                         const Measure& mu0, std::uint32_t N, std::size_t R,
                         const TimeGrid& grid, std::uint64_t master_seed,
                         unsigned threads) {
  if (R < 2) throw std::invalid_argument("need R >= 2");
  const auto rows = run_replications(R, threads, [&](std::size_t r) {
    Rng rng(replication_seed(master_seed, r));
    const ParticleConfig init = sample_initial(mu0, N, rng);
    const EmpiricalPath path = simulate(model, init, grid, rng);
    std::vector<double> v(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) v[k] = phi(path.states[k].empirical());
    return v;
  });
  MCEstimate est{grid, {}, {}, R, N, master_seed};
  column_moments(rows, est.mean, est.stderr_);
  return est;
}

void write_path_csv(std::ostream& out, const EmpiricalPath& path) {
  const std::size_t d = path.states.empty() ? 0 : path.states.front().dim();
  out << "t";
  for (std::size_t x = 0; x < d; ++x) out << ",count_" << x + 1;
  out << '\n';
  for (std::size_t k = 0; k < path.states.size(); ++k) {
    out << format_double(path.grid[k]);
    for (auto c : path.states[k].counts()) out << ',' << c;
    out << '\n';
  }
}

void write_mc_csv(std::ostream& out, const MCEstimate& est) {
  out << "t,mean,stderr,R,N,seed\n";
  for (std::size_t k = 0; k < est.mean.size(); ++k) {
    out << format_double(est.grid[k]) << ',' << format_double(est.mean[k]) << ','
        << format_double(est.stderr_[k]) << ',' << est.R << ',' << est.N << ','
        << est.seed << '\n';
  }
}

}  // namespace mfchain
