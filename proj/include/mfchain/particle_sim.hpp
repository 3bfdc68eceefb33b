#ifndef MFCHAIN_PARTICLE_SIM_HPP
#define MFCHAIN_PARTICLE_SIM_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "mfchain/kolmogorov.hpp"
#include "mfchain/models.hpp"
#include "mfchain/random.hpp"
#include "mfchain/simplex.hpp"

namespace mfchain {

/// Occupancy counts of N exchangeable particles.
class ParticleConfig {
 public:
  /// Throws std::invalid_argument for an empty or all-zero count vector.
  explicit ParticleConfig(std::vector<std::uint32_t> counts);

  std::size_t dim() const { return counts_.size(); }
  std::uint32_t N() const { return n_; }
  std::uint32_t operator[](std::size_t x) const { return counts_[x]; }
  const std::vector<std::uint32_t>& counts() const { return counts_; }
  /// counts / N.
  Measure empirical() const;

  bool operator==(const ParticleConfig&) const = default;

 private:
  std::vector<std::uint32_t> counts_;
  std::uint32_t n_ = 0;
};

struct EmpiricalPath {
  TimeGrid grid;
  std::vector<ParticleConfig> states;
  std::uint32_t N = 0;
  std::uint64_t seed = 0;
  std::uint64_t events = 0;
};

/// N independent draws from mu0, as counts.  Needs N >= 1.
ParticleConfig sample_initial(const Measure& mu0, std::uint32_t N, Rng& rng);

/// Exact event-driven simulation (direct method): in configuration c with
/// mu = c / N the next event comes after an Exp(Lambda) wait,
/// Lambda = sum_{x != y} c_x alpha_xy(mu), and moves one particle x -> y with
/// probability c_x alpha_xy(mu) / Lambda.  Rates are re-evaluated after every
/// event.  Lambda = 0 freezes the configuration.  A non-finite Lambda raises
/// IntegrationError and a valid-region exit raises DomainError, both stamped
/// with the event time.
EmpiricalPath simulate(const Model& model, const ParticleConfig& init,
                       const TimeGrid& grid, Rng& rng);

struct MCEstimate {
  TimeGrid grid;
  std::vector<double> mean;
  std::vector<double> stderr_;  // sample std / sqrt(R)
  std::size_t R = 0;
  std::uint32_t N = 0;
  std::uint64_t seed = 0;
};

/// Runs work(r) for r in [0, R) on `threads` workers and returns the results
/// indexed by r.  The output does not depend on the thread count.  The first
/// exception thrown by any replication (lowest index) is rethrown.
std::vector<std::vector<double>> run_replications(
    std::size_t R, unsigned threads,
    const std::function<std::vector<double>(std::size_t)>& work);

/// Per-column mean and standard error, summed in row order.  Needs >= 2 rows.
void column_moments(const std::vector<std::vector<double>>& rows,
                    std::vector<double>& mean, std::vector<double>& stderr_);

/// R replications of Phi(mu^N_t) on the grid.  Replication r draws its initial
/// configuration and its path from one generator seeded with
/// replication_seed(master_seed, r).
MCEstimate mc_observable(const Model& model, const ScalarField& phi,
                         const Measure& mu0, std::uint32_t N, std::size_t R,
                         const TimeGrid& grid, std::uint64_t master_seed,
                         unsigned threads = 1);

/// CSV with header t,count_1,...,count_d.
void write_path_csv(std::ostream& out, const EmpiricalPath& path);
/// CSV with header t,mean,stderr,R,N,seed.
void write_mc_csv(std::ostream& out, const MCEstimate& est);

}  // namespace mfchain

#endif  // MFCHAIN_PARTICLE_SIM_HPP
