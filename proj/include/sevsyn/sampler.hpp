#pragma once

// Adaptive random-walk Metropolis-within-Gibbs over an unconstrained
// parameter vector, with multi-chain orchestration.
//
// Each block of coordinates is updated in turn with a Gaussian proposal.
// Scalar blocks adapt their step size towards 0.44 acceptance; joint blocks
// (simplex coordinates) adapt a scaled empirical covariance towards 0.234.
// Adaptation runs only during burn-in, so retained draws come from a
// fixed Markov kernel.
//
// RNG: xoshiro256** seeded through SplitMix64; chain k of a run uses the seed
// passed for it and nothing else, so chains are reproducible in isolation.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sevsyn/random.hpp"

namespace sevsyn {

struct BlockInfo {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// A log density over R^n with a block structure.
class Target {
 public:
  virtual ~Target() = default;

  virtual std::size_t dimension() const = 0;
  virtual const std::vector<BlockInfo>& blocks() const = 0;
  virtual double log_density(std::span<const double> x) const = 0;

  /// Sum of every term of log_density that depends on block `block`.
  /// Differences of this value equal differences of log_density for moves
  /// that change only that block.
  virtual double block_log_density(std::size_t block, std::span<const double> x) const {
    (void)block;
    return log_density(x);
  }

  /// A starting point drawn from the prior.
  virtual void sample_initial(Rng& rng, std::span<double> x) const = 0;

  /// Human-readable reason log_density(x) is not finite.
  virtual std::string explain_nonfinite(std::span<const double> x) const;
};

struct RunProtocol {
  std::size_t n_chains = 3;
  std::size_t n_iterations = 2'000'000;
  std::size_t burn_in = 500'000;
  std::size_t thin = 10;
  std::size_t adapt_window = 50;
  std::size_t init_attempts = 100;
  bool parallel = true;

  /// Three chains of 60 000 sweeps, 10 000 burn-in, thinned by 5.
  static RunProtocol desk();

  void validate() const;
  std::size_t retained_per_chain() const { return (n_iterations - burn_in) / thin; }
  std::size_t retained_draws() const { return n_chains * retained_per_chain(); }
};

struct BlockAdaptation {
  double log_scale = 0;
  double target_rate = 0.44;
  std::size_t window_accepts = 0;
  std::size_t window_proposals = 0;
  std::size_t accepts = 0;  // since the end of burn-in
  std::size_t proposals = 0;
  // Joint blocks: running moments of the block's coordinates and the lower
  // Cholesky factor used to shape proposals (identity until learned).
  std::size_t moment_count = 0;
  std::vector<double> mean;
  std::vector<double> scatter;
  std::vector<double> cholesky;

  double acceptance_rate() const { return proposals ? static_cast<double>(accepts) / proposals : 0.0; }
};

struct ChainState {
  explicit ChainState(std::uint64_t seed_) : seed(seed_), rng(seed_) {}

  std::vector<double> position;
  double log_post = 0;
  std::vector<BlockAdaptation> blocks;
  std::uint64_t seed;
  Rng rng;
  std::size_t iteration = 0;   // completed sweeps
  std::size_t windows = 0;     // completed adaptation windows
};

/// Draws a starting point from the prior, retrying with fresh draws while
/// the log density is not finite. Throws SamplerError naming the failing
/// term once `max_attempts` is exhausted.
ChainState initialize(const Target& target, std::uint64_t seed, std::size_t max_attempts = 100);

/// One Metropolis-within-Gibbs sweep over all blocks. Throws SamplerError if
/// the current state's log density is not finite.
void step(ChainState& state, const Target& target);

/// Closes the current acceptance window and moves each block's proposal
/// scale towards its target acceptance rate. A no-op once `state.iteration`
/// has passed `burn_in`.
void adapt(ChainState& state, std::size_t burn_in);

/// |cached log density - fresh evaluation|.
double cache_error(const ChainState& state, const Target& target);

struct ChainResult {
  std::uint64_t seed = 0;
  std::size_t dimension = 0;
  std::size_t retained = 0;
  std::vector<double> draws;  // retained positions, row-major
  std::vector<double> scales_at_burn_in;
  std::vector<double> final_scales;
  std::vector<double> acceptance_rates;  // per block, after burn-in

  std::size_t size() const { return retained; }
  std::span<const double> draw(std::size_t i) const { return {draws.data() + i * dimension, dimension}; }
};

struct RunResult {
  std::vector<BlockInfo> blocks;
  std::vector<ChainResult> chains;

  std::size_t retained_draws() const;
};

ChainResult run_chain(const Target& target, const RunProtocol& protocol, std::uint64_t seed);

/// Runs one chain per seed; `seeds.size()` overrides protocol.n_chains.
/// Throws if seeds repeat.
RunResult run(const Target& target, const RunProtocol& protocol, std::span<const std::uint64_t> seeds);

}  // namespace sevsyn
