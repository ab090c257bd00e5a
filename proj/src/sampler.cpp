#include "sevsyn/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <set>

#include "sevsyn/errors.hpp"

namespace sevsyn {

namespace {

constexpr double kScalarTarget = 0.44;
constexpr double kJointTarget = 0.234;
constexpr double kAdaptExponent = 0.6;
constexpr double kMinLogScale = -30.0;
constexpr double kMaxLogScale = 5.0;

// Lower Cholesky factor of a small symmetric positive-definite matrix
// (row-major). Returns false if the matrix is not numerically SPD.
bool cholesky(std::vector<double> m, std::size_t k, std::vector<double>& out) {
  out.assign(k * k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    double d = m[j * k + j];
    for (std::size_t p = 0; p < j; ++p) d -= out[j * k + p] * out[j * k + p];
    if (!(d > 0.0)) return false;
    out[j * k + j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < k; ++i) {
      double s = m[i * k + j];
      for (std::size_t p = 0; p < j; ++p) s -= out[i * k + p] * out[j * k + p];
      out[i * k + j] = s / out[j * k + j];
    }
  }
  return true;
}

// Welford update of a joint block's running mean and scatter matrix.
void observe_moments(ChainState& state, const std::vector<BlockInfo>& blocks) {
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto k = blocks[b].size;
    if (k < 2) continue;
    auto& ad = state.blocks[b];
    const double* x = state.position.data() + blocks[b].offset;
    ++ad.moment_count;
    std::vector<double> delta(k);
    for (std::size_t i = 0; i < k; ++i) {
      delta[i] = x[i] - ad.mean[i];
      ad.mean[i] += delta[i] / static_cast<double>(ad.moment_count);
    }
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) ad.scatter[i * k + j] += delta[i] * (x[j] - ad.mean[j]);
  }
}

}  // namespace

std::string Target::explain_nonfinite(std::span<const double>) const { return "log density is not finite"; }

RunProtocol RunProtocol::desk() {
  RunProtocol p;
  p.n_chains = 3;
  p.n_iterations = 60'000;
  p.burn_in = 10'000;
  p.thin = 5;
  return p;
}

void RunProtocol::validate() const {
  if (n_chains < 1) throw ConfigError("protocol: need at least one chain");
  if (burn_in >= n_iterations) throw ConfigError("protocol: burn_in must be smaller than n_iterations");
  if (thin < 1) throw ConfigError("protocol: thin must be >= 1");
  if (adapt_window < 1) throw ConfigError("protocol: adapt_window must be >= 1");
  if (init_attempts < 1) throw ConfigError("protocol: init_attempts must be >= 1");
}

ChainState initialize(const Target& target, std::uint64_t seed, std::size_t max_attempts) {
  ChainState state(seed);
  state.position.assign(target.dimension(), 0.0);
  std::string first_failure;
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    target.sample_initial(state.rng, state.position);
    const double lp = target.log_density(state.position);
    if (std::isfinite(lp)) {
      state.log_post = lp;
      for (const auto& block : target.blocks()) {
        BlockAdaptation ad;
        const auto k = block.size;
        ad.target_rate = k > 1 ? kJointTarget : kScalarTarget;
        ad.log_scale = k > 1 ? std::log(2.38 / std::sqrt(static_cast<double>(k))) : 0.0;
        if (k > 1) {
          ad.mean.assign(k, 0.0);
          ad.scatter.assign(k * k, 0.0);
        }
        state.blocks.push_back(std::move(ad));
      }
      return state;
    }
    if (attempt == 0) first_failure = target.explain_nonfinite(state.position);
  }
  throw SamplerError("no starting point with finite log density after " + std::to_string(max_attempts) +
                     " prior draws (seed " + std::to_string(seed) + "); first failure: " + first_failure);
}

void step(ChainState& state, const Target& target) {
  if (!std::isfinite(state.log_post))
    throw SamplerError("chain state corrupted: log density is " + std::to_string(state.log_post) + "; " +
                       target.explain_nonfinite(state.position));
  const auto& blocks = target.blocks();
  auto& x = state.position;
  std::vector<double> saved;
  std::vector<double> z;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& info = blocks[b];
    if (info.size == 0) continue;
    auto& ad = state.blocks[b];
    const double current = target.block_log_density(b, x);
    saved.assign(x.begin() + info.offset, x.begin() + info.offset + info.size);
    const double scale = std::exp(ad.log_scale);
    if (info.size == 1) {
      x[info.offset] += scale * state.rng.normal();
    } else {
      const auto k = info.size;
      z.resize(k);
      for (auto& v : z) v = state.rng.normal();
      for (std::size_t i = 0; i < k; ++i) {
        double s = z[i];
        if (!ad.cholesky.empty()) {
          s = 0.0;
          for (std::size_t j = 0; j <= i; ++j) s += ad.cholesky[i * k + j] * z[j];
        }
        x[info.offset + i] += scale * s;
      }
    }
    const double delta = target.block_log_density(b, x) - current;
    ++ad.window_proposals;
    ++ad.proposals;
    if (std::log(state.rng.uniform()) < delta) {
      state.log_post += delta;
      ++ad.window_accepts;
      ++ad.accepts;
    } else {
      std::copy(saved.begin(), saved.end(), x.begin() + info.offset);
    }
  }
  ++state.iteration;
}

void adapt(ChainState& state, std::size_t burn_in) {
  if (state.iteration > burn_in) return;
  ++state.windows;
  const double gain = std::pow(static_cast<double>(state.windows), -kAdaptExponent);
  for (auto& ad : state.blocks) {
    if (ad.window_proposals == 0) continue;
    const double rate = static_cast<double>(ad.window_accepts) / static_cast<double>(ad.window_proposals);
    ad.log_scale = std::clamp(ad.log_scale + gain * (rate - ad.target_rate), kMinLogScale, kMaxLogScale);
    ad.window_accepts = 0;
    ad.window_proposals = 0;

    const std::size_t k = ad.mean.size();
    if (k < 2 || ad.moment_count < std::max<std::size_t>(100, 20 * k)) continue;
    std::vector<double> cov(ad.scatter);
    double trace = 0.0;
    for (std::size_t i = 0; i < k; ++i) trace += cov[i * k + i];
    for (auto& v : cov) v /= static_cast<double>(ad.moment_count - 1);
    const double jitter = 1e-10 * trace / static_cast<double>(ad.moment_count - 1) + 1e-12;
    for (std::size_t i = 0; i < k; ++i) cov[i * k + i] += jitter;
    std::vector<double> chol;
    if (cholesky(std::move(cov), k, chol)) {
      if (ad.cholesky.empty()) ad.log_scale = std::log(2.38 / std::sqrt(static_cast<double>(k)));
      ad.cholesky = std::move(chol);
    }
  }
}

double cache_error(const ChainState& state, const Target& target) {
  return std::abs(state.log_post - target.log_density(state.position));
}

ChainResult run_chain(const Target& target, const RunProtocol& protocol, std::uint64_t seed) {
  protocol.validate();
  const auto& blocks = target.blocks();
  ChainState state = initialize(target, seed, protocol.init_attempts);

  ChainResult out;
  out.seed = seed;
  out.dimension = target.dimension();
  out.draws.reserve(protocol.retained_per_chain() * out.dimension);
  auto scales = [&] {
    std::vector<double> s;
    for (const auto& ad : state.blocks) s.push_back(std::exp(ad.log_scale));
    return s;
  };
  if (protocol.burn_in == 0) out.scales_at_burn_in = scales();
  // Proposal shapes are learned from the later part of burn-in only, after
  // the chain has left its starting region.
  const std::size_t moments_from = protocol.burn_in / 4;

  for (std::size_t it = 0; it < protocol.n_iterations; ++it) {
    step(state, target);
    const std::size_t done = state.iteration;
    if (done <= protocol.burn_in) {
      if (done > moments_from) observe_moments(state, blocks);
      if (done % protocol.adapt_window == 0) adapt(state, protocol.burn_in);
      if (done == protocol.burn_in) {
        out.scales_at_burn_in = scales();
        for (auto& ad : state.blocks) ad.accepts = ad.proposals = 0;
      }
    } else if ((done - protocol.burn_in) % protocol.thin == 0) {
      out.draws.insert(out.draws.end(), state.position.begin(), state.position.end());
      ++out.retained;
    }
  }
  out.final_scales = scales();
  for (const auto& ad : state.blocks) out.acceptance_rates.push_back(ad.acceptance_rate());
  return out;
}

std::size_t RunResult::retained_draws() const {
  std::size_t n = 0;
  for (const auto& c : chains) n += c.size();
  return n;
}

RunResult run(const Target& target, const RunProtocol& protocol, std::span<const std::uint64_t> seeds) {
  protocol.validate();
  if (seeds.empty()) throw ConfigError("run: no chain seeds");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("run: chain seeds must be distinct");
  RunResult result;
  result.blocks = target.blocks();
  if (protocol.parallel && seeds.size() > 1) {
    std::vector<std::future<ChainResult>> futures;
    for (auto seed : seeds)
      futures.push_back(std::async(std::launch::async, [&target, &protocol, seed] {
        return run_chain(target, protocol, seed);
      }));
    for (auto& f : futures) result.chains.push_back(f.get());
  } else {
    for (auto seed : seeds) result.chains.push_back(run_chain(target, protocol, seed));
  }
  return result;
}

}  // namespace sevsyn
