#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace manifold_dp {

// SplitMix64 finalizer chained over the inputs. Streams for replication i of
// a campaign are seeded with derive_seed(master, i, ...), so results do not
// depend on which worker runs which task.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                          std::uint64_t b = 0);

// Explicit generator state passed to every sampler.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  // Uniform on [0, 1).
  double uniform() { return uniform_(engine_); }
  Eigen::VectorXd normal_vector(Eigen::Index n);
  // Uniform direction on the unit sphere of R^n.
  Eigen::VectorXd unit_vector(Eigen::Index n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_;
};

}  // namespace manifold_dp
