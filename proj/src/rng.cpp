#include "manifold_dp/rng.hpp"

namespace manifold_dp {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                          std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(master) ^ a) ^ (b + 0x632be59bd9b4e019ULL));
}

Eigen::VectorXd Rng::normal_vector(Eigen::Index n) {
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal();
  return z;
}

Eigen::VectorXd Rng::unit_vector(Eigen::Index n) {
  for (;;) {
    Eigen::VectorXd z = normal_vector(n);
    const double norm = z.norm();
    if (norm > 1e-300) return z / norm;
  }
}

}  // namespace manifold_dp
