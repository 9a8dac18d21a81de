#ifndef PDMP_RNG_HPP
#define PDMP_RNG_HPP

#include <cstdint>
#include <cmath>

namespace pdmp {

// Counter-based random stream. Each draw is a pure function of
// (master seed, stream id, draw counter), so ensembles are reproducible
// independently of how paths are scheduled across workers.
class CounterRng {
 public:
  CounterRng(std::uint64_t master_seed, std::uint64_t stream)
      : key_(mix(mix(master_seed) ^ mix(stream ^ 0x1f3a5c8e9d2b7f64ULL))) {}

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  // uniform on the open interval (0,1)
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // unit exponential, strictly positive
  double exponential() { return -std::log(uniform()); }

  std::uint64_t draws() const { return counter_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace pdmp

#endif
