#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstddef>

namespace pathlab {

// Philox4x32-10 counter-based generator. Every random number is a pure
// function of (seed, stream, block), so ensembles are bit-reproducible
// regardless of evaluation order or thread layout.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Four raw 32-bit words for counter (stream, block).
  std::array<std::uint32_t, 4> raw(std::uint64_t stream, std::uint64_t block) const {
    std::uint32_t c0 = static_cast<std::uint32_t>(block);
    std::uint32_t c1 = static_cast<std::uint32_t>(block >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(stream);
    std::uint32_t c3 = static_cast<std::uint32_t>(stream >> 32);
    std::uint32_t k0 = static_cast<std::uint32_t>(seed_);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32);
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c0;
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c2;
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      c0 = hi1 ^ c1 ^ k0;
      c1 = lo1;
      c2 = hi0 ^ c3 ^ k1;
      c3 = lo0;
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    return {c0, c1, c2, c3};
  }

  // Two uniforms in (0,1) from one counter.
  void uniform_pair(std::uint64_t stream, std::uint64_t block, double& u0, double& u1) const {
    const auto w = raw(stream, block);
    u0 = to_unit(w[0], w[1]);
    u1 = to_unit(w[2], w[3]);
  }

  // Two independent N(0,1) variates from one counter (Box-Muller).
  void normal_pair(std::uint64_t stream, std::uint64_t block, double& z0, double& z1) const {
    double u0, u1;
    uniform_pair(stream, block, u0, u1);
    const double r = std::sqrt(-2.0 * std::log(u0));
    const double a = 2.0 * kPi * u1;
    z0 = r * std::cos(a);
    z1 = r * std::sin(a);
  }

  // out[i] = scale * N(0,1), i = 0..n-1, indexed from block_base.
  void fill_normals(std::uint64_t stream, std::uint64_t block_base, double* out,
                    std::size_t n, double scale = 1.0) const {
    std::size_t i = 0;
    std::uint64_t block = block_base;
    while (i < n) {
      double z0, z1;
      normal_pair(stream, block++, z0, z1);
      out[i++] = scale * z0;
      if (i < n) out[i++] = scale * z1;
    }
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  static constexpr double kPi = 3.14159265358979323846;

  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    // 53 significant bits, offset so the value is never exactly 0
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t seed_;
};

}  // namespace pathlab
