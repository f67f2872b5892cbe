#include "gapfilter/core.hpp"

#include <stdexcept>
#include <string>

namespace gapfilter {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Thresholds::Thresholds(std::int64_t t1, std::int64_t t2, unsigned seq_width)
    : t1_(t1), t2_(t2), seq_width_(seq_width) {
  if (seq_width < 8 || seq_width > 32) {
    throw std::invalid_argument("seq_width must be in [8, 32], got " + std::to_string(seq_width));
  }
  if (t1 < 2 || t1 >= t2) {
    throw std::invalid_argument("thresholds need 2 <= t1 < t2, got t1=" + std::to_string(t1) +
                                " t2=" + std::to_string(t2));
  }
  if (t2 >= (std::int64_t{1} << (seq_width - 1))) {
    throw std::invalid_argument("t2=" + std::to_string(t2) + " does not fit a " +
                                std::to_string(seq_width) + "-bit sequence space");
  }
}

const char* to_string(SituationKind kind) noexcept {
  switch (kind) {
    case SituationKind::neglect: return "neglect";
    case SituationKind::normal: return "normal";
    case SituationKind::minor_gap: return "minor_gap";
    case SituationKind::major_gap: return "major_gap";
    case SituationKind::not_matched: return "not_matched";
  }
  return "unknown";
}

HashConfig HashConfig::from_master_seed(std::uint64_t seed, unsigned fp_bits, bool randomize) {
  std::uint64_t state = seed;
  HashConfig cfg;
  cfg.seed_bucket = splitmix64(state);
  cfg.seed_bias = splitmix64(state);
  cfg.seed_fingerprint = splitmix64(state);
  cfg.fp_bits = fp_bits;
  cfg.randomize = randomize;
  return cfg;
}

void HashConfig::validate() const {
  if (fp_bits > 16) {
    throw std::invalid_argument("fingerprint length must be <= 16 bits, got " +
                                std::to_string(fp_bits));
  }
  if (seed_bucket == seed_bias || seed_bucket == seed_fingerprint ||
      seed_bias == seed_fingerprint) {
    throw std::invalid_argument("hash roles need distinct seeds");
  }
}

}  // namespace gapfilter
