#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "date_ad/common.hpp"

namespace date_ad {

// Fixed binary vector selecting the positions to corrupt. Position 0 (the
// [CLS] slot) is never masked.
struct MaskPattern {
  std::vector<std::uint8_t> bits;  // length T_max
  int ones_count = 0;

  int size() const { return static_cast<int>(bits.size()); }
  std::string to_bitstring() const;
  static MaskPattern from_bitstring(const std::string& s);
  bool operator==(const MaskPattern& other) const { return bits == other.bits; }
};

struct PatternSet {
  std::vector<MaskPattern> patterns;
  int t_max = 0;
  int masked_count = 0;  // M, shared by every pattern
  std::uint64_t seed = 0;

  int k() const { return static_cast<int>(patterns.size()); }
};

// K distinct patterns, each with exactly M = round(mask_fraction * (T_max-1))
// ones among positions 1..T_max-1, sampled uniformly (rejection on duplicates).
PatternSet gen_patterns(int t_max, double mask_fraction, int k, std::uint64_t seed);

int overlap(const MaskPattern& a, const MaskPattern& b);

// Appendix-style disjointness statistics, computed with exact rationals.
struct BoundQuery {
  int s = 0;  // sequence length
  int m = 0;  // masked count
  int p = 0;  // overlap threshold
  int n = 2;  // sampled pattern count

  void validate() const;
};

mpz_class binomial_exact(int n, int k);

// r = C(S-p, M-p) / C(S, M)
mpq_class r_ratio(int s, int m, int p);

// UB_2 = C(S,p) * r^2
mpq_class pair_collision_bound(int s, int m, int p);

// UB_N = C(N,2) * C(S,p) * r^2
mpq_class collision_bound(const BoundQuery& q);

double rational_to_double(const mpq_class& q);
std::string rational_to_string(const mpq_class& q);

// Monte-Carlo oracle for the bound: fraction of trials in which some pair
// among N freshly sampled M-of-S patterns overlaps in >= p positions.
double empirical_collision_rate(int s, int m, int p, int n, long trials, std::uint64_t seed);

}  // namespace date_ad
