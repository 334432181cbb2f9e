#include "date_ad/mask.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>

namespace date_ad {

std::string MaskPattern::to_bitstring() const {
  std::string s(bits.size(), '0');
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) s[i] = '1';
  }
  return s;
}

MaskPattern MaskPattern::from_bitstring(const std::string& s) {
  MaskPattern p;
  p.bits.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '0' && s[i] != '1') throw InvalidArgument("bad bitstring character");
    p.bits[i] = s[i] == '1';
    p.ones_count += p.bits[i];
  }
  return p;
}

PatternSet gen_patterns(int t_max, double mask_fraction, int k, std::uint64_t seed) {
  if (t_max < 2) throw InvalidArgument("gen_patterns: t_max must be >= 2");
  const int positions = t_max - 1;  // position 0 is [CLS], never masked
  const int m = static_cast<int>(std::lround(mask_fraction * positions));
  if (m < 1 || m > positions) {
    throw InvalidArgument("gen_patterns: mask_fraction yields invalid masked count");
  }
  // K must not exceed C(positions, M).
  mpz_class space = binomial_exact(positions, m);
  if (mpz_class(k) > space) {
    throw InvalidArgument("gen_patterns: k exceeds the number of distinct patterns");
  }

  PatternSet set;
  set.t_max = t_max;
  set.masked_count = m;
  set.seed = seed;

  Rng rng = make_rng(seed, fnv1a64("patterns"));
  std::set<std::vector<std::uint8_t>> seen;
  std::vector<int> idx(positions);
  while (set.k() < k) {
    for (int i = 0; i < positions; ++i) idx[i] = 1 + i;
    // Partial Fisher-Yates; the first m entries are a uniform m-subset.
    for (int i = 0; i < m; ++i) {
      std::uniform_int_distribution<int> pick(i, positions - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    MaskPattern pat;
    pat.bits.assign(t_max, 0);
    for (int i = 0; i < m; ++i) pat.bits[idx[i]] = 1;
    pat.ones_count = m;
    if (seen.insert(pat.bits).second) set.patterns.push_back(std::move(pat));
  }
  return set;
}

int overlap(const MaskPattern& a, const MaskPattern& b) {
  if (a.size() != b.size()) throw InvalidArgument("overlap: pattern length mismatch");
  int count = 0;
  for (int i = 0; i < a.size(); ++i) count += a.bits[i] & b.bits[i];
  return count;
}

void BoundQuery::validate() const {
  if (!(0 <= p && p <= m && m <= s)) {
    throw InvalidArgument("bound query requires 0 <= p <= M <= S");
  }
  if (n < 2) throw InvalidArgument("bound query requires N >= 2");
}

mpz_class binomial_exact(int n, int k) {
  if (k < 0 || k > n) return 0;
  mpz_class out;
  mpz_bin_uiui(out.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return out;
}

mpq_class r_ratio(int s, int m, int p) {
  if (!(0 <= p && p <= m && m <= s)) {
    throw InvalidArgument("r_ratio requires 0 <= p <= M <= S");
  }
  mpq_class r(binomial_exact(s - p, m - p), binomial_exact(s, m));
  r.canonicalize();
  return r;
}

mpq_class pair_collision_bound(int s, int m, int p) {
  mpq_class r = r_ratio(s, m, p);
  mpq_class ub = mpq_class(binomial_exact(s, p)) * r * r;
  ub.canonicalize();
  return ub;
}

mpq_class collision_bound(const BoundQuery& q) {
  q.validate();
  mpq_class ub = mpq_class(binomial_exact(q.n, 2)) * pair_collision_bound(q.s, q.m, q.p);
  ub.canonicalize();
  return ub;
}

double rational_to_double(const mpq_class& q) { return q.get_d(); }

std::string rational_to_string(const mpq_class& q) { return q.get_str(); }

namespace {

constexpr int kWordBits = 64;

// One pattern as a bitset over S positions.
struct PackedPattern {
  std::uint64_t words[8];  // supports S up to 512
};

}  // namespace

double empirical_collision_rate(int s, int m, int p, int n, long trials, std::uint64_t seed) {
  if (!(0 <= p && m <= s && m >= 0)) throw InvalidArgument("empirical_collision_rate: bad S/M/p");
  if (n < 2) throw InvalidArgument("empirical_collision_rate: N must be >= 2");
  if (trials < 1) throw InvalidArgument("empirical_collision_rate: trials must be >= 1");
  if (s > 512) throw InvalidArgument("empirical_collision_rate: S > 512 unsupported");
  if (p > m) return 0.0;  // two patterns can never share more than M positions

  const int words = (s + kWordBits - 1) / kWordBits;
  Rng rng = make_rng(seed, fnv1a64("mc"));
  std::vector<int> idx(s);
  std::vector<PackedPattern> pats(n);

  long hits = 0;
  for (long t = 0; t < trials; ++t) {
    for (int i = 0; i < n; ++i) {
      PackedPattern& pat = pats[i];
      for (int w = 0; w < words; ++w) pat.words[w] = 0;
      for (int j = 0; j < s; ++j) idx[j] = j;
      for (int j = 0; j < m; ++j) {
        std::uniform_int_distribution<int> pick(j, s - 1);
        std::swap(idx[j], idx[pick(rng)]);
        pat.words[idx[j] / kWordBits] |= 1ull << (idx[j] % kWordBits);
      }
    }
    bool collided = false;
    for (int i = 0; i < n && !collided; ++i) {
      for (int j = i + 1; j < n; ++j) {
        int common = 0;
        for (int w = 0; w < words; ++w) {
          common += std::popcount(pats[i].words[w] & pats[j].words[w]);
        }
        if (common >= p) {
          collided = true;
          break;
        }
      }
    }
    hits += collided;
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

}  // namespace date_ad
