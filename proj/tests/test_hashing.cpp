#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qkdfs/error.hpp"
#include "qkdfs/hashing.hpp"

using namespace qkdfs;

namespace {

// Dense Toeplitz matrix built straight from the row/column layout.
std::vector<std::vector<int>> dense_matrix(const BitString& seed, std::size_t m, std::size_t l) {
  std::vector<std::vector<int>> t(l, std::vector<int>(m, 0));
  for (std::size_t i = 0; i < m; ++i) t[0][i] = seed[m - 1 - i];
  for (std::size_t j = 0; j < l; ++j) t[j][0] = seed[m - 1 + j];
  for (std::size_t j = 1; j < l; ++j) {
    for (std::size_t i = 1; i < m; ++i) t[j][i] = t[j - 1][i - 1];
  }
  return t;
}

BitString matvec(const std::vector<std::vector<int>>& t, const BitString& x) {
  BitString out(t.size());
  for (std::size_t j = 0; j < t.size(); ++j) {
    int acc = 0;
    for (std::size_t i = 0; i < x.size(); ++i) acc ^= t[j][i] & static_cast<int>(x[i]);
    out.set(j, acc != 0);
  }
  return out;
}

}  // namespace

TEST_CASE("bit string hex layout") {
  CHECK(BitString::from_string("1010").to_hex() == "a");
  CHECK(BitString::from_string("00011111").to_hex() == "1f");
  CHECK(BitString::from_string("1").to_hex() == "8");
  CHECK(BitString::from_string("110").to_hex() == "c");
  CHECK(BitString().to_hex().empty());
  CHECK(BitString::from_uint(0x2d, 8).to_string() == "00101101");
  CHECK_THROWS_AS(BitString::from_string("012"), DomainError);
}

TEST_CASE("toeplitz hash matches the dense matrix layout") {
  Rng rng = make_stream(11, 0);
  for (std::size_t m : {1u, 2u, 7u, 33u}) {
    for (std::size_t l : {1u, 3u, 16u}) {
      for (int trial = 0; trial < 20; ++trial) {
        const BitString seed = BitString::random(m + l - 1, rng);
        const BitString x = BitString::random(m, rng);
        CHECK(toeplitz_hash(seed, x, l) == matvec(dense_matrix(seed, m, l), x));
      }
    }
  }
}

TEST_CASE("toeplitz hash fixed examples") {
  // Rows of T for seed s0..s4, m = 3, l = 3: [s2 s1 s0], [s3 s2 s1], [s4 s3 s2].
  const BitString seed = BitString::from_string("10110");
  CHECK(toeplitz_hash(seed, BitString::from_string("100"), 3).to_string() == "110");
  CHECK(toeplitz_hash(seed, BitString::from_string("001"), 3).to_string() == "101");
  CHECK(toeplitz_hash(seed, BitString::from_string("111"), 3).to_string() == "000");

  Rng rng = make_stream(12, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const BitString s = BitString::random(20 + 5 - 1, rng);
    CHECK(toeplitz_hash(s, BitString(20), 5).all_zero());
  }

  for (std::size_t m : {1u, 4u, 19u}) {
    BitString identity(2 * m - 1);
    identity.set(m - 1, true);
    const BitString x = BitString::random(m, rng);
    CHECK(toeplitz_hash(identity, x, m) == x);
  }

  CHECK(toeplitz_hash(BitString(), BitString(5), 0).empty());
  CHECK_THROWS_AS(toeplitz_hash(BitString(6), BitString(5), 3), DomainError);
}

TEST_CASE("toeplitz hash is linear") {
  Rng rng = make_stream(13, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng() % 64;
    const std::size_t l = 1 + rng() % 40;
    const BitString seed = BitString::random(m + l - 1, rng);
    const BitString x = BitString::random(m, rng);
    const BitString y = BitString::random(m, rng);
    CHECK(toeplitz_hash(seed, x ^ y, l) == (toeplitz_hash(seed, x, l) ^ toeplitz_hash(seed, y, l)));
  }
}

TEST_CASE("toeplitz family is ideal universal2 by exhaustive enumeration") {
  for (auto [m, l] : {std::pair<std::size_t, std::size_t>{3, 1}, {4, 2}, {5, 2}}) {
    const std::size_t seed_bits = m + l - 1;
    const std::size_t n_seeds = std::size_t{1} << seed_bits;
    const std::size_t n_inputs = std::size_t{1} << m;
    // hashes[s][x]
    std::vector<std::vector<BitString>> hashes(n_seeds);
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const BitString seed = BitString::from_uint(s, seed_bits);
      for (std::size_t x = 0; x < n_inputs; ++x) hashes[s].push_back(toeplitz_hash(seed, BitString::from_uint(x, m), l));
    }
    const std::size_t expected = n_seeds >> l;
    CHECK(expected == (std::size_t{1} << (m - 1)));
    for (std::size_t x = 0; x < n_inputs; ++x) {
      for (std::size_t y = x + 1; y < n_inputs; ++y) {
        std::size_t collisions = 0;
        for (std::size_t s = 0; s < n_seeds; ++s) collisions += hashes[s][x] == hashes[s][y];
        CHECK(collisions == expected);
      }
    }
  }
}

TEST_CASE("error verification") {
  const LogProb eps = LogProb::from_prob(1e-10);
  CHECK(ev_tag_length(eps) == 34);
  CHECK(ev_tag_length(LogProb::from_prob(0.25)) == 2);
  CHECK_THROWS_AS(ev_tag_length(LogProb::one()), DomainError);

  Rng rng = make_stream(14, 0);
  const std::size_t m = 64;
  const BitString a = BitString::random(m, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const BitString seed = BitString::random(m + 33, rng);
    const EvResult r = error_verification(a, a, seed, eps);
    CHECK(r.matched);
    CHECK(r.tag.size() == 34);
    CHECK(r.tag.to_hex().size() == 9);
  }
  CHECK_THROWS_AS(error_verification(a, BitString(m - 1), BitString(m + 33), eps), DomainError);
}

TEST_CASE("error verification collision frequency over random seeds") {
  Rng rng = make_stream(15, 0);
  const std::size_t m = 48;
  const BitString a = BitString::random(m, rng);
  BitString b = a;
  b.set(5, !b[5]);
  b.set(40, !b[40]);
  const int trials = 100000;
  // A short tag gives the bound something to bite on; the 34-bit tag must never collide.
  for (double eps : {0.125, 1e-10}) {
    const LogProb e = LogProb::from_prob(eps);
    const std::size_t tag = ev_tag_length(e);
    int matches = 0;
    for (int t = 0; t < trials; ++t) {
      matches += error_verification(a, b, BitString::random(m + tag - 1, rng), e).matched;
    }
    const double p = std::ldexp(1.0, -static_cast<int>(tag));
    const double sigma = std::sqrt(p * (1 - p) / trials);
    CHECK(static_cast<double>(matches) / trials <= p + 3 * sigma);
    if (tag == 3) CHECK(static_cast<double>(matches) / trials >= p - 5 * sigma);
  }
}

TEST_CASE("variable-input privacy amplification") {
  SeedTable empty_table;
  CHECK(pa_variable_input(BitString(), empty_table, 0).empty());
  CHECK_THROWS_AS(pa_variable_input(BitString(4), empty_table, 2), DomainError);

  SeedTable explicit_table;
  explicit_table.set(3, BitString::from_string("10110"));
  CHECK(pa_variable_input(BitString::from_string("100"), explicit_table, 3).to_string() == "110");
  CHECK_THROWS_AS(pa_variable_input(BitString::from_string("100"), explicit_table, 2), DomainError);

  // Derived seeds are reproducible per (master, length).
  const SeedTable t1(99), t2(99), t3(100);
  const BitString s = BitString::from_string("1101001110");
  CHECK(pa_variable_input(s, t1, 6) == pa_variable_input(s, t2, 6));
  CHECK(t1.seed_for(10, 6) == t2.seed_for(10, 6));
  CHECK_FALSE(t1.seed_for(10, 6) == t3.seed_for(10, 6));
}

TEST_CASE("all-zero strings of different lengths collide under every seed table") {
  for (std::uint64_t master = 0; master < 200; ++master) {
    const SeedTable table(master);
    for (std::size_t l : {1u, 8u, 34u}) {
      const BitString h1 = pa_variable_input(BitString(10), table, l);
      const BitString h2 = pa_variable_input(BitString(17), table, l);
      CHECK(h1 == h2);
      CHECK(h1.all_zero());
    }
  }
}

TEST_CASE("same-length inputs collide at most at the universal rate") {
  Rng rng = make_stream(16, 0);
  const std::size_t m = 30, l = 4;
  const BitString x = BitString::random(m, rng);
  BitString y = x;
  y.set(0, !y[0]);
  const int trials = 100000;
  int matches = 0;
  for (int t = 0; t < trials; ++t) {
    SeedTable table(rng());
    matches += pa_variable_input(x, table, l) == pa_variable_input(y, table, l);
  }
  const double p = 1.0 / 16;
  CHECK(static_cast<double>(matches) / trials <= p + 3 * std::sqrt(p * (1 - p) / trials));
}

TEST_CASE("discard map") {
  using S = Sym;
  CHECK(discard_map({S::one, S::zero, S::one}, {}).to_string() == "101");
  CHECK(discard_map({S::bottom, S::bottom}, {1, 0}).empty());
  CHECK(discard_map({}, {}).empty());
  CHECK_THROWS_AS(discard_map({S::one, S::bottom}, {0}), DomainError);
  CHECK_THROWS_AS(discard_map({S::one, S::bottom}, {}), DomainError);
  CHECK_THROWS_AS(discard_map({S::bottom}, {0, 0}), DomainError);
  CHECK_THROWS_AS(discard_map({S::bottom}, {0, 3}), DomainError);

  Rng rng = make_stream(17, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = rng() % 80;
    std::vector<S> raw(n);
    std::vector<std::size_t> announced;
    std::string expected;
    for (std::size_t i = 0; i < n; ++i) {
      raw[i] = static_cast<S>(rng() % 3);
      if (raw[i] == S::bottom) {
        announced.push_back(i);
      } else {
        expected.push_back(raw[i] == S::one ? '1' : '0');
      }
    }
    std::shuffle(announced.begin(), announced.end(), rng);
    CHECK(discard_map(raw, announced).to_string() == expected);
  }
}
