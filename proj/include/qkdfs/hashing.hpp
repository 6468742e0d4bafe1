#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qkdfs/log_prob.hpp"
#include "qkdfs/rng.hpp"

namespace qkdfs {

/// Bit sequence; index 0 is the first transmitted bit.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t n, bool value = false) : bits_(n, value ? 1 : 0) {}
  explicit BitString(std::vector<std::uint8_t> bits);

  /// Parses a string of '0'/'1' characters.
  static BitString from_string(const std::string& s);
  static BitString random(std::size_t n, Rng& rng);
  /// Low `n` bits of `value`, most significant first.
  static BitString from_uint(std::uint64_t value, std::size_t n);

  std::size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
  bool all_zero() const;

  /// Lowercase hex, most significant bit first, zero-padded at the end to a
  /// whole number of nibbles.
  std::string to_hex() const;
  std::string to_string() const;

  BitString operator^(const BitString& other) const;
  friend bool operator==(const BitString& a, const BitString& b) { return a.bits_ == b.bits_; }

 private:
  std::vector<std::uint8_t> bits_;
};

/// out_j = XOR_i seed[j - i + m - 1] x_i for m = input.size(); seed[0..m-1] is the
/// reversed first row and seed[m-1..m+l-2] the first column.
BitString toeplitz_hash(const BitString& seed, const BitString& input, std::size_t l);

/// ceil(log2(1/eps_EV))
std::size_t ev_tag_length(LogProb eps_ev);

struct EvResult {
  BitString tag;
  bool matched = false;
};

/// Seed length must be sA.size() + ev_tag_length(eps_ev) - 1.
EvResult error_verification(const BitString& s_a, const BitString& s_b, const BitString& seed,
                            LogProb eps_ev);

/// Toeplitz seeds per input length, for hashing strings whose length is only
/// known after sifting. Entries are explicit or derived from a master seed.
class SeedTable {
 public:
  SeedTable() = default;
  explicit SeedTable(std::uint64_t master) : master_(master) {}

  void set(std::size_t input_length, BitString seed);
  /// Seed for input length m and output length l, or nullopt when neither an
  /// explicit entry nor a master seed covers it.
  std::optional<BitString> seed_for(std::size_t m, std::size_t l) const;

 private:
  std::map<std::size_t, BitString> entries_;
  std::optional<std::uint64_t> master_;
};

/// Hashes s with the seed registered for its length.
BitString pa_variable_input(const BitString& s, const SeedTable& seeds, std::size_t l);

enum class Sym : std::uint8_t { zero, one, bottom };

/// Drops the bottom symbols; their positions must equal `announced` exactly.
BitString discard_map(const std::vector<Sym>& raw, const std::vector<std::size_t>& announced);

}  // namespace qkdfs
