#include "qkdfs/hashing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qkdfs/error.hpp"

namespace qkdfs {

BitString::BitString(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto& b : bits_) {
    if (b > 1) throw DomainError("BitString: bits must be 0 or 1");
  }
}

BitString BitString::from_string(const std::string& s) {
  BitString out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '0' && s[i] != '1') throw DomainError("BitString: expected '0' or '1'");
    out.bits_[i] = s[i] == '1' ? 1 : 0;
  }
  return out;
}

BitString BitString::random(std::size_t n, Rng& rng) {
  BitString out(n);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 64 == 0) word = rng();
    out.bits_[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
  }
  return out;
}

BitString BitString::from_uint(std::uint64_t value, std::size_t n) {
  BitString out(n);
  for (std::size_t i = 0; i < n; ++i) out.bits_[i] = static_cast<std::uint8_t>((value >> (n - 1 - i)) & 1u);
  return out;
}

bool BitString::all_zero() const {
  return std::all_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b == 0; });
}

std::string BitString::to_hex() const {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve((bits_.size() + 3) / 4);
  for (std::size_t i = 0; i < bits_.size(); i += 4) {
    unsigned nibble = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      nibble <<= 1;
      if (i + j < bits_.size()) nibble |= bits_[i + j];
    }
    out.push_back(digits[nibble]);
  }
  return out;
}

std::string BitString::to_string() const {
  std::string out(bits_.size(), '0');
  for (std::size_t i = 0; i < bits_.size(); ++i) out[i] = bits_[i] ? '1' : '0';
  return out;
}

BitString BitString::operator^(const BitString& other) const {
  if (size() != other.size()) throw DomainError("BitString xor: length mismatch");
  BitString out(size());
  for (std::size_t i = 0; i < size(); ++i) out.bits_[i] = bits_[i] ^ other.bits_[i];
  return out;
}

BitString toeplitz_hash(const BitString& seed, const BitString& input, std::size_t l) {
  const std::size_t m = input.size();
  if (l == 0) return BitString();
  if (seed.size() + 1 != m + l) {
    std::ostringstream msg;
    msg << "toeplitz_hash: seed has " << seed.size() << " bits, expected m + l - 1 = " << m + l - 1;
    throw DomainError(msg.str());
  }
  BitString out(l);
  for (std::size_t j = 0; j < l; ++j) {
    bool acc = false;
    for (std::size_t i = 0; i < m; ++i) {
      if (input[i] && seed[j + m - 1 - i]) acc = !acc;
    }
    out.set(j, acc);
  }
  return out;
}

std::size_t ev_tag_length(LogProb eps_ev) {
  if (eps_ev.is_zero() || !(eps_ev.log2() < 0.0)) throw DomainError("ev_tag_length: eps_EV must lie in (0,1)");
  return static_cast<std::size_t>(std::ceil(eps_ev.bits()));
}

EvResult error_verification(const BitString& s_a, const BitString& s_b, const BitString& seed,
                            LogProb eps_ev) {
  if (s_a.size() != s_b.size()) throw DomainError("error_verification: string lengths differ");
  const std::size_t l = ev_tag_length(eps_ev);
  EvResult r;
  r.tag = toeplitz_hash(seed, s_a, l);
  r.matched = r.tag == toeplitz_hash(seed, s_b, l);
  return r;
}

void SeedTable::set(std::size_t input_length, BitString seed) { entries_[input_length] = std::move(seed); }

std::optional<BitString> SeedTable::seed_for(std::size_t m, std::size_t l) const {
  if (l == 0) return BitString();
  const std::size_t need = m + l - 1;
  if (auto it = entries_.find(m); it != entries_.end()) {
    if (it->second.size() != need) {
      std::ostringstream msg;
      msg << "seed table: entry for length " << m << " has " << it->second.size() << " bits, need " << need;
      throw DomainError(msg.str());
    }
    return it->second;
  }
  if (!master_) return std::nullopt;
  Rng rng = make_stream(*master_, m);
  return BitString::random(need, rng);
}

BitString pa_variable_input(const BitString& s, const SeedTable& seeds, std::size_t l) {
  if (l == 0) return BitString();
  const auto seed = seeds.seed_for(s.size(), l);
  if (!seed) {
    std::ostringstream msg;
    msg << "pa_variable_input: no seed for input length " << s.size();
    throw DomainError(msg.str());
  }
  return toeplitz_hash(*seed, s, l);
}

BitString discard_map(const std::vector<Sym>& raw, const std::vector<std::size_t>& announced) {
  std::vector<std::size_t> sorted = announced;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw DomainError("discard_map: duplicate announced position");
  }
  std::vector<std::uint8_t> kept;
  kept.reserve(raw.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const bool is_announced = next < sorted.size() && sorted[next] == i;
    if (is_announced) ++next;
    if ((raw[i] == Sym::bottom) != is_announced) {
      std::ostringstream msg;
      msg << "discard_map: position " << i << " disagrees with the announcement";
      throw DomainError(msg.str());
    }
    if (!is_announced) kept.push_back(raw[i] == Sym::one ? 1 : 0);
  }
  if (next != sorted.size()) throw DomainError("discard_map: announced position out of range");
  return BitString(std::move(kept));
}

}  // namespace qkdfs
