#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace treepref {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity reached a place where only finite values are legal.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Action index into a prompt's op vocabulary.
using Action = int;
using StepList = std::vector<Action>;

using Rng = std::mt19937_64;

/// Selects between the OpenMP kernel and its serial reference loop.
/// Both paths produce bit-identical results.
enum class Exec { serial, parallel };

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  return mix64(base ^ mix64(salt + 0x632be59bd9b4e019ULL));
}

/// FNV-1a over a string salt, so named streams ("synth", "shuffle") get
/// stable seeds.
constexpr std::uint64_t derive_seed(std::uint64_t base, const char* name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char* p = name; *p != '\0'; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 0x100000001b3ULL;
  }
  return derive_seed(base, h);
}

/// FNV-1a 64 of a byte string, printed as 16 hex digits.
std::string checksum_hex(std::string_view bytes);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double x);

}  // namespace treepref
