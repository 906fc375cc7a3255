#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace seq2seq {

// Exact arithmetic for the constructive pipeline. All constructed values are
// rationals with small denominators (powers of q and factors of 2), but the
// attention scores are degree-2 products, so a general big-rational is used
// rather than fixed-point in base delta.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

struct ModeError : std::logic_error {
  using std::logic_error::logic_error;
};

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Rational pow_int(const Rational& base, long e) {
  Rational r = 1;
  Rational b = base;
  bool neg = e < 0;
  unsigned long k = neg ? static_cast<unsigned long>(-e) : static_cast<unsigned long>(e);
  while (k > 0) {
    if (k & 1) r *= b;
    b *= b;
    k >>= 1;
  }
  if (neg) {
    if (r == 0) throw std::domain_error("pow_int: zero to negative power");
    r = Rational(1) / r;
  }
  return r;
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }
inline double to_double(double d) { return d; }

inline std::string rational_to_string(const Rational& r) {
  std::string s = numerator(r).str();
  if (denominator(r) != 1) s += "/" + denominator(r).str();
  return s;
}

// Parses "p", "p/q", or a decimal like "0.5" into an exact rational.
inline Rational parse_rational(const std::string& s) {
  auto bad = [&] { return ConfigError("cannot parse rational: '" + s + "'"); };
  if (s.empty()) throw bad();
  auto slash = s.find('/');
  try {
    if (slash != std::string::npos) {
      BigInt num(s.substr(0, slash));
      BigInt den(s.substr(slash + 1));
      if (den == 0) throw bad();
      return Rational(num, den);
    }
    auto dot = s.find('.');
    if (dot != std::string::npos) {
      std::string whole = s.substr(0, dot);
      std::string frac = s.substr(dot + 1);
      bool neg = !whole.empty() && whole[0] == '-';
      BigInt w = whole.empty() || whole == "-" ? BigInt(0) : BigInt(whole);
      BigInt scale = 1;
      for (size_t i = 0; i < frac.size(); ++i) scale *= 10;
      BigInt f(frac.empty() ? "0" : frac);
      BigInt num = abs(w) * scale + f;
      if (neg) num = -num;
      return Rational(num, scale);
    }
    return Rational(BigInt(s));
  } catch (const std::exception&) {
    throw bad();
  }
}

// Scalar-mode traits. Exact mode compares with equality; float mode uses the
// pinned relative tolerance for hardmax ties.
template <typename T>
struct ScalarTraits;

template <>
struct ScalarTraits<Rational> {
  static constexpr bool exact = true;
  static bool tie(const Rational& a, const Rational& b) { return a == b; }
  static Rational from_rational(const Rational& r) { return r; }
  static const char* mode_name() { return "exact"; }
};

template <>
struct ScalarTraits<double> {
  static constexpr bool exact = false;
  static constexpr double tie_tol = 1e-12;
  static bool tie(double a, double b) {
    double scale = std::max({1.0, std::abs(a), std::abs(b)});
    return std::abs(a - b) <= tie_tol * scale;
  }
  static double from_rational(const Rational& r) { return to_double(r); }
  static const char* mode_name() { return "float"; }
};

// Deterministic 64-bit PRNG (splitmix64). Used everywhere a seeded stream is
// needed so results do not depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n).
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  // Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller.
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

inline std::uint64_t hash_string(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t kDefaultSeed = 0xC0FFEE;
constexpr std::size_t kDefaultLayerBudget = 100000;

inline std::size_t layer_budget_from_env(std::size_t fallback = kDefaultLayerBudget) {
  if (const char* v = std::getenv("SEQ2SEQ_UNIV_BUDGET")) {
    char* end = nullptr;
    unsigned long long parsed = std::strtoull(v, &end, 10);
    if (end && *end == '\0' && parsed > 0) return static_cast<std::size_t>(parsed);
  }
  return fallback;
}

}  // namespace seq2seq
