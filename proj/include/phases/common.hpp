#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace phases {

/// Thrown when an argument lies outside an operation's mathematical domain
/// or exceeds a documented evaluation cap.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thrown for malformed input files and configuration.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact nonnegative fraction, always stored in lowest terms.
struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  static Rational make(std::uint64_t num, std::uint64_t den);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// The exact decimal value of a double's shortest round-trip representation,
/// so that a user-supplied 0.1 means 1/10 rather than its binary neighbour.
struct ExactDecimal {
  std::int64_t num = 0;
  std::int64_t den = 1;  // power of ten

  static ExactDecimal from_double(double x);
};

/// Inclusive range of integer counts c with |c/den - alpha| < delta, computed
/// exactly. Empty when lo > hi.
struct CountWindow {
  std::int64_t lo = 1;
  std::int64_t hi = 0;

  static CountWindow make(double alpha, double delta, std::uint64_t den);
  bool empty() const { return lo > hi; }
  bool contains(std::int64_t c) const { return c >= lo && c <= hi; }
};

std::uint64_t binomial(unsigned n, unsigned k);
/// n (n-1) ... (n-k+1); throws DomainError on overflow.
std::uint64_t falling_factorial(std::uint64_t n, unsigned k);

/// SplitMix64 step, used to derive independent per-task seeds.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Number of worker threads: explicit request if > 0, else PHASES_THREADS,
/// else hardware concurrency.
unsigned resolve_threads(int requested);

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index runs
/// exactly once; callers store results by index so reduction order is fixed.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

/// Decimal text with 17 significant digits (lossless for doubles).
std::string format_real(double x);

}  // namespace phases
