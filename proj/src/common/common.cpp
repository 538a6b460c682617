#include "phases/common.hpp"

#include <atomic>
#include <boost/multiprecision/cpp_int.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>
#include <vector>

namespace phases {

using boost::multiprecision::cpp_int;

Rational Rational::make(std::uint64_t num, std::uint64_t den) {
  if (den == 0) throw DomainError("rational with zero denominator");
  const std::uint64_t g = std::gcd(num, den);
  return g == 0 ? Rational{0, 1} : Rational{num / g, den / g};
}

ExactDecimal ExactDecimal::from_double(double x) {
  if (!std::isfinite(x)) throw DomainError("non-finite window bound");
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific);
  const std::string text(buf, res.ptr);
  // mantissa "d.ddd" and exponent "e[+-]xx"
  const auto epos = text.find('e');
  std::string mant = text.substr(0, epos);
  int exponent = std::stoi(text.substr(epos + 1));
  bool negative = false;
  if (!mant.empty() && mant[0] == '-') {
    negative = true;
    mant.erase(0, 1);
  }
  std::string digits;
  int frac_digits = 0;
  bool after_point = false;
  for (char ch : mant) {
    if (ch == '.') {
      after_point = true;
      continue;
    }
    digits.push_back(ch);
    if (after_point) ++frac_digits;
  }
  // value = digits * 10^(exponent - frac_digits)
  int scale = exponent - frac_digits;
  std::int64_t num = std::stoll(digits);
  std::int64_t den = 1;
  while (scale > 0) {
    if (num > INT64_MAX / 10) throw DomainError("window bound too large");
    num *= 10;
    --scale;
  }
  while (scale < 0) {
    if (den > INT64_MAX / 10) throw DomainError("window bound has too many digits");
    den *= 10;
    ++scale;
  }
  const std::int64_t g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return {negative ? -num : num, den};
}

namespace {

// floor(p / q) for q > 0
cpp_int floor_div(const cpp_int& p, const cpp_int& q) {
  cpp_int d = p / q;
  if (p % q != 0 && p < 0) d -= 1;
  return d;
}

cpp_int ceil_div(const cpp_int& p, const cpp_int& q) {
  cpp_int d = p / q;
  if (p % q != 0 && p > 0) d += 1;
  return d;
}

}  // namespace

CountWindow CountWindow::make(double alpha, double delta, std::uint64_t den) {
  const ExactDecimal a = ExactDecimal::from_double(alpha);
  const ExactDecimal d = ExactDecimal::from_double(delta);
  // bounds (a/A -+ d/D) * den = (a D -+ d A) den / (A D), open interval
  const cpp_int scale = cpp_int(a.den) * d.den;
  const cpp_int lower = (cpp_int(a.num) * d.den - cpp_int(d.num) * a.den) * den;
  const cpp_int upper = (cpp_int(a.num) * d.den + cpp_int(d.num) * a.den) * den;
  cpp_int lo = floor_div(lower, scale) + 1;
  cpp_int hi = ceil_div(upper, scale) - 1;
  if (lo < 0) lo = 0;
  if (hi > cpp_int(den)) hi = cpp_int(den);
  CountWindow w;
  if (lo > hi) return w;
  w.lo = static_cast<std::int64_t>(lo);
  w.hi = static_cast<std::int64_t>(hi);
  return w;
}

std::uint64_t binomial(unsigned n, unsigned k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (unsigned i = 1; i <= k; ++i) {
    // exact at every step since r * (n-k+i) / i is C(n-k+i, i)
    const std::uint64_t g = std::gcd(r, static_cast<std::uint64_t>(i));
    const std::uint64_t factor = (n - k + i) / (i / g);
    r = (r / g) * factor;
  }
  return r;
}

std::uint64_t falling_factorial(std::uint64_t n, unsigned k) {
  std::uint64_t r = 1;
  for (unsigned i = 0; i < k; ++i) {
    if (n < i) return 0;
    const std::uint64_t f = n - i;
    if (f != 0 && r > UINT64_MAX / f) throw DomainError("falling factorial overflows 64 bits");
    r *= f;
  }
  return r;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

unsigned resolve_threads(int requested) {
  if (requested > 0) return static_cast<unsigned>(requested);
  if (const char* env = std::getenv("PHASES_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace phases
