#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "phases/permuton.hpp"

namespace phases {

Permutation::Permutation(std::vector<int> values) : values_(std::move(values)) {
  std::vector<char> seen(values_.size() + 1, 0);
  for (int v : values_) {
    if (v < 1 || static_cast<std::size_t>(v) > values_.size() || seen[static_cast<std::size_t>(v)])
      throw DomainError("not a permutation of 1..n: value " + std::to_string(v));
    seen[static_cast<std::size_t>(v)] = 1;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 1);
  return Permutation(std::move(v));
}

Permutation Permutation::parse(const std::string& text) {
  std::string cleaned = text;
  std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
  std::istringstream in(cleaned);
  std::vector<int> v;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      v.push_back(std::stoi(tok, &used));
      if (used != tok.size()) throw InputError("");
    } catch (const std::exception&) {
      throw InputError("permutation entry '" + tok + "' is not an integer");
    }
  }
  if (v.empty()) throw InputError("permutation text is empty");
  try {
    return Permutation(std::move(v));
  } catch (const DomainError& e) {
    throw InputError(e.what());
  }
}

std::string Permutation::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(values_[i]);
  }
  return s;
}

StarPattern::StarPattern(std::vector<int> symbols) : symbols_(std::move(symbols)) {
  const std::size_t k = symbols_.size();
  if (k == 0) throw DomainError("pattern must have at least one symbol");
  if (k > 9) throw DomainError("patterns are limited to length 9");
  std::vector<char> used(k + 1, 0);
  for (int s : symbols_) {
    if (s == 0) continue;
    if (s < 1 || static_cast<std::size_t>(s) > k || used[static_cast<std::size_t>(s)])
      throw DomainError("pattern symbols must be distinct ranks in 1..k or wildcards");
    used[static_cast<std::size_t>(s)] = 1;
  }
  std::vector<int> free_symbols;
  for (std::size_t s = 1; s <= k; ++s)
    if (!used[s]) free_symbols.push_back(static_cast<int>(s));
  do {
    std::vector<int> c = symbols_;
    std::size_t next = 0;
    for (int& s : c)
      if (s == 0) s = free_symbols[next++];
    completions_.push_back(std::move(c));
  } while (std::next_permutation(free_symbols.begin(), free_symbols.end()));
  std::sort(completions_.begin(), completions_.end());
}

StarPattern StarPattern::parse(const std::string& text) {
  std::vector<int> symbols;
  auto symbol = [&](const std::string& tok) {
    if (tok == "*") return 0;
    try {
      std::size_t used = 0;
      const int v = std::stoi(tok, &used);
      if (used == tok.size() && v >= 1) return v;
    } catch (const std::exception&) {
    }
    throw InputError("pattern symbol '" + tok + "' is neither a rank nor '*'");
  };
  if (text.find(',') != std::string::npos) {
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) {
      tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
      symbols.push_back(symbol(tok));
    }
  } else {
    for (char ch : text) {
      if (std::isspace(static_cast<unsigned char>(ch))) continue;
      symbols.push_back(symbol(std::string(1, ch)));
    }
  }
  try {
    return StarPattern(std::move(symbols));
  } catch (const DomainError& e) {
    throw InputError("pattern '" + text + "': " + e.what());
  }
}

bool StarPattern::has_wildcards() const {
  return std::find(symbols_.begin(), symbols_.end(), 0) != symbols_.end();
}

std::string StarPattern::to_string() const {
  const bool wide = symbols_.size() > 9;
  std::string s;
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (wide && i) s += ',';
    s += symbols_[i] == 0 ? "*" : std::to_string(symbols_[i]);
  }
  return s;
}

namespace {

// Base-k code of a sequence of 0-based ranks.
std::size_t pattern_code(const std::vector<int>& ranks, std::size_t k) {
  std::size_t code = 0;
  for (int r : ranks) code = code * k + static_cast<std::size_t>(r);
  return code;
}

struct MatchTable {
  std::size_t k;
  std::vector<char> allowed;

  explicit MatchTable(const StarPattern& tau) : k(tau.length()) {
    std::size_t size = 1;
    for (std::size_t i = 0; i < k; ++i) size *= k;
    allowed.assign(size, 0);
    for (const auto& c : tau.completions()) {
      std::vector<int> ranks(c);
      for (int& r : ranks) --r;
      allowed[pattern_code(ranks, k)] = 1;
    }
  }

  // Occurrences among k-subsets of positions of vals[0..n).
  std::uint64_t count(const int* vals, std::size_t n) const {
    if (k > n) return 0;
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    std::uint64_t total = 0;
    for (;;) {
      std::size_t code = 0;
      for (std::size_t a = 0; a < k; ++a) {
        std::size_t rank = 0;
        for (std::size_t b = 0; b < k; ++b) rank += vals[idx[b]] < vals[idx[a]];
        code = code * k + rank;
      }
      total += static_cast<std::uint64_t>(allowed[code]);
      std::size_t pos = k;
      while (pos > 0 && idx[pos - 1] == n - k + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t a = pos; a < k; ++a) idx[a] = idx[a - 1] + 1;
    }
    return total;
  }
};

void check_length(const StarPattern& tau) {
  if (tau.has_wildcards() ? tau.length() > 4 : tau.length() > 6)
    throw DomainError("pattern " + tau.to_string() +
                      " exceeds the counting cap (plain length 6, star length 4)");
}

}  // namespace

std::uint64_t perm_pattern_count(const Permutation& pi, const StarPattern& tau) {
  check_length(tau);
  if (tau.length() > pi.size()) throw DomainError("pattern is longer than the permutation");
  return MatchTable(tau).count(pi.values().data(), pi.size());
}

Rational perm_pattern_density(const Permutation& pi, const StarPattern& tau) {
  const std::uint64_t c = perm_pattern_count(pi, tau);
  return Rational::make(c, binomial(static_cast<unsigned>(pi.size()), static_cast<unsigned>(tau.length())));
}

PermutationCount count_constrained_perms(std::size_t n, const std::vector<PatternConstraint>& constraints,
                                         double delta, int threads) {
  if (n < 1 || n > 9) throw DomainError("exhaustive permutation counting is capped at n = 9");
  if (!(delta >= 0.0 && delta <= 1.0)) throw DomainError("softening delta must lie in [0,1]");
  PermutationCount out;
  out.n = n;
  std::vector<MatchTable> tables;
  for (const auto& c : constraints) {
    check_length(c.pattern);
    if (c.pattern.length() > n) throw DomainError("pattern is longer than n");
    if (!(c.target >= 0.0 && c.target <= 1.0)) throw DomainError("pattern density target must lie in [0,1]");
    tables.emplace_back(c.pattern);
    const std::uint64_t den = binomial(static_cast<unsigned>(n), static_cast<unsigned>(c.pattern.length()));
    out.denominators.push_back(den);
    out.windows.push_back(CountWindow::make(c.target, delta, den));
  }
  // one task per leading symbol
  std::vector<std::uint64_t> partial(n, 0);
  parallel_for(n, resolve_threads(threads), [&](std::size_t first) {
    std::vector<int> rest;
    for (std::size_t v = 1; v <= n; ++v)
      if (v != first + 1) rest.push_back(static_cast<int>(v));
    std::vector<int> perm(n);
    perm[0] = static_cast<int>(first + 1);
    std::uint64_t found = 0;
    do {
      std::copy(rest.begin(), rest.end(), perm.begin() + 1);
      bool ok = true;
      for (std::size_t j = 0; j < tables.size() && ok; ++j)
        ok = out.windows[j].contains(static_cast<std::int64_t>(tables[j].count(perm.data(), n)));
      if (ok) ++found;
    } while (std::next_permutation(rest.begin(), rest.end()));
    partial[first] = found;
  });
  for (auto p : partial) out.count += p;
  if (out.count > 0) {
    double factorial = 1.0;
    for (std::size_t i = 2; i <= n; ++i) factorial *= static_cast<double>(i);
    out.normalized_log = std::log(static_cast<double>(out.count) / factorial) / static_cast<double>(n);
  }
  return out;
}

}  // namespace phases
