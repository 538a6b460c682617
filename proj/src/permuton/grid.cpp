#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "phases/permuton.hpp"

namespace phases {

GridPermuton::GridPermuton(std::size_t k, std::vector<double> g) : k_(k), g_(std::move(g)) {
  if (k == 0) throw DomainError("permuton resolution must be positive");
  if (g_.size() != k * k) throw DomainError("permuton needs k*k cell densities");
  for (double x : g_)
    if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("permuton densities must be finite and nonnegative");
  const double kd = static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i) {
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      row += g_[i * k + j];
      col += g_[j * k + i];
    }
    if (std::abs(row / kd - 1.0) > kMarginalTolerance || std::abs(col / kd - 1.0) > kMarginalTolerance)
      throw DomainError("permuton marginals are not uniform (row/column " + std::to_string(i) + ")");
  }
}

GridPermuton GridPermuton::uniform(std::size_t k) { return GridPermuton(k, std::vector<double>(k * k, 1.0)); }

GridPermuton perm_to_permuton(const Permutation& pi) {
  const std::size_t n = pi.size();
  std::vector<double> g(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) g[j * n + static_cast<std::size_t>(pi[j] - 1)] = static_cast<double>(n);
  return GridPermuton(n, std::move(g));
}

std::vector<double> sinkhorn_project(std::vector<double> g, std::size_t k, double tol, int max_iter) {
  const double kd = static_cast<double>(k);
  for (int it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < k; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += g[i * k + j];
      if (!(s > 0.0)) throw DomainError("a permuton row has no mass; cannot rescale");
      for (std::size_t j = 0; j < k; ++j) g[i * k + j] *= kd / s;
    }
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) s += g[i * k + j];
      if (!(s > 0.0)) throw DomainError("a permuton column has no mass; cannot rescale");
      for (std::size_t i = 0; i < k; ++i) g[i * k + j] *= kd / s;
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += g[i * k + j];
      worst = std::max(worst, std::abs(s / kd - 1.0));
    }
    if (worst <= tol) return g;
  }
  throw DomainError("marginal projection did not converge");
}

double permuton_entropy(const GridPermuton& gamma) {
  const double k = static_cast<double>(gamma.resolution());
  double s = 0.0;
  for (double x : gamma.cells())
    if (x > 0.0) s -= x * std::log(x);
  return s / (k * k);
}

// ---------------------------------------------------------------------------
// Exact densities. For a point in cell (i, j) at local position (u, v), the
// mass of each open quadrant around it is bilinear in (u, v):
//   F = corner + col * fu + row * fv + self * fu * fv
// where corner sums the cells strictly inside the quadrant, col the cells of
// column i on the quadrant's side, row the cells of row j on its side, and
// fu, fv are u or 1 - u (v or 1 - v) depending on the side.

namespace {

struct Direction {
  int sx;  // -1: smaller x, +1: larger x
  int sy;
};
constexpr Direction kLL{-1, -1}, kUR{1, 1}, kUL{-1, 1}, kLR{1, -1};

using Poly = std::array<std::array<double, 2>, 2>;  // c[p][q] u^p v^q

Poly basis(Direction d, int term) {
  // fu = u or 1 - u, fv = v or 1 - v
  const std::array<double, 2> fu = d.sx < 0 ? std::array<double, 2>{0.0, 1.0} : std::array<double, 2>{1.0, -1.0};
  const std::array<double, 2> fv = d.sy < 0 ? std::array<double, 2>{0.0, 1.0} : std::array<double, 2>{1.0, -1.0};
  Poly p{};
  switch (term) {
    case 0:
      p[0][0] = 1.0;
      break;
    case 1:
      p[0][0] = fu[0];
      p[1][0] = fu[1];
      break;
    case 2:
      p[0][0] = fv[0];
      p[0][1] = fv[1];
      break;
    default:
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) p[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = fu[static_cast<std::size_t>(a)] * fv[static_cast<std::size_t>(b)];
  }
  return p;
}

double integrate_product(const Poly& a, const Poly& b) {
  double s = 0.0;
  for (int p1 = 0; p1 < 2; ++p1)
    for (int q1 = 0; q1 < 2; ++q1)
      for (int p2 = 0; p2 < 2; ++p2)
        for (int q2 = 0; q2 < 2; ++q2)
          s += a[static_cast<std::size_t>(p1)][static_cast<std::size_t>(q1)] *
               b[static_cast<std::size_t>(p2)][static_cast<std::size_t>(q2)] /
               ((p1 + p2 + 1.0) * (q1 + q2 + 1.0));
  return s;
}

using Kernel = std::array<std::array<double, 4>, 4>;

Kernel kernel(Direction f, std::optional<Direction> g) {
  Kernel kern{};
  Poly one{};
  one[0][0] = 1.0;
  for (int s = 0; s < 4; ++s)
    for (int t = 0; t < 4; ++t) {
      const Poly pg = g ? basis(*g, t) : (t == 0 ? one : Poly{});
      kern[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)] = integrate_product(basis(f, s), pg);
    }
  return kern;
}

// Q(i, j) = sum of m(a, b) over a strictly on side sx of i and b strictly on side sy of j.
std::vector<double> quadrant_sums(const std::vector<double>& m, std::size_t k, int sx, int sy) {
  std::vector<double> out(k * k, 0.0);
  // inclusive accumulation in the scan order, then shift by one cell
  std::vector<double> incl(k * k, 0.0);
  for (std::size_t ii = 0; ii < k; ++ii) {
    const std::size_t i = sx < 0 ? ii : k - 1 - ii;
    for (std::size_t jj = 0; jj < k; ++jj) {
      const std::size_t j = sy < 0 ? jj : k - 1 - jj;
      double s = m[i * k + j];
      if (ii > 0) s += incl[(sx < 0 ? i - 1 : i + 1) * k + j];
      if (jj > 0) s += incl[i * k + (sy < 0 ? j - 1 : j + 1)];
      if (ii > 0 && jj > 0) s -= incl[(sx < 0 ? i - 1 : i + 1) * k + (sy < 0 ? j - 1 : j + 1)];
      incl[i * k + j] = s;
      if (ii > 0 && jj > 0) out[i * k + j] = incl[(sx < 0 ? i - 1 : i + 1) * k + (sy < 0 ? j - 1 : j + 1)];
    }
  }
  return out;
}

// Sum of m(i, b) over b strictly on side sy of j (same column of cells i).
std::vector<double> column_sums(const std::vector<double>& m, std::size_t k, int sy) {
  std::vector<double> out(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    double acc = 0.0;
    for (std::size_t jj = 0; jj < k; ++jj) {
      const std::size_t j = sy < 0 ? jj : k - 1 - jj;
      out[i * k + j] = acc;
      acc += m[i * k + j];
    }
  }
  return out;
}

// Sum of m(a, j) over a strictly on side sx of i.
std::vector<double> row_sums(const std::vector<double>& m, std::size_t k, int sx) {
  std::vector<double> out(k * k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    double acc = 0.0;
    for (std::size_t ii = 0; ii < k; ++ii) {
      const std::size_t i = sx < 0 ? ii : k - 1 - ii;
      out[i * k + j] = acc;
      acc += m[i * k + j];
    }
  }
  return out;
}

struct Field {
  Direction d;
  std::array<std::vector<double>, 4> coef;  // corner, col, row, self
};

Field make_field(const std::vector<double>& w, std::size_t k, Direction d) {
  return {d, {quadrant_sums(w, k, d.sx, d.sy), column_sums(w, k, d.sy), row_sums(w, k, d.sx), w}};
}

// Adds to grad_w the pullback of per-cell adjoints on a field's coefficients.
void pull_back(const std::array<std::vector<double>, 4>& lambda, Direction d, std::size_t k,
               std::vector<double>& grad_w) {
  const auto corner = quadrant_sums(lambda[0], k, -d.sx, -d.sy);
  const auto col = column_sums(lambda[1], k, -d.sy);
  const auto row = row_sums(lambda[2], k, -d.sx);
  for (std::size_t c = 0; c < k * k; ++c) grad_w[c] += corner[c] + col[c] + row[c] + lambda[3][c];
}

// I(F, G) = sum over cells of w_c * integral of F G over the cell, with its
// gradient in w. G empty means the constant 1.
double cell_integral(const std::vector<double>& w, std::size_t k, Direction f, std::optional<Direction> g,
                     std::vector<double>& grad_w) {
  const Kernel kern = kernel(f, g);
  const Field ff = make_field(w, k, f);
  const std::optional<Field> gf = g ? std::optional<Field>(make_field(w, k, *g)) : std::nullopt;
  std::array<std::vector<double>, 4> lf, lg;
  for (auto& v : lf) v.assign(k * k, 0.0);
  for (auto& v : lg) v.assign(k * k, 0.0);
  double total = 0.0;
  for (std::size_t c = 0; c < k * k; ++c) {
    std::array<double, 4> a{}, b{1.0, 0.0, 0.0, 0.0};
    for (std::size_t s = 0; s < 4; ++s) a[s] = ff.coef[s][c];
    if (gf)
      for (std::size_t t = 0; t < 4; ++t) b[t] = gf->coef[t][c];
    double integral = 0.0;
    for (std::size_t s = 0; s < 4; ++s)
      for (std::size_t t = 0; t < 4; ++t) integral += a[s] * kern[s][t] * b[t];
    total += w[c] * integral;
    grad_w[c] += integral;
    for (std::size_t s = 0; s < 4; ++s) {
      double da = 0.0;
      for (std::size_t t = 0; t < 4; ++t) da += kern[s][t] * b[t];
      lf[s][c] = w[c] * da;
    }
    if (gf)
      for (std::size_t t = 0; t < 4; ++t) {
        double db = 0.0;
        for (std::size_t s = 0; s < 4; ++s) db += a[s] * kern[s][t];
        lg[t][c] = w[c] * db;
      }
  }
  pull_back(lf, f, k, grad_w);
  if (gf) pull_back(lg, *g, k, grad_w);
  return total;
}

double plain_density(const std::vector<int>& tau, const std::vector<double>& w, std::size_t k,
                     std::vector<double>& grad_w) {
  auto scaled = [&](double factor, Direction f, std::optional<Direction> g) {
    std::vector<double> gw(k * k, 0.0);
    const double v = cell_integral(w, k, f, g, gw);
    for (std::size_t c = 0; c < k * k; ++c) grad_w[c] += factor * gw[c];
    return factor * v;
  };
  const std::size_t len = tau.size();
  if (len == 1) return 1.0;
  if (len == 2) return tau[0] == 1 ? scaled(2.0, kLL, std::nullopt) : scaled(2.0, kUL, std::nullopt);
  const int code = tau[0] * 100 + tau[1] * 10 + tau[2];
  switch (code) {
    case 123:
      return scaled(6.0, kLL, kUR);
    case 321:
      return scaled(6.0, kUL, kLR);
    case 213:
      return scaled(3.0, kLL, kLL) + scaled(-6.0, kLL, kUR);
    case 132:
      return scaled(3.0, kUR, kUR) + scaled(-6.0, kLL, kUR);
    case 231:
      return scaled(3.0, kUL, kUL) + scaled(-6.0, kUL, kLR);
    case 312:
      return scaled(3.0, kLR, kLR) + scaled(-6.0, kUL, kLR);
    default:
      throw DomainError("unexpected pattern");
  }
}

}  // namespace

PermutonGradient pattern_gradient_unchecked(const std::vector<double>& g, std::size_t k,
                                            const StarPattern& tau) {
  if (tau.length() > 3) throw DomainError("exact permuton densities are limited to patterns of length 3");
  if (k > 40) throw DomainError("exact permuton densities are limited to resolution 40");
  const double cell_area = 1.0 / static_cast<double>(k * k);
  std::vector<double> w(g);
  for (double& x : w) x *= cell_area;
  std::vector<double> grad_w(k * k, 0.0);
  PermutonGradient out;
  for (const auto& c : tau.completions()) out.value += plain_density(c, w, k, grad_w);
  out.d_cells.resize(k * k);
  for (std::size_t c = 0; c < k * k; ++c) out.d_cells[c] = grad_w[c] * cell_area;
  return out;
}

PermutonGradient permuton_pattern_gradient(const GridPermuton& gamma, const StarPattern& tau) {
  return pattern_gradient_unchecked(gamma.cells(), gamma.resolution(), tau);
}

double permuton_pattern_density(const GridPermuton& gamma, const StarPattern& tau) {
  return std::clamp(permuton_pattern_gradient(gamma, tau).value, 0.0, 1.0);
}

MonteCarloEstimate permuton_pattern_density_mc(const GridPermuton& gamma, const StarPattern& tau,
                                               std::uint64_t samples, std::uint64_t seed) {
  if (samples == 0) throw DomainError("Monte Carlo needs at least one sample");
  const std::size_t k = gamma.resolution();
  const std::size_t len = tau.length();
  std::vector<double> cdf(k * k);
  double acc = 0.0;
  for (std::size_t c = 0; c < k * k; ++c) cdf[c] = acc += gamma.cells()[c];
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<double, double>> pts(len);
  std::vector<int> induced(len);
  std::uint64_t hits = 0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    for (auto& p : pts) {
      const double r = unit(rng) * acc;
      const std::size_t c = std::min<std::size_t>(
          static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), r) - cdf.begin()), k * k - 1);
      p.first = (static_cast<double>(c / k) + unit(rng)) / static_cast<double>(k);
      p.second = (static_cast<double>(c % k) + unit(rng)) / static_cast<double>(k);
    }
    std::sort(pts.begin(), pts.end());
    for (std::size_t a = 0; a < len; ++a) {
      int rank = 1;
      for (std::size_t b = 0; b < len; ++b) rank += pts[b].second < pts[a].second;
      induced[a] = rank;
    }
    if (std::binary_search(tau.completions().begin(), tau.completions().end(), induced)) ++hits;
  }
  MonteCarloEstimate est;
  est.samples = samples;
  est.value = static_cast<double>(hits) / static_cast<double>(samples);
  est.standard_error = std::sqrt(std::max(est.value * (1.0 - est.value), 1.0 / static_cast<double>(samples)) /
                                 static_cast<double>(samples));
  return est;
}

}  // namespace phases
