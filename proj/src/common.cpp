#include "ulab/common.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <thread>

namespace ulab {

namespace {
std::atomic<int> g_threads{0};
}

void set_threads(int n) { g_threads = std::max(0, n); }

int thread_count() {
  if (const char* e = std::getenv("ULAB_THREADS")) {
    int v = std::atoi(e);
    if (v > 0) return v;
  }
  if (g_threads > 0) return g_threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  std::size_t nt = std::min<std::size_t>(thread_count(), n);
  if (nt <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  std::vector<std::exception_ptr> errs(nt);
  std::size_t chunk = (n + nt - 1) / nt;
  for (std::size_t t = 0; t < nt; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t * chunk; i < std::min(n, (t + 1) * chunk); ++i) fn(i);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + (k + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

LogFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
  LogFit f;
  std::size_t n = std::min(x.size(), y.size());
  f.used = static_cast<int>(n);
  if (n < 2) return f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double den = n * sxx - sx * sx;
  f.slope = den != 0 ? (n * sxy - sx * sy) / den : 0;
  f.intercept = (sy - f.slope * sx) / n;
  double r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = y[i] - f.intercept - f.slope * x[i];
    r += e * e;
  }
  f.residual = std::sqrt(r / n);
  return f;
}

LogFit fit_log_linear(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> xs, ly;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (y[i] > 0 && std::isfinite(y[i])) {
      xs.push_back(x[i]);
      ly.push_back(std::log(y[i]));
    }
  }
  return fit_linear(xs, ly);
}

std::vector<Vec> sphere_points(int d, int count) {
  std::vector<Vec> out;
  if (d <= 0) return out;
  if (d == 1) {
    Vec a(1), b(1);
    a << 1.0;
    b << -1.0;
    return {a, b};
  }
  out.reserve(count);
  if (d == 2) {
    for (int k = 0; k < count; ++k) {
      double th = 2 * std::numbers::pi * k / count;
      Vec v(2);
      v << std::cos(th), std::sin(th);
      out.push_back(v);
    }
    return out;
  }
  if (d == 3) {
    // Fibonacci lattice
    const double ga = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
      double z = 1.0 - (2.0 * k + 1.0) / count;
      double r = std::sqrt(std::max(0.0, 1 - z * z));
      Vec v(3);
      v << r * std::cos(ga * k), r * std::sin(ga * k), z;
      out.push_back(v);
    }
    return out;
  }
  std::mt19937_64 rng(0x5eedull + d);
  std::normal_distribution<double> nd;
  for (int k = 0; k < count; ++k) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = nd(rng);
    out.push_back(v / v.norm());
  }
  return out;
}

double sphere_spacing(int d, int count) {
  if (d <= 1) return 0.0;
  if (d == 2) return std::numbers::pi / count;
  // covering radius of a near-uniform set of `count` points, with slack
  double area = 2 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0);
  return 1.5 * std::pow(area / count, 1.0 / (d - 1));
}

}  // namespace ulab
