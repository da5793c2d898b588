#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ulab {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

// thrown for inputs that violate an operation's preconditions
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// thrown when a sampled check fails and a witness location is known
struct CheckFailed : std::runtime_error {
  std::vector<double> witness;
  CheckFailed(const std::string& what, std::vector<double> w = {})
      : std::runtime_error(what), witness(std::move(w)) {}
};

// worker count: ULAB_THREADS overrides, else set_threads(), else hardware
void set_threads(int n);
int thread_count();

// runs fn(i) for i in [0, n) over contiguous chunks
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// counter-based seed splitter (splitmix64 of seed + k * golden)
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t k);

// log-linear least squares fit of log(y) against x
struct LogFit {
  double slope = 0, intercept = 0, residual = 0;  // residual: rms of log misfit
  int used = 0;
};
LogFit fit_log_linear(const std::vector<double>& x, const std::vector<double>& y);

// plain linear least squares y ~ a + b x
LogFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);

// near-uniform directions on the unit sphere S^{d-1}; d = 0 gives nothing
std::vector<Vec> sphere_points(int d, int count);

// largest distance from a sphere point to its nearest sample, estimated
double sphere_spacing(int d, int count);

}  // namespace ulab
