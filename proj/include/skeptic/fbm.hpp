#ifndef SKEPTIC_FBM_HPP
#define SKEPTIC_FBM_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "rng.hpp"

namespace skeptic {

/// Sampled log-price path on [0, T].
struct PricePath {
  std::vector<double> times;
  std::vector<double> log_price;
  double hurst = 0.0;  // nominal exponent when synthesized, 0 when imported

  std::size_t size() const { return times.size(); }

  void validate() const {
    if (times.size() != log_price.size()) throw std::invalid_argument("price path: times and prices differ in length");
    if (times.empty()) throw std::invalid_argument("price path: empty");
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (!std::isfinite(times[i]) || !std::isfinite(log_price[i]))
        throw std::invalid_argument("price path: non-finite value at row " + std::to_string(i));
      if (i > 0 && !(times[i] > times[i - 1]))
        throw std::invalid_argument("price path: times must be strictly increasing (row " + std::to_string(i) + ")");
    }
  }
};

/// Autocovariance of unit fractional Gaussian noise at lag j.
inline double fgn_autocovariance(double hurst, std::size_t lag) {
  const double h2 = 2.0 * hurst;
  const double j = static_cast<double>(lag);
  return 0.5 * (std::pow(j + 1.0, h2) - 2.0 * std::pow(j, h2) + std::pow(std::abs(j - 1.0), h2));
}

/// Eigenvalues of the circulant embedding of the fGn covariance of size 2n.
inline std::vector<double> circulant_eigenvalues(double hurst, std::size_t n) {
  const std::size_t m = 2 * n;
  std::vector<std::complex<double>> row(m);
  for (std::size_t j = 0; j <= n; ++j) row[j] = fgn_autocovariance(hurst, j);
  for (std::size_t j = n + 1; j < m; ++j) row[j] = row[m - j];
  std::vector<std::complex<double>> spectrum;
  Eigen::FFT<double> fft;
  fft.fwd(spectrum, row);
  std::vector<double> out(m);
  for (std::size_t j = 0; j < m; ++j) out[j] = spectrum[j].real();
  return out;
}

class FbmSynthesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Exact fGn via circulant embedding; empty when the embedding is not
// non-negative definite.
inline std::vector<double> fgn_circulant(double hurst, std::size_t n, Rng& rng) {
  const std::vector<double> lambda = circulant_eigenvalues(hurst, n);
  const double scale = *std::max_element(lambda.begin(), lambda.end());
  for (double l : lambda)
    if (l < -1e-10 * scale) return {};
  const std::size_t m = lambda.size();
  std::vector<std::complex<double>> w(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double s = std::sqrt(std::max(lambda[j], 0.0) / static_cast<double>(m));
    const double re = rng.normal();
    const double im = rng.normal();
    w[j] = {s * re, s * im};
  }
  std::vector<std::complex<double>> y;
  Eigen::FFT<double> fft;
  fft.fwd(y, w);
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = y[j].real();
  return out;
}

inline constexpr std::size_t kDenseFbmLimit = 4096;

inline std::vector<double> fgn_dense(double hurst, std::size_t n, Rng& rng) {
  if (n > kDenseFbmLimit) throw FbmSynthesisError("fbm: circulant embedding failed and n is too large for dense factorization");
  const auto size = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd cov(size, size);
  for (Eigen::Index i = 0; i < size; ++i)
    for (Eigen::Index j = 0; j < size; ++j) cov(i, j) = fgn_autocovariance(hurst, static_cast<std::size_t>(std::abs(i - j)));
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw FbmSynthesisError("fbm: covariance factorization failed");
  Eigen::VectorXd z(size);
  for (Eigen::Index i = 0; i < size; ++i) z(i) = rng.normal();
  const Eigen::VectorXd x = llt.matrixL() * z;
  return std::vector<double>(x.data(), x.data() + n);
}

}  // namespace detail

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Largest grid synthesized through the circulant embedding (the FFT works on 2 n_grid points).
inline constexpr std::size_t kMaxCirculantGrid = std::size_t{1} << 24;
/// Largest grid for H = 1/2, where the increments are independent and no FFT is needed.
inline constexpr std::size_t kMaxBrownianGrid = std::size_t{1} << 26;

inline std::size_t max_fbm_grid(double hurst) { return hurst == 0.5 ? kMaxBrownianGrid : kMaxCirculantGrid; }

/// Fractional Brownian motion with Hurst index `hurst` on n_grid equal steps of
/// [0, T]. B(0) = 0 and Var B(T) = T^{2H} (so 1 for T = 1).
///
/// Exact Gaussian synthesis: circulant embedding of the fGn covariance, falling
/// back to a dense Cholesky factor for small grids. For H = 1/2 the noise is white
/// and is drawn directly.
inline PricePath fbm_path(double hurst, double horizon, std::size_t n_grid, std::uint64_t seed, std::uint64_t stream = 0,
                          bool force_dense = false) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw std::invalid_argument("fbm: H must lie in (0,1)");
  if (!(horizon > 0.0)) throw std::invalid_argument("fbm: T must be positive");
  if (!is_power_of_two(n_grid)) throw std::invalid_argument("fbm: n_grid must be a power of two");
  if (n_grid > max_fbm_grid(hurst))
    throw FbmSynthesisError("fbm: n_grid " + std::to_string(n_grid) + " exceeds the synthesis limit " +
                            std::to_string(max_fbm_grid(hurst)));
  Rng rng(seed, stream);
  const bool white = hurst == 0.5 && !force_dense;
  std::vector<double> noise;
  if (!white) {
    if (!force_dense) noise = detail::fgn_circulant(hurst, n_grid, rng);
    if (noise.empty()) noise = detail::fgn_dense(hurst, n_grid, rng);
  }

  const double dt = horizon / static_cast<double>(n_grid);
  const double step_scale = std::pow(dt, hurst);
  PricePath path;
  path.hurst = hurst;
  path.times.resize(n_grid + 1);
  path.log_price.resize(n_grid + 1);
  path.times[0] = 0.0;
  path.log_price[0] = 0.0;
  double level = 0.0;
  for (std::size_t i = 0; i < n_grid; ++i) {
    level += step_scale * (white ? rng.normal() : noise[i]);
    path.times[i + 1] = dt * static_cast<double>(i + 1);
    path.log_price[i + 1] = level;
  }
  return path;
}

/// Reads "time,price" rows (an optional non-numeric header line is skipped).
inline PricePath read_price_csv(std::istream& in) {
  PricePath path;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string t;
    std::string p;
    if (!std::getline(fields, t, ',') || !std::getline(fields, p, ','))
      throw std::invalid_argument("price csv: row " + std::to_string(row) + " needs time,price");
    double time = 0.0;
    double price = 0.0;
    try {
      time = std::stod(t);
      price = std::stod(p);
    } catch (const std::exception&) {
      if (path.times.empty() && row == 1) continue;  // header
      throw std::invalid_argument("price csv: unparseable row " + std::to_string(row));
    }
    if (!(price > 0.0)) throw std::invalid_argument("price csv: prices must be positive (row " + std::to_string(row) + ")");
    path.times.push_back(time);
    path.log_price.push_back(std::log(price));
  }
  path.validate();
  return path;
}

inline PricePath read_price_csv(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) throw std::runtime_error("cannot open price file " + filename);
  return read_price_csv(in);
}

}  // namespace skeptic

#endif  // SKEPTIC_FBM_HPP
