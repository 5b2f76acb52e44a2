#include "mmv/sim.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "mmv/parallel.hpp"
#include "mmv/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "ensemble archive layout assumes a little-endian host");

namespace mmv {
namespace {

std::shared_ptr<Eigen::MatrixXd> gaussian_matrix(Eigen::Index rows, Eigen::Index cols,
                                                 double stdev, std::uint64_t seed) {
  auto mat = std::make_shared<Eigen::MatrixXd>(rows, cols);
  Rng rng(seed);
  for (Eigen::Index l = 0; l < cols; ++l)
    for (Eigen::Index mu = 0; mu < rows; ++mu) (*mat)(mu, l) = stdev * rng.normal();
  return mat;
}

bool is_complex(Setting s) {
  return s == Setting::complex_real || s == Setting::complex_complex;
}

// Residuals v^x_j = F_j (s_j - x_j) + z_j as an M x J array; for the
// complex-matrix setting the stacked-channel residual split into its
// real/imag halves (M rows each) plays the role of the two channels.
Eigen::MatrixXd residual_channels(const MeasurementEnsemble& ens, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd d = ens.signal - x;
  Eigen::MatrixXd v(ens.M, ens.signal.cols());
  if (ens.setting == Setting::complex_complex) {
    const Eigen::MatrixXd& fr = *ens.matrices[0];
    const Eigen::MatrixXd& fi = *ens.matrices[1];
    v.col(0) = fr * d.col(0) - fi * d.col(1) + ens.noise.col(0);
    v.col(1) = fi * d.col(0) + fr * d.col(1) + ens.noise.col(1);
  } else {
    for (Eigen::Index j = 0; j < v.cols(); ++j)
      v.col(j) = (*ens.matrices[j]) * d.col(j) + ens.noise.col(j);
  }
  return v;
}

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* p, std::size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("load_ensemble: truncated file");
}

template <typename T>
void write_pod(std::ofstream& out, T v) {
  write_bytes(out, &v, sizeof v);
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v;
  read_bytes(in, &v, sizeof v);
  return v;
}

}  // namespace

std::string to_string(Setting s) {
  switch (s) {
    case Setting::mmv1: return "mmv1";
    case Setting::mmv2: return "mmv2";
    case Setting::complex_real: return "complex_real";
    case Setting::complex_complex: return "complex_complex";
  }
  return "?";
}

std::optional<Setting> setting_from_string(const std::string& s) {
  if (s == "mmv1") return Setting::mmv1;
  if (s == "mmv2") return Setting::mmv2;
  if (s == "complex_real") return Setting::complex_real;
  if (s == "complex_complex") return Setting::complex_complex;
  return std::nullopt;
}

std::string to_string(EstimatorSpec s) {
  switch (s) {
    case EstimatorSpec::perfect: return "perfect";
    case EstimatorSpec::prior_draw: return "prior_draw";
    case EstimatorSpec::zero: return "zero";
  }
  return "?";
}

std::optional<EstimatorSpec> estimator_spec_from_string(const std::string& s) {
  if (s == "perfect") return EstimatorSpec::perfect;
  if (s == "prior_draw") return EstimatorSpec::prior_draw;
  if (s == "zero") return EstimatorSpec::zero;
  return std::nullopt;
}

MeasurementEnsemble generate(Setting setting, const PriorParams& prior, double delta, double R,
                             Eigen::Index N, std::uint64_t seed) {
  ProblemParams params{prior, delta, R};
  params.validate();
  if (N < 10) throw std::invalid_argument("generate: N must be >= 10");
  if (is_complex(setting) && prior.J != 2)
    throw std::invalid_argument("generate: complex settings require prior.J == 2");
  const auto M = static_cast<Eigen::Index>(std::llround(R * static_cast<double>(N)));
  if (M < 1) throw std::invalid_argument("generate: round(R*N) must be >= 1");

  MeasurementEnsemble ens;
  ens.setting = setting;
  ens.params = params;
  ens.seed = seed;
  ens.N = N;
  ens.M = M;
  const int J = prior.J;

  // Split substreams: signal, matrices, and noise are independent of each
  // other, so ensembles that differ only in `setting` share signal & noise.
  ens.signal = sample_signal(prior, static_cast<std::size_t>(N), derive_seed(seed, {1}));

  const double shared_std = 1.0 / std::sqrt(static_cast<double>(N));
  switch (setting) {
    case Setting::mmv1:
      for (int j = 0; j < J; ++j)
        ens.matrices.push_back(gaussian_matrix(M, N, shared_std, derive_seed(seed, {2, static_cast<std::uint64_t>(j)})));
      break;
    case Setting::mmv2:
    case Setting::complex_real: {
      auto shared = gaussian_matrix(M, N, shared_std, derive_seed(seed, {2, 0}));
      ens.matrices.assign(J, shared);
      break;
    }
    case Setting::complex_complex: {
      const double half_std = 1.0 / std::sqrt(2.0 * static_cast<double>(N));
      ens.matrices.push_back(gaussian_matrix(M, N, half_std, derive_seed(seed, {2, 0})));
      ens.matrices.push_back(gaussian_matrix(M, N, half_std, derive_seed(seed, {2, 1})));
      break;
    }
  }

  ens.noise.resize(M, J);
  {
    Rng rng(derive_seed(seed, {3}));
    const double noise_std = std::sqrt(delta);
    for (int j = 0; j < J; ++j)
      for (Eigen::Index mu = 0; mu < M; ++mu) ens.noise(mu, j) = noise_std * rng.normal();
  }

  ens.measurements.resize(M, J);
  if (setting == Setting::complex_complex) {
    const Eigen::MatrixXd& fr = *ens.matrices[0];
    const Eigen::MatrixXd& fi = *ens.matrices[1];
    ens.measurements.col(0) =
        fr * ens.signal.col(0) - fi * ens.signal.col(1) + ens.noise.col(0);
    ens.measurements.col(1) =
        fi * ens.signal.col(0) + fr * ens.signal.col(1) + ens.noise.col(1);
  } else {
    for (int j = 0; j < J; ++j)
      ens.measurements.col(j) = (*ens.matrices[j]) * ens.signal.col(j) + ens.noise.col(j);
  }
  return ens;
}

Eigen::MatrixXd stacked_matrix(const MeasurementEnsemble& ens) {
  if (ens.setting != Setting::complex_complex)
    throw std::invalid_argument("stacked_matrix: only defined for complex_complex ensembles");
  const Eigen::MatrixXd& fr = *ens.matrices[0];
  const Eigen::MatrixXd& fi = *ens.matrices[1];
  Eigen::MatrixXd s(2 * ens.M, 2 * ens.N);
  for (Eigen::Index l = 0; l < ens.N; ++l) {
    s.block(0, 2 * l, ens.M, 1) = fr.col(l);
    s.block(0, 2 * l + 1, ens.M, 1) = -fi.col(l);
    s.block(ens.M, 2 * l, ens.M, 1) = fi.col(l);
    s.block(ens.M, 2 * l + 1, ens.M, 1) = fr.col(l);
  }
  return s;
}

Eigen::VectorXd stacked_signal(const MeasurementEnsemble& ens) {
  if (ens.setting != Setting::complex_complex)
    throw std::invalid_argument("stacked_signal: only defined for complex_complex ensembles");
  Eigen::VectorXd s(2 * ens.N);
  for (Eigen::Index l = 0; l < ens.N; ++l) {
    s[2 * l] = ens.signal(l, 0);
    s[2 * l + 1] = ens.signal(l, 1);
  }
  return s;
}

Eigen::VectorXd stacked_measurements(const MeasurementEnsemble& ens) {
  if (ens.setting != Setting::complex_complex)
    throw std::invalid_argument("stacked_measurements: only defined for complex_complex ensembles");
  Eigen::VectorXd y(2 * ens.M);
  y.head(ens.M) = ens.measurements.col(0);
  y.tail(ens.M) = ens.measurements.col(1);
  return y;
}

CovarianceEstimate empirical_v_covariance(Setting setting, const PriorParams& prior, double delta,
                                          double R, Eigen::Index N, EstimatorSpec estimator_spec,
                                          int n_mc, std::uint64_t seed, int jobs) {
  if (n_mc < 100)
    throw std::invalid_argument("empirical_v_covariance: n_mc must be >= 100");
  const int J = prior.J;
  std::vector<double> w1s(n_mc), w2s(n_mc), w3s(n_mc), w4s(n_mc);

  parallel_for(static_cast<std::size_t>(n_mc), jobs, [&](std::size_t k) {
    const auto ku = static_cast<std::uint64_t>(k);
    const MeasurementEnsemble ens =
        generate(setting, prior, delta, R, N, derive_seed(seed, {17, ku}));
    auto draw_estimate = [&](std::uint64_t which) -> Eigen::MatrixXd {
      switch (estimator_spec) {
        case EstimatorSpec::perfect: return ens.signal;
        case EstimatorSpec::zero: return Eigen::MatrixXd::Zero(N, J);
        case EstimatorSpec::prior_draw:
          return sample_signal(prior, static_cast<std::size_t>(N),
                               derive_seed(seed, {23, ku, which}));
      }
      throw std::invalid_argument("empirical_v_covariance: unknown estimator_spec");
    };
    const Eigen::MatrixXd va = residual_channels(ens, draw_estimate(0));
    const Eigen::MatrixXd vb = residual_channels(ens, draw_estimate(1));
    const double m = static_cast<double>(va.rows());
    const Eigen::MatrixXd A = va.transpose() * va;   // same-replica Gram
    const Eigen::MatrixXd B = vb.transpose() * vb;
    const Eigen::MatrixXd C = va.transpose() * vb;   // cross-replica Gram
    const int Jc = static_cast<int>(va.cols());
    w1s[k] = (A.trace() + B.trace()) / (2.0 * m * Jc);
    w3s[k] = C.trace() / (m * Jc);
    if (Jc > 1) {
      const double offA = A.sum() - A.trace();
      const double offB = B.sum() - B.trace();
      const double offC = C.sum() - C.trace();
      w2s[k] = (offA + offB) / (2.0 * m * Jc * (Jc - 1));
      w4s[k] = offC / (m * Jc * (Jc - 1));
    } else {
      w2s[k] = w4s[k] = std::numeric_limits<double>::quiet_NaN();
    }
  });

  auto reduce = [n_mc](const std::vector<double>& xs, double& mean, double& se) {
    if (std::isnan(xs[0])) {
      mean = se = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    double s = 0.0;
    for (double x : xs) s += x;
    mean = s / n_mc;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    se = std::sqrt(ss / (static_cast<double>(n_mc) * (n_mc - 1)));
  };
  CovarianceEstimate est;
  est.n_mc = n_mc;
  reduce(w1s, est.w1, est.se1);
  reduce(w2s, est.w2, est.se2);
  reduce(w3s, est.w3, est.se3);
  reduce(w4s, est.w4, est.se4);
  return est;
}

void save_ensemble(const MeasurementEnsemble& ens, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_ensemble: cannot open " + path);
  out.write("MMVE", 4);
  write_pod<std::uint32_t>(out, 1);  // layout version
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ens.setting));
  write_pod<std::uint64_t>(out, ens.seed);
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(ens.N));
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(ens.M));
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(ens.params.prior.J));
  write_pod<double>(out, ens.params.prior.rho);
  write_pod<double>(out, ens.params.delta);
  write_pod<double>(out, ens.params.R);
  const bool shared = ens.setting == Setting::mmv2 || ens.setting == Setting::complex_real;
  const auto n_stored = static_cast<std::uint64_t>(shared ? 1 : ens.matrices.size());
  write_pod<std::uint64_t>(out, n_stored);
  auto write_mat = [&](const Eigen::MatrixXd& m) {
    write_bytes(out, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  };
  write_mat(ens.signal);
  for (std::uint64_t i = 0; i < n_stored; ++i) write_mat(*ens.matrices[i]);
  write_mat(ens.noise);
  write_mat(ens.measurements);
  if (!out) throw std::runtime_error("save_ensemble: write failed for " + path);
}

MeasurementEnsemble load_ensemble(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_ensemble: cannot open " + path);
  char magic[4];
  read_bytes(in, magic, 4);
  if (std::memcmp(magic, "MMVE", 4) != 0)
    throw std::runtime_error("load_ensemble: bad magic in " + path);
  if (read_pod<std::uint32_t>(in) != 1)
    throw std::runtime_error("load_ensemble: unsupported layout version in " + path);
  MeasurementEnsemble ens;
  ens.setting = static_cast<Setting>(read_pod<std::uint32_t>(in));
  ens.seed = read_pod<std::uint64_t>(in);
  ens.N = static_cast<Eigen::Index>(read_pod<std::uint64_t>(in));
  ens.M = static_cast<Eigen::Index>(read_pod<std::uint64_t>(in));
  const auto J = static_cast<int>(read_pod<std::uint64_t>(in));
  ens.params.prior.J = J;
  ens.params.prior.rho = read_pod<double>(in);
  ens.params.delta = read_pod<double>(in);
  ens.params.R = read_pod<double>(in);
  const auto n_stored = read_pod<std::uint64_t>(in);
  auto read_mat = [&](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    read_bytes(in, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    return m;
  };
  ens.signal = read_mat(ens.N, J);
  for (std::uint64_t i = 0; i < n_stored; ++i)
    ens.matrices.push_back(std::make_shared<Eigen::MatrixXd>(read_mat(ens.M, ens.N)));
  if (ens.setting == Setting::mmv2 || ens.setting == Setting::complex_real)
    ens.matrices.assign(static_cast<std::size_t>(J), ens.matrices[0]);
  ens.noise = read_mat(ens.M, J);
  ens.measurements = read_mat(ens.M, J);
  return ens;
}

}  // namespace mmv
