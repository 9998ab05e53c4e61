// SPDX-License-Identifier: Apache-2.0

#include "riscap/correlation.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "riscap/linalg.hpp"

namespace riscap {

SteeringVector steering_vector(const std::vector<Vec3>& positions, const Vec3& q) {
  if (positions.empty()) throw config_error("steering_vector: empty position list");
  const auto ns = static_cast<Eigen::Index>(positions.size());
  SteeringVector s;
  s.q = q;
  s.v.resize(ns);
  const double norm = 1.0 / std::sqrt(static_cast<double>(ns));
  for (Eigen::Index n = 0; n < ns; ++n) {
    const double phase = q.dot(positions[static_cast<size_t>(n)]);
    s.v[n] = norm * cxd(std::cos(phase), std::sin(phase));
  }
  return s;
}

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

// Orthonormal frame (e1, e2) perpendicular to unit vector d0.
void tangent_frame(const Vec3& d0, Vec3& e1, Vec3& e2) {
  const Vec3 ref = (std::abs(d0.z()) < 0.9) ? Vec3::UnitZ() : Vec3::UnitX();
  e1 = ref.cross(d0).normalized();
  e2 = d0.cross(e1);
}

/// Quadrature evaluation at a given order. Directions are parametrized in
/// rotated spherical coordinates with the mean direction as pole, so the
/// weight depends only on the polar angle and the small-sigma bump is
/// resolved without pole artifacts. S = V diag(w) V^H with sum(w) = 1,
/// which keeps the result Hermitian PSD with a unit diagonal.
MatC quadrature_pass(const std::vector<Vec3>& positions, const Vec3& d0, double k0,
                     double sigma, double t_min, int n_polar, int n_azimuth) {
  Vec3 e1, e2;
  tangent_frame(d0, e1, e2);

  std::vector<double> gx, gw;
  gauss_legendre(n_polar, gx, gw);

  const auto ns = static_cast<Eigen::Index>(positions.size());
  const int n_nodes = n_polar * n_azimuth;
  MatC v(ns, n_nodes);
  VecD wts(n_nodes);

  const double half = 0.5 * (1.0 - t_min);
  const double mid = 0.5 * (1.0 + t_min);
  const double inv_s2 = 1.0 / (sigma * sigma);
  int col = 0;
  for (int ip = 0; ip < n_polar; ++ip) {
    const double t = mid + half * gx[ip];  // cos(polar angle), in [t_min, 1]
    const double st = std::sqrt(std::max(0.0, 1.0 - t * t));
    const double weight = gw[ip] * half * std::exp((t - 1.0) * inv_s2);
    for (int ia = 0; ia < n_azimuth; ++ia, ++col) {
      const double phi = 2.0 * pi * ia / n_azimuth;
      const Vec3 d = t * d0 + st * (std::cos(phi) * e1 + std::sin(phi) * e2);
      wts[col] = weight;  // azimuth weight constant, normalized away below
      for (Eigen::Index a = 0; a < ns; ++a) {
        const double phase = k0 * d.dot(positions[static_cast<size_t>(a)]);
        v(a, col) = cxd(std::cos(phase), std::sin(phase));
      }
    }
  }
  wts /= wts.sum();
  return (v * wts.asDiagonal()) * v.adjoint();
}

}  // namespace

MatC correlation_matrix(const std::vector<Vec3>& positions, const Vec3& mean_direction,
                        double sigma_rad, double wavelength_m) {
  if (positions.empty()) throw config_error("correlation_matrix: empty position list");
  if (sigma_rad < 0.0) throw config_error("correlation_matrix: sigma must be >= 0");
  if (!(wavelength_m > 0.0)) throw config_error("correlation_matrix: wavelength must be > 0");
  const double k0 = 2.0 * pi / wavelength_m;
  if (std::abs(mean_direction.norm() - k0) > 1e-9 * k0)
    throw config_error("correlation_matrix: |mean_direction| must equal 2 pi / lambda");

  const auto ns = static_cast<Eigen::Index>(positions.size());
  const Vec3 d0 = mean_direction / k0;

  if (sigma_rad == 0.0) {
    // Point-mass weight: S_ab = exp(i s0.(x_a - x_b)), rank one.
    const SteeringVector u = steering_vector(positions, mean_direction);
    return static_cast<double>(ns) * (u.v * u.v.adjoint());
  }

  // Window the polar integral where the weight is above ~1e-18 of its peak.
  const double t_min = std::max(-1.0, 1.0 - 41.5 * sigma_rad * sigma_rad);

  // Initial order sized to the phase span across the window.
  double aperture = 0.0;
  for (const Vec3& p : positions) aperture = std::max(aperture, p.norm());
  const double span = k0 * aperture * std::acos(std::max(-1.0, t_min)) + 8.0;
  int n_polar = std::min(256, std::max(16, static_cast<int>(span)));
  int n_azimuth = 2 * n_polar;

  MatC prev = quadrature_pass(positions, d0, k0, sigma_rad, t_min, n_polar, n_azimuth);
  for (int round = 0; round < 5; ++round) {
    n_polar *= 2;
    n_azimuth *= 2;
    MatC next = quadrature_pass(positions, d0, k0, sigma_rad, t_min, n_polar, n_azimuth);
    const double diff = (next - prev).cwiseAbs().maxCoeff();
    if (diff < 1e-8) return next;
    prev = std::move(next);
  }
  throw numerical_error("correlation_matrix: quadrature did not converge to 1e-8");
}

CorrMat CorrMat::make_identity(int n) {
  CorrMat c;
  c.mat = MatC::Identity(n, n);
  c.sqrt = c.mat;
  c.identity = true;
  return c;
}

CorrMat CorrMat::from_matrix(MatC m) {
  CorrMat c;
  c.sqrt = matrix_sqrt_hermitian(m);
  c.mat = std::move(m);
  return c;
}

CorrMat CorrMat::from_matrix_scaled(MatC m, double scale) {
  if (scale == 0.0) {
    CorrMat c;
    c.mat = MatC::Zero(m.rows(), m.cols());
    c.sqrt = c.mat;
    return c;
  }
  CorrMat c = from_matrix(std::move(m));
  c.mat *= scale;
  c.sqrt *= std::sqrt(scale);
  c.identity = false;
  return c;
}

namespace {

/// Uniform linear array along the x-axis; used for the optional angular
/// TX/RX-side modes.
std::vector<Vec3> line_array(int n, double spacing_m) {
  std::vector<Vec3> pos;
  pos.reserve(n);
  const double x0 = -0.5 * (n - 1) * spacing_m;
  for (int i = 0; i < n; ++i) pos.emplace_back(x0 + i * spacing_m, 0.0, 0.0);
  return pos;
}

CorrMat array_side_matrix(const ArraySpec& side, int n, double wavelength_m) {
  if (side.mode == CorrelationMode::identity) return CorrMat::make_identity(n);
  const double spacing = side.spacing_m > 0.0 ? side.spacing_m : 0.5 * wavelength_m;
  const Vec3 q = wavevector(side.angles.azimuth_rad, side.angles.elevation_rad, wavelength_m);
  return CorrMat::from_matrix(
      correlation_matrix(line_array(n, spacing), q, side.angles.spread_rad, wavelength_m));
}

}  // namespace

CorrelationSet build_correlation_set(const ScenarioConfig& c) {
  if (!c.validated) throw config_error("build_correlation_set: config not validated");
  CorrelationSet set;
  set.num_txs = c.num_txs;
  set.num_riss = c.num_riss;
  set.nt = c.nt;
  set.nr = c.nr;
  set.ns = c.ns;
  set.rho_d = c.direct_snr;

  const CorrMat rx = array_side_matrix(c.rx_side, c.nr, c.wavelength_m);
  const CorrMat tx = array_side_matrix(c.tx_side, c.nt, c.wavelength_m);

  for (int m = 0; m < c.num_txs; ++m) {
    // rho_d folded in here; rho_d = 0 yields identically zero direct links.
    set.r_d.push_back(CorrMat::from_matrix_scaled(rx.mat, c.direct_snr));
    set.t_d.push_back(tx);
  }
  for (int k = 0; k < c.num_riss; ++k) {
    set.r_k.push_back(rx);
    const RisSpec& r = c.riss[k];
    if (r.mode == CorrelationMode::identity) {
      set.s_r.push_back(CorrMat::make_identity(c.ns));
    } else {
      set.s_r.push_back(CorrMat::from_matrix(correlation_matrix(
          c.positions[k], c.q_out[k], r.outgoing.spread_rad, c.wavelength_m)));
    }
  }
  set.s_t.resize(static_cast<size_t>(c.num_txs) * c.num_riss);
  set.t_km.resize(static_cast<size_t>(c.num_txs) * c.num_riss);
  for (int m = 0; m < c.num_txs; ++m) {
    for (int k = 0; k < c.num_riss; ++k) {
      const int p = set.pair(k, m);
      set.t_km[p] = tx;
      if (c.riss[k].mode == CorrelationMode::identity) {
        set.s_t[p] = CorrMat::make_identity(c.ns);
      } else {
        set.s_t[p] = CorrMat::from_matrix(correlation_matrix(
            c.positions[k], c.q_in[k][m], c.incoming[k][m].spread_rad, c.wavelength_m));
      }
    }
  }
  return set;
}

// ---------------------------------------------------------------------------
// Binary container: magic, dims, then each matrix as row-major complex
// doubles (little-endian). Matrix order matches the struct field order.
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'R', 'I', 'S', 'C', 'O', 'R', 'R', '1'};

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_f64(std::ostream& out, double v) {
  static_assert(sizeof(double) == 8);
  uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

void write_matrix(std::ostream& out, const MatC& m) {
  write_u32(out, static_cast<uint32_t>(m.rows()));
  write_u32(out, static_cast<uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      write_f64(out, m(i, j).real());
      write_f64(out, m(i, j).imag());
    }
}

MatC read_matrix(std::istream& in) {
  const uint32_t rows = read_u32(in);
  const uint32_t cols = read_u32(in);
  MatC m(rows, cols);
  for (uint32_t i = 0; i < rows; ++i)
    for (uint32_t j = 0; j < cols; ++j) {
      const double re = read_f64(in);
      const double im = read_f64(in);
      m(i, j) = cxd(re, im);
    }
  if (!in) throw numerical_error("correlation container: truncated matrix data");
  return m;
}

}  // namespace

void save_correlation_set(const CorrelationSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot open for writing: " + path);
  out.write(kMagic, 8);
  write_u32(out, static_cast<uint32_t>(set.num_txs));
  write_u32(out, static_cast<uint32_t>(set.num_riss));
  write_u32(out, static_cast<uint32_t>(set.nt));
  write_u32(out, static_cast<uint32_t>(set.nr));
  write_u32(out, static_cast<uint32_t>(set.ns));
  write_f64(out, set.rho_d);
  for (const auto* fam : {&set.r_d, &set.t_d, &set.r_k, &set.s_r, &set.s_t, &set.t_km})
    for (const CorrMat& m : *fam) write_matrix(out, m.mat);
  if (!out) throw numerical_error("correlation container: write failed");
}

CorrelationSet load_correlation_set(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw config_error("correlation container: bad magic in " + path);
  CorrelationSet set;
  set.num_txs = static_cast<int>(read_u32(in));
  set.num_riss = static_cast<int>(read_u32(in));
  set.nt = static_cast<int>(read_u32(in));
  set.nr = static_cast<int>(read_u32(in));
  set.ns = static_cast<int>(read_u32(in));
  set.rho_d = read_f64(in);
  auto read_family = [&](std::vector<CorrMat>& fam, int count) {
    for (int i = 0; i < count; ++i) {
      MatC m = read_matrix(in);
      CorrMat c;
      const Eigen::Index n = m.rows();
      if (m == MatC::Identity(n, n)) {
        c = CorrMat::make_identity(static_cast<int>(n));
      } else if (m.cwiseAbs().maxCoeff() == 0.0) {
        c.mat = std::move(m);
        c.sqrt = MatC::Zero(n, n);
      } else {
        c = CorrMat::from_matrix(std::move(m));
      }
      fam.push_back(std::move(c));
    }
  };
  read_family(set.r_d, set.num_txs);
  read_family(set.t_d, set.num_txs);
  read_family(set.r_k, set.num_riss);
  read_family(set.s_r, set.num_riss);
  read_family(set.s_t, set.num_txs * set.num_riss);
  read_family(set.t_km, set.num_txs * set.num_riss);
  return set;
}

}  // namespace riscap
