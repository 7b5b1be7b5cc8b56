#include <cmath>
#include <random>

#include "doctest.h"
#include "nsbl/checkpoint.hpp"
#include "nsbl/fft.hpp"
#include "nsbl/norms.hpp"
#include "nsbl/ns_solver.hpp"
#include "nsbl/spectral_ops.hpp"

using namespace nsbl;

namespace {

RealArray noise(const TorusGrid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  RealArray f(Eigen::Index(g.real_size()));
  for (auto& x : f) x = d(rng);
  return f;
}

SpectralVelocity random_velocity(const TorusGrid& g, std::uint64_t seed) {
  PhysicalVelocity u{g, {noise(g, seed), noise(g, seed + 1), noise(g, seed + 2)}};
  return from_physical(u);
}

SpectralVelocity random_solenoidal(const TorusGrid& g, std::uint64_t seed) {
  InitialSpec s;
  s.kind = InitialKind::RandomSpectrum;
  s.seed = seed;
  return make_initial(s, g);
}

double inner(const SpectralVelocity& a, const SpectralVelocity& b) {
  double s = 0;
  for (int i = 0; i < 3; ++i)
    for_each_mode(a.grid, [&](std::size_t m, int, int, int kz) {
      s += a.grid.weight(kz) * std::real(a.c[i][Eigen::Index(m)] * std::conj(b.c[i][Eigen::Index(m)]));
    });
  return s;
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(TorusGrid(6), BadSpec);
  CHECK_THROWS_AS(TorusGrid(9), BadSpec);
  CHECK_THROWS_AS(TorusGrid(16, 0.0), BadSpec);
  CHECK_NOTHROW(TorusGrid(48));
  TorusGrid g(32);
  CHECK(g.keep(10, -10, 10));
  CHECK_FALSE(g.keep(11, 0, 0));
}

TEST_CASE("constant and cosine transforms") {
  TorusGrid g(32);
  RealArray c = RealArray::Constant(Eigen::Index(g.real_size()), 2.5);
  SpectralArray s = transform_forward(c, g);
  CHECK(std::abs(s[0] - 2.5) < 1e-14);
  CHECK(s.abs().tail(s.size() - 1).maxCoeff() < 1e-14);

  RealArray f(Eigen::Index(g.real_size()));
  for_each_point(g, [&](std::size_t i, double x, double, double) { f[Eigen::Index(i)] = std::cos(x); });
  s = transform_forward(f, g);
  // (kx = 1) and (kx = -1) in the half layout
  const Eigen::Index plus = Eigen::Index(1) * g.n * g.nh(), minus = Eigen::Index(g.n - 1) * g.n * g.nh();
  CHECK(std::abs(s[plus] - 0.5) < 1e-14);
  CHECK(std::abs(s[minus] - 0.5) < 1e-14);
  s[plus] = s[minus] = 0;
  CHECK(s.abs().maxCoeff() < 1e-14);

  CHECK_THROWS_AS(transform_forward(RealArray::Zero(10), g), ShapeMismatch);
}

TEST_CASE("round trip and Parseval on all grid sizes") {
  for (int n : {8, 16, 24, 32, 48, 64}) {
    TorusGrid g(n);
    RealArray f = noise(g, 100 + n);
    SpectralArray s = transform_forward(f, g);
    RealArray back = transform_inverse(s, g);
    CHECK((back - f).abs().maxCoeff() / f.abs().maxCoeff() <= 1e-12);

    // mean square equals the full-spectrum sum of squares
    const double spatial = f.square().mean();
    const double spectral = std::pow(coefficient_norm(s, g), 2);
    CHECK(std::abs(spatial - spectral) <= 1e-12 * spatial);
    // and the volume-weighted L2 norm agrees with V * sum |c|^2
    const double l2 = lebesgue_norm(f, 2.0, g.cell_volume());
    CHECK(std::abs(l2 * l2 - g.volume() * spectral) <= 1e-10 * l2 * l2);
  }
}

TEST_CASE("Leray projection") {
  TorusGrid g(16);
  SpectralVelocity v = random_velocity(g, 1);
  SpectralVelocity p1 = leray_project(v);
  SpectralVelocity p2 = leray_project(p1);
  CHECK(divergence_residual(p1) <= 1e-12);
  for (int i = 0; i < 3; ++i) CHECK((p1.c[i] - p2.c[i]).abs().maxCoeff() <= 1e-14);

  // self-adjoint
  SpectralVelocity w = random_velocity(g, 7);
  CHECK(std::abs(inner(leray_project(v), w) - inner(v, leray_project(w))) <= 1e-12 * std::abs(inner(v, w)) + 1e-14);

  // gradients are annihilated
  SpectralArray phi = transform_forward(noise(g, 3), g);
  SpectralVelocity grad(g);
  for_each_mode(g, [&](std::size_t m, int kx, int ky, int kz) {
    const Eigen::Index j = Eigen::Index(m);
    if (g.is_nyquist(kx, ky, kz)) return;
    grad.c[0][j] = Complex(0, kx) * phi[j];
    grad.c[1][j] = Complex(0, ky) * phi[j];
    grad.c[2][j] = Complex(0, kz) * phi[j];
  });
  SpectralVelocity pg = leray_project(grad);
  CHECK(max_abs_coefficient(pg) <= 1e-14 * max_abs_coefficient(grad));

  // already solenoidal fields are unchanged
  SpectralVelocity s = random_solenoidal(g, 5);
  SpectralVelocity ps = leray_project(s);
  for (int i = 0; i < 3; ++i) CHECK((ps.c[i] - s.c[i]).abs().maxCoeff() <= 1e-15);
}

TEST_CASE("Beltrami pressure closed form") {
  TorusGrid g(32);
  InitialSpec spec;
  SpectralVelocity v = make_initial(spec, g);
  ScalarField p = cz_pressure(v, 1.0);
  RealArray e = 0.5 * to_physical(v).magnitude_squared();
  RealArray expected = -(e - e.mean());
  CHECK((p.values - expected).abs().maxCoeff() <= 1e-8);
  // zero mean mode
  CHECK(std::abs(transform_forward(p.values, g)[0]) < 1e-15);

  ScalarField zero = cz_pressure(SpectralVelocity(g), 1.0);
  CHECK(zero.values.abs().maxCoeff() == 0);

  CHECK_THROWS_AS(cz_pressure(random_velocity(g, 4), 1.0), NotDivergenceFree);
}

TEST_CASE("pressure scales with M^2 and with the square of the field") {
  TorusGrid g(16);
  SpectralVelocity v = random_solenoidal(g, 11);
  RealArray p1 = cz_pressure(v, 1.0).values;
  RealArray p3 = cz_pressure(v, 3.0).values;
  CHECK((p3 - 9 * p1).abs().maxCoeff() <= 1e-12 * p3.abs().maxCoeff());
  SpectralVelocity w = v;
  w *= 2.0;
  RealArray pw = cz_pressure(w, 1.0).values;
  CHECK((pw - 4 * p1).abs().maxCoeff() <= 1e-12 * pw.abs().maxCoeff());
}

TEST_CASE("norms") {
  TorusGrid g(8, 3.0);
  RealArray c = RealArray::Constant(Eigen::Index(g.real_size()), 2.0);
  CHECK(lebesgue_norm(c, 3.0, g.cell_volume()) == doctest::Approx(2.0 * std::cbrt(27.0)));
  RealArray f = noise(g, 9);
  CHECK(lebesgue_norm(f, kInfinity, g.cell_volume()) == f.abs().maxCoeff());
  CHECK_THROWS_AS(lebesgue_norm(f, 0.5, g.cell_volume()), BadExponent);

  // interpolation between 2 lambda and infinity, lambda = 5/3, ell = 4
  const double lz = 5.0 / 3.0, ell = 4.0, dv = g.cell_volume();
  const double lhs = lebesgue_norm(f, 2 * ell, dv);
  const double rhs = std::pow(lebesgue_norm(f, kInfinity, dv), 1 - lz / ell) * std::pow(lebesgue_norm(f, 2 * lz, dv), lz / ell);
  CHECK(lhs <= rhs);

  // huge exponents stay finite
  RealArray big = RealArray::Constant(Eigen::Index(g.real_size()), 1e3);
  CHECK(std::isfinite(lebesgue_norm(big, 500.0, dv)));
}

TEST_CASE("space-time norms and level sets") {
  TorusGrid g(8);
  const std::vector<double> times = {0.0, 0.25, 0.5, 1.0};
  auto w = trapezoid_weights(times);
  CHECK(w[0] + w[1] + w[2] + w[3] == doctest::Approx(1.0));
  std::vector<RealArray> ones(times.size(), RealArray::Ones(Eigen::Index(g.real_size())));
  const double dv = g.cell_volume();
  CHECK(level_set_measure(ones, w, 2.0, dv) == 0);
  CHECK(level_set_measure(ones, w, 0.5, dv) == doctest::Approx(g.volume() * 1.0));
  CHECK(lebesgue_norm(ones, w, 2.0, dv) == doctest::Approx(std::sqrt(g.volume())));

  // half of the cells at 3, half at 1
  std::vector<RealArray> halves(times.size(), RealArray::Ones(Eigen::Index(g.real_size())));
  for (auto& h : halves) h.head(h.size() / 2) = 3.0;
  CHECK(level_set_measure(halves, w, 2.0, dv) == doctest::Approx(0.5 * g.volume()));

  // nonincreasing in k
  std::vector<RealArray> rnd = {noise(g, 1), noise(g, 2), noise(g, 3), noise(g, 4)};
  double prev = kInfinity;
  for (double k = -3; k <= 3; k += 0.25) {
    const double m = level_set_measure(rnd, w, k, dv);
    CHECK(m <= prev);
    prev = m;
  }
  // single snapshot: zero duration
  CHECK(trapezoid_weights({0.0})[0] == 0);
}

TEST_CASE("checkpoint round trip and corruption") {
  TorusGrid g(16, 5.0);
  SpectralVelocity v = random_solenoidal(g, 21);
  v.t = 0.125;
  const std::string bytes = encode_checkpoint(v);
  CHECK(bytes.substr(0, 5) == "NSBL1");
  SpectralVelocity back = decode_checkpoint(bytes);
  CHECK(back.grid == g);
  CHECK(back.t == 0.125);
  for (int i = 0; i < 3; ++i) CHECK((back.c[i] == v.c[i]).all());
  CHECK(encode_checkpoint(back) == bytes);

  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 1)), CorruptCheckpoint);
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad), CorruptCheckpoint);

  auto dir = std::filesystem::temp_directory_path() / "nsbl_ckpt_test";
  std::filesystem::create_directories(dir);
  const std::string hash = write_checkpoint(dir / "a.nsbl", v);
  CHECK(hash == sha256_hex(bytes));
  CHECK(hash.size() == 64);
  CHECK_NOTHROW(read_checkpoint(dir / "a.nsbl", hash));
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 1;
  write_file(dir / "a.nsbl", flipped);
  CHECK_THROWS_AS(read_checkpoint(dir / "a.nsbl", hash), CorruptCheckpoint);
  CHECK_THROWS_AS(read_checkpoint(dir / "missing.nsbl"), IoError);
  std::filesystem::remove_all(dir);

  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
