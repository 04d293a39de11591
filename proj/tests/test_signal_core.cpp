#include <doctest.h>

#include <thread>

#include "ktnext/error.hpp"
#include "ktnext/signal_core.hpp"
#include "oracles.hpp"

using namespace ktnext;

namespace {

const Axis kAxes[] = {Axis::T, Axis::Y, Axis::X};

ComplexVolume along(Axis axis, std::size_t n) {
  return axis == Axis::T ? ComplexVolume(n, 1, 1) : axis == Axis::Y ? ComplexVolume(1, n, 1) : ComplexVolume(1, 1, n);
}

}  // namespace

TEST_SUITE("signal-core") {

TEST_CASE("zero volume transforms to zero") {
  ComplexVolume v(4, 4, 4);
  for (Axis a : kAxes) CHECK(energy(fft1c(v, a)) == 0.0);
}

TEST_CASE("centered impulse maps to a flat 1/sqrt(N) line and back") {
  for (Axis a : kAxes) {
    ComplexVolume v = along(a, 8);
    v.data()[4] = 1.0;  // index floor(8/2)
    const ComplexVolume f = fft1c(v, a);
    for (const auto& z : f.data()) {
      CHECK(z.real() == doctest::Approx(1.0 / std::sqrt(8.0)).epsilon(1e-14));
      CHECK(std::abs(z.imag()) < 1e-15);
    }
    const ComplexVolume back = ifft1c(f, a);
    for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(back.data()[i] - cplx(i == 4 ? 1.0 : 0.0)) < 1e-14);
  }
}

TEST_CASE("odd lengths use index floor(N/2) as zero frequency") {
  ComplexVolume v(1, 1, 7);
  for (auto& z : v.data()) z = 1.0;
  const ComplexVolume f = fft1c(v, Axis::X);
  for (std::size_t x = 0; x < 7; ++x) CHECK(std::abs(f(0, 0, x)) == doctest::Approx(x == 3 ? std::sqrt(7.0) : 0.0));
}

TEST_CASE("fft1c matches the brute-force DFT on a random 4x4x4 volume") {
  std::mt19937_64 rng(11);
  const ComplexVolume v = oracle::random_volume(rng, 4, 4, 4);
  for (Axis a : kAxes) {
    CHECK(oracle::rel_err(fft1c(v, a), oracle::dft_axis(v, a)) < 1e-10);
    CHECK(oracle::rel_err(ifft1c(v, a), oracle::dft_axis(v, a, true)) < 1e-10);
  }
}

TEST_CASE("inverse pair, Parseval and linearity on random shapes") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<std::size_t> dim(1, 9);
  for (int trial = 0; trial < 50; ++trial) {
    const ComplexVolume a = oracle::random_volume(rng, dim(rng), dim(rng), dim(rng));
    ComplexVolume b = oracle::random_volume(rng, a.t_frames(), a.rows(), a.cols());
    for (Axis ax : kAxes) {
      const ComplexVolume f = fft1c(a, ax);
      CHECK(oracle::rel_err(ifft1c(f, ax), a) < 1e-10);
      CHECK(std::abs(energy(f) - energy(a)) <= 1e-10 * energy(a));
      const cplx alpha(0.3, -1.2), beta(-2.0, 0.5);
      ComplexVolume mix = a;
      for (std::size_t i = 0; i < mix.size(); ++i) mix.data()[i] = alpha * a.data()[i] + beta * b.data()[i];
      const ComplexVolume fb = fft1c(b, ax), fm = fft1c(mix, ax);
      ComplexVolume expect = fm;
      for (std::size_t i = 0; i < expect.size(); ++i) expect.data()[i] = alpha * f.data()[i] + beta * fb.data()[i];
      CHECK(oracle::rel_err(fm, expect) < 1e-10);
    }
  }
}

TEST_CASE("adjoint identity <fft a, b> = <a, ifft b>") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexVolume a = oracle::random_volume(rng, 3, 5, 6);
    const ComplexVolume b = oracle::random_volume(rng, 3, 5, 6);
    for (Axis ax : kAxes) {
      // inner product by hand, not via the library helper
      cplx lhs = 0.0, rhs = 0.0;
      const ComplexVolume fa = fft1c(a, ax), ib = ifft1c(b, ax);
      for (std::size_t i = 0; i < a.size(); ++i) {
        lhs += std::conj(fa.data()[i]) * b.data()[i];
        rhs += std::conj(a.data()[i]) * ib.data()[i];
      }
      CHECK(std::abs(lhs - rhs) < 1e-10 * (1.0 + std::abs(lhs)));
      CHECK(std::abs(inner(fa, b) - lhs) < 1e-12 * (1.0 + std::abs(lhs)));
    }
  }
}

TEST_CASE("fft2c: Parseval, flat spectrum of a delta, 2D oracle, domain tags") {
  std::mt19937_64 rng(14);
  const ComplexVolume v = oracle::random_volume(rng, 2, 8, 8);
  const ComplexVolume k = fft2c(v);
  CHECK(k.domain() == Domain::KSpace);
  CHECK(std::abs(energy(k) - energy(v)) <= 1e-10 * energy(v));
  CHECK(oracle::rel_err(k, oracle::dft2(v)) < 1e-10);
  CHECK(oracle::rel_err(ifft2c(k), v) < 1e-10);
  CHECK(ifft2c(k).domain() == Domain::Image);

  ComplexVolume d(1, 8, 8);
  d(0, 4, 4) = 1.0;
  const ComplexVolume flat = fft2c(d);
  for (const auto& z : flat.data()) CHECK(std::abs(z - cplx(1.0 / 8.0)) < 1e-15);

  try {
    (void)fft2c(k);
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DomainMismatch);
  }
  CHECK_THROWS_AS((void)ifft2c(v), Error);
}

TEST_CASE("fft_t: static sequence is DC-only, cosine gives two symmetric peaks") {
  ComplexVolume s(8, 3, 3);
  std::mt19937_64 rng(15);
  const ComplexVolume frame = oracle::random_volume(rng, 1, 3, 3);
  for (std::size_t t = 0; t < 8; ++t)
    for (std::size_t i = 0; i < 9; ++i) s.data()[t * 9 + i] = frame.data()[i];
  const ComplexVolume f = fft_t(s);
  CHECK(f.domain() == Domain::XF);
  for (std::size_t t = 0; t < 8; ++t)
    for (std::size_t i = 0; i < 9; ++i)
      if (t != 4) CHECK(std::abs(f.data()[t * 9 + i]) < 1e-14);

  ComplexVolume c(8, 1, 1);
  for (std::size_t t = 0; t < 8; ++t) c(t, 0, 0) = std::cos(2.0 * std::numbers::pi * 2.0 * double(t) / 8.0);
  const ComplexVolume cf = fft_t(c);
  for (std::size_t k = 0; k < 8; ++k) {
    const double expect = (k == 2 || k == 6) ? std::sqrt(8.0) / 2.0 : 0.0;
    CHECK(std::abs(cf(k, 0, 0)) == doctest::Approx(expect).epsilon(1e-12));
  }

  const ComplexVolume r = oracle::random_volume(rng, 7, 2, 3);
  CHECK(oracle::rel_err(fft_t(r), oracle::dft_axis(r, Axis::T)) < 1e-10);
  CHECK(oracle::rel_err(ifft_t(fft_t(r)), r) < 1e-10);
}

TEST_CASE("energy") {
  CHECK(energy(ComplexVolume(2, 2, 2)) == 0.0);
  ComplexVolume v(2, 2, 2);
  v(1, 1, 0) = 1.0;
  CHECK(energy(v) == 1.0);
  std::mt19937_64 rng(16);
  const ComplexVolume r = oracle::random_volume(rng, 3, 4, 5);
  double naive = 0.0;
  for (const auto& z : r.data()) naive += z.real() * z.real() + z.imag() * z.imag();
  CHECK(energy(r) == doctest::Approx(naive).epsilon(1e-14));
}

TEST_CASE("constructor rejects empty dimensions and non-finite data") {
  CHECK_THROWS_AS(ComplexVolume(0, 4, 4), Error);
  std::vector<cplx> bad(4, cplx(0.0));
  bad[2] = cplx(std::nan(""), 0.0);
  CHECK_THROWS_AS(ComplexVolume(1, 2, 2, Domain::Image, bad), Error);
  CHECK_THROWS_AS(ComplexVolume(1, 2, 2, Domain::Image, std::vector<cplx>(3)), Error);
}

TEST_CASE("transforms are safe to call from several threads") {
  std::mt19937_64 rng(17);
  const ComplexVolume v = oracle::random_volume(rng, 4, 6, 5);
  const ComplexVolume expect = fft2c(v);
  std::vector<std::thread> pool;
  std::vector<double> errs(4, 1.0);
  for (int i = 0; i < 4; ++i)
    pool.emplace_back([&, i] {
      double worst = 0.0;
      for (int r = 0; r < 50; ++r) worst = std::max(worst, max_abs_diff(fft2c(v), expect));
      errs[i] = worst;
    });
  for (auto& t : pool) t.join();
  for (double e : errs) CHECK(e == 0.0);
}

}
