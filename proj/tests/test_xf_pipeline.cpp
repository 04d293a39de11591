#include <doctest.h>

#include "ktnext/error.hpp"
#include "ktnext/xf_pipeline.hpp"
#include "oracles.hpp"

using namespace ktnext;


TEST_SUITE("xf-pipeline") {

TEST_CASE("temporal average forced cases") {
  SamplingMask mask(8, 2);
  mask.set(1, 0, true);
  mask.set(5, 0, true);
  ComplexVolume k(8, 1, 2, Domain::KSpace);
  k(1, 0, 0) = 1.0;
  k(5, 0, 0) = 3.0;
  const ComplexVolume avg = kspace_temporal_average(KtMeasurement(k, mask));
  CHECK(avg.t_frames() == 1);
  CHECK(avg(0, 0, 0) == cplx(2.0));
  CHECK(avg(0, 0, 1) == cplx(0.0));

  std::mt19937_64 rng(51);
  const ComplexVolume frame = oracle::random_volume(rng, 1, 4, 6, Domain::KSpace);
  ComplexVolume stat(5, 4, 6, Domain::KSpace);
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t i = 0; i < 24; ++i) stat.data()[t * 24 + i] = frame.data()[i];
  const ComplexVolume s = kspace_temporal_average(KtMeasurement(stat, SamplingMask::full(5, 6)));
  CHECK(oracle::max_diff(s, frame) < 1e-15);
}

TEST_CASE("temporal average equals the literal two-pass computation") {
  std::mt19937_64 rng(52);
  std::uniform_int_distribution<std::size_t> dim(1, 8);
  for (int trial = 0; trial < 50; ++trial) {
    const SamplingMask mask = oracle::random_mask(rng, dim(rng), dim(rng), 0.4);
    const KtMeasurement m = oracle::random_measurement(rng, mask, dim(rng));
    CHECK(oracle::max_diff(kspace_temporal_average(m), oracle::two_pass_average(m)) == 0.0);
  }
}

TEST_CASE("dc baseline: full, empty and lattice masks") {
  std::mt19937_64 rng(53);
  const KtMeasurement full = oracle::random_measurement(rng, SamplingMask::full(4, 5), 3);
  const ComplexVolume avg = kspace_temporal_average(full);
  CHECK(oracle::max_diff(dc_baseline_kspace(avg, full), full.kspace()) == 0.0);

  const KtMeasurement empty(ComplexVolume(4, 3, 5, Domain::KSpace), SamplingMask(4, 5));
  const ComplexVolume some = oracle::random_volume(rng, 1, 3, 5, Domain::KSpace);
  const ComplexVolume b = dc_baseline_kspace(some, empty);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t i = 0; i < 15; ++i) CHECK(b.data()[t * 15 + i] == some.data()[i]);

  AcquisitionSpec spec;
  spec.accel = 3;
  spec.n_center = 2;
  const SamplingMask lattice = make_shear_mask(spec, 6, 10);
  const KtMeasurement m = oracle::random_measurement(rng, lattice, 4);
  const ComplexVolume a = kspace_temporal_average(m);
  const ComplexVolume base = dc_baseline_kspace(a, m);
  bool ok = true;
  for (long t = 0; t < 6; ++t)
    for (std::size_t y = 0; y < 4; ++y)
      for (long x = 0; x < 10; ++x)
        ok = ok && base(t, y, x) == (oracle::shear_member(t, x, 3, 1, 10, 2) ? m.kspace()(t, y, x) : a(0, y, x));
  CHECK(ok);
  CHECK_THROWS_AS((void)dc_baseline_kspace(ComplexVolume(1, 3, 10, Domain::KSpace), m), Error);
}

TEST_CASE("data consistency") {
  std::mt19937_64 rng(54);
  const SamplingMask mask = oracle::random_mask(rng, 4, 6, 0.5);
  const KtMeasurement m = oracle::random_measurement(rng, mask, 3);
  const ComplexVolume pred = oracle::random_volume(rng, 4, 3, 6, Domain::KSpace);
  const ComplexVolume hard = data_consistency(pred, m);
  const ComplexVolume mean = data_consistency(pred, m, 1.0);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t y = 0; y < 3; ++y)
      for (std::size_t x = 0; x < 6; ++x) {
        if (mask.sampled(t, x)) {
          CHECK(hard(t, y, x) == m.kspace()(t, y, x));
          CHECK(std::abs(mean(t, y, x) - 0.5 * (pred(t, y, x) + m.kspace()(t, y, x))) < 1e-15);
        } else {
          CHECK(hard(t, y, x) == pred(t, y, x));
          CHECK(mean(t, y, x) == pred(t, y, x));
        }
      }
  CHECK(oracle::max_diff(data_consistency(hard, m), hard) == 0.0);
  CHECK(oracle::max_diff(data_consistency(pred, m, 0.0), pred) == 0.0);
  CHECK_THROWS_AS((void)data_consistency(pred, m, -1.0), Error);

  // adjoint: <DC_lin(a), b> = <a, DC_adj(b)> for the linear part
  const KtMeasurement zero(ComplexVolume(4, 3, 6, Domain::KSpace), mask);
  const ComplexVolume g = oracle::random_volume(rng, 4, 3, 6, Domain::KSpace);
  for (double lam : {0.0, 0.7, kHardDc}) {
    const cplx lhs = inner(data_consistency(pred, zero, lam), g);
    const cplx rhs = inner(pred, data_consistency_adjoint(g, mask, lam));
    CHECK(std::abs(lhs - rhs) < 1e-12 * (1.0 + std::abs(lhs)));
  }
}

TEST_CASE("xf transform: static full input, decomposition identity, baseline support") {
  std::mt19937_64 rng(55);
  const ComplexVolume frame = oracle::random_volume(rng, 1, 4, 6);
  ComplexVolume stat(6, 4, 6);
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t i = 0; i < 24; ++i) stat.data()[t * 24 + i] = frame.data()[i];
  const KtMeasurement full = undersample(stat, SamplingMask::full(6, 6));
  const XfPair p = xf_transform(stat, full);
  CHECK(p.residual.domain() == Domain::XF);
  CHECK(p.dc_baseline.domain() == Domain::XF);
  CHECK(energy(p.residual) < 1e-24);
  for (std::size_t f = 0; f < 6; ++f)
    for (std::size_t i = 0; i < 24; ++i)
      if (f != 3) CHECK(std::abs(p.dc_baseline.data()[f * 24 + i]) < 1e-12);

  AcquisitionSpec spec;
  spec.accel = 4;
  const SamplingMask mask = make_shear_mask(spec, 8, 12);
  const ComplexVolume img = oracle::random_volume(rng, 8, 5, 12);
  const KtMeasurement m = undersample(oracle::random_volume(rng, 8, 5, 12), mask);
  const XfPair q = xf_transform(img, m);
  ComplexVolume base_img = ifft2c(broadcast_frames(kspace_temporal_average(m), 8));
  const ComplexVolume base_xf = fft_t(base_img);
  ComplexVolume sum = q.residual;
  for (std::size_t i = 0; i < sum.size(); ++i) sum.data()[i] += base_xf.data()[i];
  CHECK(oracle::rel_err(sum, fft_t(img)) < 1e-10);
  const std::size_t plane = 5 * 12;
  for (std::size_t f = 0; f < 8; ++f)
    for (std::size_t i = 0; i < plane; ++i)
      if (f != 4) CHECK(std::abs(base_xf.data()[f * plane + i]) < 1e-10);

  CHECK_THROWS_AS((void)xf_transform(fft2c(img), m), Error);
}

TEST_CASE("xf transform of a lattice-masked point phantom against hand composition") {
  AcquisitionSpec spec;
  spec.accel = 4;
  spec.n_center = 2;
  const std::size_t T = 4, Y = 3, X = 8;
  const SamplingMask mask = make_shear_mask(spec, T, X);
  ComplexVolume gt(T, Y, X);
  for (std::size_t t = 0; t < T; ++t) gt(t, 1, 2 + t) = cplx(1.0, 0.5);
  const ComplexVolume kfull = oracle::dft2(gt);
  ComplexVolume kacq(T, Y, X, Domain::KSpace);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t y = 0; y < Y; ++y)
      for (std::size_t x = 0; x < X; ++x) kacq(t, y, x) = mask.sampled(t, x) ? kfull(t, y, x) : cplx(0.0);
  const KtMeasurement m(kacq, mask);
  const ComplexVolume sigma = oracle::dft2(kacq, true);  // zero-filled

  const ComplexVolume avg = oracle::two_pass_average(m);
  ComplexVolume res_k = oracle::dft2(sigma);
  ComplexVolume base_k(T, Y, X, Domain::KSpace);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t y = 0; y < Y; ++y)
      for (std::size_t x = 0; x < X; ++x) {
        res_k(t, y, x) -= avg(0, y, x);
        base_k(t, y, x) = mask.sampled(t, x) ? kacq(t, y, x) : avg(0, y, x);
      }
  const ComplexVolume res = oracle::dft_axis(oracle::dft2(res_k, true), Axis::T);
  const ComplexVolume base = oracle::dft_axis(oracle::dft2(base_k, true), Axis::T);

  ComplexVolume sigma_img = sigma;
  sigma_img.set_domain(Domain::Image);
  const XfPair p = xf_transform(sigma_img, m);
  CHECK(oracle::max_diff(p.residual, res) < 1e-12);
  CHECK(oracle::max_diff(p.dc_baseline, base) < 1e-12);
}

TEST_CASE("xf_to_image inverts the temporal transform") {
  std::mt19937_64 rng(56);
  const ComplexVolume img = oracle::random_volume(rng, 5, 3, 4);
  CHECK(oracle::rel_err(xf_to_image(fft_t(img)), img) < 1e-10);
  CHECK(energy(xf_to_image(ComplexVolume(5, 3, 4, Domain::XF))) == 0.0);
  const ComplexVolume rho = oracle::random_volume(rng, 5, 3, 4, Domain::XF);
  CHECK(oracle::rel_err(xf_to_image(rho), oracle::dft_axis(rho, Axis::T, true)) < 1e-10);
  CHECK(xf_to_image(rho).domain() == Domain::Image);
  CHECK_THROWS_AS((void)xf_to_image(img), Error);
}

}
