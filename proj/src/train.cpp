#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>

#include "ktnext/error.hpp"
#include "ktnext/metrics.hpp"
#include "ktnext/model.hpp"
#include "ktnext/nn/adam.hpp"
#include "ktnext/nn/complex_ops.hpp"
#include "ktnext/nn/ops.hpp"

namespace ktnext {

namespace {

// Streams used by fit; separate so that toggling augmentation does not shift
// the sequence draws.
constexpr std::uint64_t kDrawStream = 0x6b74'6e65'7874'0001ULL;
constexpr std::uint64_t kAugmentStream = 0x6b74'6e65'7874'0002ULL;

}  // namespace

FitResult fit(const std::vector<ComplexVolume>& dataset, const KtNextConfig& cfg, const FitOptions& opts,
              std::optional<KtNextParams> initial) {
  if (dataset.empty()) throw Error(ErrorCode::InvalidArgument, "fit: empty dataset");
  if (opts.steps < 0 || opts.accumulate < 1) throw Error(ErrorCode::InvalidArgument, "fit: bad step counts");
  cfg.validate();
  opts.acquisition.validate();

  FitResult result{initial ? std::move(*initial) : init_params(cfg, opts.seed), {}};
  if (!result.params.store.same_layout(zero_params(cfg).store)) {
    throw Error(ErrorCode::DimensionMismatch, "fit: initial parameters do not match the configuration");
  }
  nn::AdamState adam = nn::AdamState::for_params(result.params.store);
  const nn::AdamConfig adam_cfg{opts.lr};
  std::mt19937_64 draw_rng(opts.seed ^ kDrawStream);
  std::mt19937_64 aug_rng(opts.seed ^ kAugmentStream);
  std::map<std::pair<std::size_t, std::size_t>, SamplingMask> masks;

  const auto mask_for = [&](const ComplexVolume& v) -> SamplingMask {
    if (opts.mask) {
      if (opts.mask->t_frames() != v.t_frames() || opts.mask->cols() != v.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "fit: mask does not match a training sequence");
      }
      return *opts.mask;
    }
    if (opts.random_shear_phase) {
      const int phase = static_cast<int>(draw_rng() % static_cast<std::uint64_t>(opts.acquisition.accel));
      return make_shear_mask(opts.acquisition, v.t_frames(), v.cols(), phase);
    }
    auto key = std::make_pair(v.t_frames(), v.cols());
    auto it = masks.find(key);
    if (it == masks.end()) it = masks.emplace(key, make_shear_mask(opts.acquisition, v.t_frames(), v.cols())).first;
    return it->second;
  };

  for (int step = 0; step < opts.steps; ++step) {
    nn::ParamStore grads = result.params.store.zeros_like();
    double step_loss = 0.0;
    double step_psnr = 0.0;
    for (int a = 0; a < opts.accumulate; ++a) {
      const std::size_t idx = dataset.size() == 1 ? 0 : static_cast<std::size_t>(draw_rng() % dataset.size());
      const ComplexVolume gt = opts.augment ? augment(dataset[idx], aug_rng) : dataset[idx];
      const KtMeasurement m = undersample(gt, mask_for(gt));

      nn::Graph g;
      graph::BoundParams bp(g, result.params.store, true);
      const graph::Forward f = graph::ktnext(m, bp, cfg);
      const nn::Var sigma_gt = g.constant(nn::to_tensor(gt));
      const nn::Var rho_gt = g.constant(nn::to_tensor(xf_ground_truth(gt)));
      const double n = static_cast<double>(opts.accumulate);
      nn::Var loss = graph::joint_loss(f.image, f.xf, sigma_gt, rho_gt, n);
      if (opts.intermediate_supervision) {
        std::vector<nn::Var> terms{loss};
        for (std::size_t c = 0; c + 1 < f.cascade_images.size(); ++c) {
          terms.push_back(graph::joint_loss(f.cascade_images[c], f.cascade_xf[c], sigma_gt, rho_gt, n));
        }
        loss = nn::add(terms);
      }
      const double value = loss.value()[0];
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "non-finite training loss at step " << step << " (sequence " << idx << ")";
        throw Error(ErrorCode::NumericFailure, msg.str());
      }
      g.backward(loss);
      for (std::size_t i = 0; i < grads.size(); ++i) {
        const nn::Tensor& gi = g.grad(bp.leaves()[i]);
        auto dst = grads.values(i);
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += gi[k];
      }
      step_loss += value;
      step_psnr += psnr(nn::to_volume(f.image.value(), Domain::Image), gt) / n;
    }
    result.history.push_back({step, step_loss, step_psnr});
    if (opts.on_step) opts.on_step(step, step_loss);
    nn::adam_step(result.params.store, grads, adam, adam_cfg);
  }
  return result;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryRow>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create " + path.string());
  out << "step,loss,psnr_train\n";
  out << std::setprecision(17);
  for (const auto& row : history) {
    out << row.step << ',' << row.loss << ',';
    if (std::isinf(row.psnr_train)) {
      out << "inf";
    } else {
      out << row.psnr_train;
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace ktnext
