#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ktnext/kt_sampling.hpp"
#include "ktnext/nn/graph.hpp"
#include "ktnext/nn/params.hpp"
#include "ktnext/xf_pipeline.hpp"

namespace ktnext {

enum class XfInputMode { ResidualOnly, ResidualPlusBaseline };

struct KtNextConfig {
  int n_cascades = 4;
  int xf_layers = 5;
  int crnn_layers = 4;
  int kernel = 3;
  int dilation = 3;
  int channels = 16;
  double dc_lambda = kHardDc;
  XfInputMode xf_input_mode = XfInputMode::ResidualPlusBaseline;
  bool share_weights = true;
  /// Feed each CRNN layer's output from the previous cascade back in.
  bool carry_hidden = true;

  void validate() const;
  int xf_input_channels() const { return xf_input_mode == XfInputMode::ResidualPlusBaseline ? 4 : 2; }
  int weight_sets() const { return share_weights ? 1 : n_cascades; }
};

/// Closed-form parameter count for a configuration.
std::size_t expected_parameter_count(const KtNextConfig& cfg);

struct KtNextParams {
  nn::ParamStore store;
};

/// He-style init (normal, std sqrt(2 / fan_in)) for conv weights, zero biases.
KtNextParams init_params(const KtNextConfig& cfg, std::uint64_t seed);
/// Same layout with every value zero.
KtNextParams zero_params(const KtNextConfig& cfg);

/// Checkpoints carry the parameters plus "config/..." scalar records.
void save_checkpoint(const std::filesystem::path& path, const KtNextParams& params, const KtNextConfig& cfg);
std::pair<KtNextParams, KtNextConfig> load_checkpoint(const std::filesystem::path& path);

/// Per-layer CRNN outputs of the previous cascade, each [T][C][Y][X].
using HiddenState = std::vector<nn::Tensor>;

namespace graph {

/// Parameters bound as differentiable leaves of a graph.
class BoundParams {
 public:
  BoundParams(nn::Graph& g, const nn::ParamStore& store, bool differentiable);
  const nn::Var& operator[](const std::string& name) const;
  const std::vector<nn::Var>& leaves() const noexcept { return leaves_; }

 private:
  const nn::ParamStore* store_;
  std::vector<nn::Var> leaves_;
};

using Hidden = std::vector<nn::Var>;

struct XfPairVars {
  nn::Var residual;     // [F][2][Y][X]
  nn::Var dc_baseline;  // [F][2][Y][X], constant
};

XfPairVars xf_transform(const nn::Var& sigma, const KtMeasurement& m);
nn::Var xfcnn(const XfPairVars& pair, const BoundParams& p, const KtNextConfig& cfg, int cascade);
std::pair<nn::Var, Hidden> crnn(const nn::Var& img_in, const KtMeasurement& m, const BoundParams& p,
                                const KtNextConfig& cfg, int cascade, const Hidden& hidden);

struct Forward {
  nn::Var image;  // sigma^(N)
  nn::Var xf;     // rho^(N)
  std::vector<nn::Var> cascade_images;
  std::vector<nn::Var> cascade_xf;
};

Forward ktnext(const KtMeasurement& m, const BoundParams& p, const KtNextConfig& cfg);

/// Sum of squared differences over both terms, divided by n_samples.
nn::Var joint_loss(const nn::Var& sigma_pred, const nn::Var& rho_pred, const nn::Var& sigma_gt,
                   const nn::Var& rho_gt, double n_samples = 1.0);

}  // namespace graph

ComplexVolume xfcnn_forward(const XfPair& pair, const KtNextParams& params, const KtNextConfig& cfg,
                            int cascade = 0);

struct CrnnResult {
  ComplexVolume image;
  HiddenState hidden;
};

/// An empty `hidden` means zero previous-iteration state.
CrnnResult crnn_recon(const ComplexVolume& img_in, const KtMeasurement& m, const KtNextParams& params,
                      const KtNextConfig& cfg, const HiddenState& hidden = {}, int cascade = 0);

struct CascadeOutput {
  ComplexVolume xf;     // rho^(n)
  ComplexVolume image;  // sigma^(n)
};

struct KtNextOutput {
  ComplexVolume image;
  ComplexVolume xf;
  std::vector<CascadeOutput> cascades;
};

KtNextOutput ktnext_forward(const KtMeasurement& m, const KtNextParams& params, const KtNextConfig& cfg);

double joint_loss(const ComplexVolume& sigma_pred, const ComplexVolume& rho_pred, const ComplexVolume& sigma_gt,
                  const ComplexVolume& rho_gt, double n_samples = 1.0);

/// x-f ground truth of a fully sampled sequence.
ComplexVolume xf_ground_truth(const ComplexVolume& sigma_gt);

struct FitOptions {
  int steps = 500;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  AcquisitionSpec acquisition{};
  /// Fixed acquisition mask; when absent one is generated from `acquisition`.
  std::optional<SamplingMask> mask;
  bool random_shear_phase = false;
  bool augment = false;
  /// Sequences accumulated per ADAM step.
  int accumulate = 1;
  /// Supervise every cascade rather than only the last.
  bool intermediate_supervision = false;
  std::function<void(int step, double loss)> on_step;
};

struct HistoryRow {
  int step;
  double loss;
  double psnr_train;
};

struct FitResult {
  KtNextParams params;
  std::vector<HistoryRow> history;
};

/// End-to-end training on fully sampled sequences; deterministic for a seed.
FitResult fit(const std::vector<ComplexVolume>& dataset, const KtNextConfig& cfg, const FitOptions& opts,
              std::optional<KtNextParams> initial = std::nullopt);

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryRow>& history);

}  // namespace ktnext
