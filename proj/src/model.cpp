#include "ktnext/model.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "ktnext/error.hpp"
#include "ktnext/nn/complex_ops.hpp"
#include "ktnext/nn/ops.hpp"

namespace ktnext {

void KtNextConfig::validate() const {
  if (n_cascades < 1 || xf_layers < 1 || crnn_layers < 1 || channels < 1) {
    throw Error(ErrorCode::InvalidArgument, "cascade, layer and channel counts must be >= 1");
  }
  if (dilation < 1) throw Error(ErrorCode::InvalidArgument, "dilation must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) throw Error(ErrorCode::InvalidArgument, "kernel must be odd");
  if (std::isnan(dc_lambda) || dc_lambda < 0.0) throw Error(ErrorCode::InvalidArgument, "dc_lambda must be >= 0");
}

namespace {

std::string xf_name(int set, int layer, const char* what) {
  return "xf" + std::to_string(set) + ".conv" + std::to_string(layer) + "." + what;
}

std::string crnn_name(int set, int layer, const char* what) {
  return "crnn" + std::to_string(set) + ".layer" + std::to_string(layer) + "." + what;
}

std::string crnn_out_name(int set, const char* what) { return "crnn" + std::to_string(set) + ".out." + what; }

int weight_set(const KtNextConfig& cfg, int cascade) {
  if (cascade < 0 || cascade >= cfg.n_cascades) throw Error(ErrorCode::InvalidArgument, "cascade index out of range");
  return cfg.share_weights ? 0 : cascade;
}

struct LayerSpec {
  std::string name;
  std::size_t c_out, c_in, fan_in;
};

// Every parameter tensor of the network, in checkpoint order.
std::vector<LayerSpec> layout(const KtNextConfig& cfg) {
  cfg.validate();
  const auto C = static_cast<std::size_t>(cfg.channels);
  const auto k2 = static_cast<std::size_t>(cfg.kernel * cfg.kernel);
  std::vector<LayerSpec> out;
  for (int s = 0; s < cfg.weight_sets(); ++s) {
    for (int l = 0; l < cfg.xf_layers; ++l) {
      const std::size_t cin = l == 0 ? static_cast<std::size_t>(cfg.xf_input_channels()) : C;
      const std::size_t cout = l == cfg.xf_layers - 1 ? 2 : C;
      out.push_back({xf_name(s, l, "weight"), cout, cin, cin * k2});
      out.push_back({xf_name(s, l, "bias"), cout, 0, 0});
    }
    for (int l = 0; l < cfg.crnn_layers; ++l) {
      const std::size_t cin = l == 0 ? 2 : C;
      const std::size_t fan = (cin + C + (cfg.carry_hidden ? C : 0)) * k2;
      out.push_back({crnn_name(s, l, "in.weight"), C, cin, fan});
      out.push_back({crnn_name(s, l, "rec.weight"), C, C, fan});
      if (cfg.carry_hidden) out.push_back({crnn_name(s, l, "iter.weight"), C, C, fan});
      out.push_back({crnn_name(s, l, "bias"), C, 0, 0});
    }
    out.push_back({crnn_out_name(s, "weight"), 2, C, C * k2});
    out.push_back({crnn_out_name(s, "bias"), 2, 0, 0});
  }
  return out;
}

double normal(std::mt19937_64& rng) {
  // Box-Muller on portable uniforms
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

KtNextParams build_params(const KtNextConfig& cfg, std::mt19937_64* rng) {
  KtNextParams p;
  const auto k = static_cast<std::size_t>(cfg.kernel);
  for (const auto& spec : layout(cfg)) {
    if (spec.c_in == 0) {
      p.store.add(spec.name, {spec.c_out}, 0.0);
      continue;
    }
    std::vector<double> w(spec.c_out * spec.c_in * k * k, 0.0);
    if (rng) {
      const double std_dev = std::sqrt(2.0 / static_cast<double>(spec.fan_in));
      for (auto& v : w) v = std_dev * normal(*rng);
    }
    p.store.add(spec.name, {spec.c_out, spec.c_in, k, k}, std::move(w));
  }
  return p;
}

}  // namespace

std::size_t expected_parameter_count(const KtNextConfig& cfg) {
  cfg.validate();
  const std::size_t C = static_cast<std::size_t>(cfg.channels);
  const std::size_t k2 = static_cast<std::size_t>(cfg.kernel * cfg.kernel);
  const auto conv = [k2](std::size_t cin, std::size_t cout) { return cin * cout * k2 + cout; };
  std::size_t xf = 0;
  if (cfg.xf_layers == 1) {
    xf = conv(static_cast<std::size_t>(cfg.xf_input_channels()), 2);
  } else {
    xf = conv(static_cast<std::size_t>(cfg.xf_input_channels()), C) +
         static_cast<std::size_t>(cfg.xf_layers - 2) * conv(C, C) + conv(C, 2);
  }
  const std::size_t recurrent = (cfg.carry_hidden ? 2 : 1) * C * C * k2;
  const std::size_t crnn = (2 * C * k2 + recurrent + C) +
                           static_cast<std::size_t>(cfg.crnn_layers - 1) * (C * C * k2 + recurrent + C) +
                           conv(C, 2);
  return static_cast<std::size_t>(cfg.weight_sets()) * (xf + crnn);
}

KtNextParams init_params(const KtNextConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return build_params(cfg, &rng);
}

KtNextParams zero_params(const KtNextConfig& cfg) { return build_params(cfg, nullptr); }

void save_checkpoint(const std::filesystem::path& path, const KtNextParams& params, const KtNextConfig& cfg) {
  nn::ParamStore out = params.store;
  const auto put = [&out](const char* key, double v) { out.add(std::string("config/") + key, {}, std::vector<double>{v}); };
  put("n_cascades", cfg.n_cascades);
  put("xf_layers", cfg.xf_layers);
  put("crnn_layers", cfg.crnn_layers);
  put("kernel", cfg.kernel);
  put("dilation", cfg.dilation);
  put("channels", cfg.channels);
  put("dc_lambda", cfg.dc_lambda);
  put("xf_input_mode", cfg.xf_input_mode == XfInputMode::ResidualPlusBaseline ? 1.0 : 0.0);
  put("share_weights", cfg.share_weights ? 1.0 : 0.0);
  put("carry_hidden", cfg.carry_hidden ? 1.0 : 0.0);
  nn::save_params(path, out);
}

std::pair<KtNextParams, KtNextConfig> load_checkpoint(const std::filesystem::path& path) {
  const nn::ParamStore raw = nn::load_params(path);
  const auto get = [&raw](const char* key) {
    const std::string name = std::string("config/") + key;
    if (!raw.contains(name)) throw Error(ErrorCode::Malformed, "checkpoint lacks " + name);
    return raw.values(raw.index_of(name))[0];
  };
  KtNextConfig cfg;
  cfg.n_cascades = static_cast<int>(get("n_cascades"));
  cfg.xf_layers = static_cast<int>(get("xf_layers"));
  cfg.crnn_layers = static_cast<int>(get("crnn_layers"));
  cfg.kernel = static_cast<int>(get("kernel"));
  cfg.dilation = static_cast<int>(get("dilation"));
  cfg.channels = static_cast<int>(get("channels"));
  cfg.dc_lambda = get("dc_lambda");
  cfg.xf_input_mode = get("xf_input_mode") != 0.0 ? XfInputMode::ResidualPlusBaseline : XfInputMode::ResidualOnly;
  cfg.share_weights = get("share_weights") != 0.0;
  cfg.carry_hidden = get("carry_hidden") != 0.0;
  cfg.validate();

  KtNextParams params = zero_params(cfg);
  for (std::size_t i = 0; i < params.store.size(); ++i) {
    const std::string& name = params.store.name(i);
    if (!raw.contains(name)) throw Error(ErrorCode::Malformed, "checkpoint lacks " + name);
    const std::size_t j = raw.index_of(name);
    if (raw.dims(j) != params.store.dims(i)) throw Error(ErrorCode::Malformed, "shape mismatch for " + name);
    auto src = raw.values(j);
    std::copy(src.begin(), src.end(), params.store.values(i).begin());
  }
  if (raw.size() != params.store.size() + 10) throw Error(ErrorCode::Malformed, "checkpoint has unexpected records");
  return {std::move(params), cfg};
}

namespace graph {

BoundParams::BoundParams(nn::Graph& g, const nn::ParamStore& store, bool differentiable) : store_(&store) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    leaves_.push_back(differentiable ? g.leaf(store.tensor(i)) : g.constant(store.tensor(i)));
  }
}

const nn::Var& BoundParams::operator[](const std::string& name) const { return leaves_[store_->index_of(name)]; }

XfPairVars xf_transform(const nn::Var& sigma, const KtMeasurement& m) {
  nn::Graph& g = *sigma.graph();
  const ComplexVolume avg = kspace_temporal_average(m);
  const nn::Var v = nn::fft2c(sigma);
  const nn::Var avg_t = g.constant(nn::to_tensor(broadcast_frames(avg, m.t_frames())));
  const nn::Var residual = nn::fft_t(nn::ifft2c(nn::sub(v, avg_t)));
  const nn::Var dc_base = g.constant(nn::to_tensor(fft_t(ifft2c(dc_baseline_kspace(avg, m)))));
  return {residual, dc_base};
}

nn::Var xfcnn(const XfPairVars& pair, const BoundParams& p, const KtNextConfig& cfg, int cascade) {
  const int s = weight_set(cfg, cascade);
  // (x, f) planes, one per readout row
  nn::Var h = nn::swap_batch_height(pair.residual);
  if (cfg.xf_input_mode == XfInputMode::ResidualPlusBaseline) {
    h = nn::concat_channels(h, nn::swap_batch_height(pair.dc_baseline));
  }
  for (int l = 0; l < cfg.xf_layers; ++l) {
    h = nn::conv2d(h, p[xf_name(s, l, "weight")], p[xf_name(s, l, "bias")], cfg.dilation);
    if (l + 1 < cfg.xf_layers) h = nn::relu(h);
  }
  return nn::add(pair.dc_baseline, nn::swap_batch_height(h));
}

std::pair<nn::Var, Hidden> crnn(const nn::Var& img_in, const KtMeasurement& m, const BoundParams& p,
                                const KtNextConfig& cfg, int cascade, const Hidden& hidden) {
  const int s = weight_set(cfg, cascade);
  const std::size_t T = img_in.shape().n;
  if (!hidden.empty() && hidden.size() != static_cast<std::size_t>(cfg.crnn_layers)) {
    throw Error(ErrorCode::DimensionMismatch, "hidden state has wrong layer count");
  }
  Hidden next;
  nn::Var x = img_in;
  for (int l = 0; l < cfg.crnn_layers; ++l) {
    // input and previous-iteration terms are not recurrent in t, so batch them over frames
    std::vector<nn::Var> pre_terms{nn::conv2d(x, p[crnn_name(s, l, "in.weight")], p[crnn_name(s, l, "bias")], cfg.dilation)};
    if (cfg.carry_hidden && !hidden.empty()) {
      if (!(hidden[l].shape() == pre_terms.front().shape())) {
        throw Error(ErrorCode::DimensionMismatch, "hidden state shape " + nn::to_string(hidden[l].shape()));
      }
      pre_terms.push_back(nn::conv2d(hidden[l], p[crnn_name(s, l, "iter.weight")], std::nullopt, cfg.dilation));
    }
    const nn::Var pre = pre_terms.size() == 1 ? pre_terms.front() : nn::add(pre_terms);
    const nn::Var& rec_w = p[crnn_name(s, l, "rec.weight")];

    std::vector<nn::Var> fwd(T), bwd(T);
    for (std::size_t t = 0; t < T; ++t) {
      nn::Var a = nn::slice_batch(pre, t);
      if (t > 0) a = nn::add(a, nn::conv2d(fwd[t - 1], rec_w, std::nullopt, cfg.dilation));
      fwd[t] = nn::relu(a);
    }
    for (std::size_t t = T; t-- > 0;) {
      nn::Var a = nn::slice_batch(pre, t);
      if (t + 1 < T) a = nn::add(a, nn::conv2d(bwd[t + 1], rec_w, std::nullopt, cfg.dilation));
      bwd[t] = nn::relu(a);
    }
    std::vector<nn::Var> both(T);
    for (std::size_t t = 0; t < T; ++t) both[t] = nn::add(fwd[t], bwd[t]);
    x = nn::stack_batch(both);
    next.push_back(x);
  }
  const nn::Var delta = nn::conv2d(x, p[crnn_out_name(s, "weight")], p[crnn_out_name(s, "bias")], cfg.dilation);
  const nn::Var refined = nn::add(img_in, delta);
  const nn::Var out = nn::ifft2c(nn::data_consistency(nn::fft2c(refined), m, cfg.dc_lambda));
  return {out, next};
}

Forward ktnext(const KtMeasurement& m, const BoundParams& p, const KtNextConfig& cfg) {
  cfg.validate();
  nn::Graph& g = *p.leaves().front().graph();
  Forward f;
  nn::Var sigma = g.constant(nn::to_tensor(zero_filled(m)));
  Hidden hidden;
  for (int n = 0; n < cfg.n_cascades; ++n) {
    const XfPairVars pair = xf_transform(sigma, m);
    const nn::Var rho = xfcnn(pair, p, cfg, n);
    auto [image, h] = crnn(nn::ifft_t(rho), m, p, cfg, n, cfg.carry_hidden ? hidden : Hidden{});
    sigma = image;
    hidden = std::move(h);
    f.cascade_xf.push_back(rho);
    f.cascade_images.push_back(sigma);
  }
  f.image = f.cascade_images.back();
  f.xf = f.cascade_xf.back();
  return f;
}

nn::Var joint_loss(const nn::Var& sigma_pred, const nn::Var& rho_pred, const nn::Var& sigma_gt,
                   const nn::Var& rho_gt, double n_samples) {
  if (!(n_samples > 0.0)) throw Error(ErrorCode::InvalidArgument, "n_samples must be positive");
  return nn::scale(nn::add(nn::squared_error(sigma_pred, sigma_gt), nn::squared_error(rho_pred, rho_gt)),
                   1.0 / n_samples);
}

}  // namespace graph

namespace {

void check_layout(const KtNextParams& params, const KtNextConfig& cfg) {
  if (!params.store.same_layout(zero_params(cfg).store)) {
    throw Error(ErrorCode::DimensionMismatch, "parameters do not match the configuration");
  }
}

}  // namespace

ComplexVolume xfcnn_forward(const XfPair& pair, const KtNextParams& params, const KtNextConfig& cfg, int cascade) {
  check_layout(params, cfg);
  if (!pair.residual.same_shape(pair.dc_baseline)) throw Error(ErrorCode::DimensionMismatch, "XfPair operands differ");
  nn::Graph g;
  graph::BoundParams bp(g, params.store, false);
  const graph::XfPairVars vars{g.constant(nn::to_tensor(pair.residual)), g.constant(nn::to_tensor(pair.dc_baseline))};
  return nn::to_volume(graph::xfcnn(vars, bp, cfg, cascade).value(), Domain::XF);
}

CrnnResult crnn_recon(const ComplexVolume& img_in, const KtMeasurement& m, const KtNextParams& params,
                      const KtNextConfig& cfg, const HiddenState& hidden, int cascade) {
  check_layout(params, cfg);
  if (img_in.domain() != Domain::Image) throw Error(ErrorCode::DomainMismatch, "crnn_recon expects image data");
  nn::Graph g;
  graph::BoundParams bp(g, params.store, false);
  graph::Hidden h;
  for (const auto& t : hidden) h.push_back(g.constant(t));
  auto [out, next] = graph::crnn(g.constant(nn::to_tensor(img_in)), m, bp, cfg, cascade, h);
  CrnnResult r{nn::to_volume(out.value(), Domain::Image), {}};
  for (const auto& v : next) r.hidden.push_back(v.value());
  return r;
}

KtNextOutput ktnext_forward(const KtMeasurement& m, const KtNextParams& params, const KtNextConfig& cfg) {
  check_layout(params, cfg);
  nn::Graph g;
  graph::BoundParams bp(g, params.store, false);
  const graph::Forward f = graph::ktnext(m, bp, cfg);
  KtNextOutput out{nn::to_volume(f.image.value(), Domain::Image), nn::to_volume(f.xf.value(), Domain::XF), {}};
  for (std::size_t n = 0; n < f.cascade_images.size(); ++n) {
    out.cascades.push_back({nn::to_volume(f.cascade_xf[n].value(), Domain::XF),
                            nn::to_volume(f.cascade_images[n].value(), Domain::Image)});
  }
  return out;
}

double joint_loss(const ComplexVolume& sigma_pred, const ComplexVolume& rho_pred, const ComplexVolume& sigma_gt,
                  const ComplexVolume& rho_gt, double n_samples) {
  if (!sigma_pred.same_shape(sigma_gt) || !rho_pred.same_shape(rho_gt)) {
    throw Error(ErrorCode::DimensionMismatch, "loss operands differ in shape");
  }
  if (!(n_samples > 0.0)) throw Error(ErrorCode::InvalidArgument, "n_samples must be positive");
  double acc = 0.0;
  for (std::size_t i = 0; i < sigma_pred.size(); ++i) acc += std::norm(sigma_pred.data()[i] - sigma_gt.data()[i]);
  for (std::size_t i = 0; i < rho_pred.size(); ++i) acc += std::norm(rho_pred.data()[i] - rho_gt.data()[i]);
  return acc / n_samples;
}

ComplexVolume xf_ground_truth(const ComplexVolume& sigma_gt) { return fft_t(sigma_gt); }

}  // namespace ktnext
