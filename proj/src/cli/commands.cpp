#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "ktnext/cli.hpp"
#include "ktnext/kt_sampling.hpp"
#include "ktnext/metrics.hpp"
#include "ktnext/model.hpp"
#include "ktnext/xf_pipeline.hpp"

namespace ktnext::cli {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return kFlagError;
    case ErrorCode::Io: return kIoError;
    case ErrorCode::NumericFailure:
    case ErrorCode::UndefinedMetric: return kNumericError;
    case ErrorCode::BadMagic:
    case ErrorCode::Truncated:
    case ErrorCode::DimensionOverflow:
    case ErrorCode::Malformed:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::DomainMismatch:
    case ErrorCode::ContractViolation: return kFormatError;
  }
  return kFormatError;
}

namespace {

struct Flags {
  int accel = 4;
  int center = 4;
  std::size_t frames = 8;
  std::size_t rows = 32;
  std::size_t cols = 32;
  std::uint64_t seed = 0;
  int steps = 500;
  int cascades = 2;
  int channels = 8;
  double lr = 1e-4;
  std::string lambda = "inf";
  std::string mask;
  std::vector<std::string> input;
  std::string output;
  std::string checkpoint;
  bool deterministic = false;
  std::vector<std::string> reference;
  std::vector<std::string> kspace;
  bool augment = false;
  bool intermediates = false;
  std::size_t frame = 0;
  std::optional<std::size_t> row;
};

double parse_lambda(const std::string& s) {
  if (s == "inf" || s == "INF" || s == "Inf") return kHardDc;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "--lambda must be a number or \"inf\", got " + s);
  }
  if (used != s.size() || !std::isfinite(v) || v < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "--lambda must be finite and >= 0 or \"inf\", got " + s);
  }
  return v;
}

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

AcquisitionSpec acquisition(const Flags& f) {
  AcquisitionSpec spec;
  spec.accel = f.accel;
  spec.n_center = f.center;
  spec.validate();
  return spec;
}

SamplingMask mask_from_flags(const Flags& f, std::size_t frames, std::size_t cols) {
  if (!f.mask.empty()) {
    SamplingMask m = load_mask(f.mask);
    if (m.t_frames() != frames || m.cols() != cols) {
      throw Error(ErrorCode::DimensionMismatch, "mask " + f.mask + " does not match the data dimensions");
    }
    return m;
  }
  return make_shear_mask(acquisition(f), frames, cols);
}

KtMeasurement load_measurement(const fs::path& kspace_path, const SamplingMask& mask) {
  ComplexVolume k = load_sequence(kspace_path, Domain::KSpace);
  if (k.t_frames() != mask.t_frames() || k.cols() != mask.cols()) {
    throw Error(ErrorCode::DimensionMismatch, kspace_path.string() + " does not match its mask");
  }
  return KtMeasurement(std::move(k), mask);
}

class Runner {
 public:
  Runner(std::vector<std::string> argv, std::ostream& out, std::ostream& err)
      : argv_(std::move(argv)), out_(out), err_(err) {}

  int run();

 private:
  void cmd_mask();
  void cmd_simulate();
  void cmd_train();
  void cmd_reconstruct();
  void cmd_evaluate();
  void cmd_render();
  int cmd_replay();

  void finish(const std::string& command, const fs::path& manifest_path, std::vector<std::string> inputs,
              std::vector<std::string> outputs);
  std::string config_json(const std::string& command) const;
  void require(bool cond, const std::string& what) const {
    if (!cond) throw Error(ErrorCode::InvalidArgument, what);
  }

  std::vector<std::string> argv_;
  std::ostream& out_;
  std::ostream& err_;
  Flags f_;
};

std::string Runner::config_json(const std::string& command) const {
  nlohmann::ordered_json j;
  j["accel"] = f_.accel;
  j["center"] = f_.center;
  j["frames"] = f_.frames;
  j["rows"] = f_.rows;
  j["cols"] = f_.cols;
  j["seed"] = f_.seed;
  if (command == "train" || command == "reconstruct") {
    j["steps"] = f_.steps;
    j["cascades"] = f_.cascades;
    j["channels"] = f_.channels;
    j["lr"] = f_.lr;
    j["lambda"] = f_.lambda;
    j["augment"] = f_.augment;
  }
  j["mask"] = f_.mask;
  j["checkpoint"] = f_.checkpoint;
  j["deterministic"] = f_.deterministic;
  return j.dump();
}

void Runner::finish(const std::string& command, const fs::path& manifest_path, std::vector<std::string> inputs,
                    std::vector<std::string> outputs) {
  RunManifest m;
  m.command = command;
  m.argv = argv_;
  m.config = config_json(command);
  m.seed = f_.seed;
  m.deterministic = f_.deterministic;
  m.inputs = std::move(inputs);
  m.outputs = std::move(outputs);
  m.timestamp = now_utc();
  write_manifest(manifest_path, m);
}

void Runner::cmd_mask() {
  require(!f_.output.empty(), "mask: --output is required");
  const AcquisitionSpec spec = acquisition(f_);
  const SamplingMask mask = make_shear_mask(spec, f_.frames, f_.cols);
  save_mask(f_.output, mask);
  out_ << "nominal acceleration: " << spec.accel << "x (relative to " << spec.pe_lines << " phase-encode lines)\n";
  out_ << "effective acceleration: " << fmt_double(mask.effective_acceleration()) << " (" << mask.total_sampled()
       << " of " << f_.frames * f_.cols << " k-t lines sampled)\n";
  finish("mask", f_.output + ".manifest.json", {}, {f_.output});
}

void Runner::cmd_simulate() {
  require(!f_.output.empty(), "simulate: --output prefix is required");
  const ComplexVolume gt = generate_phantom(f_.seed, f_.frames, f_.rows, f_.cols);
  const SamplingMask mask = mask_from_flags(f_, f_.frames, f_.cols);
  const KtMeasurement m = undersample(gt, mask);
  const std::string gt_path = f_.output + ".gt.ckt";
  const std::string k_path = f_.output + ".kspace.ckt";
  const std::string mask_path = f_.output + ".mask.ckm";
  save_sequence(gt_path, gt);
  save_sequence(k_path, m.kspace());
  save_mask(mask_path, mask);
  out_ << "wrote " << gt_path << ", " << k_path << ", " << mask_path << " (effective acceleration "
       << fmt_double(mask.effective_acceleration()) << ")\n";
  std::vector<std::string> inputs;
  if (!f_.mask.empty()) inputs.push_back(f_.mask);
  finish("simulate", f_.output + ".manifest.json", inputs, {gt_path, k_path, mask_path});
}

void Runner::cmd_train() {
  require(!f_.input.empty(), "train: at least one --input ground-truth sequence is required");
  require(!f_.checkpoint.empty(), "train: --checkpoint output path is required");
  require(f_.steps >= 0, "train: --steps must be >= 0");
  std::vector<ComplexVolume> data;
  for (const auto& p : f_.input) data.push_back(load_sequence(p, Domain::Image));

  KtNextConfig cfg;
  cfg.n_cascades = f_.cascades;
  cfg.channels = f_.channels;
  cfg.dc_lambda = parse_lambda(f_.lambda);
  cfg.validate();

  FitOptions opts;
  opts.steps = f_.steps;
  opts.lr = f_.lr;
  opts.seed = f_.seed;
  opts.acquisition = acquisition(f_);
  opts.augment = f_.augment;
  if (!f_.mask.empty()) opts.mask = mask_from_flags(f_, data.front().t_frames(), data.front().cols());

  const FitResult r = fit(data, cfg, opts);
  save_checkpoint(f_.checkpoint, r.params, cfg);
  std::vector<std::string> outputs{f_.checkpoint};
  if (!f_.output.empty()) {
    write_history_csv(f_.output, r.history);
    outputs.push_back(f_.output);
  }
  if (!r.history.empty()) {
    out_ << "trained " << r.history.size() << " steps; loss " << fmt_double(r.history.front().loss) << " -> "
         << fmt_double(r.history.back().loss) << "\n";
  }
  out_ << "parameters: " << nn::parameter_count(r.params.store) << "\n";
  std::vector<std::string> inputs = f_.input;
  if (!f_.mask.empty()) inputs.push_back(f_.mask);
  finish("train", f_.checkpoint + ".manifest.json", inputs, outputs);
}

void Runner::cmd_reconstruct() {
  require(f_.input.size() == 1, "reconstruct: exactly one --input k-space sequence is required");
  require(!f_.mask.empty(), "reconstruct: --mask is required");
  require(!f_.checkpoint.empty(), "reconstruct: --checkpoint is required");
  require(!f_.output.empty(), "reconstruct: --output is required");
  const SamplingMask mask = load_mask(f_.mask);
  const KtMeasurement m = load_measurement(f_.input.front(), mask);
  auto [params, cfg] = load_checkpoint(f_.checkpoint);
  if (f_.lambda != "inf") cfg.dc_lambda = parse_lambda(f_.lambda);
  const KtNextOutput r = ktnext_forward(m, params, cfg);
  save_sequence(f_.output, r.image);
  std::vector<std::string> outputs{f_.output};
  if (f_.intermediates) {
    for (std::size_t n = 0; n < r.cascades.size(); ++n) {
      const std::string img = f_.output + ".cascade" + std::to_string(n + 1) + ".ckt";
      const std::string xf = f_.output + ".cascade" + std::to_string(n + 1) + ".xf.ckt";
      save_sequence(img, r.cascades[n].image);
      save_sequence(xf, r.cascades[n].xf);
      outputs.push_back(img);
      outputs.push_back(xf);
    }
  }
  out_ << "reconstructed " << m.t_frames() << "x" << m.rows() << "x" << m.cols() << " with "
       << cfg.n_cascades << " cascades\n";
  finish("reconstruct", f_.output + ".manifest.json", {f_.input.front(), f_.mask, f_.checkpoint}, outputs);
}

void Runner::cmd_evaluate() {
  require(!f_.input.empty(), "evaluate: at least one --input reconstruction is required");
  require(f_.reference.size() == f_.input.size(), "evaluate: one --reference per --input is required");
  require(f_.kspace.size() == f_.input.size(), "evaluate: one --kspace per --input is required");
  require(!f_.mask.empty(), "evaluate: --mask is required");
  require(!f_.output.empty(), "evaluate: --output CSV path is required");
  const SamplingMask mask = load_mask(f_.mask);

  struct Row {
    std::string file;
    ReconMetrics model, zero_filled;
  };
  const std::size_t n = f_.input.size();
  std::vector<std::optional<Row>> rows(n);
  std::vector<std::exception_ptr> failures(n);
  const auto work = [&](std::size_t i) {
    try {
      const ComplexVolume rec = load_sequence(f_.input[i]);
      const ComplexVolume gt = load_sequence(f_.reference[i]);
      const ComplexVolume zf = ktnext::zero_filled(load_measurement(f_.kspace[i], mask));
      rows[i] = Row{fs::path(f_.input[i]).filename().string(), evaluate(rec, gt), evaluate(zf, gt)};
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };
  const unsigned threads = f_.deterministic ? 1u : std::min<unsigned>(thread_cap(), static_cast<unsigned>(n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::mutex next_mutex;
    std::size_t next = 0;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i;
          {
            std::lock_guard lock(next_mutex);
            if (next == n) return;
            i = next++;
          }
          work(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : failures) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(rows[a]->file, f_.input[a]) < std::tie(rows[b]->file, f_.input[b]);
  });

  std::ofstream csv(f_.output, std::ios::trunc);
  if (!csv) throw Error(ErrorCode::Io, "cannot create " + f_.output);
  csv << "file,psnr,ssim,hfen,psnr_zf,ssim_zf,hfen_zf\n";
  for (std::size_t i : order) {
    const Row& r = *rows[i];
    csv << r.file << ',' << fmt_double(r.model.psnr) << ',' << fmt_double(r.model.ssim) << ','
        << fmt_double(r.model.hfen) << ',' << fmt_double(r.zero_filled.psnr) << ','
        << fmt_double(r.zero_filled.ssim) << ',' << fmt_double(r.zero_filled.hfen) << '\n';
    out_ << r.file << ": PSNR " << fmt_double(r.model.psnr) << " dB (zero-filled " << fmt_double(r.zero_filled.psnr)
         << ")\n";
  }
  if (!csv) throw Error(ErrorCode::Io, "write failed for " + f_.output);
  std::vector<std::string> inputs = f_.input;
  inputs.insert(inputs.end(), f_.reference.begin(), f_.reference.end());
  inputs.insert(inputs.end(), f_.kspace.begin(), f_.kspace.end());
  inputs.push_back(f_.mask);
  finish("evaluate", f_.output + ".manifest.json", inputs, {f_.output});
}

void Runner::cmd_render() {
  require(f_.input.size() == 1, "render: exactly one --input sequence is required");
  require(!f_.output.empty(), "render: --output directory is required");
  const ComplexVolume v = load_sequence(f_.input.front());
  std::optional<ComplexVolume> gt;
  if (!f_.reference.empty()) {
    require(f_.reference.size() == 1, "render: at most one --reference");
    gt = load_sequence(f_.reference.front());
    if (!gt->same_shape(v)) throw Error(ErrorCode::DimensionMismatch, "render: reference shape differs");
  }
  const std::size_t row = f_.row.value_or(v.rows() / 2);
  require(row < v.rows(), "render: --row out of range");
  std::error_code ec;
  fs::create_directories(f_.output, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create directory " + f_.output);

  double peak = 0.0;
  for (const auto& z : (gt ? *gt : v).data()) peak = std::max(peak, std::abs(z));
  std::vector<std::string> outputs;
  const auto emit = [&](const std::string& name, std::size_t w, std::size_t h, const std::vector<double>& px) {
    const fs::path p = fs::path(f_.output) / name;
    write_pgm(p, w, h, px);
    outputs.push_back(p.string());
  };
  for (std::size_t t = 0; t < v.t_frames(); ++t) {
    std::ostringstream name;
    name << "frame_" << std::setw(3) << std::setfill('0') << t;
    emit(name.str() + ".pgm", v.cols(), v.rows(), magnitude_frame(v, t, peak));
    if (gt) emit(name.str() + "_error.pgm", v.cols(), v.rows(), error_frame(v, *gt, t, peak));
  }
  emit("xt_row" + std::to_string(row) + ".pgm", v.cols(), v.t_frames(), xt_profile(v, row, peak));
  emit("xf_row" + std::to_string(row) + ".pgm", v.cols(), v.t_frames(), xf_plane(v, row));
  if (gt) {
    ComplexVolume diff = v;
    for (std::size_t i = 0; i < diff.size(); ++i) diff.data()[i] = v.data()[i] - gt->data()[i];
    std::vector<double> xt = xt_profile(diff, row, peak);
    for (auto& px : xt) px = std::min(1.0, 6.0 * px);
    emit("xt_row" + std::to_string(row) + "_error.pgm", v.cols(), v.t_frames(), xt);
  }
  out_ << "wrote " << outputs.size() << " images to " << f_.output << "\n";
  std::vector<std::string> inputs = f_.input;
  inputs.insert(inputs.end(), f_.reference.begin(), f_.reference.end());
  finish("render", (fs::path(f_.output) / "manifest.json").string(), inputs, outputs);
}

int Runner::cmd_replay() {
  require(f_.input.size() == 1, "replay: exactly one --input manifest is required");
  const RunManifest m = read_manifest(f_.input.front());
  if (m.argv.empty() || m.argv.front() == "replay") {
    throw Error(ErrorCode::Malformed, "manifest does not describe a replayable command");
  }
  return Runner(m.argv, out_, err_).run();
}

int Runner::run() {
  CLI::App app{"k-t NEXT dynamic MRI reconstruction"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  const auto add_acq = [this](CLI::App* c) {
    c->add_option("--accel", f_.accel, "acceleration factor R")->check(CLI::PositiveNumber);
    c->add_option("--center", f_.center, "always-sampled central lines")->check(CLI::NonNegativeNumber);
  };
  const auto add_dims = [this](CLI::App* c) {
    c->add_option("--frames", f_.frames, "temporal frames")->check(CLI::PositiveNumber);
    c->add_option("--rows", f_.rows, "readout samples")->check(CLI::PositiveNumber);
    c->add_option("--cols", f_.cols, "phase-encode lines")->check(CLI::PositiveNumber);
  };
  const auto add_common = [this](CLI::App* c) {
    c->add_flag("--deterministic", f_.deterministic, "single-threaded, bit-reproducible execution");
    c->add_option("--seed", f_.seed, "random seed");
  };

  auto* mask = app.add_subcommand("mask", "write a shear-grid k-t sampling mask (CKM1)");
  add_acq(mask);
  add_dims(mask);
  add_common(mask);
  mask->add_option("--output", f_.output, "mask file");

  auto* simulate = app.add_subcommand("simulate", "phantom generation and retrospective undersampling");
  add_acq(simulate);
  add_dims(simulate);
  add_common(simulate);
  simulate->add_option("--mask", f_.mask, "use this mask instead of generating one");
  simulate->add_option("--output", f_.output, "output prefix");

  auto* train = app.add_subcommand("train", "train k-t NEXT on fully sampled sequences");
  add_acq(train);
  add_common(train);
  train->add_option("--input", f_.input, "ground-truth sequences (CKT1)");
  train->add_option("--mask", f_.mask, "fixed acquisition mask");
  train->add_option("--steps", f_.steps, "ADAM steps");
  train->add_option("--cascades", f_.cascades, "number of cascades")->check(CLI::PositiveNumber);
  train->add_option("--channels", f_.channels, "feature channels")->check(CLI::PositiveNumber);
  train->add_option("--lr", f_.lr, "learning rate")->check(CLI::PositiveNumber);
  train->add_option("--lambda", f_.lambda, "data-consistency weight, or inf");
  train->add_option("--checkpoint", f_.checkpoint, "checkpoint to write (KTNP)");
  train->add_option("--output", f_.output, "training history CSV");
  train->add_flag("--augment", f_.augment, "random rotation and scaling on the fly");

  auto* recon = app.add_subcommand("reconstruct", "reconstruct an undersampled sequence");
  add_common(recon);
  recon->add_option("--input", f_.input, "k-space sequence (CKT1)");
  recon->add_option("--mask", f_.mask, "acquisition mask (CKM1)");
  recon->add_option("--checkpoint", f_.checkpoint, "trained model (KTNP)");
  recon->add_option("--lambda", f_.lambda, "override the data-consistency weight");
  recon->add_option("--output", f_.output, "reconstructed sequence (CKT1)");
  recon->add_flag("--intermediates", f_.intermediates, "also write every cascade's image and x-f outputs");

  auto* eval = app.add_subcommand("evaluate", "PSNR/SSIM/HFEN against references, with zero-filled baselines");
  add_common(eval);
  eval->add_option("--input", f_.input, "reconstructions");
  eval->add_option("--reference", f_.reference, "fully sampled references, one per input");
  eval->add_option("--kspace", f_.kspace, "acquired k-space, one per input");
  eval->add_option("--mask", f_.mask, "acquisition mask");
  eval->add_option("--output", f_.output, "metrics CSV");

  auto* render = app.add_subcommand("render", "write PGM magnitude frames, error maps, x-t and x-f views");
  add_common(render);
  render->add_option("--input", f_.input, "sequence to render");
  render->add_option("--reference", f_.reference, "reference for error maps, amplified 6 times");
  render->add_option("--row", f_.row, "readout row for x-t and x-f views (default: centre)");
  render->add_option("--output", f_.output, "output directory");

  auto* replay = app.add_subcommand("replay", "re-run a command from its manifest");
  replay->add_option("--input", f_.input, "manifest JSON");

  try {
    std::vector<std::string> reversed(argv_.rbegin(), argv_.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out_, err_);
    return code == 0 ? kOk : kFlagError;
  }

  try {
    if (*mask) cmd_mask();
    else if (*simulate) cmd_simulate();
    else if (*train) cmd_train();
    else if (*recon) cmd_reconstruct();
    else if (*eval) cmd_evaluate();
    else if (*render) cmd_render();
    else if (*replay) return cmd_replay();
  } catch (const Error& e) {
    err_ << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err_ << "error: " << e.what() << "\n";
    return kIoError;
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return Runner(args, out, err).run();
}

}  // namespace ktnext::cli
