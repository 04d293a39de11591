#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ktnext/error.hpp"
#include "ktnext/signal_core.hpp"

namespace ktnext::cli {

enum ExitCode : int {
  kOk = 0,
  kFlagError = 2,
  kIoError = 3,
  kFormatError = 4,
  kNumericError = 5,
};

int exit_code_for(ErrorCode code) noexcept;

/// Runs one command line (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::string config;  // JSON object text of the parsed flags
  std::uint64_t seed = 0;
  bool deterministic = false;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string timestamp;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& path);

/// Binary PGM (P5, maxval 255); `values` row-major in [0, 1], clamped.
void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<double>& values);

/// Magnitude of frame t scaled by `peak`.
std::vector<double> magnitude_frame(const ComplexVolume& v, std::size_t t, double peak);
/// min(1, gain * |rec - gt| / peak) for frame t.
std::vector<double> error_frame(const ComplexVolume& rec, const ComplexVolume& gt, std::size_t t, double peak,
                                double gain = 6.0);
/// Magnitudes along x for readout row y over time: a T x X image.
std::vector<double> xt_profile(const ComplexVolume& v, std::size_t row, double peak);
/// |fft_t| of row y as an F x X image, scaled by its own maximum.
std::vector<double> xf_plane(const ComplexVolume& image_seq, std::size_t row);

/// Thread cap from KTNEXT_THREADS (default: hardware concurrency, at least 1).
unsigned thread_cap();

}  // namespace ktnext::cli
