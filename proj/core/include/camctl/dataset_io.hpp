#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "camctl/evaluation.hpp"
#include "camctl/labeler.hpp"
#include "camctl/sampler.hpp"
#include "camctl/training.hpp"

namespace camctl {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary PGM (P5). 8-bit for max_code < 256, otherwise 16-bit big-endian.
void write_pgm(const std::filesystem::path& path, const ImageU16& image, int max_code);
ImageU16 read_pgm(const std::filesystem::path& path, int* max_code = nullptr);

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};
using ImageRgb = Image<Rgb>;

/// Binary PPM (P6), 8-bit.
void write_ppm(const std::filesystem::path& path, const ImageRgb& image);
ImageRgb read_ppm(const std::filesystem::path& path);

/// File names used inside an episode directory.
std::string frame_file_name(std::size_t time_index, int camera_id);
std::string sidecar_file_name(std::size_t time_index, int camera_id);

/// Writes one PGM + JSON sidecar per frame and manifest.json.
void save_episode(const std::filesystem::path& dir, const CollectedDataset& dataset);
CollectedDataset load_episode(const std::filesystem::path& dir);

/// CSV with header; one row per sample. Frame references are relative to
/// `episode_dirs[sample.episode]`.
void write_label_manifest(const std::filesystem::path& path, const std::vector<LabeledSample>& samples,
                          const std::vector<std::string>& episode_dirs);

struct LabelManifest {
  std::vector<std::string> episode_dirs;
  std::vector<LabeledSample> samples;
};
LabelManifest read_label_manifest(const std::filesystem::path& path);

/// Trace CSV: a "# key=value ..." metadata line, then the header
/// time_index,gain_db,exposure_s,m_feat,nfm,mean_intensity,segment.
/// Undefined NFM is written as -1.
void write_trace_csv(std::ostream& out, const EpisodeTrace& trace);
EpisodeTrace read_trace_csv(std::istream& in);
void write_trace_csv(const std::filesystem::path& path, const EpisodeTrace& trace);
EpisodeTrace read_trace_csv(const std::filesystem::path& path);
std::string trace_file_name(const EpisodeTrace& trace);

/// epoch,train_loss,holdout_loss
void write_curve_csv(const std::filesystem::path& path, const std::vector<EpochLog>& curve);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// FNV-1a of a file's bytes.
std::uint64_t file_fingerprint(const std::filesystem::path& path);

}  // namespace camctl
