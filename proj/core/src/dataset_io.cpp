#include "camctl/dataset_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "camctl/hash.hpp"
#include "json.hpp"

namespace camctl {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("invalid number for " + what + ": '" + s + "'");
  }
}

long long to_int(const std::string& s, const std::string& what) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw IoError("invalid integer for " + what + ": '" + s + "'");
  }
  return v;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

// Reads the next header token of a PNM file, skipping comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

json frame_sidecar(const Frame& f, std::uint64_t seed) {
  return {{"time_index", f.time_index},
          {"camera_id", f.camera_id},
          {"gain_db", f.params.gain_db()},
          {"exposure_s", f.params.exposure_s()},
          {"seed", seed}};
}

Frame load_frame(const std::filesystem::path& dir, std::size_t t, int camera) {
  Frame f;
  f.image = read_pgm(dir / frame_file_name(t, camera), &f.max_code);
  const json side = json::parse(read_text_file(dir / sidecar_file_name(t, camera)));
  f.time_index = side.at("time_index").get<std::int64_t>();
  f.camera_id = side.at("camera_id").get<int>();
  f.params = CameraParams(side.at("gain_db").get<double>(), side.at("exposure_s").get<double>());
  if (f.time_index != static_cast<std::int64_t>(t) || f.camera_id != camera) {
    throw IoError("sidecar does not match frame " + frame_file_name(t, camera));
  }
  return f;
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const ImageU16& image, int max_code) {
  if (max_code < 1 || max_code > 65535) throw InvalidArgument("PGM max value must be in [1, 65535]");
  auto out = open_out(path, std::ios::binary);
  out << "P5\n" << image.width() << " " << image.height() << "\n" << max_code << "\n";
  const auto px = image.pixels();
  std::string buf;
  if (max_code < 256) {
    buf.resize(px.size());
    for (std::size_t i = 0; i < px.size(); ++i) buf[i] = static_cast<char>(px[i]);
  } else {
    buf.resize(2 * px.size());
    for (std::size_t i = 0; i < px.size(); ++i) {
      buf[2 * i] = static_cast<char>(px[i] >> 8);
      buf[2 * i + 1] = static_cast<char>(px[i] & 0xff);
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

ImageU16 read_pgm(const std::filesystem::path& path, int* max_code) {
  auto in = open_in(path, std::ios::binary);
  if (pnm_token(in) != "P5") throw IoError("'" + path.string() + "' is not a binary PGM");
  const auto w = to_int(pnm_token(in), "PGM width");
  const auto h = to_int(pnm_token(in), "PGM height");
  const auto maxval = to_int(pnm_token(in), "PGM maxval");
  if (w <= 0 || h <= 0 || maxval < 1 || maxval > 65535) throw IoError("bad PGM header in '" + path.string() + "'");
  ImageU16 img(static_cast<int>(w), static_cast<int>(h));
  const std::size_t bytes = static_cast<std::size_t>(w * h) * (maxval < 256 ? 1 : 2);
  std::string buf(bytes, '\0');
  in.read(buf.data(), static_cast<std::streamsize>(bytes));
  if (in.gcount() != static_cast<std::streamsize>(bytes)) throw IoError("truncated PGM '" + path.string() + "'");
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = maxval < 256 ? static_cast<std::uint8_t>(buf[i])
                         : static_cast<std::uint16_t>((static_cast<std::uint8_t>(buf[2 * i]) << 8) |
                                                      static_cast<std::uint8_t>(buf[2 * i + 1]));
  }
  if (max_code) *max_code = static_cast<int>(maxval);
  return img;
}

void write_ppm(const std::filesystem::path& path, const ImageRgb& image) {
  auto out = open_out(path, std::ios::binary);
  out << "P6\n" << image.width() << " " << image.height() << "\n255\n";
  for (const Rgb& p : image.pixels()) {
    const char rgb[3] = {static_cast<char>(p.r), static_cast<char>(p.g), static_cast<char>(p.b)};
    out.write(rgb, 3);
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

ImageRgb read_ppm(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  if (pnm_token(in) != "P6") throw IoError("'" + path.string() + "' is not a binary PPM");
  const auto w = to_int(pnm_token(in), "PPM width");
  const auto h = to_int(pnm_token(in), "PPM height");
  const auto maxval = to_int(pnm_token(in), "PPM maxval");
  if (w <= 0 || h <= 0 || maxval != 255) throw IoError("unsupported PPM header in '" + path.string() + "'");
  ImageRgb img(static_cast<int>(w), static_cast<int>(h));
  for (Rgb& p : img.pixels()) {
    char rgb[3];
    if (!in.read(rgb, 3)) throw IoError("truncated PPM '" + path.string() + "'");
    p = {static_cast<std::uint8_t>(rgb[0]), static_cast<std::uint8_t>(rgb[1]), static_cast<std::uint8_t>(rgb[2])};
  }
  return img;
}

std::string frame_file_name(std::size_t time_index, int camera_id) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "frame_%06zu_cam%d.pgm", time_index, camera_id);
  return buf;
}

std::string sidecar_file_name(std::size_t time_index, int camera_id) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "frame_%06zu_cam%d.json", time_index, camera_id);
  return buf;
}

void save_episode(const std::filesystem::path& dir, const CollectedDataset& dataset) {
  std::filesystem::create_directories(dir);
  json records = json::array();
  for (std::size_t t = 0; t < dataset.size(); ++t) {
    const auto& rec = dataset.records[t];
    for (const Frame* f : {&rec.reference, &rec.perturbed}) {
      write_pgm(dir / frame_file_name(t, f->camera_id), f->image, f->max_code);
      write_text_file(dir / sidecar_file_name(t, f->camera_id), frame_sidecar(*f, dataset.seed).dump(2) + "\n");
    }
    records.push_back({{"time_index", t},
                       {"quadrant_index", rec.quadrant_index},
                       {"camera1", frame_file_name(t, 1)},
                       {"camera2", frame_file_name(t, 2)}});
  }
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(dataset.scene_hash));
  const json manifest = {{"scene_hash", hash},
                         {"controller", dataset.controller_identity},
                         {"seed", dataset.seed},
                         {"round", dataset.round},
                         {"diminishing_returns", dataset.diminishing_returns},
                         {"timesteps", dataset.size()},
                         {"records", records}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

CollectedDataset load_episode(const std::filesystem::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_text_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw IoError("bad episode manifest in '" + dir.string() + "': " + e.what());
  }
  CollectedDataset ds;
  ds.controller_identity = manifest.at("controller").get<std::string>();
  ds.seed = manifest.at("seed").get<std::uint64_t>();
  ds.scene_hash = std::stoull(manifest.at("scene_hash").get<std::string>(), nullptr, 16);
  ds.round = manifest.at("round").get<int>();
  ds.diminishing_returns = manifest.at("diminishing_returns").get<bool>();
  const auto& records = manifest.at("records");
  for (std::size_t t = 0; t < records.size(); ++t) {
    CollectedRecord rec;
    rec.quadrant_index = records[t].at("quadrant_index").get<int>();
    rec.reference = load_frame(dir, t, 1);
    rec.perturbed = load_frame(dir, t, 2);
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

void write_label_manifest(const std::filesystem::path& path, const std::vector<LabeledSample>& samples,
                          const std::vector<std::string>& episode_dirs) {
  auto out = open_out(path);
  out << "# episodes";
  for (const auto& d : episode_dirs) out << ' ' << d;
  out << "\nepisode,time_index,frame0,frame1,frame2,gain0_db,exposure0_s,gain1_db,exposure1_s,gain2_db,exposure2_s,"
         "target_gain,target_exposure,metric,weight\n";
  for (const auto& s : samples) {
    if (s.episode >= episode_dirs.size()) throw InvalidArgument("sample episode has no directory");
    out << s.episode << ',' << s.time_index;
    for (const auto& f : s.frames) out << ',' << frame_file_name(f.time_index, f.camera_id);
    for (const auto& p : s.params) out << ',' << fmt_double(p.gain_db()) << ',' << fmt_double(p.exposure_s());
    out << ',' << fmt_double(s.target.gain) << ',' << fmt_double(s.target.exposure) << ',' << to_string(s.metric)
        << ',' << fmt_double(s.weight) << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

LabelManifest read_label_manifest(const std::filesystem::path& path) {
  auto in = open_in(path);
  LabelManifest m;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# episodes", 0) != 0) throw IoError("label manifest lacks episode line");
  std::istringstream dirs(line.substr(10));
  for (std::string d; dirs >> d;) m.episode_dirs.push_back(d);
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 15) throw IoError("label manifest row has " + std::to_string(f.size()) + " fields");
    LabeledSample s;
    s.episode = static_cast<std::size_t>(to_int(f[0], "episode"));
    s.time_index = static_cast<std::size_t>(to_int(f[1], "time_index"));
    for (int k = 0; k < 3; ++k) {
      unsigned long long t = 0;
      int cam = 0;
      if (std::sscanf(f[2 + k].c_str(), "frame_%llu_cam%d.pgm", &t, &cam) != 2) {
        throw IoError("bad frame reference '" + f[2 + k] + "'");
      }
      s.frames[k] = {static_cast<std::size_t>(t), cam};
      s.params[k] = CameraParams(to_double(f[5 + 2 * k], "gain"), to_double(f[6 + 2 * k], "exposure"));
    }
    s.target = {to_double(f[11], "target_gain"), to_double(f[12], "target_exposure")};
    s.metric = parse_label_metric(f[13]);
    s.weight = to_double(f[14], "weight");
    m.samples.push_back(s);
  }
  return m;
}

void write_trace_csv(std::ostream& out, const EpisodeTrace& trace) {
  out << "# controller=" << trace.controller << " scenario=" << trace.scenario << " episode=" << trace.episode
      << " seed=" << trace.seed << "\n";
  out << "time_index,gain_db,exposure_s,m_feat,nfm,mean_intensity,segment\n";
  for (const auto& r : trace.rows) {
    out << r.time_index << ',' << fmt_double(r.params.gain_db()) << ',' << fmt_double(r.params.exposure_s()) << ','
        << r.m_feat << ',' << r.nfm << ',' << fmt_double(r.mean_intensity) << ',' << to_string(r.segment) << '\n';
  }
}

EpisodeTrace read_trace_csv(std::istream& in) {
  EpisodeTrace trace;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw IoError("trace lacks its metadata line");
  std::istringstream meta(line.substr(2));
  for (std::string kv; meta >> kv;) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw IoError("bad trace metadata '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    if (key == "controller") {
      trace.controller = value;
    } else if (key == "scenario") {
      trace.scenario = value;
    } else if (key == "episode") {
      trace.episode = static_cast<std::size_t>(to_int(value, "episode"));
    } else if (key == "seed") {
      trace.seed = std::stoull(value);
    }
  }
  if (!std::getline(in, line) || line.rfind("time_index,", 0) != 0) throw IoError("trace lacks its header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) throw IoError("trace row has " + std::to_string(f.size()) + " fields");
    TraceRow r;
    r.time_index = static_cast<std::size_t>(to_int(f[0], "time_index"));
    r.params = CameraParams(to_double(f[1], "gain_db"), to_double(f[2], "exposure_s"));
    r.m_feat = static_cast<int>(to_int(f[3], "m_feat"));
    r.nfm = static_cast<int>(to_int(f[4], "nfm"));
    r.mean_intensity = to_double(f[5], "mean_intensity");
    r.segment = parse_segment_tag(f[6]);
    trace.rows.push_back(r);
  }
  return trace;
}

void write_trace_csv(const std::filesystem::path& path, const EpisodeTrace& trace) {
  auto out = open_out(path);
  write_trace_csv(out, trace);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

EpisodeTrace read_trace_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_trace_csv(in);
}

std::string trace_file_name(const EpisodeTrace& trace) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "trace_%s_%03zu_%s.csv", trace.scenario.c_str(), trace.episode,
                trace.controller.c_str());
  return buf;
}

void write_curve_csv(const std::filesystem::path& path, const std::vector<EpochLog>& curve) {
  auto out = open_out(path);
  out << "epoch,train_loss,holdout_loss\n";
  for (const auto& e : curve) {
    out << e.epoch << ',' << fmt_double(e.train_loss) << ',' << fmt_double(e.holdout_loss) << '\n';
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t file_fingerprint(const std::filesystem::path& path) {
  Fnv1a h;
  h.update(read_text_file(path));
  return h.digest();
}

}  // namespace camctl
