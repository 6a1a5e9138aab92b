#include "dddm/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dddm/errors.hpp"
#include "dddm/toy.hpp"

namespace dddm {

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw UsageError("cannot write '" + tmp + "'");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw UsageError("short write to '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw UsageError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string fmt_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw UsageError(where + ": expected a number, got '" + s + "'");
  return v;
}

std::size_t parse_index(const std::string& s, const std::string& where) {
  std::size_t v = 0;
  const char* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw UsageError(where + ": expected a non-negative integer, got '" + s + "'");
  return v;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw UsageError("csv: missing column '" + name + "'");
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      if (!line.empty() && line[0] == '#') {
        t.comments.push_back(line);
        continue;
      }
      if (line.empty()) continue;
      t.header = split(line);
      have_header = true;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> row = split(line);
    if (row.size() != t.header.size())
      throw UsageError(origin + " row " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                       " fields, found " + std::to_string(row.size()));
    t.rows.push_back(std::move(row));
  }
  if (!have_header) throw UsageError(origin + ": missing header line");
  return t;
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path), path); }

std::string metrics_csv(const std::vector<MetricsRow>& rows, const std::string& config_hash, std::uint64_t seed) {
  std::string out = "# config=" + config_hash + " seed=" + std::to_string(seed) + "\n";
  out += "epoch,L_diff,L_rec,L_total,lr,wall_time\n";
  for (const MetricsRow& r : rows)
    out += std::to_string(r.epoch) + "," + fmt_double(r.l_diff) + "," + fmt_double(r.l_rec) + "," +
           fmt_double(r.l_total) + "," + fmt_double(r.lr) + "," + fmt_double(r.wall_time) + "\n";
  return out;
}

std::string samples_csv(const std::vector<SampleRow>& rows, const std::string& config_hash, std::uint64_t seed) {
  std::string out = "# config=" + config_hash + " seed=" + std::to_string(seed) + "\n";
  out += "source_index,source_style,target_style,token,pred_style,pred_token";
  const std::size_t d = rows.empty() ? 0 : rows[0].x.size();
  for (std::size_t j = 0; j < d; ++j) out += ",x" + std::to_string(j);
  out += "\n";
  for (const SampleRow& r : rows) {
    if (r.x.size() != d) throw ShapeError("samples_csv: ragged sample vectors");
    out += std::to_string(r.source_index) + "," + std::to_string(r.source_style) + "," + std::to_string(r.target_style) +
           "," + std::to_string(r.token) + "," + std::to_string(r.pred_style) + "," + std::to_string(r.pred_token);
    for (double v : r.x) out += "," + fmt_double(v);
    out += "\n";
  }
  return out;
}

std::vector<SampleRow> read_samples(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::size_t c_si = t.column("source_index"), c_ss = t.column("source_style"), c_ts = t.column("target_style"),
                    c_tok = t.column("token"), c_ps = t.column("pred_style"), c_pt = t.column("pred_token");
  std::vector<std::size_t> xcols;
  for (std::size_t j = 0;; ++j) {
    bool found = false;
    for (std::size_t i = 0; i < t.header.size(); ++i)
      if (t.header[i] == "x" + std::to_string(j)) xcols.push_back(i), found = true;
    if (!found) break;
  }
  if (xcols.empty()) throw UsageError(path + ": no x0.. columns");
  std::vector<SampleRow> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = path + " row " + std::to_string(r + 1);
    SampleRow s;
    s.source_index = parse_index(row[c_si], where);
    s.source_style = parse_index(row[c_ss], where);
    s.target_style = parse_index(row[c_ts], where);
    s.token = parse_index(row[c_tok], where);
    s.pred_style = parse_index(row[c_ps], where);
    s.pred_token = parse_index(row[c_pt], where);
    for (std::size_t c : xcols) s.x.push_back(parse_double(row[c], where));
    out.push_back(std::move(s));
  }
  return out;
}

// Dataset export: one CSV row per sample plus a JSON sidecar holding the
// generator configuration and per-style pitch statistics.

std::string sidecar_path(const std::string& csv_path) { return csv_path + ".json"; }

namespace {

nlohmann::json toy_to_json(const ToyConfig& c) {
  return {{"seed", c.seed},
          {"n_styles", c.n_styles},
          {"n_heldout", c.n_heldout},
          {"n_tokens", c.n_tokens},
          {"data_dim", c.data_dim},
          {"style_dim", c.style_dim},
          {"token_dim", c.token_dim},
          {"content_dim", c.content_dim},
          {"n_frames", c.n_frames},
          {"noise_std", c.noise_std},
          {"token_scale", c.token_scale},
          {"pitch_scale", c.pitch_scale},
          {"style_separation", c.style_separation},
          {"content_scale", c.content_scale},
          {"style_leak", c.style_leak},
          {"frame_noise", c.frame_noise},
          {"pitch_mean_lo", c.pitch_mean_lo},
          {"pitch_mean_hi", c.pitch_mean_hi},
          {"pitch_std_lo", c.pitch_std_lo},
          {"pitch_std_hi", c.pitch_std_hi}};
}

ToyConfig toy_from_json(const nlohmann::json& j) {
  ToyConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.n_styles = j.at("n_styles").get<std::size_t>();
  c.n_heldout = j.at("n_heldout").get<std::size_t>();
  c.n_tokens = j.at("n_tokens").get<std::size_t>();
  c.data_dim = j.at("data_dim").get<std::size_t>();
  c.style_dim = j.at("style_dim").get<std::size_t>();
  c.token_dim = j.at("token_dim").get<std::size_t>();
  c.content_dim = j.at("content_dim").get<std::size_t>();
  c.n_frames = j.at("n_frames").get<std::size_t>();
  c.noise_std = j.at("noise_std").get<double>();
  c.token_scale = j.at("token_scale").get<double>();
  c.pitch_scale = j.at("pitch_scale").get<double>();
  c.style_separation = j.at("style_separation").get<double>();
  c.content_scale = j.at("content_scale").get<double>();
  c.style_leak = j.at("style_leak").get<double>();
  c.frame_noise = j.at("frame_noise").get<double>();
  c.pitch_mean_lo = j.at("pitch_mean_lo").get<double>();
  c.pitch_mean_hi = j.at("pitch_mean_hi").get<double>();
  c.pitch_std_lo = j.at("pitch_std_lo").get<double>();
  c.pitch_std_hi = j.at("pitch_std_hi").get<double>();
  return c;
}

}  // namespace

void save_dataset(const ToyDataset& d, const ToyGenerator& gen, const std::string& csv_path) {
  const std::size_t dim = d.x.cols(), cd = d.content.cols(), sd = d.frames.cols();
  std::string out = "style,token,pitch,pitch_z";
  for (std::size_t j = 0; j < dim; ++j) out += ",x" + std::to_string(j);
  for (std::size_t j = 0; j < cd; ++j) out += ",c" + std::to_string(j);
  for (std::size_t k = 0; k < d.n_frames; ++k)
    for (std::size_t j = 0; j < sd; ++j) out += ",f" + std::to_string(k) + "_" + std::to_string(j);
  out += "\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    out += std::to_string(d.style[i]) + "," + std::to_string(d.token[i]) + "," + fmt_double(d.pitch[i]) + "," +
           fmt_double(d.pitch_z[i]);
    for (std::size_t j = 0; j < dim; ++j) out += "," + fmt_double(d.x(i, j));
    for (std::size_t j = 0; j < cd; ++j) out += "," + fmt_double(d.content(i, j));
    for (std::size_t k = 0; k < d.n_frames; ++k)
      for (std::size_t j = 0; j < sd; ++j) out += "," + fmt_double(d.frames(i * d.n_frames + k, j));
    out += "\n";
  }
  atomic_write(csv_path, out);

  nlohmann::json side;
  side["generator"] = toy_to_json(gen.config());
  side["n_rows"] = d.size();
  side["n_frames"] = d.n_frames;
  nlohmann::json stats = nlohmann::json::array();
  for (std::size_t k = 0; k < d.pitch_stats.size(); ++k)
    stats.push_back({{"style", k}, {"mean", d.pitch_stats[k].mean}, {"std", d.pitch_stats[k].std}});
  side["pitch_stats"] = stats;
  atomic_write(sidecar_path(csv_path), side.dump(2) + "\n");
}

ToyDataset load_dataset(const std::string& csv_path, ToyConfig* cfg_out) {
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(read_file(sidecar_path(csv_path)));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(sidecar_path(csv_path) + ": " + e.what());
  }
  ToyConfig cfg;
  std::size_t n_frames = 0;
  try {
    cfg = toy_from_json(side.at("generator"));
    n_frames = side.at("n_frames").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(sidecar_path(csv_path) + ": " + e.what());
  }
  const CsvTable t = read_csv(csv_path);
  const std::size_t dim = cfg.data_dim, cd = cfg.content_dim, sd = cfg.style_dim;
  if (t.header.size() != 4 + dim + cd + n_frames * sd)
    throw UsageError(csv_path + ": column count does not match the sidecar dimensions");
  ToyDataset d;
  const std::size_t n = t.rows.size();
  d.x = Tensor(n, dim);
  d.content = Tensor(n, cd);
  d.frames = Tensor(n * n_frames, sd);
  d.n_frames = n_frames;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = t.rows[i];
    const std::string where = csv_path + " row " + std::to_string(i + 1);
    d.style.push_back(parse_index(row[0], where));
    d.token.push_back(parse_index(row[1], where));
    d.pitch.push_back(parse_double(row[2], where));
    d.pitch_z.push_back(parse_double(row[3], where));
    if (d.style.back() >= cfg.n_styles + cfg.n_heldout || d.token.back() >= cfg.n_tokens)
      throw UsageError(where + ": style or token id out of range");
    std::size_t c = 4;
    for (std::size_t j = 0; j < dim; ++j) d.x(i, j) = parse_double(row[c++], where);
    for (std::size_t j = 0; j < cd; ++j) d.content(i, j) = parse_double(row[c++], where);
    for (std::size_t k = 0; k < n_frames; ++k)
      for (std::size_t j = 0; j < sd; ++j) d.frames(i * n_frames + k, j) = parse_double(row[c++], where);
  }
  d.pitch_stats = pitch_stats_by_style(d, cfg.n_styles + cfg.n_heldout);
  if (cfg_out) *cfg_out = cfg;
  return d;
}

}  // namespace dddm
