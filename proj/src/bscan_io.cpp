#include "wsa/bscan_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace wsa {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "BSCN1";

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view token, const std::string& what) {
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
    throw IoError("bscan header: malformed " + what + " '" + std::string(token) + "'");
  }
  return v;
}

long parse_long(std::string_view token, const std::string& what) {
  long v = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
    throw IoError("bscan header: malformed " + what + " '" + std::string(token) + "'");
  }
  return v;
}

void append_le32(std::string& out, float v) {
  const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
  out.push_back(static_cast<char>(bits & 0xff));
  out.push_back(static_cast<char>((bits >> 8) & 0xff));
  out.push_back(static_cast<char>((bits >> 16) & 0xff));
  out.push_back(static_cast<char>((bits >> 24) & 0xff));
}

float read_le32(const unsigned char* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

void atomic_write(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

}  // namespace

std::string annotations_to_json(std::span<const TargetAnnotation> annotations) {
  json targets = json::array();
  for (const TargetAnnotation& t : annotations) {
    targets.push_back({{"x0_m", t.x0_m},
                       {"depth_m", t.depth_m},
                       {"eps_r", t.eps_r},
                       {"amplitude", t.amplitude},
                       {"beta_np_per_m", t.beta_np_per_m},
                       {"label", t.label}});
  }
  return json{{"targets", targets}}.dump(2) + "\n";
}

std::vector<TargetAnnotation> annotations_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed annotation sidecar: ") + e.what());
  }
  std::vector<TargetAnnotation> out;
  try {
    for (const json& jt : j.at("targets")) {
      TargetAnnotation t;
      t.x0_m = jt.at("x0_m").get<double>();
      t.depth_m = jt.at("depth_m").get<double>();
      t.eps_r = jt.at("eps_r").get<double>();
      t.amplitude = jt.at("amplitude").get<double>();
      t.beta_np_per_m = jt.at("beta_np_per_m").get<double>();
      t.label = jt.at("label").get<std::string>();
      t.validate();
      out.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed annotation sidecar: ") + e.what());
  }
  return out;
}

void bscan_write(const BScan& b, std::span<const TargetAnnotation> annotations,
                 const std::string& path) {
  b.validate();  // refuses NaN/Inf samples and bad dims

  std::string bytes;
  bytes.reserve(64 + b.samples.size() * 4);
  bytes.append(kMagic);
  bytes.push_back(' ');
  bytes.append(shortest(static_cast<double>(b.t_samples)));
  bytes.push_back(' ');
  bytes.append(shortest(static_cast<double>(b.x_traces)));
  bytes.push_back(' ');
  bytes.append(shortest(b.dt_ns));
  bytes.push_back(' ');
  bytes.append(shortest(b.dx_m));
  bytes.push_back(' ');
  bytes.append(shortest(b.t0_ns));
  bytes.push_back('\n');
  for (double v : b.samples) append_le32(bytes, static_cast<float>(v));

  atomic_write(path, bytes);
  atomic_write(path + ".json", annotations_to_json(annotations));
}

std::pair<BScan, std::vector<TargetAnnotation>> bscan_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  const std::size_t eol = contents.find('\n');
  if (eol == std::string::npos) throw IoError("bscan '" + path + "': missing header line");
  const std::string header = contents.substr(0, eol);

  std::vector<std::string> tokens;
  {
    std::istringstream ss(header);
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
  }
  if (tokens.empty() || tokens[0] != kMagic) {
    throw IoError("bscan '" + path + "': bad magic '" + (tokens.empty() ? "" : tokens[0]) +
                  "', expected '" + std::string(kMagic) + "'");
  }
  if (tokens.size() != 6) {
    throw IoError("bscan '" + path + "': header needs 5 fields after the magic");
  }

  const long t_samples = parse_long(tokens[1], "T");
  const long x_traces = parse_long(tokens[2], "X");
  if (t_samples < 1 || x_traces < 1) {
    throw IoError("bscan '" + path + "': non-positive grid dims");
  }
  BScan b(static_cast<int>(t_samples), static_cast<int>(x_traces),
          parse_double(tokens[3], "dt_ns"), parse_double(tokens[4], "dx_m"),
          parse_double(tokens[5], "t0_ns"));

  const std::size_t expected = static_cast<std::size_t>(t_samples) * x_traces * 4;
  const std::size_t actual = contents.size() - eol - 1;
  if (actual != expected) {
    throw IoError("bscan '" + path + "': payload holds " + std::to_string(actual) +
                  " bytes, expected " + std::to_string(expected));
  }
  const unsigned char* payload =
      reinterpret_cast<const unsigned char*>(contents.data()) + eol + 1;
  for (std::size_t i = 0; i < b.samples.size(); ++i) {
    b.samples[i] = static_cast<double>(read_le32(payload + i * 4));
  }
  b.validate();

  std::vector<TargetAnnotation> annotations;
  const std::string sidecar = path + ".json";
  if (std::filesystem::exists(sidecar)) {
    std::ifstream side(sidecar);
    if (!side) throw IoError("cannot open sidecar '" + sidecar + "'");
    std::string text((std::istreambuf_iterator<char>(side)), std::istreambuf_iterator<char>());
    annotations = annotations_from_json(text);
  }
  return {std::move(b), std::move(annotations)};
}

std::string report_to_json(std::span<const WeakSignalReport> reports) {
  json arr = json::array();
  for (const WeakSignalReport& r : reports) {
    json flags = json::array();
    if (r.low_contrast) flags.push_back("low_contrast");
    if (r.clutter_dominance) flags.push_back("clutter_dominance");
    if (r.geometric_atrophy) flags.push_back("geometric_atrophy");
    if (r.deep_attenuated) flags.push_back("deep_attenuated");
    json entry = {{"contrast", r.contrast},
                  {"continuity", r.continuity},
                  {"dissipation_db", r.dissipation_db},
                  {"depth_m", r.depth_m},
                  {"flags", flags},
                  {"is_weak", r.is_weak}};
    // JSON has no literal for infinities; encode the sentinel as a string.
    if (std::isinf(r.scr_db)) {
      entry["scr_db"] = r.scr_db > 0 ? "+inf" : "-inf";
    } else {
      entry["scr_db"] = r.scr_db;
    }
    arr.push_back(std::move(entry));
  }
  return arr.dump(2) + "\n";
}

}  // namespace wsa
