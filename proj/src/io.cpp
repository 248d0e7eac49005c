#include "plmm/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace plmm {

namespace {

constexpr char kMagic[] = "HSM1";
constexpr std::uint64_t kMaxHeaderDim = std::uint64_t{1} << 40;

std::uint64_t parse_header_dim(const std::string& token) {
  if (token.empty() || token.size() > 15) throw IoError("HSM: bad dimension '" + token + "'");
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || (token.size() > 1 && token[0] == '0'))
    throw IoError("HSM: bad dimension '" + token + "'");
  if (v > kMaxHeaderDim) throw IoError("HSM: dimension too large");
  return v;
}

}  // namespace

void write_hsm(std::ostream& out, const Matrix& X) {
  out << kMagic << ' ' << X.rows() << ' ' << X.cols() << '\n';
  std::vector<unsigned char> buf(static_cast<std::size_t>(X.size()) * 8);
  std::size_t pos = 0;
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < X.cols(); ++j) {
      const auto bits = std::bit_cast<std::uint64_t>(X(i, j));
      for (int b = 0; b < 8; ++b) buf[pos++] = static_cast<unsigned char>(bits >> (8 * b));
    }
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("HSM: write failed");
}

Matrix read_hsm(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw IoError("HSM: missing header");
  // getline consumed the '\n'; a file without one is rejected by eof().
  if (in.eof()) throw IoError("HSM: header not terminated by newline");
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (true) {
    const std::size_t sp = header.find(' ', start);
    tokens.push_back(header.substr(start, sp - start));
    if (sp == std::string::npos) break;
    start = sp + 1;
  }
  if (tokens.size() != 3 || tokens[0] != kMagic) throw IoError("HSM: malformed header '" + header + "'");
  const std::uint64_t rows = parse_header_dim(tokens[1]);
  const std::uint64_t cols = parse_header_dim(tokens[2]);
  if (cols != 0 && rows > (kMaxHeaderDim / cols)) throw IoError("HSM: matrix too large");

  const std::size_t count = static_cast<std::size_t>(rows * cols);
  std::vector<unsigned char> buf(count * 8);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) throw IoError("HSM: truncated payload");
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("HSM: trailing bytes after payload");

  Matrix X(static_cast<Index>(rows), static_cast<Index>(cols));
  std::size_t pos = 0;
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < X.cols(); ++j) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[pos++]) << (8 * b);
      X(i, j) = std::bit_cast<double>(bits);
    }
  }
  return X;
}

std::string encode_hsm(const Matrix& X) {
  std::ostringstream out(std::ios::binary);
  write_hsm(out, X);
  return out.str();
}

Matrix decode_hsm(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_hsm(in);
}

void save_hsm(const std::filesystem::path& path, const Matrix& X) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_hsm(out, X);
}

Matrix load_hsm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return read_hsm(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Matrix pack_variability(const std::vector<Matrix>& dM) {
  require_shape(!dM.empty(), "pack_variability: empty stack");
  const Index L = dM.front().rows(), K = dM.front().cols();
  Matrix out(L * K, static_cast<Index>(dM.size()));
  for (std::size_t n = 0; n < dM.size(); ++n) {
    require_shape(dM[n].rows() == L && dM[n].cols() == K, "pack_variability: ragged stack");
    out.col(static_cast<Index>(n)) = dM[n].reshaped();  // column-major: l + L k
  }
  return out;
}

std::vector<Matrix> unpack_variability(const Matrix& packed, Index bands, Index endmembers) {
  require_shape(bands > 0 && endmembers > 0 && packed.rows() == bands * endmembers,
                "unpack_variability: row count is not L * K");
  std::vector<Matrix> out(static_cast<std::size_t>(packed.cols()));
  for (Index n = 0; n < packed.cols(); ++n)
    out[static_cast<std::size_t>(n)] = packed.col(n).reshaped(bands, endmembers);
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw NumericError("format_double failed");
  return std::string(buf, ptr);
}

double parse_double(const std::string& text, const std::string& key) {
  std::string t = text;
  if (!t.empty() && t[0] == '+') t.erase(0, 1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ConfigError("'" + key + "': cannot parse '" + text + "' as a number");
  return v;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

long long parse_integer(const std::string& text, const std::string& key) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError("'" + key + "': cannot parse '" + text + "' as an integer");
  return v;
}

std::uint64_t parse_unsigned(const std::string& text, const std::string& key) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError("'" + key + "': cannot parse '" + text + "' as an unsigned integer");
  return v;
}

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  throw ConfigError("'" + key + "': expected true or false, got '" + text + "'");
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (kv.count(key)) throw ConfigError("duplicate key '" + key + "'");
    kv[key] = trim(t.substr(eq + 1));
  }
  return kv;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

RunConfig parse_run_config(const std::string& text, RunConfig cfg) {
  for (const auto& [key, value] : parse_key_values(text)) {
    if (key == "alpha") cfg.alpha = parse_double(value, key);
    else if (key == "beta") cfg.beta = parse_double(value, key);
    else if (key == "gamma") cfg.gamma = parse_double(value, key);
    else if (key == "psi_kind") cfg.psi = psi_kind_from_string(value);
    else if (key == "eps_abs") cfg.admm.eps_abs = parse_double(value, key);
    else if (key == "eps_rel") cfg.admm.eps_rel = parse_double(value, key);
    else if (key == "tau_incr") cfg.admm.tau_incr = parse_double(value, key);
    else if (key == "tau_decr") cfg.admm.tau_decr = parse_double(value, key);
    else if (key == "mu") cfg.admm.mu = parse_double(value, key);
    else if (key == "rho0_A") cfg.admm.rho0_A = parse_double(value, key);
    else if (key == "rho0_M") cfg.admm.rho0_M = parse_double(value, key);
    else if (key == "rho0_dM") cfg.admm.rho0_dM = parse_double(value, key);
    else if (key == "outer_tol") cfg.outer_tol = parse_double(value, key);
    else if (key == "max_outer_iters") cfg.max_outer_iters = static_cast<int>(parse_integer(value, key));
    else if (key == "max_inner_iters") cfg.admm.max_inner_iters = static_cast<int>(parse_integer(value, key));
    else if (key == "seed") cfg.seed = parse_unsigned(value, key);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  return cfg;
}

std::string format_run_config(const RunConfig& c) {
  std::ostringstream o;
  o << "alpha=" << format_double(c.alpha) << '\n'
    << "beta=" << format_double(c.beta) << '\n'
    << "gamma=" << format_double(c.gamma) << '\n'
    << "psi_kind=" << to_string(c.psi) << '\n'
    << "eps_abs=" << format_double(c.admm.eps_abs) << '\n'
    << "eps_rel=" << format_double(c.admm.eps_rel) << '\n'
    << "tau_incr=" << format_double(c.admm.tau_incr) << '\n'
    << "tau_decr=" << format_double(c.admm.tau_decr) << '\n'
    << "mu=" << format_double(c.admm.mu) << '\n'
    << "rho0_A=" << format_double(c.admm.rho0_A) << '\n'
    << "rho0_M=" << format_double(c.admm.rho0_M) << '\n'
    << "rho0_dM=" << format_double(c.admm.rho0_dM) << '\n'
    << "outer_tol=" << format_double(c.outer_tol) << '\n'
    << "max_outer_iters=" << c.max_outer_iters << '\n'
    << "max_inner_iters=" << c.admm.max_inner_iters << '\n'
    << "seed=" << c.seed << '\n';
  return o.str();
}

std::string format_synthetic_spec(const SyntheticSpec& s) {
  std::ostringstream o;
  o << "width=" << s.width << '\n'
    << "height=" << s.height << '\n'
    << "bands=" << s.bands << '\n'
    << "endmembers=" << s.endmembers << '\n'
    << "cvar_top=" << format_double(s.cvar_top) << '\n'
    << "cvar_bottom=" << format_double(s.cvar_bottom) << '\n'
    << "snr_db=" << format_double(s.snr_db) << '\n'
    << "pure_pixels=" << (s.pure_pixels ? "true" : "false") << '\n'
    << "max_abundance=" << format_double(s.max_abundance) << '\n'
    << "seed=" << s.seed << '\n'
    << "reference=" << (s.reference.size() > 0 ? "file" : "builtin") << '\n';
  return o.str();
}

SyntheticSpec parse_synthetic_spec(const std::string& text) {
  SyntheticSpec s;
  for (const auto& [key, value] : parse_key_values(text)) {
    if (key == "width") s.width = parse_integer(value, key);
    else if (key == "height") s.height = parse_integer(value, key);
    else if (key == "bands") s.bands = parse_integer(value, key);
    else if (key == "endmembers") s.endmembers = parse_integer(value, key);
    else if (key == "cvar_top") s.cvar_top = parse_double(value, key);
    else if (key == "cvar_bottom") s.cvar_bottom = parse_double(value, key);
    else if (key == "snr_db") s.snr_db = parse_double(value, key);
    else if (key == "pure_pixels") s.pure_pixels = parse_bool(value, key);
    else if (key == "max_abundance") s.max_abundance = parse_double(value, key);
    else if (key == "seed") s.seed = parse_unsigned(value, key);
    else if (key == "reference") continue;
    else throw ConfigError("unknown spec key '" + key + "'");
  }
  return s;
}

std::string objective_trace_csv(const std::vector<ObjectiveTerms>& trace) {
  std::ostringstream o;
  o << "iteration,J,data_term,phi,psi,upsilon\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const ObjectiveTerms& t = trace[i];
    o << i << ',' << format_double(t.total()) << ',' << format_double(t.data) << ','
      << format_double(t.phi) << ',' << format_double(t.psi) << ',' << format_double(t.upsilon) << '\n';
  }
  return o.str();
}

std::string eval_csv_header() { return "seed,aSAM_deg,GMSE_A,GMSE_dM,RE,wall_time_s\n"; }

std::string eval_csv_row(std::uint64_t seed, const EvalReport& r, double wall_time_s) {
  std::ostringstream o;
  o << seed << ',' << format_double(r.asam_deg) << ',' << format_double(r.gmse_a) << ','
    << format_double(r.gmse_dm) << ',' << format_double(r.re) << ',';
  if (std::isfinite(wall_time_s)) o << format_double(wall_time_s);
  o << '\n';
  return o.str();
}

MapScale write_pgm16(const std::filesystem::path& path, const Vector& values, Index width, Index height) {
  require_shape(width > 0 && height > 0 && values.size() == width * height, "pgm: size mismatch");
  if (!values.allFinite()) throw NumericError("pgm: non-finite map value");
  MapScale scale{values.minCoeff(), values.maxCoeff()};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << width << ' ' << height << "\n65535\n";
  const double span = scale.max - scale.min;
  for (Index n = 0; n < values.size(); ++n) {
    std::uint16_t v = 0;
    if (!scale.degenerate()) v = static_cast<std::uint16_t>(std::lround((values[n] - scale.min) / span * 65535.0));
    const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    out.write(bytes, 2);
  }
  if (!out) throw IoError("write failed: " + path.string());
  return scale;
}

std::vector<std::uint16_t> read_pgm16(const std::filesystem::path& path, Index* width, Index* height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  Index w = 0, h = 0;
  int maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || maxval != 65535) throw IoError("pgm: unsupported header");
  in.get();
  std::vector<std::uint16_t> out(static_cast<std::size_t>(w * h));
  for (auto& v : out) {
    unsigned char b[2];
    if (!in.read(reinterpret_cast<char*>(b), 2)) throw IoError("pgm: truncated");
    v = static_cast<std::uint16_t>((b[0] << 8) | b[1]);
  }
  if (width) *width = w;
  if (height) *height = h;
  return out;
}

double pgm_to_value(std::uint16_t sample, const MapScale& scale) {
  if (scale.degenerate()) return scale.min;
  return scale.min + (scale.max - scale.min) * static_cast<double>(sample) / 65535.0;
}

namespace {

std::filesystem::path sidecar_path(const std::filesystem::path& pgm) {
  std::filesystem::path p = pgm;
  p.replace_extension(".scale.txt");
  return p;
}

}  // namespace

std::vector<std::filesystem::path> export_maps(const Matrix& maps, Index width, Index height,
                                               const std::filesystem::path& dir,
                                               const std::string& prefix) {
  require_shape(maps.cols() == width * height, "export_maps: width * height must equal the pixel count");
  std::vector<std::filesystem::path> written;
  for (Index k = 0; k < maps.rows(); ++k) {
    const auto path = dir / (prefix + "_" + std::to_string(k + 1) + ".pgm");
    const MapScale s = write_pgm16(path, maps.row(k).transpose(), width, height);
    std::ostringstream o;
    o << "min=" << format_double(s.min) << '\n'
      << "max=" << format_double(s.max) << '\n'
      << "degenerate=" << (s.degenerate() ? "true" : "false") << '\n';
    write_text(sidecar_path(path), o.str());
    written.push_back(path);
  }
  return written;
}

MapScale read_scale_sidecar(const std::filesystem::path& pgm_path) {
  const KeyValues kv = parse_key_values(read_text(sidecar_path(pgm_path)));
  MapScale s;
  if (!kv.count("min") || !kv.count("max")) throw IoError("scale sidecar missing min/max");
  s.min = parse_double(kv.at("min"), "min");
  s.max = parse_double(kv.at("max"), "max");
  return s;
}

}  // namespace plmm
