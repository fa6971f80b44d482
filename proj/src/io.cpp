#include "nlc2/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlc2/config.hpp"
#include "nlc2/errors.hpp"

namespace nlc2 {

namespace {

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

void put_f64(std::vector<unsigned char>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(bits >> (8 * b)));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(p[b]) << (8 * b);
  return v;
}

double get_f64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<double>(v);
}

std::vector<const ScalarField*> planes(const State& s) {
  return {&s.u[0], &s.u[1], &s.d[0], &s.d[1], &s.d[2], &s.theta, &s.p};
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string radius_label(double r) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", r);
  return buf;
}

}  // namespace

std::vector<unsigned char> encode_checkpoint(const Checkpoint& cp) {
  const auto& g = cp.state.grid();
  std::vector<unsigned char> out;
  out.reserve(kCheckpointHeaderBytes + 7 * g.size() * 8);
  for (char c : {'N', 'L', 'C', '2'}) out.push_back(static_cast<unsigned char>(c));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(g.nx()));
  put_u32(out, static_cast<std::uint32_t>(g.ny()));
  put_f64(out, cp.state.t);
  put_f64(out, cp.M);
  put_f64(out, cp.N);
  put_u32(out, cp.mode == DirectorMode::constrained ? 1u : 0u);
  put_f64(out, cp.theta_floor);
  for (const auto* f : planes(cp.state))
    for (double v : f->values()) put_f64(out, v);
  return out;
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes, const std::string& origin) {
  if (bytes.size() < kCheckpointHeaderBytes) {
    throw IoError(origin + ": truncated checkpoint header (" + std::to_string(bytes.size()) +
                  " bytes)");
  }
  const unsigned char* p = bytes.data();
  if (std::memcmp(p, "NLC2", 4) != 0) throw IoError(origin + ": bad magic, not an NLC2 checkpoint");
  const auto version = get_u32(p + 4);
  if (version != kCheckpointVersion) {
    throw IoError(origin + ": unsupported checkpoint version " + std::to_string(version) +
                  " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto nx = get_u32(p + 8);
  const auto ny = get_u32(p + 12);
  if (nx < 8 || ny < 8 || nx % 2 || ny % 2 || nx > 65536 || ny > 65536) {
    throw IoError(origin + ": invalid grid " + std::to_string(nx) + "x" + std::to_string(ny));
  }
  const std::size_t expected = kCheckpointHeaderBytes + 7ull * nx * ny * 8;
  if (bytes.size() != expected) {
    throw IoError(origin + ": header dims " + std::to_string(nx) + "x" + std::to_string(ny) +
                  " need " + std::to_string(expected) + " bytes, file has " +
                  std::to_string(bytes.size()));
  }
  Checkpoint cp;
  cp.state = State(TorusGrid(static_cast<int>(nx), static_cast<int>(ny)));
  cp.state.t = get_f64(p + 16);
  cp.M = get_f64(p + 24);
  cp.N = get_f64(p + 32);
  const auto mode = get_u32(p + 40);
  if (mode > 1) throw IoError(origin + ": unknown director mode " + std::to_string(mode));
  cp.mode = mode == 1 ? DirectorMode::constrained : DirectorMode::relaxed;
  cp.theta_floor = get_f64(p + 44);
  const unsigned char* q = p + kCheckpointHeaderBytes;
  State& s = cp.state;
  for (ScalarField* f : {&s.u[0], &s.u[1], &s.d[0], &s.d[1], &s.d[2], &s.theta, &s.p}) {
    for (auto& v : f->values()) {
      v = get_f64(q);
      q += 8;
    }
  }
  return cp;
}

void write_checkpoint(const Checkpoint& cp, const std::string& path) {
  const auto bytes = encode_checkpoint(cp);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + tmp + "' for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at '" + path + "': " + ec.message());
}

void write_checkpoint(const State& state, const ApproximationParams& params, double theta_floor,
                      const std::string& path) {
  write_checkpoint(Checkpoint{state, params.M, params.N, params.mode, theta_floor}, path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, path);
}

std::vector<std::string> diagnostics_header(const std::vector<double>& alphas,
                                            const std::vector<double>& radii) {
  std::vector<std::string> h = {"t",     "kinetic",          "potential", "heat",
                                "total", "dissipation_rate", "min_theta", "max_d_norm_dev"};
  for (double a : alphas) h.push_back("entropy_min_res_" + radius_label(a));
  for (double r : radii) h.push_back("local_energy_sup_" + radius_label(r));
  h.push_back("flags");
  return h;
}

std::string format_diagnostics(const std::vector<DiagnosticsRow>& rows,
                               const std::vector<double>& alphas,
                               const std::vector<double>& radii) {
  std::string out;
  const auto header = diagnostics_header(alphas, radii);
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += "\n";
  for (const auto& r : rows) {
    if (r.entropy_min.size() != alphas.size() || r.local_sup.size() != radii.size()) {
      throw UsageError("diagnostics row does not match the column schema");
    }
    const auto& e = r.energy;
    for (double v : {e.t, e.kinetic, e.potential, e.heat, e.total, e.dissipation_rate, r.min_theta,
                     r.max_d_norm_dev}) {
      out += csv_number(v) + ",";
    }
    for (double v : r.entropy_min) out += csv_number(v) + ",";
    for (double v : r.local_sup) out += csv_number(v) + ",";
    out += std::to_string(r.flags) + "\n";
  }
  return out;
}

void write_diagnostics(const std::vector<DiagnosticsRow>& rows, const std::vector<double>& alphas,
                       const std::vector<double>& radii, const std::string& path) {
  write_text_file(path, format_diagnostics(rows, alphas, radii));
}

std::size_t DiagnosticsTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ConfigError("diagnostics table has no column '" + name + "'");
}

DiagnosticsTable parse_diagnostics(const std::string& text) {
  DiagnosticsTable t;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw IoError("diagnostics CSV has no header row");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  if (t.header.empty() || t.header.front() != "t") throw IoError("diagnostics CSV header must start with t");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') {
        throw IoError("diagnostics CSV line " + std::to_string(lineno) + ": bad value '" + cell + "'");
      }
      row.push_back(v);
    }
    if (row.size() != t.header.size()) {
      throw IoError("diagnostics CSV line " + std::to_string(lineno) + " has " +
                    std::to_string(row.size()) + " fields, header has " +
                    std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

DiagnosticsTable read_diagnostics(const std::string& path) {
  try {
    return parse_diagnostics(read_text_file(path));
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw IoError("write failed for '" + path + "'");
}

}  // namespace nlc2
