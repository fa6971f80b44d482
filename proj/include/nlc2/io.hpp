#pragma once

// Checkpoint files and diagnostics CSVs.
//
// Checkpoint layout (little-endian):
//   char[4] "NLC2" | u32 version | u32 nx | u32 ny | f64 t | f64 M | f64 N |
//   u32 mode | f64 theta_floor                                   (52 bytes)
//   then 7 row-major f64 planes: u1 u2 d1 d2 d3 theta p.

#include <cstdint>
#include <string>
#include <vector>

#include "nlc2/diagnostics.hpp"
#include "nlc2/dynamics.hpp"

namespace nlc2 {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::size_t kCheckpointHeaderBytes = 52;

struct Checkpoint {
  State state;
  double M = kInfinity;
  double N = kInfinity;
  DirectorMode mode = DirectorMode::relaxed;
  double theta_floor = 1.0;
};

std::vector<unsigned char> encode_checkpoint(const Checkpoint& cp);
Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes, const std::string& origin);

void write_checkpoint(const Checkpoint& cp, const std::string& path);
void write_checkpoint(const State& state, const ApproximationParams& params, double theta_floor,
                      const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

// Column names for the given entropy exponents and ball radii.
std::vector<std::string> diagnostics_header(const std::vector<double>& alphas,
                                            const std::vector<double>& radii);
std::string format_diagnostics(const std::vector<DiagnosticsRow>& rows,
                               const std::vector<double>& alphas,
                               const std::vector<double>& radii);
void write_diagnostics(const std::vector<DiagnosticsRow>& rows, const std::vector<double>& alphas,
                       const std::vector<double>& radii, const std::string& path);

struct DiagnosticsTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  // Index of a named column; throws ConfigError if absent.
  std::size_t column(const std::string& name) const;
};

DiagnosticsTable parse_diagnostics(const std::string& text);
DiagnosticsTable read_diagnostics(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace nlc2
