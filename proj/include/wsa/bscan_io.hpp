#ifndef WSA_BSCAN_IO_HPP
#define WSA_BSCAN_IO_HPP

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wsa/wavefield.hpp"

namespace wsa {

// BSCAN1 container: one ASCII header line
//   BSCN1 <T> <X> <dt_ns> <dx_m> <t0_ns>\n
// with shortest-round-trip float text, followed by T*X little-endian 32-bit
// IEEE-754 samples in time-major row order. Annotations ride in a sidecar
// `<path>.json` of the form {"targets":[{...}]}.
//
// Files are written atomically (temp file + rename) and byte-deterministic.
// Writing refuses non-finite samples; reading validates the magic, the dims
// and the payload length.
void bscan_write(const BScan& b, std::span<const TargetAnnotation> annotations,
                 const std::string& path);

std::pair<BScan, std::vector<TargetAnnotation>> bscan_read(const std::string& path);

// Sidecar serialization, exposed for the CLI report paths.
std::string annotations_to_json(std::span<const TargetAnnotation> annotations);
std::vector<TargetAnnotation> annotations_from_json(const std::string& text);

std::string report_to_json(std::span<const WeakSignalReport> reports);

}  // namespace wsa

#endif  // WSA_BSCAN_IO_HPP
