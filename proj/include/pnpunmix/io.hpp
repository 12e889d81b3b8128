#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "pnpunmix/model.hpp"

namespace pnpunmix::io {

namespace fs = std::filesystem;

/// Cube on disk: a text header `name.hdr` of `key = value` lines
/// (channels, rows, cols, dtype, layout, pixel_order, byte_order, data_file)
/// next to a raw payload of little-endian float32 values in the in-memory
/// order of HsiCube (band-major, column-major spatial plane).
///
/// `headerPath` may be given with or without the .hdr extension; the payload
/// is written to the same stem with a .raw extension.
void writeCube(const fs::path& headerPath, const HsiCube& cube);
HsiCube readCube(const fs::path& headerPath);
BasicHsiCube<float> readCubeFloat(const fs::path& headerPath);

/// Abundances use the cube format with one channel per endmember.
void writeAbundances(const fs::path& headerPath, const AbundanceMatrix& a);
AbundanceMatrix readAbundances(const fs::path& headerPath);

/// CSV: a header row of endmember names, then one row per band with one
/// column per endmember; '.' as decimal separator.
void writeEndmembersCsv(const fs::path& path, const EndmemberMatrix& m);
EndmemberMatrix readEndmembersCsv(const fs::path& path);

/// 8-bit value of an abundance: round-half-up of 255 * clamp(v, 0, 1).
std::uint8_t quantize(double value);

/// Binary PGM (P5). Width is the plane's column count, height its row count;
/// pixels are emitted row by row. Out-of-range values are clamped with a
/// warning.
void writeGraymap(const fs::path& path, const Eigen::MatrixXd& plane);

using GrayImage = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
GrayImage readGraymap(const fs::path& path);

/// Flat `key = value` text; '#' starts a comment. The writer emits keys in
/// sorted order.
using KeyValues = std::map<std::string, std::string>;
KeyValues readKeyValues(const fs::path& path);
void writeKeyValues(const fs::path& path, const KeyValues& values,
                    const std::string& comment = {});

/// Shortest decimal text that parses back to exactly `value`.
std::string formatDouble(double value);

fs::path headerPathFor(const fs::path& path);
fs::path payloadPathFor(const fs::path& headerPath);

}  // namespace pnpunmix::io
