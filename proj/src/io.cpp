#include "pnpunmix/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "pnpunmix/log.hpp"

namespace pnpunmix::io {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::ifstream openIn(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream openOut(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finishWrite(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

double parseDouble(const std::string& text, const std::string& context) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(context + ": '" + text + "' is not a number");
  }
  return value;
}

Index parseCount(const KeyValues& kv, const std::string& key,
                 const fs::path& path) {
  const auto it = kv.find(key);
  if (it == kv.end()) {
    throw ParseError(path.string() + ": missing header key '" + key + "'");
  }
  Index value = 0;
  const std::string& text = it->second;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value < 1) {
    throw ParseError(path.string() + ": header key '" + key +
                     "' must be a positive integer, got '" + text + "'");
  }
  return value;
}

std::string headerValue(const KeyValues& kv, const std::string& key,
                        const std::string& fallback) {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

template <typename T>
T fromLittleEndian(const unsigned char* bytes) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bits |= static_cast<U>(bytes[i]) << (8 * i);
  }
  return std::bit_cast<T>(bits);
}

void toLittleEndian(float value, unsigned char* bytes) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  for (std::size_t i = 0; i < 4; ++i) {
    bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  }
}

}  // namespace

std::string formatDouble(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

fs::path headerPathFor(const fs::path& path) {
  if (path.extension() == ".hdr") return path;
  if (path.extension() == ".raw") {
    fs::path p = path;
    return p.replace_extension(".hdr");
  }
  fs::path p = path;
  p += ".hdr";
  return p;
}

fs::path payloadPathFor(const fs::path& headerPath) {
  fs::path p = headerPathFor(headerPath);
  return p.replace_extension(".raw");
}

KeyValues readKeyValues(const fs::path& path) {
  std::ifstream in = openIn(path);
  KeyValues values;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const auto hash = line.find('#');
    const std::string content = trim(std::string_view(line).substr(0, hash));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path.string() + ":" + std::to_string(lineNo) +
                       ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(content).substr(0, eq));
    std::string value = trim(std::string_view(content).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) {
      throw ParseError(path.string() + ":" + std::to_string(lineNo) + ": empty key");
    }
    values[key] = value;
  }
  return values;
}

void writeKeyValues(const fs::path& path, const KeyValues& values,
                    const std::string& comment) {
  std::ofstream out = openOut(path);
  if (!comment.empty()) out << "# " << comment << '\n';
  for (const auto& [key, value] : values) out << key << " = " << value << '\n';
  finishWrite(out, path);
}

void writeCube(const fs::path& headerPath, const HsiCube& cube) {
  const fs::path header = headerPathFor(headerPath);
  const fs::path payload = payloadPathFor(header);

  KeyValues kv;
  kv["channels"] = std::to_string(cube.bands());
  kv["rows"] = std::to_string(cube.rows());
  kv["cols"] = std::to_string(cube.cols());
  kv["dtype"] = "float32";
  kv["layout"] = "band-major";
  kv["pixel_order"] = "column-major";
  kv["byte_order"] = "little";
  kv["data_file"] = payload.filename().string();
  writeKeyValues(header, kv, "pnpunmix cube header");

  std::vector<unsigned char> bytes(static_cast<std::size_t>(cube.size()) * 4);
  for (Index i = 0; i < cube.size(); ++i) {
    toLittleEndian(static_cast<float>(cube.data()[i]), &bytes[4 * i]);
  }
  std::ofstream out = openOut(payload, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  finishWrite(out, payload);
}

namespace {

template <typename Scalar>
BasicHsiCube<Scalar> readCubeAs(const fs::path& headerPath) {
  const fs::path header = headerPathFor(headerPath);
  const KeyValues kv = readKeyValues(header);
  const Index channels = parseCount(kv, "channels", header);
  const Index rows = parseCount(kv, "rows", header);
  const Index cols = parseCount(kv, "cols", header);
  const std::string dtype = headerValue(kv, "dtype", "float32");
  const std::string layout = headerValue(kv, "layout", "band-major");
  const std::string order = headerValue(kv, "pixel_order", "column-major");
  const std::string endian = headerValue(kv, "byte_order", "little");
  if (dtype != "float32" && dtype != "float64") {
    throw ParseError(header.string() + ": unsupported dtype '" + dtype + "'");
  }
  if (layout != "band-major") {
    throw ParseError(header.string() + ": unsupported layout '" + layout + "'");
  }
  if (order != "column-major") {
    throw ParseError(header.string() + ": unsupported pixel_order '" + order + "'");
  }
  if (endian != "little") {
    throw ParseError(header.string() + ": unsupported byte_order '" + endian + "'");
  }
  const auto dataIt = kv.find("data_file");
  const fs::path payload = dataIt != kv.end()
                               ? header.parent_path() / dataIt->second
                               : payloadPathFor(header);

  const std::size_t width = dtype == "float32" ? 4 : 8;
  const std::size_t count = static_cast<std::size_t>(channels * rows * cols);
  std::ifstream in = openIn(payload, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() != count * width) {
    throw ParseError(payload.string() + ": payload has " +
                     std::to_string(bytes.size()) + " bytes, header implies " +
                     std::to_string(count * width));
  }
  typename BasicHsiCube<Scalar>::Vector data(static_cast<Index>(count));
  for (std::size_t i = 0; i < count; ++i) {
    const double v = width == 4 ? fromLittleEndian<float>(&bytes[4 * i])
                                : fromLittleEndian<double>(&bytes[8 * i]);
    if (!std::isfinite(v)) {
      throw ParseError(payload.string() + ": non-finite value at element " +
                       std::to_string(i));
    }
    data[static_cast<Index>(i)] = static_cast<Scalar>(v);
  }
  return BasicHsiCube<Scalar>(channels, rows, cols, std::move(data));
}

}  // namespace

HsiCube readCube(const fs::path& headerPath) { return readCubeAs<double>(headerPath); }

BasicHsiCube<float> readCubeFloat(const fs::path& headerPath) {
  return readCubeAs<float>(headerPath);
}

void writeAbundances(const fs::path& headerPath, const AbundanceMatrix& a) {
  writeCube(headerPath, fold(static_cast<const PixelMatrix&>(a)));
}

AbundanceMatrix readAbundances(const fs::path& headerPath) {
  AbundanceMatrix a(unfold(readCube(headerPath)));
  const Feasibility f = feasibility(a);
  // Single precision storage: sums are only good to a few ulps of float.
  if (f.minEntry < -1e-6 || f.maxSumDeviation > 1e-5) {
    log::warn(headerPathFor(headerPath).string() +
              ": abundances violate non-negativity or sum-to-one");
  }
  return a;
}

void writeEndmembersCsv(const fs::path& path, const EndmemberMatrix& m) {
  std::ofstream out = openOut(path);
  for (Index j = 0; j < m.endmembers(); ++j) {
    const std::string& name = m.names()[j];
    if (name.find_first_of(",\n\r") != std::string::npos) {
      throw std::invalid_argument("endmember name '" + name +
                                  "' cannot be written to CSV");
    }
    out << (j ? "," : "") << name;
  }
  out << '\n';
  for (Index b = 0; b < m.bands(); ++b) {
    for (Index j = 0; j < m.endmembers(); ++j) {
      out << (j ? "," : "") << formatDouble(m.matrix()(b, j));
    }
    out << '\n';
  }
  finishWrite(out, path);
}

EndmemberMatrix readEndmembersCsv(const fs::path& path) {
  std::ifstream in = openIn(path);
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw ParseError(path.string() + ": missing header row of endmember names");
  }
  const std::vector<std::string> names = split(trim(line));
  const Index p = static_cast<Index>(names.size());
  std::vector<double> values;
  Index bands = 0;
  int lineNo = 1;
  while (std::getline(in, line)) {
    ++lineNo;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line));
    if (static_cast<Index>(cells.size()) != p) {
      throw ParseError(path.string() + ":" + std::to_string(lineNo) + ": " +
                       std::to_string(cells.size()) + " columns, header has " +
                       std::to_string(p));
    }
    for (const auto& cell : cells) {
      values.push_back(parseDouble(cell, path.string() + ":" + std::to_string(lineNo)));
    }
    ++bands;
  }
  if (bands == 0) throw ParseError(path.string() + ": no spectral rows");
  Eigen::MatrixXd m(bands, p);
  for (Index b = 0; b < bands; ++b) {
    for (Index j = 0; j < p; ++j) m(b, j) = values[b * p + j];
  }
  return EndmemberMatrix(std::move(m), names);
}

std::uint8_t quantize(double value) {
  const double v = std::isnan(value) ? 0.0 : std::clamp(value, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(255.0 * v + 0.5));
}

void writeGraymap(const fs::path& path, const Eigen::MatrixXd& plane) {
  if (plane.size() == 0) throw ShapeError("cannot write an empty graymap");
  if (!(plane.minCoeff() >= 0.0 && plane.maxCoeff() <= 1.0)) {
    log::warn(path.string() + ": values outside [0, 1] clamped");
  }
  std::ofstream out = openOut(path, std::ios::binary);
  out << "P5\n" << plane.cols() << ' ' << plane.rows() << "\n255\n";
  std::vector<unsigned char> bytes;
  bytes.reserve(static_cast<std::size_t>(plane.size()));
  for (Index r = 0; r < plane.rows(); ++r) {
    for (Index c = 0; c < plane.cols(); ++c) bytes.push_back(quantize(plane(r, c)));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  finishWrite(out, path);
}

GrayImage readGraymap(const fs::path& path) {
  std::ifstream in = openIn(path, std::ios::binary);
  auto token = [&]() {
    std::string t;
    char c = 0;
    while (in.get(c)) {
      if (c == '#') {
        std::string comment;
        std::getline(in, comment);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!t.empty()) break;
        continue;
      }
      t.push_back(c);
    }
    return t;
  };
  if (token() != "P5") throw ParseError(path.string() + ": not a binary PGM");
  Index width = 0;
  Index height = 0;
  int maxval = 0;
  try {
    width = std::stol(token());
    height = std::stol(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw ParseError(path.string() + ": malformed PGM header");
  }
  if (width < 1 || height < 1 || maxval != 255) {
    throw ParseError(path.string() + ": unsupported PGM dimensions or maxval");
  }
  std::vector<unsigned char> bytes(static_cast<std::size_t>(width * height));
  in.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()) ||
      in.peek() != std::char_traits<char>::eof()) {
    throw ParseError(path.string() + ": PGM payload length does not match header");
  }
  GrayImage image(height, width);
  for (Index r = 0; r < height; ++r) {
    for (Index c = 0; c < width; ++c) image(r, c) = bytes[r * width + c];
  }
  return image;
}

}  // namespace pnpunmix::io
