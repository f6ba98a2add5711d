#include "greytensor/image_io.hpp"

#include <fmt/format.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace greytensor {

namespace {

void check_values(const GreyImage& image) {
  for (double v : image.values())
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError(fmt::format("cannot write value {} outside [0, 1]", v));
}

std::string lattice_fields(const GreyImage& img) {
  const Lattice& L = img.lattice();
  const int d = L.dim();
  std::string s = fmt::format("dim {}\n", d);
  s += "size";
  for (int i = 0; i < d; ++i) s += fmt::format(" {}", img.window().size[i]);
  s += "\nlo";
  for (int i = 0; i < d; ++i) s += fmt::format(" {}", img.window().lo[i]);
  s += fmt::format("\na {:.17g}\nbasis", L.a);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) s += fmt::format(" {:.17g}", L.basis(i, j));
  s += "\nc";
  for (int i = 0; i < d; ++i) s += fmt::format(" {:.17g}", L.c[i]);
  s += "\n";
  return s;
}

struct Header {
  int dim = 0;
  IVec size;
  IVec lo;
  double a = 1.0;
  Mat basis;
  Vec c;
  bool has_lattice = false;
};

// Parses "key values..." lines; unknown keys are ignored.
void parse_field(Header& h, const std::string& line) {
  std::istringstream in(line);
  std::string key;
  if (!(in >> key)) return;
  auto need = [&](bool ok) {
    if (!ok) throw ConfigError(fmt::format("malformed header line '{}'", line));
  };
  if (key == "dim") {
    need(static_cast<bool>(in >> h.dim) && h.dim >= 1 && h.dim <= kMaxDim);
    h.size = IVec::Zero(h.dim);
    h.lo = IVec::Zero(h.dim);
    h.basis = Mat::Identity(h.dim, h.dim);
    h.c = Vec::Zero(h.dim);
    return;
  }
  if (h.dim == 0) {
    if (key == "size" || key == "lo" || key == "a" || key == "basis" || key == "c")
      throw ConfigError("header field before 'dim'");
    return;
  }
  if (key == "size") {
    for (int i = 0; i < h.dim; ++i) need(static_cast<bool>(in >> h.size[i]) && h.size[i] > 0);
  } else if (key == "lo") {
    for (int i = 0; i < h.dim; ++i) need(static_cast<bool>(in >> h.lo[i]));
  } else if (key == "a") {
    need(static_cast<bool>(in >> h.a));
    h.has_lattice = true;
  } else if (key == "basis") {
    for (int j = 0; j < h.dim; ++j)
      for (int i = 0; i < h.dim; ++i) need(static_cast<bool>(in >> h.basis(i, j)));
    h.has_lattice = true;
  } else if (key == "c") {
    for (int i = 0; i < h.dim; ++i) need(static_cast<bool>(in >> h.c[i]));
    h.has_lattice = true;
  }
}

Lattice header_lattice(const Header& h) { return Lattice::make(h.basis, h.a, h.c); }

}  // namespace

std::uint16_t quantize16(double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw DomainError(fmt::format("value {} outside [0, 1]", v));
  return static_cast<std::uint16_t>(std::lround(v * 65535.0));
}

void write_pgm(const std::filesystem::path& path, const GreyImage& image) {
  if (image.lattice().dim() != 2) throw ConfigError("PGM holds 2D images only");
  check_values(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot open '{}' for writing", path.string()));
  out << "P5\n";
  std::istringstream fields(lattice_fields(image));
  for (std::string line; std::getline(fields, line);) out << "# " << line << "\n";
  const long w = image.window().size[0];
  const long h = image.window().size[1];
  out << w << " " << h << "\n65535\n";
  // Row r of the file is lattice row lo[1] + r; samples are big-endian.
  for (double v : image.values()) {
    const std::uint16_t q = quantize16(v);
    const char bytes[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xff)};
    out.write(bytes, 2);
  }
  if (!out) throw ConfigError(fmt::format("write to '{}' failed", path.string()));
}

GreyImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
  std::string magic;
  in >> magic;
  if (magic != "P5") throw ConfigError("not a binary PGM (P5) file");
  Header h;
  long dims[3] = {0, 0, 0};
  int got = 0;
  while (got < 3) {
    in >> std::ws;
    if (in.peek() == '#') {
      std::string line;
      std::getline(in, line);
      parse_field(h, line.substr(1));
      continue;
    }
    if (!(in >> dims[got])) throw ConfigError("malformed PGM header");
    ++got;
  }
  in.get();
  if (dims[0] <= 0 || dims[1] <= 0) throw ConfigError("malformed PGM size");
  if (dims[2] != 65535) throw ConfigError("only 16-bit PGM (maxval 65535) is supported");
  if (h.dim == 0) parse_field(h, "dim 2");
  if (h.dim != 2) throw ConfigError("PGM header dimension must be 2");
  h.size << dims[0], dims[1];
  const std::size_t n = static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]);
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    unsigned char b[2];
    if (!in.read(reinterpret_cast<char*>(b), 2)) throw ConfigError("PGM data truncated");
    values[i] = ((b[0] << 8) | b[1]) / 65535.0;
  }
  return GreyImage(header_lattice(h), Window{h.lo, h.size}, std::move(values));
}

void write_raw(const std::filesystem::path& path, const GreyImage& image) {
  check_values(image);
  {
    std::ofstream hdr(path.string() + ".hdr");
    if (!hdr) throw ConfigError(fmt::format("cannot open '{}.hdr' for writing", path.string()));
    hdr << "greytensor-raw float32le\n" << lattice_fields(image);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot open '{}' for writing", path.string()));
  for (double v : image.values()) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    char bytes[4];
    for (int k = 0; k < 4; ++k) bytes[k] = static_cast<char>((bits >> (8 * k)) & 0xff);
    out.write(bytes, 4);
  }
  if (!out) throw ConfigError(fmt::format("write to '{}' failed", path.string()));
}

GreyImage read_raw(const std::filesystem::path& path) {
  std::ifstream hdr(path.string() + ".hdr");
  if (!hdr) throw ConfigError(fmt::format("missing header '{}.hdr'", path.string()));
  std::string line;
  std::getline(hdr, line);
  if (line.rfind("greytensor-raw float32le", 0) != 0) throw ConfigError("unrecognized raw header");
  Header h;
  while (std::getline(hdr, line)) parse_field(h, line);
  if (h.dim == 0 || h.size.minCoeff() <= 0) throw ConfigError("raw header lacks dim or size");
  const Window w{h.lo, h.size};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
  std::vector<double> values(w.count());
  for (double& v : values) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw ConfigError("raw data truncated");
    std::uint32_t bits = 0;
    for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(b[k]) << (8 * k);
    v = std::bit_cast<float>(bits);
  }
  return GreyImage(header_lattice(h), w, std::move(values));
}

}  // namespace greytensor
