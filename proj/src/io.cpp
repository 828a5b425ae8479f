#include "kamtorus/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace kamtorus::io {

using fourier::Axis;
using fourier::Cplx;
using fourier::FourierModel;
using fourier::ModeIndex;
using fourier::ModelSpec;

namespace {

std::string join_axis(const Axis& a, int dim) {
  std::string s;
  for (int l = 0; l < dim; ++l) {
    if (l) s += ",";
    s += std::to_string(a[l]);
  }
  return s;
}

template <typename T>
void write_le(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) fail(Errc::io_error, "unexpected end of file");
  return v;
}

}  // namespace

void save_csv(const FourierModel& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(Errc::io_error, "cannot open '" + path + "' for writing");
  const ModelSpec& s = m.spec();
  os << "# d=" << s.dim << " rows=" << s.rows << " cols=" << s.cols
     << " cutoff=" << join_axis(s.cutoff, s.dim) << " grid=" << join_axis(s.grid, s.dim) << "\n";
  for (int l = 0; l < s.dim; ++l) os << "k" << (l + 1) << ",";
  os << "row,col,re,im\n";
  os.precision(17);
  long nm = m.mode_count();
  for (long f = 0; f < nm; ++f) {
    ModeIndex k = m.mode_of(f);
    for (int r = 0; r < s.rows; ++r)
      for (int c = 0; c < s.cols; ++c) {
        const Cplx& v = m.at_flat(f, r, c);
        if (v == Cplx(0.0, 0.0)) continue;
        for (int l = 0; l < s.dim; ++l) os << k[l] << ",";
        os << r << "," << c << "," << v.real() << "," << v.imag() << "\n";
      }
  }
  if (!os) fail(Errc::io_error, "write failure on '" + path + "'");
}

FourierModel load_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(Errc::io_error, "cannot open '" + path + "'");
  std::string header;
  std::getline(is, header);
  ModelSpec spec;
  {
    auto grab = [&](const std::string& key) -> std::string {
      auto pos = header.find(key + "=");
      if (pos == std::string::npos) fail(Errc::io_error, "CSV header missing '" + key + "'");
      pos += key.size() + 1;
      auto end = header.find(' ', pos);
      return header.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    };
    spec.dim = std::stoi(grab("d"));
    spec.rows = std::stoi(grab("rows"));
    spec.cols = std::stoi(grab("cols"));
    auto parse_axis = [&](const std::string& text, Axis& a) {
      std::stringstream ss(text);
      std::string tok;
      int l = 0;
      while (std::getline(ss, tok, ',') && l < fourier::kMaxDim) a[l++] = std::stoi(tok);
    };
    parse_axis(grab("cutoff"), spec.cutoff);
    parse_axis(grab("grid"), spec.grid);
    for (int l = spec.dim; l < fourier::kMaxDim; ++l) {
      spec.cutoff[l] = 0;
      spec.grid[l] = 1;
    }
  }
  FourierModel m(spec);
  std::string line;
  std::getline(is, line);  // column names
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string tok;
    ModeIndex k{0, 0, 0};
    for (int l = 0; l < spec.dim; ++l) {
      std::getline(ss, tok, ',');
      k[l] = std::stoi(tok);
    }
    std::getline(ss, tok, ',');
    int r = std::stoi(tok);
    std::getline(ss, tok, ',');
    int c = std::stoi(tok);
    std::getline(ss, tok, ',');
    double re = std::stod(tok);
    std::getline(ss, tok, ',');
    double im = std::stod(tok);
    m.at(k, r, c) = Cplx(re, im);
  }
  return m;
}

void save_fmd(const FourierModel& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(Errc::io_error, "cannot open '" + path + "' for writing");
  const ModelSpec& s = m.spec();
  os.write("FMD1", 4);
  write_le<uint32_t>(os, uint32_t(s.dim));
  write_le<uint32_t>(os, uint32_t(s.rows));
  write_le<uint32_t>(os, uint32_t(s.cols));
  for (int l = 0; l < s.dim; ++l) write_le<int32_t>(os, int32_t(s.cutoff[l]));
  for (int l = 0; l < s.dim; ++l) write_le<uint32_t>(os, uint32_t(s.grid[l]));
  for (const Cplx& v : m.data()) {
    write_le<double>(os, v.real());
    write_le<double>(os, v.imag());
  }
  if (!os) fail(Errc::io_error, "write failure on '" + path + "'");
}

FourierModel load_fmd(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::io_error, "cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "FMD1", 4) != 0)
    fail(Errc::io_error, "'" + path + "' is not an FMD1 model file");
  ModelSpec spec;
  spec.dim = int(read_le<uint32_t>(is));
  spec.rows = int(read_le<uint32_t>(is));
  spec.cols = int(read_le<uint32_t>(is));
  if (spec.dim < 1 || spec.dim > fourier::kMaxDim) fail(Errc::io_error, "corrupt FMD1 header");
  for (int l = 0; l < spec.dim; ++l) spec.cutoff[l] = int(read_le<int32_t>(is));
  for (int l = 0; l < spec.dim; ++l) spec.grid[l] = int(read_le<uint32_t>(is));
  for (int l = spec.dim; l < fourier::kMaxDim; ++l) {
    spec.cutoff[l] = 0;
    spec.grid[l] = 1;
  }
  FourierModel m(spec);
  for (Cplx& v : m.data()) {
    double re = read_le<double>(is);
    double im = read_le<double>(is);
    v = Cplx(re, im);
  }
  return m;
}

FourierModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::io_error, "cannot open '" + path + "'");
  char magic[4] = {0, 0, 0, 0};
  is.read(magic, 4);
  is.close();
  if (std::memcmp(magic, "FMD1", 4) == 0) return load_fmd(path);
  return load_csv(path);
}

}  // namespace kamtorus::io
