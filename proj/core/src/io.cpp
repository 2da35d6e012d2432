#include "kst/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "kst/errors.hpp"

namespace kst {

namespace {

static_assert(std::endian::native == std::endian::little,
              "KST1 writer assumes a little-endian host");

constexpr char kMagic[4] = {'K', 'S', 'T', '1'};

struct Header {
  std::uint8_t dtype;
  std::vector<std::uint64_t> dims;
};

std::uint64_t element_count(const std::vector<std::uint64_t>& dims) {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void write_header(std::ofstream& out, std::uint8_t dtype, const std::vector<std::uint64_t>& dims) {
  require(!dims.empty(), "invalid-input", "KST1 arrays must have ndim >= 1");
  out.write(kMagic, 4);
  const std::uint8_t order = 0;
  const std::uint16_t reserved = 0;
  out.write(reinterpret_cast<const char*>(&dtype), 1);
  out.write(reinterpret_cast<const char*>(&order), 1);
  out.write(reinterpret_cast<const char*>(&reserved), 2);
  const std::uint64_t ndim = dims.size();
  out.write(reinterpret_cast<const char*>(&ndim), 8);
  out.write(reinterpret_cast<const char*>(dims.data()), static_cast<std::streamsize>(8 * dims.size()));
}

Header read_header(std::ifstream& in, const std::filesystem::path& path) {
  char magic[4];
  std::uint8_t dtype = 0, order = 0;
  std::uint16_t reserved = 0;
  std::uint64_t ndim = 0;
  if (!in.read(magic, 4)) fail("io-error", "truncated file: " + path.string());
  require(std::memcmp(magic, kMagic, 4) == 0, "io-error", "bad magic in " + path.string());
  in.read(reinterpret_cast<char*>(&dtype), 1);
  in.read(reinterpret_cast<char*>(&order), 1);
  in.read(reinterpret_cast<char*>(&reserved), 2);
  in.read(reinterpret_cast<char*>(&ndim), 8);
  if (!in) fail("io-error", "truncated header: " + path.string());
  require(dtype <= 1, "io-error", "unknown dtype code in " + path.string());
  require(order == 0, "io-error", "unknown storage order in " + path.string());
  require(ndim >= 1 && ndim <= 32, "io-error", "bad ndim in " + path.string());
  Header h;
  h.dtype = dtype;
  h.dims.resize(ndim);
  in.read(reinterpret_cast<char*>(h.dims.data()), static_cast<std::streamsize>(8 * ndim));
  if (!in) fail("io-error", "truncated dims: " + path.string());
  return h;
}

}  // namespace

void write_array(const std::filesystem::path& path, const RealArray& a) {
  require(a.data.size() == element_count(a.dims), "invalid-input",
          "payload length does not match dims");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "io-error", "cannot open for write: " + path.string());
  write_header(out, 0, a.dims);
  out.write(reinterpret_cast<const char*>(a.data.data()),
            static_cast<std::streamsize>(8 * a.data.size()));
  require(out.good(), "io-error", "write failed: " + path.string());
}

void write_array(const std::filesystem::path& path, const ComplexArray& a) {
  require(a.data.size() == element_count(a.dims), "invalid-input",
          "payload length does not match dims");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "io-error", "cannot open for write: " + path.string());
  write_header(out, 1, a.dims);
  out.write(reinterpret_cast<const char*>(a.data.data()),
            static_cast<std::streamsize>(16 * a.data.size()));
  require(out.good(), "io-error", "write failed: " + path.string());
}

RealArray read_real_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "io-error", "cannot open: " + path.string());
  const Header h = read_header(in, path);
  require(h.dtype == 0, "io-error", "expected f64 array in " + path.string());
  RealArray a;
  a.dims = h.dims;
  a.data.resize(element_count(h.dims));
  in.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(8 * a.data.size()));
  require(static_cast<std::size_t>(in.gcount()) == 8 * a.data.size(), "io-error",
          "truncated payload: " + path.string());
  return a;
}

ComplexArray read_complex_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "io-error", "cannot open: " + path.string());
  const Header h = read_header(in, path);
  require(h.dtype == 1, "io-error", "expected complex array in " + path.string());
  ComplexArray a;
  a.dims = h.dims;
  a.data.resize(element_count(h.dims));
  in.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(16 * a.data.size()));
  require(static_cast<std::size_t>(in.gcount()) == 16 * a.data.size(), "io-error",
          "truncated payload: " + path.string());
  return a;
}

int array_dtype(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "io-error", "cannot open: " + path.string());
  return read_header(in, path).dtype;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "config-error", "cannot open config: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

RunConfig RunConfig::from_string(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return std::string{};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, "config-error",
            "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), "config-error", "line " + std::to_string(lineno) + ": empty key");
    cfg.kv_[key] = value;
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) { kv_[key] = value; }

bool RunConfig::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string RunConfig::get_string(const std::string& key) const {
  const auto it = kv_.find(key);
  require(it != kv_.end(), "config-error", "missing required key: " + key);
  return it->second;
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string s = get_string(key);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  require(end && *end == '\0' && end != s.c_str(), "config-error",
          "key " + key + ": not a number: " + s);
  return v;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t RunConfig::get_int(const std::string& key) const {
  const std::string s = get_string(key);
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  require(end && *end == '\0' && end != s.c_str(), "config-error",
          "key " + key + ": not an integer: " + s);
  return v;
}

std::int64_t RunConfig::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string s = get_string(key);
  if (s == "1" || s == "true" || s == "on" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "off" || s == "no") return false;
  fail("config-error", "key " + key + ": not a boolean: " + s);
}

void RunConfig::validate_keys(const std::vector<std::string>& known) const {
  for (const auto& [k, v] : kv_) {
    if (std::find(known.begin(), known.end(), k) == known.end())
      fail("config-error", "unknown key: " + k);
  }
}

std::string RunConfig::resolved_text() const {
  std::ostringstream out;
  for (const auto& [k, v] : kv_) out << k << " = " << v << "\n";
  return out.str();
}

std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace kst
