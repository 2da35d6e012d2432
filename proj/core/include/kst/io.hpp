#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kst {

// "KST1" binary array container. Layout (all little-endian):
//   magic "KST1" (4 bytes) | dtype u8 (0 = f64, 1 = complex f64 interleaved)
//   | order u8 (0 = row-major) | reserved u16 | ndim u64 | dims (ndim x u64) | payload
struct RealArray {
  std::vector<std::uint64_t> dims;
  std::vector<double> data;
};

struct ComplexArray {
  std::vector<std::uint64_t> dims;
  std::vector<std::complex<double>> data;
};

void write_array(const std::filesystem::path& path, const RealArray& a);
void write_array(const std::filesystem::path& path, const ComplexArray& a);
RealArray read_real_array(const std::filesystem::path& path);
ComplexArray read_complex_array(const std::filesystem::path& path);
// Peeks the dtype code without loading the payload.
int array_dtype(const std::filesystem::path& path);

// Flat "key = value" run configuration. '#' starts a comment; unknown keys are
// rejected against the registry in cli (or any registry handed to parse).
class RunConfig {
public:
  RunConfig() = default;

  static RunConfig from_file(const std::filesystem::path& path);
  static RunConfig from_string(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Throws config-error when a key is not in `known`.
  void validate_keys(const std::vector<std::string>& known) const;

  // Deterministic "key = value" text, keys sorted, doubles at 17 significant digits.
  std::string resolved_text() const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

private:
  std::map<std::string, std::string> kv_;
};

// 17-significant-digit formatting used for every CSV number the tool emits.
std::string format_g17(double x);

}  // namespace kst
