#ifndef KCODE_IO_HPP
#define KCODE_IO_HPP

#include "kcode/common.hpp"

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace kcode {

// hex writes C99 hexadecimal floats for bit-exact round trips; dec writes
// 17 significant digits for interoperability. Reading accepts both.
enum class FloatFormat { hex, dec };

FloatFormat float_format_from_name(const std::string& name);

// Matrix file: header line "rows cols", then rows lines of cols values.
void write_matrix(const std::string& path, const Matrix& m,
                  FloatFormat format = FloatFormat::hex);
Matrix read_matrix(const std::string& path);

// Label file: one integer per line.
void write_labels(const std::string& path, const std::vector<int>& labels);
std::vector<int> read_labels(const std::string& path);

// SPD set file: header line "count n", then count blocks of n lines.
void write_spd_set(const std::string& path, const std::vector<Matrix>& mats,
                   FloatFormat format = FloatFormat::hex);
std::vector<Matrix> read_spd_set(const std::string& path);

// Flat key = value configuration. '#' starts a comment; keys may repeat
// only once. Accessors record the resolved value (explicit or default) so
// result documents can embed the full configuration; unread keys are
// reported as errors by require_all_consumed (typo safety).
class Config {
 public:
  Config() = default;
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text,
                            const std::string& name = "<string>");

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;

  // Accessed keys with their resolved values, sorted by key.
  const std::map<std::string, std::string>& resolved() const {
    return resolved_;
  }
  void require_all_consumed() const;

 private:
  std::string source_ = "<empty>";
  std::map<std::string, std::string> kv_;
  mutable std::map<std::string, std::string> resolved_;
  mutable std::set<std::string> consumed_;
};

// Ordered key = value result document. Values render with %.17g so that
// identical runs produce identical files; the run.timestamp key is the one
// field excluded from reproducibility comparisons.
class ResultDoc {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, const std::vector<double>& values);
  void set_int(const std::string& key, long long value);
  std::string to_string() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::string format_double(double v);           // %.17g
std::string format_double_hex(double v);       // %a

// FNV-1a 64-bit over the file's bytes, rendered as 16 hex digits.
std::string hash_file(const std::string& path);

// Write-temp-then-rename so concurrent readers never see partial content.
void atomic_write(const std::string& path, const std::string& content);

std::string iso8601_utc_now();

}  // namespace kcode

#endif
