#include "kcode/io.hpp"

#include <cctype>
#include <cerrno>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace kcode {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Line-oriented tokenizer that carries file:line:token context into errors.
struct LineReader {
  std::istringstream stream;
  std::string source;
  int lineNo = 0;
  std::string line;

  LineReader(std::string text, std::string name)
      : stream(std::move(text)), source(std::move(name)) {}

  bool next_line() {
    while (std::getline(stream, line)) {
      ++lineNo;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg, int token = -1) const {
    std::string where = source + ":" + std::to_string(lineNo);
    if (token >= 0) where += ": value " + std::to_string(token + 1);
    throw ParseError(where + ": " + msg);
  }

  // Parses exactly n doubles from the current line; anything besides
  // whitespace after them is an error.
  void parse_doubles(double* out, Index n) {
    const char* p = line.c_str();
    for (Index i = 0; i < n; ++i) {
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(p, &end);
      if (end == p) fail("expected a number", static_cast<int>(i));
      if (errno == ERANGE) fail("number out of range", static_cast<int>(i));
      out[i] = v;
      p = end;
    }
    for (; *p; ++p)
      if (!std::isspace(static_cast<unsigned char>(*p)))
        fail("extra values on line", static_cast<int>(n));
  }

  long parse_long() {
    char* end = nullptr;
    errno = 0;
    const long v = std::strtol(line.c_str(), &end, 10);
    if (end == line.c_str()) fail("expected an integer");
    if (errno == ERANGE) fail("integer out of range");
    for (; *end; ++end)
      if (!std::isspace(static_cast<unsigned char>(*end)))
        fail("trailing characters after integer");
    return v;
  }
};

void render_row(std::string& out, const double* row, Index n, Index stride,
                FloatFormat format) {
  char buf[64];
  for (Index j = 0; j < n; ++j) {
    if (j) out += ' ';
    if (format == FloatFormat::hex)
      std::snprintf(buf, sizeof buf, "%a", row[j * stride]);
    else
      std::snprintf(buf, sizeof buf, "%.17g", row[j * stride]);
    out += buf;
  }
  out += '\n';
}

std::pair<Index, Index> parse_header(LineReader& r, const char* what) {
  if (!r.next_line()) r.fail(std::string("missing ") + what + " header");
  const char* p = r.line.c_str();
  char* end = nullptr;
  const long a = std::strtol(p, &end, 10);
  if (end == p) r.fail("expected two integers in header");
  p = end;
  const long b = std::strtol(p, &end, 10);
  if (end == p) r.fail("expected two integers in header");
  if (a < 0 || b < 0) r.fail("negative header dimensions");
  for (p = end; *p; ++p)
    if (!std::isspace(static_cast<unsigned char>(*p)))
      r.fail("trailing characters in header");
  return {static_cast<Index>(a), static_cast<Index>(b)};
}

}  // namespace

FloatFormat float_format_from_name(const std::string& name) {
  if (name == "hex") return FloatFormat::hex;
  if (name == "dec") return FloatFormat::dec;
  throw ParseError("unknown float format '" + name + "' (hex or dec)");
}

void write_matrix(const std::string& path, const Matrix& m,
                  FloatFormat format) {
  std::string out;
  out.reserve(static_cast<size_t>(m.size()) * 26 + 32);
  out += std::to_string(m.rows());
  out += ' ';
  out += std::to_string(m.cols());
  out += '\n';
  for (Index i = 0; i < m.rows(); ++i)
    render_row(out, m.data() + i, m.cols(), m.rows(), format);
  atomic_write(path, out);
}

Matrix read_matrix(const std::string& path) {
  LineReader r(read_file(path), path);
  const auto [rows, cols] = parse_header(r, "matrix");
  Matrix m(rows, cols);
  std::vector<double> row(static_cast<size_t>(cols));
  for (Index i = 0; i < rows; ++i) {
    if (!r.next_line()) r.fail("unexpected end of file inside matrix");
    r.parse_doubles(row.data(), cols);
    for (Index j = 0; j < cols; ++j) m(i, j) = row[static_cast<size_t>(j)];
  }
  return m;
}

void write_labels(const std::string& path, const std::vector<int>& labels) {
  std::string out;
  for (int l : labels) {
    out += std::to_string(l);
    out += '\n';
  }
  atomic_write(path, out);
}

std::vector<int> read_labels(const std::string& path) {
  LineReader r(read_file(path), path);
  std::vector<int> labels;
  while (r.next_line()) labels.push_back(static_cast<int>(r.parse_long()));
  return labels;
}

void write_spd_set(const std::string& path, const std::vector<Matrix>& mats,
                   FloatFormat format) {
  const Index n = mats.empty() ? 0 : mats.front().rows();
  std::string out;
  out += std::to_string(mats.size());
  out += ' ';
  out += std::to_string(n);
  out += '\n';
  for (const Matrix& m : mats) {
    if (m.rows() != n || m.cols() != n)
      throw DimensionError("write_spd_set: inconsistent matrix sizes");
    for (Index i = 0; i < n; ++i)
      render_row(out, m.data() + i, n, n, format);
  }
  atomic_write(path, out);
}

std::vector<Matrix> read_spd_set(const std::string& path) {
  LineReader r(read_file(path), path);
  const auto [count, n] = parse_header(r, "SPD set");
  std::vector<Matrix> mats;
  mats.reserve(static_cast<size_t>(count));
  std::vector<double> row(static_cast<size_t>(n));
  for (Index k = 0; k < count; ++k) {
    Matrix m(n, n);
    for (Index i = 0; i < n; ++i) {
      if (!r.next_line()) r.fail("unexpected end of file inside SPD set");
      r.parse_doubles(row.data(), n);
      for (Index j = 0; j < n; ++j) m(i, j) = row[static_cast<size_t>(j)];
    }
    mats.push_back(std::move(m));
  }
  return mats;
}

Config Config::from_file(const std::string& path) {
  Config c = from_string(read_file(path), path);
  return c;
}

Config Config::from_string(const std::string& text, const std::string& name) {
  Config c;
  c.source_ = name;
  LineReader r(text, name);
  while (r.next_line()) {
    std::string line = r.line;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t");
      return s.substr(b, e - b + 1);
    };
    if (strip(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) r.fail("expected 'key = value'");
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key.empty()) r.fail("empty key");
    if (c.kv_.count(key)) r.fail("duplicate key '" + key + "'");
    c.kv_[key] = value;
  }
  return c;
}

bool Config::has(const std::string& key) const { return kv_.count(key) > 0; }

void Config::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

std::string Config::get_string(const std::string& key) const {
  const auto it = kv_.find(key);
  if (it == kv_.end())
    throw ParseError(source_ + ": missing required key '" + key + "'");
  consumed_.insert(key);
  resolved_[key] = it->second;
  return it->second;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  const auto it = kv_.find(key);
  const std::string v = it == kv_.end() ? fallback : it->second;
  consumed_.insert(key);
  resolved_[key] = v;
  return v;
}

double Config::get_double(const std::string& key) const {
  const std::string s = get_string(key);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw ParseError(source_ + ": key '" + key + "' is not a number: " + s);
  return v;
}

double Config::get_double(const std::string& key, double fallback) const {
  if (!has(key)) {
    consumed_.insert(key);
    resolved_[key] = format_double(fallback);
    return fallback;
  }
  return get_double(key);
}

int Config::get_int(const std::string& key) const {
  const std::string s = get_string(key);
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw ParseError(source_ + ": key '" + key + "' is not an integer: " + s);
  return static_cast<int>(v);
}

int Config::get_int(const std::string& key, int fallback) const {
  if (!has(key)) {
    consumed_.insert(key);
    resolved_[key] = std::to_string(fallback);
    return fallback;
  }
  return get_int(key);
}

std::uint64_t Config::get_u64(const std::string& key,
                              std::uint64_t fallback) const {
  if (!has(key)) {
    consumed_.insert(key);
    resolved_[key] = std::to_string(fallback);
    return fallback;
  }
  const std::string s = get_string(key);
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw ParseError(source_ + ": key '" + key +
                     "' is not an unsigned integer: " + s);
  return v;
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  const std::string s = get_string(key);
  std::vector<double> out;
  const char* p = s.c_str();
  while (*p) {
    while (*p == ' ' || *p == '\t' || *p == ',') ++p;
    if (!*p) break;
    char* end = nullptr;
    const double v = std::strtod(p, &end);
    if (end == p)
      throw ParseError(source_ + ": key '" + key +
                       "' is not a number list: " + s);
    out.push_back(v);
    p = end;
  }
  if (out.empty())
    throw ParseError(source_ + ": key '" + key + "' is an empty list");
  return out;
}

std::vector<double> Config::get_doubles(
    const std::string& key, const std::vector<double>& fallback) const {
  if (!has(key)) {
    consumed_.insert(key);
    std::string repr;
    for (double v : fallback) {
      if (!repr.empty()) repr += ' ';
      repr += format_double(v);
    }
    resolved_[key] = repr;
    return fallback;
  }
  return get_doubles(key);
}

void Config::require_all_consumed() const {
  std::string unknown;
  for (const auto& [k, v] : kv_)
    if (!consumed_.count(k)) {
      if (!unknown.empty()) unknown += ", ";
      unknown += k;
    }
  if (!unknown.empty())
    throw ParseError(source_ + ": unknown configuration keys: " + unknown);
}

void ResultDoc::set(const std::string& key, const std::string& value) {
  entries_.emplace_back(key, value);
}

void ResultDoc::set(const std::string& key, double value) {
  entries_.emplace_back(key, format_double(value));
}

void ResultDoc::set(const std::string& key,
                    const std::vector<double>& values) {
  std::string v;
  for (double x : values) {
    if (!v.empty()) v += ' ';
    v += format_double(x);
  }
  entries_.emplace_back(key, v);
}

void ResultDoc::set_int(const std::string& key, long long value) {
  entries_.emplace_back(key, std::to_string(value));
}

std::string ResultDoc::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

void ResultDoc::write(const std::string& path) const {
  atomic_write(path, to_string());
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_double_hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

std::string hash_file(const std::string& path) {
  const std::string bytes = read_file(path);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string iso8601_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace kcode
