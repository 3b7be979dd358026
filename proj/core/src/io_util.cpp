#include "hgkt/io_util.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hgkt/errors.hpp"

namespace hgkt {

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_percent1(double fraction) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.1f", fraction * 100.0);
  return std::string(buf);
}

double parse_double(std::string_view token, const std::string& context) {
  double out = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), out);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw ParseError(context + ": not a number: '" + std::string(token) + "'");
  }
  return out;
}

long long parse_int(std::string_view token, const std::string& context) {
  long long out = 0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), out);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw ParseError(context + ": not an integer: '" + std::string(token) + "'");
  }
  return out;
}

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_file(const std::filesystem::path& path) {
  return fnv1a(read_text_file(path));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace hgkt
