#include "mmda/textio.hpp"

#include <charconv>
#include <fstream>

#include "mmda/errors.hpp"

namespace mmda {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw NumericError("format_double failed");
  return std::string(buf, ptr);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << content;
  if (!out.good()) throw IoError("write failed: " + path);
}

}  // namespace mmda
