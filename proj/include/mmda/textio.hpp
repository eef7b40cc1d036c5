#pragma once

#include <string>

namespace mmda {

/// Shortest round-trip decimal form of a double (std::to_chars); identical
/// output for identical bits, which keeps emitted files byte-reproducible.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace mmda
