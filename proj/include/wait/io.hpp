#ifndef WAIT_IO_HPP
#define WAIT_IO_HPP

#include <map>
#include <stdexcept>
#include <string>

namespace wait::io {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// 17 significant digits: doubles round-trip exactly through the CSV.
std::string format_double(double v);
std::string format_double(double v, int significant);

// key=value lines; blank lines and '#' comments are skipped.
std::map<std::string, std::string> parse_key_values(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
void ensure_directory(const std::string& path);

}  // namespace wait::io

#endif
