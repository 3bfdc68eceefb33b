#ifndef MFCHAIN_REPORT_IO_HPP
#define MFCHAIN_REPORT_IO_HPP

#include <string>
#include <string_view>

namespace mfchain {

/// Shortest decimal that round-trips (std::to_chars); identical on every run.
std::string format_double(double v);

/// Hex SHA-1 of the bytes.
std::string sha1_hex(std::string_view bytes);

/// Git object hash of a blob: SHA-1 of "blob <size>\0<content>".
std::string git_blob_hash(std::string_view content);

}  // namespace mfchain

#endif  // MFCHAIN_REPORT_IO_HPP
