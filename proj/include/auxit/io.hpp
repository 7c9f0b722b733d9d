#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "auxit/types.hpp"

namespace auxit {

/// Shortest decimal text that parses back to the same double.
std::string format_real(double value);

/// Strict full-string parse; throws ParseError naming `context` on failure.
double parse_real(std::string_view text, std::string_view context);

std::vector<std::string> split_csv_line(std::string_view line);

// Tensor archive: 4-byte magic, u32 version, u64 tensor count, then for each
// tensor u64 rows, u64 cols and rows*cols little-endian IEEE-754 doubles in
// row-major order.
constexpr std::uint32_t kArchiveVersion = 1;

void write_archive(std::ostream& out, std::string_view magic, std::span<const MatrixXd> tensors);
std::vector<MatrixXd> read_archive(std::istream& in, std::string_view magic);

void write_archive(const std::filesystem::path& path, std::string_view magic,
                   std::span<const MatrixXd> tensors);
std::vector<MatrixXd> read_archive(const std::filesystem::path& path, std::string_view magic);

void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace auxit
