#include "auxit/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "auxit/error.hpp"

namespace auxit {

std::string format_real(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error(ErrorCode::Io, "cannot format real");
  return std::string(buf, end);
}

double parse_real(std::string_view text, std::string_view context) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() &&
         (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::ParseError,
                "non-numeric value '" + std::string(text) + "' in " + std::string(context));
  }
  return value;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

namespace {

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(std::begin(bytes), std::end(bytes));
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw Error(ErrorCode::Truncated, "tensor archive ended unexpectedly");
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(std::begin(bytes), std::end(bytes));
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_archive(std::ostream& out, std::string_view magic, std::span<const MatrixXd> tensors) {
  if (magic.size() != 4) throw Error(ErrorCode::InvalidArgument, "archive magic must be 4 bytes");
  out.write(magic.data(), 4);
  write_le<std::uint32_t>(out, kArchiveVersion);
  write_le<std::uint64_t>(out, tensors.size());
  for (const MatrixXd& t : tensors) {
    write_le<std::uint64_t>(out, static_cast<std::uint64_t>(t.rows()));
    write_le<std::uint64_t>(out, static_cast<std::uint64_t>(t.cols()));
    for (Eigen::Index i = 0; i < t.size(); ++i) write_le<double>(out, t.data()[i]);
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing tensor archive");
}

std::vector<MatrixXd> read_archive(std::istream& in, std::string_view magic) {
  char got[4] = {};
  if (!in.read(got, 4)) throw Error(ErrorCode::Truncated, "tensor archive too short");
  if (std::string_view(got, 4) != magic) {
    throw Error(ErrorCode::BadMagic, "expected archive magic '" + std::string(magic) + "'");
  }
  const auto version = read_le<std::uint32_t>(in);
  if (version != kArchiveVersion) {
    throw Error(ErrorCode::BadMagic, "unsupported archive version " + std::to_string(version));
  }
  const auto count = read_le<std::uint64_t>(in);
  std::vector<MatrixXd> tensors;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto rows = read_le<std::uint64_t>(in);
    const auto cols = read_le<std::uint64_t>(in);
    MatrixXd t(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index j = 0; j < t.size(); ++j) t.data()[j] = read_le<double>(in);
    tensors.push_back(std::move(t));
  }
  return tensors;
}

void write_archive(const std::filesystem::path& path, std::string_view magic,
                   std::span<const MatrixXd> tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  write_archive(out, magic, tensors);
}

std::vector<MatrixXd> read_archive(const std::filesystem::path& path, std::string_view magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_archive(in, magic);
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << contents;
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace auxit
