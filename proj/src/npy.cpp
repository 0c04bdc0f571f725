#include "rankfeat/npy.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>

#include "rankfeat/error.hpp"

namespace rankfeat {
namespace {

static_assert(std::endian::native == std::endian::little,
              "NPY I/O assumes a little-endian host");

constexpr std::string_view kMagic = "\x93NUMPY";
constexpr std::size_t kPreludeSize = 10;
constexpr std::size_t kAlign = 64;
constexpr std::size_t kMaxDims = 3;

struct Header {
  std::size_t item_size = 0;
  std::vector<std::size_t> shape;
};

// Recursive-descent parser for the restricted dict literal.
class HeaderParser {
 public:
  HeaderParser(std::string_view text, std::size_t base) : text_(text), base_(base) {}

  Header parse() {
    std::optional<std::string> descr;
    std::optional<bool> fortran;
    std::optional<std::vector<std::size_t>> shape;

    skip_ws();
    expect('{');
    for (;;) {
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      const std::size_t key_pos = pos_;
      const std::string key = parse_string();
      skip_ws();
      expect(':');
      skip_ws();
      if (key == "descr") {
        if (descr) fail("duplicate 'descr'", key_pos);
        descr = parse_string();
      } else if (key == "fortran_order") {
        if (fortran) fail("duplicate 'fortran_order'", key_pos);
        fortran = parse_bool();
      } else if (key == "shape") {
        if (shape) fail("duplicate 'shape'", key_pos);
        shape = parse_shape();
      } else {
        fail("unexpected header key '" + key + "'", key_pos);
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != '}') {
        fail("expected ',' or '}'", pos_);
      }
    }
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c != ' ' && c != '\n' && c != '\t' && c != '\r' && c != '\0') {
        fail("trailing characters after header dict", pos_);
      }
      ++pos_;
    }
    if (!descr) fail("header lacks 'descr'", pos_);
    if (!fortran) fail("header lacks 'fortran_order'", pos_);
    if (!shape) fail("header lacks 'shape'", pos_);
    if (*fortran) fail("fortran_order=True is not supported", pos_);

    Header h;
    if (*descr == "<f8") {
      h.item_size = 8;
    } else if (*descr == "<f4") {
      h.item_size = 4;
    } else {
      fail("unsupported dtype '" + *descr + "' (expected '<f8' or '<f4')", pos_);
    }
    h.shape = std::move(*shape);
    return h;
  }

 private:
  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw FormatError("npy header: " + what, base_ + at);
  }

  char peek() const {
    if (pos_ >= text_.size()) fail("unexpected end of header", pos_);
    return text_[pos_];
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  std::string parse_string() {
    const char quote = peek();
    if (quote != '\'' && quote != '"') fail("expected a quoted string", pos_);
    ++pos_;
    const std::size_t start = pos_;
    while (peek() != quote) {
      if (!std::isprint(static_cast<unsigned char>(text_[pos_]))) {
        fail("non-printable character in string", pos_);
      }
      ++pos_;
    }
    std::string s(text_.substr(start, pos_ - start));
    ++pos_;
    return s;
  }

  bool parse_bool() {
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail("expected True or False", pos_);
  }

  std::vector<std::size_t> parse_shape() {
    expect('(');
    std::vector<std::size_t> dims;
    for (;;) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        break;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected a dimension", pos_);
      std::uint64_t value = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        const auto digit = static_cast<std::uint64_t>(text_[pos_] - '0');
        if (value > (UINT64_MAX - digit) / 10) fail("dimension overflows", pos_);
        value = value * 10 + digit;
        ++pos_;
      }
      // 'L' suffix from Python 2 writers.
      if (pos_ < text_.size() && text_[pos_] == 'L') ++pos_;
      if (dims.size() == kMaxDims) fail("more than 3 dimensions", pos_);
      dims.push_back(static_cast<std::size_t>(value));
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ')') {
        fail("expected ',' or ')' in shape", pos_);
      }
    }
    if (dims.empty()) fail("scalar (0-d) arrays are not supported", pos_);
    return dims;
  }

  std::string_view text_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

std::string shape_literal(std::span<const std::size_t> shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) s += ", ";
    s += std::to_string(shape[i]);
  }
  if (shape.size() == 1) s += ",";
  s += ")";
  return s;
}

std::size_t element_count(std::span<const std::size_t> shape, std::size_t offset) {
  std::size_t count = 1;
  for (std::size_t d : shape) {
    if (d != 0 && count > SIZE_MAX / d) throw FormatError("npy shape overflows", offset);
    count *= d;
  }
  return count;
}

}  // namespace

NpyArray parse_npy(std::string_view bytes) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw FormatError("not an NPY file (bad magic)", 0);
  }
  if (bytes.size() < kPreludeSize) throw FormatError("truncated NPY prelude", bytes.size());
  const auto major = static_cast<unsigned char>(bytes[6]);
  const auto minor = static_cast<unsigned char>(bytes[7]);
  if (major != 1 || minor != 0) {
    throw FormatError("unsupported NPY version " + std::to_string(major) + "." +
                          std::to_string(minor) + " (only 1.0)",
                      6);
  }
  const std::size_t header_len = static_cast<unsigned char>(bytes[8]) |
                                 (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
  if (kPreludeSize + header_len > bytes.size()) {
    throw FormatError("header length " + std::to_string(header_len) + " runs past end of file",
                      8);
  }
  const Header h = HeaderParser(bytes.substr(kPreludeSize, header_len), kPreludeSize).parse();

  const std::size_t payload_offset = kPreludeSize + header_len;
  const std::size_t count = element_count(h.shape, payload_offset);
  if (count > SIZE_MAX / h.item_size) throw FormatError("npy payload size overflows", payload_offset);
  const std::size_t payload_bytes = count * h.item_size;
  const std::size_t available = bytes.size() - payload_offset;
  if (available < payload_bytes) {
    throw FormatError("truncated payload: expected " + std::to_string(payload_bytes) +
                          " bytes, found " + std::to_string(available),
                      bytes.size());
  }
  if (available > payload_bytes) {
    throw FormatError("trailing bytes after payload", payload_offset + payload_bytes);
  }

  NpyArray out;
  out.shape = h.shape;
  out.data.resize(count);
  const char* src = bytes.data() + payload_offset;
  if (h.item_size == 8) {
    std::memcpy(out.data.data(), src, payload_bytes);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      float f;
      std::memcpy(&f, src + i * 4, 4);
      out.data[i] = static_cast<double>(f);
    }
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::isfinite(out.data[i])) {
      throw InvalidInputError("npy payload element " + std::to_string(i) + " is not finite");
    }
  }
  return out;
}

NpyArray read_npy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
  try {
    return parse_npy(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  } catch (const InvalidInputError& e) {
    throw InvalidInputError(path.string() + ": " + e.what());
  }
}

std::string encode_npy(std::span<const std::size_t> shape, std::span<const double> data) {
  if (shape.empty() || shape.size() > kMaxDims) {
    throw InvalidInputError("encode_npy: need 1 to 3 dimensions");
  }
  if (element_count(shape, 0) != data.size()) {
    throw InvalidInputError("encode_npy: shape does not match data length");
  }
  std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': " +
                     shape_literal(shape) + ", }";
  const std::size_t pad = kAlign - ((kPreludeSize + dict.size() + 1) % kAlign);
  dict.append(pad, ' ');
  dict.push_back('\n');
  if (dict.size() > 0xFFFF) throw InvalidInputError("encode_npy: header too long for v1.0");

  std::string out;
  out.reserve(kPreludeSize + dict.size() + data.size() * 8);
  out.append(kMagic);
  out.push_back('\x01');
  out.push_back('\x00');
  out.push_back(static_cast<char>(dict.size() & 0xFF));
  out.push_back(static_cast<char>((dict.size() >> 8) & 0xFF));
  out.append(dict);
  const std::size_t start = out.size();
  out.resize(start + data.size() * 8);
  if (!data.empty()) std::memcpy(out.data() + start, data.data(), data.size() * 8);
  return out;
}

void write_npy(const std::filesystem::path& path, std::span<const std::size_t> shape,
               std::span<const double> data) {
  const std::string bytes = encode_npy(shape, data);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

void write_npy(const std::filesystem::path& path, const Matrix& m) {
  const std::size_t shape[] = {m.rows(), m.cols()};
  write_npy(path, shape, m.data());
}

void write_npy(const std::filesystem::path& path, std::span<const Matrix> batch,
               std::size_t rows, std::size_t cols) {
  std::vector<double> flat;
  flat.reserve(batch.size() * rows * cols);
  for (const Matrix& m : batch) {
    if (m.rows() != rows || m.cols() != cols) {
      throw InvalidInputError("write_npy: batch matrices must share one shape");
    }
    flat.insert(flat.end(), m.data().begin(), m.data().end());
  }
  const std::size_t shape[] = {batch.size(), rows, cols};
  write_npy(path, shape, flat);
}

Matrix to_matrix(const NpyArray& a) {
  if (a.shape.size() == 1) return Matrix(1, a.shape[0], a.data);
  if (a.shape.size() == 2) return Matrix(a.shape[0], a.shape[1], a.data);
  throw InvalidInputError("expected a 1-D or 2-D array, got " + std::to_string(a.shape.size()) +
                          "-D");
}

Vector to_vector(const NpyArray& a) {
  if (a.shape.size() == 1) return a.data;
  if (a.shape.size() == 2 && (a.shape[0] == 1 || a.shape[1] == 1)) return a.data;
  throw InvalidInputError("expected a vector-shaped array");
}

std::vector<Matrix> to_batch(const NpyArray& a) {
  if (a.shape.size() == 2) return {Matrix(a.shape[0], a.shape[1], a.data)};
  if (a.shape.size() != 3) {
    throw InvalidInputError("expected a 2-D or 3-D array, got " + std::to_string(a.shape.size()) +
                            "-D");
  }
  const std::size_t rows = a.shape[1];
  const std::size_t cols = a.shape[2];
  std::vector<Matrix> out;
  out.reserve(a.shape[0]);
  for (std::size_t b = 0; b < a.shape[0]; ++b) {
    const auto first = a.data.begin() + static_cast<std::ptrdiff_t>(b * rows * cols);
    out.emplace_back(rows, cols, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(rows * cols)));
  }
  return out;
}

}  // namespace rankfeat
