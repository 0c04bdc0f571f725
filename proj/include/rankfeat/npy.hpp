#pragma once

// NPY v1.0 reader/writer for little-endian float arrays.
//
// Layout: "\x93NUMPY", major 1, minor 0, uint16 LE header length, then an
// ASCII Python dict literal
//   {'descr': '<f8', 'fortran_order': False, 'shape': (r, c), }
// padded with spaces and a final '\n' so the payload starts on a 64-byte
// boundary, then the C-order payload. '<f4' payloads are promoted to double
// on read; writes are always '<f8'.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rankfeat/matrix.hpp"

namespace rankfeat {

struct NpyArray {
  std::vector<std::size_t> shape;
  std::vector<double> data;
};

/// Parses an in-memory NPY file. Throws FormatError (with byte offset) on a
/// malformed file and InvalidInputError on non-finite values.
NpyArray parse_npy(std::string_view bytes);
NpyArray read_npy(const std::filesystem::path& path);

std::string encode_npy(std::span<const std::size_t> shape, std::span<const double> data);
void write_npy(const std::filesystem::path& path, std::span<const std::size_t> shape,
               std::span<const double> data);
void write_npy(const std::filesystem::path& path, const Matrix& m);
/// Writes a (batch, rows, cols) array; rows/cols are used for an empty batch.
void write_npy(const std::filesystem::path& path, std::span<const Matrix> batch,
               std::size_t rows, std::size_t cols);

/// 2-D array as a matrix; a 1-D array of length n becomes 1 x n.
Matrix to_matrix(const NpyArray& a);
/// 1-D view of a 1-D array, or of a 2-D array with a unit dimension.
Vector to_vector(const NpyArray& a);
/// 3-D (batch, rows, cols) array as matrices; a 2-D array is a batch of one.
std::vector<Matrix> to_batch(const NpyArray& a);

}  // namespace rankfeat
