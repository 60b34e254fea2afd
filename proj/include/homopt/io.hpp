#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "homopt/tensor.hpp"

namespace homopt {

/*
 * Text tensor format: a header line `shape: d1 d2 ... dN` followed by the
 * scalars in canonical row-major linearization, whitespace separated.
 * Values are written with 17 significant digits so read-back is bit exact.
 *
 * Binary format (matrices and vectors only): a 16-byte header -- magic
 * "HOPT" (u32 LE), rank (u32), extent0 (u32), extent1 (u32, 1 for vectors) --
 * followed by the doubles in canonical order, little endian.
 */
Tensor read_tensor_text(std::istream& in);
void write_tensor_text(std::ostream& out, const Tensor& t);

Tensor read_tensor_file(const std::string& path);  // sniffs binary magic
void write_tensor_file(const std::string& path, const Tensor& t);
void write_tensor_file_binary(const std::string& path, const Tensor& t);

// A factor-set file is K consecutive text tensor records.
FactorSet read_factor_set(const std::string& path, index_t k);
void write_factor_set(const std::string& path, const FactorSet& fs);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
std::vector<std::vector<double>> read_csv(const std::string& path,
                                          std::vector<std::string>* header = nullptr);

std::string format_double(double v);  // shortest round-trip-exact decimal

}  // namespace homopt
