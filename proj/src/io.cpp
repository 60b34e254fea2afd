#include "homopt/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace homopt {

namespace {
constexpr std::uint32_t kMagic = 0x54504F48u;  // "HOPT" little endian
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Tensor read_tensor_text(std::istream& in) {
  std::string tag;
  if (!(in >> tag) || tag != "shape:") {
    throw std::runtime_error("tensor text: expected 'shape:' header");
  }
  std::string line;
  std::getline(in, line);
  std::istringstream hs(line);
  std::vector<index_t> dims;
  index_t d;
  while (hs >> d) dims.push_back(d);
  if (dims.empty()) throw std::runtime_error("tensor text: empty shape header");
  Shape shape(dims);
  std::vector<double> data;
  data.reserve(static_cast<size_t>(shape.cardinality()));
  double v;
  for (index_t i = 0; i < shape.cardinality(); ++i) {
    if (!(in >> v)) {
      throw std::runtime_error("tensor text: expected " + std::to_string(shape.cardinality()) +
                               " values for shape " + shape.str() + ", got " +
                               std::to_string(i));
    }
    data.push_back(v);
  }
  return Tensor(std::move(shape), std::move(data));
}

void write_tensor_text(std::ostream& out, const Tensor& t) {
  out << "shape:";
  for (index_t d : t.shape().dims()) out << " " << d;
  out << "\n";
  const index_t row = t.shape().rank() > 0 ? t.shape().last_extent() : 1;
  for (index_t i = 0; i < t.size(); ++i) {
    out << format_double(t[i]);
    out << ((row > 0 && (i + 1) % row == 0) ? "\n" : " ");
  }
  if (t.size() == 0 || (row > 0 && t.size() % row != 0)) out << "\n";
}

void write_tensor_file_binary(const std::string& path, const Tensor& t) {
  if (t.shape().rank() > 2) {
    throw std::invalid_argument("binary tensor format supports rank <= 2 only");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  const std::uint32_t rank = static_cast<std::uint32_t>(t.shape().rank());
  const std::uint32_t e0 = rank >= 1 ? static_cast<std::uint32_t>(t.shape().extent(0)) : 1;
  const std::uint32_t e1 = rank >= 2 ? static_cast<std::uint32_t>(t.shape().extent(1)) : 1;
  out.write(reinterpret_cast<const char*>(&kMagic), 4);
  out.write(reinterpret_cast<const char*>(&rank), 4);
  out.write(reinterpret_cast<const char*>(&e0), 4);
  out.write(reinterpret_cast<const char*>(&e1), 4);
  out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * 8));
}

Tensor read_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::uint32_t magic = 0;
  in.read(reinterpret_cast<char*>(&magic), 4);
  if (in.gcount() == 4 && magic == kMagic) {
    std::uint32_t rank = 0, e0 = 0, e1 = 0;
    in.read(reinterpret_cast<char*>(&rank), 4);
    in.read(reinterpret_cast<char*>(&e0), 4);
    in.read(reinterpret_cast<char*>(&e1), 4);
    if (!in || rank > 2) throw std::runtime_error("binary tensor: bad header in " + path);
    std::vector<index_t> dims;
    if (rank >= 1) dims.push_back(e0);
    if (rank >= 2) dims.push_back(e1);
    Shape shape(dims);
    std::vector<double> data(static_cast<size_t>(shape.cardinality()));
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * 8));
    if (!in) throw std::runtime_error("binary tensor: truncated data in " + path);
    return Tensor(std::move(shape), std::move(data));
  }
  in.clear();
  in.seekg(0);
  try {
    return read_tensor_text(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_tensor_file(const std::string& path, const Tensor& t) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  write_tensor_text(out, t);
}

FactorSet read_factor_set(const std::string& path, index_t k) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<Tensor> factors;
  for (index_t i = 0; i < k; ++i) {
    try {
      factors.push_back(read_tensor_text(in));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ": factor " + std::to_string(i) + ": " + e.what());
    }
  }
  return FactorSet(std::move(factors));
}

void write_factor_set(const std::string& path, const FactorSet& fs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  for (index_t k = 0; k < fs.num_factors(); ++k) write_tensor_text(out, fs.factor(k));
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << "\n";
  }
}

std::vector<std::vector<double>> read_csv(const std::string& path,
                                          std::vector<std::string>* header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
  if (header) {
    header->clear();
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header->push_back(cell);
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace homopt
