#include "eegdiff/data/npy.hpp"

#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>

#include "eegdiff/core/errors.hpp"

namespace eegdiff::data {
namespace {

struct DtypeInfo {
  const char* descr;
  torch::ScalarType type;
  std::size_t size;
};

// Host is little-endian (checked in dataset.cpp), so '<' descriptors map directly.
constexpr DtypeInfo kDtypes[] = {
    {"<f4", torch::kFloat, 4}, {"<f8", torch::kDouble, 8}, {"|u1", torch::kByte, 1},
    {"|i1", torch::kChar, 1},  {"<i2", torch::kShort, 2},  {"<i4", torch::kInt, 4},
    {"<i8", torch::kLong, 8},  {"|b1", torch::kBool, 1},
};

std::string header_field(const std::string& header, const std::string& key) {
  const std::regex re("'" + key + "'\\s*:\\s*('[^']*'|True|False|\\([^)]*\\))");
  std::smatch m;
  if (!std::regex_search(header, m, re)) throw DataError("npy header lacks '" + key + "'");
  return m[1].str();
}

}  // namespace

torch::Tensor read_npy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "\x93NUMPY", 6) != 0) throw DataError(path.string() + " is not an .npy file");
  const int major = static_cast<unsigned char>(magic[6]);
  std::uint32_t header_len = 0;
  if (major == 1) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    header_len = b[0] | (b[1] << 8);
  } else if (major == 2 || major == 3) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    header_len = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  } else {
    throw DataError("unsupported npy version in " + path.string());
  }
  std::string header(header_len, '\0');
  in.read(header.data(), header_len);
  if (!in) throw DataError("truncated npy header in " + path.string());

  auto descr = header_field(header, "descr");
  descr = descr.substr(1, descr.size() - 2);
  if (descr.size() == 3 && descr[0] == '=') descr[0] = '<';
  if (header_field(header, "fortran_order") != "False") {
    throw DataError("Fortran-ordered arrays are not supported: " + path.string());
  }
  const DtypeInfo* info = nullptr;
  for (const auto& d : kDtypes) {
    if (descr == d.descr) info = &d;
  }
  if (!info) throw DataError("unsupported npy dtype '" + descr + "' in " + path.string());

  std::vector<std::int64_t> shape;
  const auto shape_text = header_field(header, "shape");
  std::stringstream ss(shape_text.substr(1, shape_text.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" ") == std::string::npos) continue;
    shape.push_back(std::stoll(item));
  }
  std::int64_t count = 1;
  for (auto s : shape) count *= s;

  auto out = torch::empty(shape, torch::TensorOptions().dtype(info->type));
  in.read(static_cast<char*>(out.data_ptr()), static_cast<std::streamsize>(count * info->size));
  if (!in) throw DataError("npy payload shorter than its shape in " + path.string());
  return out;
}

void write_npy(const torch::Tensor& array, const std::filesystem::path& path) {
  const auto t = array.contiguous().cpu();
  const DtypeInfo* info = nullptr;
  for (const auto& d : kDtypes) {
    if (d.type == t.scalar_type()) info = &d;
  }
  if (!info) throw DataError("cannot write dtype to npy");
  std::string shape = "(";
  for (auto s : t.sizes()) shape += std::to_string(s) + ", ";
  if (t.dim() == 1) shape.resize(shape.size() - 1);
  else if (t.dim() > 1) shape.resize(shape.size() - 2);
  shape += ")";
  std::string header = std::string("{'descr': '") + info->descr + "', 'fortran_order': False, 'shape': " + shape + ", }";
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header += '\n';

  std::ofstream out(path, std::ios::binary);
  out.write("\x93NUMPY\x01\x00", 8);
  const auto len = static_cast<std::uint16_t>(header.size());
  const char len_bytes[2] = {static_cast<char>(len & 0xff), static_cast<char>(len >> 8)};
  out.write(len_bytes, 2);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(static_cast<const char*>(t.data_ptr()), static_cast<std::streamsize>(t.nbytes()));
  if (!out) throw DataError("failed to write " + path.string());
}

}  // namespace eegdiff::data
