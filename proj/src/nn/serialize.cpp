#include "url_lens/nn/serialize.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace url_lens::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'U', 'R', 'L', 'P'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("load_parameters: truncated file");
  return v;
}

}  // namespace

template <typename T>
void save_parameters(const std::filesystem::path& path, const std::vector<Parameter<T>*>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_parameters: cannot open " + path.string());
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    put_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put_u32(out, static_cast<std::uint32_t>(p->value.rows()));
    put_u32(out, static_cast<std::uint32_t>(p->value.cols()));
    std::vector<float> buf(static_cast<std::size_t>(p->value.size()));
    for (Index i = 0; i < p->value.size(); ++i) buf[static_cast<std::size_t>(i)] = static_cast<float>(p->value.data()[i]);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("save_parameters: write failed for " + path.string());
}

template <typename T>
void load_parameters(const std::filesystem::path& path, const std::vector<Parameter<T>*>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_parameters: cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("load_parameters: bad magic in " + path.string());
  if (get_u32(in) != kVersion) throw std::runtime_error("load_parameters: unsupported version");
  if (get_u32(in) != params.size()) throw std::runtime_error("load_parameters: parameter count mismatch");
  for (auto* p : params) {
    std::string name(get_u32(in), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    const auto rows = get_u32(in);
    const auto cols = get_u32(in);
    if (name != p->name || rows != p->value.rows() || cols != p->value.cols()) {
      throw std::runtime_error("load_parameters: layout mismatch at '" + p->name + "'");
    }
    std::vector<float> buf(static_cast<std::size_t>(rows) * cols);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw std::runtime_error("load_parameters: truncated data");
    for (std::size_t i = 0; i < buf.size(); ++i) p->value.data()[i] = static_cast<T>(buf[i]);
  }
}

template void save_parameters<float>(const std::filesystem::path&, const std::vector<Parameter<float>*>&);
template void save_parameters<double>(const std::filesystem::path&, const std::vector<Parameter<double>*>&);
template void load_parameters<float>(const std::filesystem::path&, const std::vector<Parameter<float>*>&);
template void load_parameters<double>(const std::filesystem::path&, const std::vector<Parameter<double>*>&);

}  // namespace url_lens::nn
