#include "sar/model/checkpoint.hpp"

#include "sar/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace sar::model {

namespace {

template <typename T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return value;
}

template <typename T>
void put(std::ostream& out, T value) {
  value = to_little(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw LoadError("truncated checkpoint '" + path.string() + "'");
  }
  return to_little(value);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::vector<nc::NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write checkpoint '" + path.string() + "'");
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, tensors.size());
  for (const auto& [name, tensor] : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, 2);
    put<std::uint64_t>(out, tensor.rows());
    put<std::uint64_t>(out, tensor.cols());
    for (double v : tensor.values()) put<double>(out, v);
  }
  if (!out) throw LoadError("failed writing checkpoint '" + path.string() + "'");
}

std::vector<nc::NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint '" + path.string() + "'");
  char magic[sizeof(kCheckpointMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw LoadError("'" + path.string() + "' is not a checkpoint");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw LoadError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = get<std::uint64_t>(in, path);
  std::vector<nc::NamedTensor> tensors;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw LoadError("truncated checkpoint '" + path.string() + "'");
    const auto rank = get<std::uint32_t>(in, path);
    if (rank != 2) throw LoadError("tensor '" + name + "' has unsupported rank " + std::to_string(rank));
    const auto rows = get<std::uint64_t>(in, path);
    const auto cols = get<std::uint64_t>(in, path);
    std::vector<double> values(rows * cols);
    for (double& v : values) v = get<double>(in, path);
    tensors.push_back({std::move(name), nc::Tensor::from({rows, cols}, std::move(values))});
  }
  return tensors;
}

}  // namespace sar::model
