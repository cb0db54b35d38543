#include "bafrcnn/tensor/snapshot.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

namespace bafrcnn::tensor {
namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'B', 'G', 'D', 'T'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw std::runtime_error("snapshot: truncated input");
  }

  [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_snapshot(std::span<const Parameter<float>> tensors) {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  put_u32(out, kSnapshotVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put_u32(out, static_cast<std::uint32_t>(t.tensor.rank()));
    for (std::size_t e : t.tensor.shape()) put_u32(out, static_cast<std::uint32_t>(e));
    for (float v : t.tensor.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

std::vector<Parameter<float>> decode_snapshot(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(4);
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw std::runtime_error("snapshot: bad magic");
  (void)r.str(4);
  const std::uint32_t version = r.u32();
  if (version != kSnapshotVersion) throw std::runtime_error("snapshot: unsupported version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  std::vector<Parameter<float>> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str(r.u32());
    const std::uint32_t rank = r.u32();
    if (rank == 0) throw std::runtime_error("snapshot: tensor '" + name + "' has rank 0");
    Shape shape(rank);
    for (auto& e : shape) e = r.u32();
    std::vector<float> values(shape_numel(shape));
    r.need(values.size() * 4);
    for (float& v : values) v = std::bit_cast<float>(r.u32());
    out.push_back(Parameter<float>{std::move(name), Tensor<float>(std::move(shape), std::move(values))});
  }
  if (!r.done()) throw std::runtime_error("snapshot: trailing bytes");
  return out;
}

void save_snapshot(const std::filesystem::path& path, std::span<const Parameter<float>> tensors) {
  const auto bytes = encode_snapshot(tensors);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("snapshot: cannot open '" + path.string() + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("snapshot: write failed for '" + path.string() + "'");
}

std::vector<Parameter<float>> load_snapshot(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("snapshot: cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

}  // namespace bafrcnn::tensor
