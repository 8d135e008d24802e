#include <posekit/frzf.hpp>

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace posekit {

namespace {

template <typename T>
void putLe(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  for (size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T getLe(const unsigned char* p) {
  T value = 0;
  for (size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(p[i]) << (8 * i);
  return value;
}

void readExact(std::istream& in, unsigned char* dst, size_t n) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) throw Error("unexpected end of stream");
}

}  // namespace

void writeFrzf(std::ostream& out, const FeatureMatrix& features) {
  out.write("FRZF", 4);
  putLe<std::uint32_t>(out, kFrzfVersion);
  putLe<std::uint64_t>(out, static_cast<std::uint64_t>(features.rows()));
  putLe<std::uint32_t>(out, static_cast<std::uint32_t>(features.cols()));
  putLe<std::uint32_t>(out, 0u);
  const float* data = features.data();
  for (Eigen::Index i = 0; i < features.size(); ++i)
    putLe<std::uint32_t>(out, std::bit_cast<std::uint32_t>(data[i]));
  if (!out) throw Error("failed writing FRZF stream");
}

void writeFrzf(const std::filesystem::path& path, const FeatureMatrix& features) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  writeFrzf(out, features);
}

FeatureMatrix readFrzf(std::istream& in) {
  std::array<unsigned char, kFrzfHeaderSize> header{};
  readExact(in, header.data(), 4);
  if (std::memcmp(header.data(), "FRZF", 4) != 0) throw Error("bad magic");
  readExact(in, header.data() + 4, kFrzfHeaderSize - 4);
  if (getLe<std::uint32_t>(header.data() + 4) != kFrzfVersion) throw Error("unsupported version");
  const auto rows = getLe<std::uint64_t>(header.data() + 8);
  const auto dim = getLe<std::uint32_t>(header.data() + 16);
  if (dim != 0 && rows > (std::uint64_t{1} << 40) / dim) throw Error("payload too large");

  FeatureMatrix features(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  std::vector<unsigned char> row(static_cast<size_t>(dim) * 4);
  for (std::uint64_t r = 0; r < rows; ++r) {
    readExact(in, row.data(), row.size());
    for (std::uint32_t c = 0; c < dim; ++c) {
      const float v = std::bit_cast<float>(getLe<std::uint32_t>(row.data() + 4 * c));
      if (!std::isfinite(v)) throw Error("non-finite value in payload");
      features(static_cast<Eigen::Index>(r), c) = v;
    }
  }
  return features;
}

FeatureMatrix readFrzf(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return readFrzf(in);
}

}  // namespace posekit
