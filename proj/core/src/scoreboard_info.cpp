#include <cstring>
#include <stdexcept>

#include "transitive/scoreboard.hpp"

namespace transitive {

namespace {

constexpr char kSiMagic[4] = {'T', 'A', 'S', 'I'};

class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}
  void put(std::uint32_t value, unsigned bits) {
    for (unsigned i = 0; i < bits; ++i, ++pos_) {
      if (pos_ % 8 == 0) out_.push_back(0);
      if (value >> i & 1u) out_.back() |= static_cast<std::uint8_t>(1u << (pos_ % 8));
    }
  }

 private:
  std::vector<std::uint8_t>& out_;
  std::size_t pos_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint32_t get(unsigned bits) {
    std::uint32_t v = 0;
    for (unsigned i = 0; i < bits; ++i, ++pos_) v |= std::uint32_t(in_[pos_ / 8] >> (pos_ % 8) & 1u) << i;
    return v;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

ScoreboardInfo::ScoreboardInfo(unsigned width, SiMode mode)
    : ScoreboardInfo(width, mode, std::vector<TransRow>(std::size_t{1} << width, kNoNode)) {}

ScoreboardInfo::ScoreboardInfo(unsigned width, SiMode mode, std::vector<TransRow> prefix)
    : width_(width), mode_(mode), prefix_(std::move(prefix)) {
  if (!is_supported_width(width)) throw std::invalid_argument("ScoreboardInfo: unsupported width");
  if (prefix_.size() != (std::size_t{1} << width)) throw std::invalid_argument("ScoreboardInfo: table size != 2^T");
  for (std::size_t v = 0; v < prefix_.size(); ++v) {
    const TransRow p = prefix_[v];
    if (p == kNoNode) continue;
    if (p == v || (p & ~static_cast<TransRow>(v)) != 0) {
      throw std::invalid_argument("ScoreboardInfo: prefix of " + std::to_string(v) + " is not a proper subset");
    }
  }
}

std::vector<std::uint8_t> ScoreboardInfo::serialize() const {
  std::vector<std::uint8_t> out(kSiMagic, kSiMagic + 4);
  out.push_back(static_cast<std::uint8_t>(width_));
  out.push_back(static_cast<std::uint8_t>(mode_));
  out.push_back(0);
  out.push_back(0);
  std::vector<std::uint8_t> payload;
  payload.reserve(payload_bits(width_) / 8);
  BitWriter w(payload);
  for (std::size_t v = 0; v < prefix_.size(); ++v) {
    w.put(static_cast<std::uint32_t>(v), width_);
    w.put(prefix_[v] == kNoNode ? static_cast<std::uint32_t>(v) : prefix_[v], width_);
  }
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

ScoreboardInfo ScoreboardInfo::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kSiMagic, 4) != 0) {
    throw std::invalid_argument("ScoreboardInfo: bad magic");
  }
  const unsigned width = bytes[4];
  if (!is_supported_width(width) || bytes[5] > 1) throw std::invalid_argument("ScoreboardInfo: bad header");
  const auto mode = static_cast<SiMode>(bytes[5]);
  if (bytes.size() != kHeaderBytes + payload_bits(width) / 8) throw std::invalid_argument("ScoreboardInfo: bad size");
  BitReader r(bytes.subspan(kHeaderBytes));
  std::vector<TransRow> prefix(std::size_t{1} << width);
  for (std::size_t v = 0; v < prefix.size(); ++v) {
    if (r.get(width) != v) throw std::invalid_argument("ScoreboardInfo: node field out of order");
    const TransRow p = r.get(width);
    prefix[v] = p == v ? kNoNode : p;
  }
  return ScoreboardInfo(width, mode, std::move(prefix));
}

}  // namespace transitive
