#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "blpsim/cache.hpp"
#include "blpsim/errors.hpp"
#include "blpsim/geometry.hpp"

namespace blpsim {

struct TraceRecord {
  AccessKind kind = AccessKind::Read;
  Addr addr = 0;
  unsigned stream_id = 0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

enum class Generator : std::uint8_t { StreamCopy, StreamAdd, StreamScale, StreamTriad, UniformRandom, Mixed };

inline std::string_view generator_name(Generator g) {
  switch (g) {
    case Generator::StreamCopy: return "stream_copy";
    case Generator::StreamAdd: return "stream_add";
    case Generator::StreamScale: return "stream_scale";
    case Generator::StreamTriad: return "stream_triad";
    case Generator::UniformRandom: return "uniform_random";
    case Generator::Mixed: return "mixed";
  }
  return "?";
}

inline Generator parse_generator(std::string_view s) {
  for (auto g : {Generator::StreamCopy, Generator::StreamAdd, Generator::StreamScale, Generator::StreamTriad,
                 Generator::UniformRandom, Generator::Mixed})
    if (s == generator_name(g)) return g;
  throw ConfigError("workload: unknown generator '" + std::string(s) + "'");
}

struct SyntheticSpec {
  Generator generator = Generator::UniformRandom;
  std::uint64_t footprint = std::uint64_t{64} << 20;
  double write_fraction = 0.5;
  std::uint64_t length = 1'000'000;
  std::uint64_t warmup = 0;  // extra leading accesses excluded from statistics
  std::uint64_t seed = 1;

  void validate() const {
    if (!(write_fraction >= 0.0 && write_fraction <= 1.0)) throw ConfigError("workload.write_fraction must be in [0,1]");
    if (footprint < 4 * kLineSize) throw ConfigError("workload.footprint too small");
  }
};

class WorkloadSource {
 public:
  virtual ~WorkloadSource() = default;
  virtual std::optional<TraceRecord> next() = 0;
};

class VectorSource : public WorkloadSource {
 public:
  explicit VectorSource(std::vector<TraceRecord> recs) : recs_(std::move(recs)) {}
  std::optional<TraceRecord> next() override {
    if (pos_ >= recs_.size()) return std::nullopt;
    return recs_[pos_++];
  }

 private:
  std::vector<TraceRecord> recs_;
  std::size_t pos_ = 0;
};

namespace detail {

// STREAM kernel walking line-granular arrays: the read operands of element i, then the
// store. copy c=a, scale b=c, add c=a+b, triad a=b+c.
class StreamKernel {
 public:
  StreamKernel(Generator g, Addr base, std::uint64_t footprint, unsigned stream_id) : stream_id_(stream_id) {
    enum { A, B, C };
    switch (g) {
      case Generator::StreamCopy: pattern_ = {A, C}; break;
      case Generator::StreamScale: pattern_ = {C, B}; break;
      case Generator::StreamAdd: pattern_ = {A, B, C}; break;
      default: pattern_ = {B, C, A}; break;
    }
    const std::uint64_t arrays = pattern_.size();
    lines_ = std::max<std::uint64_t>(1, footprint / kLineSize / arrays);
    // Array slots are assigned in first-use order so unused arrays take no space.
    std::array<int, 3> slot{-1, -1, -1};
    int next = 0;
    for (int a : pattern_)
      if (slot[a] < 0) slot[a] = next++;
    for (auto& a : pattern_) a = slot[a];
    base_ = base;
  }

  TraceRecord next() {
    const int arr = pattern_[step_];
    TraceRecord r;
    r.kind = step_ + 1 == pattern_.size() ? AccessKind::Write : AccessKind::Read;
    r.addr = base_ + (static_cast<std::uint64_t>(arr) * lines_ + elem_) * kLineSize;
    r.stream_id = stream_id_;
    if (++step_ == pattern_.size()) {
      step_ = 0;
      elem_ = (elem_ + 1) % lines_;
    }
    return r;
  }

 private:
  std::vector<int> pattern_;
  std::uint64_t lines_ = 1;
  Addr base_ = 0;
  std::size_t step_ = 0;
  std::uint64_t elem_ = 0;
  unsigned stream_id_;
};

// mt19937_64 output is fully specified, so these draws are identical on every platform.
class UniformRandom {
 public:
  UniformRandom(Addr base, std::uint64_t footprint, double write_fraction, std::uint64_t seed, unsigned stream_id)
      : rng_(seed), base_(base), lines_(std::max<std::uint64_t>(1, footprint / kLineSize)),
        write_fraction_(write_fraction), stream_id_(stream_id) {}

  TraceRecord next() {
    TraceRecord r;
    r.addr = base_ + (rng_() % lines_) * kLineSize;
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    r.kind = u < write_fraction_ ? AccessKind::Write : AccessKind::Read;
    r.stream_id = stream_id_;
    return r;
  }

 private:
  std::mt19937_64 rng_;
  Addr base_;
  std::uint64_t lines_;
  double write_fraction_;
  unsigned stream_id_;
};

}  // namespace detail

// Deterministic synthetic access stream for a (spec, seed) pair.
class SyntheticGenerator : public WorkloadSource {
 public:
  explicit SyntheticGenerator(const SyntheticSpec& spec) : spec_(spec) {
    spec_.validate();
    switch (spec_.generator) {
      case Generator::UniformRandom:
        randoms_.emplace_back(0, spec_.footprint, spec_.write_fraction, spec_.seed, 0);
        break;
      case Generator::Mixed: {
        // Four streams on disjoint quarters: triad, copy and two random streams.
        const std::uint64_t q = spec_.footprint / 4;
        kernels_.emplace_back(Generator::StreamTriad, 0, q, 0);
        kernels_.emplace_back(Generator::StreamCopy, q, q, 1);
        randoms_.emplace_back(2 * q, q, spec_.write_fraction, spec_.seed + 2, 2);
        randoms_.emplace_back(3 * q, q, spec_.write_fraction, spec_.seed + 3, 3);
        break;
      }
      default:
        kernels_.emplace_back(spec_.generator, 0, spec_.footprint, 0);
        break;
    }
  }

  std::optional<TraceRecord> next() override {
    if (emitted_ >= spec_.length + spec_.warmup) return std::nullopt;
    ++emitted_;
    const std::size_t n = kernels_.size() + randoms_.size();
    const std::size_t k = rr_++ % n;
    if (k < kernels_.size()) return kernels_[k].next();
    return randoms_[k - kernels_.size()].next();
  }

  const SyntheticSpec& spec() const { return spec_; }

 private:
  SyntheticSpec spec_;
  std::vector<detail::StreamKernel> kernels_;
  std::vector<detail::UniformRandom> randoms_;
  std::uint64_t emitted_ = 0;
  std::uint64_t rr_ = 0;
};

inline std::vector<TraceRecord> collect(WorkloadSource& src) {
  std::vector<TraceRecord> out;
  while (auto r = src.next()) out.push_back(*r);
  return out;
}

// .blpt: "BLP1", u32 record count, then 9-byte little-endian records:
// type byte (bit 0 = write, high nibble = stream id) and the 8-byte address.
inline void write_trace_binary(std::ostream& os, const std::vector<TraceRecord>& recs) {
  os.write("BLP1", 4);
  const auto n = static_cast<std::uint32_t>(recs.size());
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((n >> (8 * i)) & 0xFF));
  for (const auto& r : recs) {
    BLPSIM_REQUIRE(r.stream_id < 16, "stream id does not fit the trace format");
    os.put(static_cast<char>((r.kind == AccessKind::Write ? 1 : 0) | (r.stream_id << 4)));
    for (int i = 0; i < 8; ++i) os.put(static_cast<char>((r.addr >> (8 * i)) & 0xFF));
  }
}

inline std::vector<TraceRecord> read_trace_binary(std::istream& is) {
  std::array<unsigned char, 8> hdr{};
  is.read(reinterpret_cast<char*>(hdr.data()), 8);
  if (is.gcount() < 4 || std::memcmp(hdr.data(), "BLP1", 4) != 0) throw TraceParseError("bad trace magic", 0);
  if (is.gcount() < 8) throw TraceParseError("truncated trace header", static_cast<std::uint64_t>(is.gcount()));
  std::uint32_t n = 0;
  for (int i = 0; i < 4; ++i) n |= std::uint32_t{hdr[4 + i]} << (8 * i);
  std::vector<TraceRecord> out;
  out.reserve(n);
  std::uint64_t offset = 8;
  std::array<unsigned char, 9> rec{};
  for (std::uint32_t k = 0; k < n; ++k) {
    is.read(reinterpret_cast<char*>(rec.data()), 9);
    if (is.gcount() != 9) throw TraceParseError("truncated trace record", offset + static_cast<std::uint64_t>(is.gcount()));
    if ((rec[0] & 0x0E) != 0) throw TraceParseError("bad record type byte", offset);
    TraceRecord r;
    r.kind = (rec[0] & 1) ? AccessKind::Write : AccessKind::Read;
    r.stream_id = rec[0] >> 4;
    for (int i = 0; i < 8; ++i) r.addr |= Addr{rec[1 + i]} << (8 * i);
    out.push_back(r);
    offset += 9;
  }
  if (is.peek() != std::char_traits<char>::eof()) throw TraceParseError("trailing bytes after last record", offset);
  return out;
}

// Text form: one `kind,addr_hex,stream` per line; kind is R/W (or read/write).
inline std::vector<TraceRecord> read_trace_csv(std::istream& is) {
  std::vector<TraceRecord> out;
  std::string line;
  std::uint64_t offset = 0;
  while (std::getline(is, line)) {
    const std::uint64_t here = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#' || line.rfind("kind", 0) == 0) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c1 == std::string::npos) throw TraceParseError("expected kind,addr_hex,stream", here);
    const std::string kind = line.substr(0, c1);
    const std::string addr = line.substr(c1 + 1, c2 == std::string::npos ? std::string::npos : c2 - c1 - 1);
    TraceRecord r;
    if (kind == "R" || kind == "r" || kind == "read" || kind == "0")
      r.kind = AccessKind::Read;
    else if (kind == "W" || kind == "w" || kind == "write" || kind == "1")
      r.kind = AccessKind::Write;
    else
      throw TraceParseError("bad access kind '" + kind + "'", here);
    try {
      std::size_t used = 0;
      r.addr = std::stoull(addr, &used, 16);
      if (used != addr.size()) throw std::invalid_argument("trailing");
      if (c2 != std::string::npos) {
        const std::string sid = line.substr(c2 + 1);
        r.stream_id = static_cast<unsigned>(std::stoul(sid, &used));
        if (used != sid.size() || r.stream_id > 15) throw std::invalid_argument("stream");
      }
    } catch (const std::exception&) {
      throw TraceParseError("bad address or stream field", here);
    }
    out.push_back(r);
  }
  return out;
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& recs) {
  os << "kind,addr_hex,stream\n";
  for (const auto& r : recs)
    os << (r.kind == AccessKind::Write ? 'W' : 'R') << ",0x" << std::hex << r.addr << std::dec << ',' << r.stream_id
       << '\n';
}

}  // namespace blpsim
