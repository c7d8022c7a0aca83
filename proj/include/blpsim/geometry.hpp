#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "blpsim/errors.hpp"

namespace blpsim {

using Addr = std::uint64_t;
using Cycle = std::uint64_t;

inline constexpr unsigned kLineBits = 6;
inline constexpr Addr kLineSize = Addr{1} << kLineBits;

inline constexpr Addr line_align(Addr a) { return a & ~(kLineSize - 1); }

struct DramGeometry {
  unsigned channels = 1;
  unsigned subchannels = 2;
  unsigned bankgroups = 8;
  unsigned banks_per_bankgroup = 4;
  unsigned rows = 65536;
  unsigned columns = 128;  // in 64B lines

  unsigned banks_per_subchannel() const { return bankgroups * banks_per_bankgroup; }
  unsigned banks_per_channel() const { return subchannels * banks_per_subchannel(); }

  void validate() const {
    auto pow2 = [](unsigned v) { return v >= 1 && std::has_single_bit(v); };
    if (!pow2(channels) || !pow2(subchannels) || !pow2(bankgroups) || !pow2(banks_per_bankgroup) ||
        !pow2(rows) || !pow2(columns))
      throw ConfigError("geometry: all dimensions must be powers of two >= 1");
    if (banks_per_channel() > 64)
      throw ConfigError("geometry: at most 64 banks per channel are supported");
  }
};

enum class Field : std::uint8_t { Channel, Subchannel, Bankgroup, Bank, Row, Column };
inline constexpr std::size_t kFieldCount = 6;

inline std::string_view field_name(Field f) {
  switch (f) {
    case Field::Channel: return "ch";
    case Field::Subchannel: return "sc";
    case Field::Bankgroup: return "bg";
    case Field::Bank: return "ba";
    case Field::Row: return "row";
    case Field::Column: return "co";
  }
  return "?";
}

inline Field parse_field(std::string_view s) {
  for (std::size_t i = 0; i < kFieldCount; ++i) {
    auto f = static_cast<Field>(i);
    if (s == field_name(f)) return f;
  }
  throw ConfigError("mapping: unknown field '" + std::string(s) + "'");
}

struct DramCoord {
  unsigned channel = 0;
  unsigned subchannel = 0;
  unsigned bankgroup = 0;
  unsigned bank = 0;
  unsigned row = 0;
  unsigned column = 0;

  friend bool operator==(const DramCoord&, const DramCoord&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const DramCoord& c) {
  return os << "(ch=" << c.channel << ",sc=" << c.subchannel << ",bg=" << c.bankgroup
            << ",ba=" << c.bank << ",row=" << c.row << ",co=" << c.column << ")";
}

// Sub-channel-major, then bankgroup, then bank. Channel is not part of the ordinal.
inline unsigned flat_bank_id(const DramCoord& c, const DramGeometry& g) {
  return (c.subchannel * g.bankgroups + c.bankgroup) * g.banks_per_bankgroup + c.bank;
}

struct FieldBit {
  Field field;
  unsigned bit;  // physical address bit index
};

// Bit-slice address mapping. Each field's bits are listed LSB first in the order they
// appear in the layout. With PBPL enabled, the concatenated (bankgroup||bank) index is
// XORed with the listed low row bits after extraction.
class AddressMapping {
 public:
  AddressMapping() : AddressMapping(DramGeometry{}) {}

  explicit AddressMapping(const DramGeometry& geom, bool pbpl = true)
      : AddressMapping(geom, zen_layout(geom), pbpl, default_pbpl_bits(geom)) {}

  AddressMapping(const DramGeometry& geom, std::vector<FieldBit> layout, bool pbpl,
                 std::vector<unsigned> pbpl_row_bits)
      : geom_(geom), layout_(std::move(layout)), pbpl_(pbpl), pbpl_bits_(std::move(pbpl_row_bits)) {
    geom_.validate();
    std::uint64_t used = 0;
    for (const auto& fb : layout_) {
      if (fb.bit < kLineBits || fb.bit >= 64)
        throw ConfigError("mapping: bit " + std::to_string(fb.bit) + " outside [6,64)");
      if (used & (std::uint64_t{1} << fb.bit))
        throw ConfigError("mapping: bit " + std::to_string(fb.bit) + " assigned twice");
      used |= std::uint64_t{1} << fb.bit;
      bits_[static_cast<std::size_t>(fb.field)].push_back(fb.bit);
    }
    const std::array<unsigned, kFieldCount> dims{geom_.channels, geom_.subchannels, geom_.bankgroups,
                                                 geom_.banks_per_bankgroup, geom_.rows, geom_.columns};
    for (std::size_t i = 0; i < kFieldCount; ++i) {
      auto want = static_cast<unsigned>(std::countr_zero(dims[i]));
      if (bits_[i].size() != want)
        throw ConfigError("mapping: field '" + std::string(field_name(static_cast<Field>(i))) + "' has " +
                          std::to_string(bits_[i].size()) + " bits, geometry needs " + std::to_string(want));
    }
    const auto bank_bits = static_cast<unsigned>(std::countr_zero(geom_.banks_per_subchannel()));
    const auto row_bits = static_cast<unsigned>(std::countr_zero(geom_.rows));
    if (pbpl_) {
      if (pbpl_bits_.size() > bank_bits)
        throw ConfigError("mapping: more PBPL row bits than bank index bits");
      for (unsigned b : pbpl_bits_)
        if (b >= row_bits) throw ConfigError("mapping: PBPL bit must index into the row field");
    }
  }

  // From LSB above the line offset: sc, 2 column, 3 bankgroup, 2 bank, remaining column, row.
  // Field widths follow the geometry; the order is fixed.
  static std::vector<FieldBit> zen_layout(const DramGeometry& g) {
    std::vector<FieldBit> out;
    unsigned next = kLineBits;
    auto put = [&](Field f, unsigned n) {
      for (unsigned i = 0; i < n; ++i) out.push_back({f, next++});
    };
    auto lg = [](unsigned v) { return static_cast<unsigned>(std::countr_zero(v)); };
    const unsigned col = lg(g.columns);
    const unsigned col_low = col < 2 ? col : 2;
    put(Field::Subchannel, lg(g.subchannels));
    put(Field::Column, col_low);
    put(Field::Bankgroup, lg(g.bankgroups));
    put(Field::Bank, lg(g.banks_per_bankgroup));
    put(Field::Column, col - col_low);
    put(Field::Channel, lg(g.channels));
    put(Field::Row, lg(g.rows));
    return out;
  }

  static std::vector<unsigned> default_pbpl_bits(const DramGeometry& g) {
    const auto n = static_cast<unsigned>(std::countr_zero(g.banks_per_subchannel()));
    const auto r = static_cast<unsigned>(std::countr_zero(g.rows));
    std::vector<unsigned> out;
    for (unsigned i = 0; i < n && i < r; ++i) out.push_back(i);
    return out;
  }

  DramCoord map(Addr addr) const {
    DramCoord c;
    c.channel = extract(addr, Field::Channel);
    c.subchannel = extract(addr, Field::Subchannel);
    c.bankgroup = extract(addr, Field::Bankgroup);
    c.bank = extract(addr, Field::Bank);
    c.row = extract(addr, Field::Row);
    c.column = extract(addr, Field::Column);
    if (pbpl_) {
      unsigned idx = c.bankgroup * geom_.banks_per_bankgroup + c.bank;
      idx ^= pbpl_mask(c.row);
      c.bankgroup = idx / geom_.banks_per_bankgroup;
      c.bank = idx % geom_.banks_per_bankgroup;
    }
    return c;
  }

  // Inverse of map(): the line-aligned address that decodes to `c`.
  Addr compose(const DramCoord& c) const {
    unsigned bg = c.bankgroup, ba = c.bank;
    if (pbpl_) {
      unsigned idx = (bg * geom_.banks_per_bankgroup + ba) ^ pbpl_mask(c.row);
      bg = idx / geom_.banks_per_bankgroup;
      ba = idx % geom_.banks_per_bankgroup;
    }
    Addr a = 0;
    a |= deposit(c.channel, Field::Channel);
    a |= deposit(c.subchannel, Field::Subchannel);
    a |= deposit(bg, Field::Bankgroup);
    a |= deposit(ba, Field::Bank);
    a |= deposit(c.row, Field::Row);
    a |= deposit(c.column, Field::Column);
    return a;
  }

  const DramGeometry& geometry() const { return geom_; }
  const std::vector<FieldBit>& layout() const { return layout_; }
  bool pbpl() const { return pbpl_; }
  const std::vector<unsigned>& pbpl_row_bits() const { return pbpl_bits_; }
  const std::vector<unsigned>& field_bits(Field f) const { return bits_[static_cast<std::size_t>(f)]; }

  // "sc:6,co:7,...": the config-file form of the layout.
  std::string layout_string() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < layout_.size(); ++i) {
      if (i) os << ',';
      os << field_name(layout_[i].field) << ':' << layout_[i].bit;
    }
    return os.str();
  }

  static std::vector<FieldBit> parse_layout(std::string_view s) {
    std::vector<FieldBit> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
      auto comma = s.find(',', pos);
      auto tok = s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
      auto colon = tok.find(':');
      if (colon == std::string_view::npos) throw ConfigError("mapping: expected field:bit, got '" + std::string(tok) + "'");
      unsigned bit = 0;
      try {
        bit = static_cast<unsigned>(std::stoul(std::string(tok.substr(colon + 1))));
      } catch (const std::exception&) {
        throw ConfigError("mapping: bad bit index in '" + std::string(tok) + "'");
      }
      out.push_back({parse_field(tok.substr(0, colon)), bit});
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    return out;
  }

  // Human-readable bit table, MSB first.
  std::string describe() const {
    std::ostringstream os;
    std::vector<const FieldBit*> by_bit(64, nullptr);
    unsigned top = kLineBits;
    for (const auto& fb : layout_) {
      by_bit[fb.bit] = &fb;
      top = std::max(top, fb.bit + 1);
    }
    os << "bit  field\n";
    for (unsigned b = top; b-- > 0;) {
      os << (b < 10 ? " " : "") << b << "   ";
      if (b < kLineBits) {
        os << "offset\n";
      } else if (by_bit[b]) {
        const auto& v = bits_[static_cast<std::size_t>(by_bit[b]->field)];
        unsigned i = 0;
        while (v[i] != b) ++i;
        os << field_name(by_bit[b]->field) << '[' << i << "]\n";
      } else {
        os << "-\n";
      }
    }
    os << "pbpl: " << (pbpl_ ? "on" : "off");
    if (pbpl_) {
      os << " (bg||ba ^= row bits";
      for (unsigned b : pbpl_bits_) os << ' ' << b;
      os << ')';
    }
    os << '\n';
    return os.str();
  }

 private:
  unsigned extract(Addr a, Field f) const {
    unsigned v = 0, i = 0;
    for (unsigned b : bits_[static_cast<std::size_t>(f)]) v |= static_cast<unsigned>((a >> b) & 1u) << i++;
    return v;
  }

  Addr deposit(unsigned v, Field f) const {
    Addr a = 0;
    unsigned i = 0;
    for (unsigned b : bits_[static_cast<std::size_t>(f)]) a |= Addr{(v >> i++) & 1u} << b;
    return a;
  }

  unsigned pbpl_mask(unsigned row) const {
    unsigned m = 0, i = 0;
    for (unsigned b : pbpl_bits_) m |= ((row >> b) & 1u) << i++;
    return m;
  }

  DramGeometry geom_;
  std::vector<FieldBit> layout_;
  bool pbpl_ = true;
  std::vector<unsigned> pbpl_bits_;
  std::array<std::vector<unsigned>, kFieldCount> bits_{};
};

}  // namespace blpsim
