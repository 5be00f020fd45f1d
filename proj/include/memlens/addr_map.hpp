#pragma once

#include "memlens/dram_types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace memlens {

enum class MapKind { FieldOrder, XorHash };
enum class Field { Ch, Ra, Ba, Ro, Co };

std::string_view to_string(Field f);

/// How a line address is split into DRAM coordinates.
///
/// `order` lists the fields from the most to the least significant address
/// bits. With `channel_mod` the channel is `line % channels` and the
/// remaining fields are sliced from `line / channels`; address bit indices in
/// `xor_bits` then refer to that quotient. For XorHash, each listed channel,
/// rank or bank bit is replaced by the parity of the named address bits.
struct MappingScheme {
    MapKind kind = MapKind::FieldOrder;
    std::vector<Field> order{Field::Ro, Field::Ba, Field::Ra, Field::Co, Field::Ch};
    bool channel_mod = false;
    // Indexed by Field (Ch, Ra, Ba only); inner index is the output bit.
    std::array<std::vector<std::vector<unsigned>>, 3> xor_bits;

    bool operator==(const MappingScheme&) const = default;
};

// Text form: `key=value` lines with `#` comments. Keys: kind, order,
// channel_mod, and xor.<ch|ra|ba><bit>=<i,j,k>.
MappingScheme parse_scheme(std::string_view text);
std::string format_scheme(const MappingScheme& scheme);

// Field-order and XOR defaults shipped for a DRAM organization.
MappingScheme default_field_order_scheme(const DramConfig& cfg);
MappingScheme default_xor_scheme(const DramConfig& cfg);

class AddressMap {
public:
    // Throws std::invalid_argument if the scheme does not fit the organization.
    AddressMap(MappingScheme scheme, const DramConfig& cfg);

    // Throws std::out_of_range for line_addr >= capacity().
    DramCoord map(std::uint64_t line_addr) const;

    std::uint64_t capacity() const { return capacity_; }
    const MappingScheme& scheme() const { return scheme_; }
    unsigned width(Field f) const { return widths_[static_cast<std::size_t>(f)]; }
    // Least significant address bit of a sliced field.
    unsigned position(Field f) const { return shifts_[static_cast<std::size_t>(f)]; }

private:
    MappingScheme scheme_;
    std::uint32_t channels_;
    std::uint64_t capacity_;
    std::array<unsigned, 5> widths_{};
    std::array<unsigned, 5> shifts_{};
    std::array<std::vector<std::uint64_t>, 3> xor_masks_;
};

struct BijectionResult {
    bool bijective = true;
    std::uint64_t a = 0;  // first colliding pair, a < b
    std::uint64_t b = 0;
};

// Maps 0..n_lines-1 and reports the first address whose coordinate repeats.
BijectionResult verify_bijection(const AddressMap& map, std::uint64_t n_lines);

}  // namespace memlens
