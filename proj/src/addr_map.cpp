#include "memlens/addr_map.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace memlens {

namespace {

constexpr std::array<Field, 5> kAllFields{Field::Ch, Field::Ra, Field::Ba, Field::Ro, Field::Co};

std::size_t idx(Field f) { return static_cast<std::size_t>(f); }

Field parse_field(std::string_view s)
{
    for (auto f : kAllFields)
        if (to_string(f) == s)
            return f;
    throw std::invalid_argument(fmt::format("unknown address field '{}'", s));
}

std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> parts;
    while (true) {
        const auto pos = s.find(sep);
        parts.push_back(trim(s.substr(0, pos)));
        if (pos == std::string_view::npos)
            break;
        s.remove_prefix(pos + 1);
    }
    return parts;
}

unsigned log2_exact(std::uint64_t n, std::string_view what)
{
    if (!std::has_single_bit(n))
        throw std::invalid_argument(fmt::format("{} count {} is not a power of two", what, n));
    return static_cast<unsigned>(std::countr_zero(n));
}

unsigned parse_uint(std::string_view s)
{
    unsigned v = 0;
    if (s.empty())
        throw std::invalid_argument("empty number");
    for (char c : s) {
        if (c < '0' || c > '9')
            throw std::invalid_argument(fmt::format("'{}' is not a non-negative integer", s));
        v = v * 10 + unsigned(c - '0');
    }
    return v;
}

std::array<std::uint64_t, 5> field_counts(const DramConfig& cfg)
{
    std::array<std::uint64_t, 5> n{};
    n[idx(Field::Ch)] = cfg.channels;
    n[idx(Field::Ra)] = cfg.ranks();
    n[idx(Field::Ba)] = cfg.banks_per_rank;
    n[idx(Field::Ro)] = cfg.rows_per_bank;
    n[idx(Field::Co)] = cfg.columns_per_row;
    return n;
}

}  // namespace

std::string_view to_string(Field f)
{
    switch (f) {
    case Field::Ch:
        return "ch";
    case Field::Ra:
        return "ra";
    case Field::Ba:
        return "ba";
    case Field::Ro:
        return "ro";
    case Field::Co:
        return "co";
    }
    return "?";
}

MappingScheme parse_scheme(std::string_view text)
{
    MappingScheme s;
    std::size_t line_no = 0;
    for (auto raw : split(text, '\n')) {
        ++line_no;
        auto line = trim(raw.substr(0, raw.find('#')));
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw std::invalid_argument(fmt::format("scheme line {}: expected key=value", line_no));
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        try {
            if (key == "kind") {
                if (value == "field_order")
                    s.kind = MapKind::FieldOrder;
                else if (value == "xor")
                    s.kind = MapKind::XorHash;
                else
                    throw std::invalid_argument(fmt::format("unknown kind '{}'", value));
            } else if (key == "order") {
                s.order.clear();
                for (auto f : split(value, ','))
                    s.order.push_back(parse_field(f));
            } else if (key == "channel_mod") {
                if (value != "true" && value != "false")
                    throw std::invalid_argument("channel_mod must be true or false");
                s.channel_mod = value == "true";
            } else if (key.starts_with("xor.") && key.size() > 6) {
                const auto field = parse_field(key.substr(4, 2));
                if (field == Field::Ro || field == Field::Co)
                    throw std::invalid_argument("only ch, ra and ba bits can be hashed");
                const auto bit = parse_uint(key.substr(6));
                auto& fns = s.xor_bits[idx(field)];
                if (fns.size() <= bit)
                    fns.resize(bit + 1);
                fns[bit].clear();
                for (auto b : split(value, ','))
                    fns[bit].push_back(parse_uint(b));
            } else {
                throw std::invalid_argument(fmt::format("unknown key '{}'", key));
            }
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(fmt::format("scheme line {}: {}", line_no, e.what()));
        }
    }
    return s;
}

std::string format_scheme(const MappingScheme& s)
{
    std::string out = fmt::format("kind={}\n", s.kind == MapKind::XorHash ? "xor" : "field_order");
    out += "order=";
    for (std::size_t i = 0; i < s.order.size(); ++i)
        out += fmt::format("{}{}", i ? "," : "", to_string(s.order[i]));
    out += fmt::format("\nchannel_mod={}\n", s.channel_mod ? "true" : "false");
    for (auto f : {Field::Ch, Field::Ra, Field::Ba}) {
        const auto& fns = s.xor_bits[idx(f)];
        for (std::size_t bit = 0; bit < fns.size(); ++bit) {
            if (fns[bit].empty())
                continue;
            out += fmt::format("xor.{}{}={}\n", to_string(f), bit, fmt::join(fns[bit], ","));
        }
    }
    return out;
}

MappingScheme default_field_order_scheme(const DramConfig& cfg)
{
    MappingScheme s;
    s.channel_mod = !std::has_single_bit(cfg.channels);
    return s;
}

MappingScheme default_xor_scheme(const DramConfig& cfg)
{
    MappingScheme s = default_field_order_scheme(cfg);
    s.kind = MapKind::XorHash;
    const AddressMap plain(s, cfg);

    // Each hashed bit XORs its own position with one column bit and one row
    // bit. Row and column pass through unchanged, so the map stays invertible.
    const unsigned co_w = plain.width(Field::Co);
    const unsigned ro_w = plain.width(Field::Ro);
    unsigned k = 0;
    for (auto f : {Field::Ch, Field::Ra, Field::Ba}) {
        if (f == Field::Ch && s.channel_mod)
            continue;
        auto& fns = s.xor_bits[idx(f)];
        fns.resize(plain.width(f));
        for (unsigned bit = 0; bit < fns.size(); ++bit, ++k) {
            fns[bit].push_back(plain.position(f) + bit);
            if (co_w > 0)
                fns[bit].push_back(plain.position(Field::Co) + k % co_w);
            if (ro_w > 0)
                fns[bit].push_back(plain.position(Field::Ro) + k % ro_w);
        }
    }
    return s;
}

AddressMap::AddressMap(MappingScheme scheme, const DramConfig& cfg)
    : scheme_(std::move(scheme)), channels_(cfg.channels), capacity_(cfg.capacity_lines())
{
    cfg.validate();
    const auto counts = field_counts(cfg);

    auto sorted = scheme_.order;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != std::vector<Field>{Field::Ch, Field::Ra, Field::Ba, Field::Ro, Field::Co})
        throw std::invalid_argument("field order must list ch, ra, ba, ro and co exactly once");
    if (!scheme_.channel_mod && !std::has_single_bit(cfg.channels))
        throw std::invalid_argument("non-power-of-two channel count requires channel_mod=true");

    for (auto f : kAllFields) {
        if (f == Field::Ch && scheme_.channel_mod)
            continue;
        widths_[idx(f)] = log2_exact(counts[idx(f)], to_string(f));
    }
    unsigned shift = 0;
    for (auto it = scheme_.order.rbegin(); it != scheme_.order.rend(); ++it) {
        shifts_[idx(*it)] = shift;
        shift += widths_[idx(*it)];
    }

    if (scheme_.kind == MapKind::XorHash) {
        for (auto f : {Field::Ch, Field::Ra, Field::Ba}) {
            const auto& fns = scheme_.xor_bits[idx(f)];
            if (fns.size() > widths_[idx(f)])
                throw std::invalid_argument(fmt::format("xor.{} lists {} bits but the field has {}", to_string(f),
                                                        fns.size(), widths_[idx(f)]));
            auto& masks = xor_masks_[idx(f)];
            masks.assign(fns.size(), 0);
            for (std::size_t bit = 0; bit < fns.size(); ++bit) {
                for (auto a : fns[bit]) {
                    if (a >= shift)
                        throw std::invalid_argument(
                            fmt::format("xor.{}{} uses address bit {} beyond width {}", to_string(f), bit, a, shift));
                    masks[bit] ^= std::uint64_t(1) << a;
                }
            }
        }
    } else if (std::any_of(scheme_.xor_bits.begin(), scheme_.xor_bits.end(),
                           [](const auto& v) { return !v.empty(); })) {
        throw std::invalid_argument("xor functions given for a field_order scheme");
    }
}

DramCoord AddressMap::map(std::uint64_t line_addr) const
{
    if (line_addr >= capacity_)
        throw std::out_of_range(fmt::format("line address {} beyond capacity {}", line_addr, capacity_));

    std::uint64_t x = line_addr;
    std::array<std::uint64_t, 5> v{};
    if (scheme_.channel_mod) {
        v[idx(Field::Ch)] = x % channels_;
        x /= channels_;
    }
    for (auto f : kAllFields) {
        if (f == Field::Ch && scheme_.channel_mod)
            continue;
        v[idx(f)] = (x >> shifts_[idx(f)]) & ((std::uint64_t(1) << widths_[idx(f)]) - 1);
    }
    if (scheme_.kind == MapKind::XorHash) {
        for (auto f : {Field::Ch, Field::Ra, Field::Ba}) {
            const auto& masks = xor_masks_[idx(f)];
            for (std::size_t bit = 0; bit < masks.size(); ++bit) {
                if (masks[bit] == 0)
                    continue;
                const std::uint64_t parity = std::popcount(x & masks[bit]) & 1u;
                v[idx(f)] = (v[idx(f)] & ~(std::uint64_t(1) << bit)) | (parity << bit);
            }
        }
    }
    return DramCoord{static_cast<std::uint32_t>(v[idx(Field::Ch)]), static_cast<std::uint32_t>(v[idx(Field::Ra)]),
                     static_cast<std::uint32_t>(v[idx(Field::Ba)]), static_cast<std::uint32_t>(v[idx(Field::Ro)]),
                     static_cast<std::uint32_t>(v[idx(Field::Co)])};
}

BijectionResult verify_bijection(const AddressMap& map, std::uint64_t n_lines)
{
    if (n_lines > map.capacity())
        throw std::invalid_argument("n_lines exceeds mapped capacity");
    std::unordered_map<std::uint64_t, std::uint64_t> seen;
    seen.reserve(n_lines);
    for (std::uint64_t a = 0; a < n_lines; ++a) {
        const auto c = map.map(a);
        const std::uint64_t key = std::uint64_t(c.row) << 40 | std::uint64_t(c.bank) << 32 |
                                  std::uint64_t(c.rank) << 24 | std::uint64_t(c.channel) << 16 | c.column;
        const auto [it, inserted] = seen.emplace(key, a);
        if (!inserted)
            return {false, it->second, a};
    }
    return {};
}

}  // namespace memlens
