#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace printkind {

struct LayerSpec {
    enum class Kind { conv, pool };

    Kind kind = Kind::conv;
    std::size_t kernel = 0;  // conv only; pooling is always 2x2 with stride 2

    static LayerSpec conv(std::size_t k) { return {Kind::conv, k}; }
    static LayerSpec pool() { return {Kind::pool, 0}; }

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ArchSpec {
    std::string name;
    std::vector<LayerSpec> layers;
    std::string source_text;

    std::size_t conv_count() const;
    std::size_t pool_count() const;
};

inline constexpr std::size_t kMaxConvKernel = 64;
inline constexpr std::size_t kMaxExpandedLayers = 4096;

// Grammar (whitespace-insensitive, case-sensitive keywords):
//   arch := item ('-' item)*
//   item := unit ('*' INT)?
//   unit := 'Conv(' INT ')' | 'Pool' | '(' arch ')'
// `x*n` repeats the preceding unit or parenthesized group n times. Throws ArchParseError with
// the byte offset of the offending token.
ArchSpec parse_arch(std::string_view text, std::string name = {});

// Canonical text with runs of identical layers folded into `*n`. Re-parses to the same layers.
std::string render_arch(const ArchSpec& arch);

struct ArchPreset {
    std::string_view name;
    std::string_view text;
};

inline constexpr ArchPreset kBigFilters{"Big-Filters",
                                        "Conv(11)-Pool-Conv(10)-Pool-Conv(6)-Pool-Conv(3)-Pool-Conv(3)-Pool"};
inline constexpr ArchPreset kSmallFiltersLessPooling{
    "Small-Filters-Less-Pooling", "Conv(3)*5-Pool-Conv(3)*4-Conv(2)-Pool-Conv(6)-Pool-Conv(3)-Pool-Conv(3)-Pool"};
inline constexpr ArchPreset kSmallFiltersBalancedPooling{"Small-Filters-Balanced-Pooling",
                                                         "Conv(3)-Pool-Conv(4)-Pool-(Conv(3)-Pool)*3-Conv(2)"};
inline constexpr ArchPreset kArchPresets[] = {kBigFilters, kSmallFiltersLessPooling, kSmallFiltersBalancedPooling};

// A preset name or raw DSL text.
ArchSpec resolve_arch(std::string_view name_or_text);

// Output channels of every conv layer, in order. Table-free defaults come from
// default_channel_plan().
struct ChannelPlan {
    std::vector<std::size_t> conv_channels;
    std::size_t input_channels = 1;
    std::size_t classes = 2;

    friend bool operator==(const ChannelPlan&, const ChannelPlan&) = default;
};

// Big-Filters: (16, 32, 64, 64, 64). Anything else: 16 for every conv before the first pool,
// doubling after each pool, capped at 128.
ChannelPlan default_channel_plan(const ArchSpec& arch, std::size_t input_channels = 1);

struct FeatureShape {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t flattened() const { return channels * height * width; }
    friend bool operator==(const FeatureShape&, const FeatureShape&) = default;
};

// Simulates same-padded convs (size preserving) and 2x2 pools (halving). Throws ShapeError if a
// pool sees an odd dimension or a dimension reaches zero. Channels follow `plan` when given,
// otherwise stay at the input channel count.
FeatureShape output_shape(const ArchSpec& arch, FeatureShape input, const ChannelPlan* plan = nullptr);

} // namespace printkind
