#include "printkind/arch.hpp"

#include <algorithm>
#include <cctype>

#include "printkind/errors.hpp"

namespace printkind {

std::size_t ArchSpec::conv_count() const {
    return static_cast<std::size_t>(
        std::count_if(layers.begin(), layers.end(), [](const LayerSpec& l) { return l.kind == LayerSpec::Kind::conv; }));
}

std::size_t ArchSpec::pool_count() const { return layers.size() - conv_count(); }

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    std::vector<LayerSpec> parse() {
        skip_space();
        if (at_end()) fail("empty architecture");
        auto layers = parse_arch();
        skip_space();
        if (!at_end()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return layers;
    }

private:
    std::vector<LayerSpec> parse_arch() {
        std::vector<LayerSpec> layers = parse_item();
        for (;;) {
            skip_space();
            if (!consume('-')) break;
            append(layers, parse_item());
        }
        return layers;
    }

    std::vector<LayerSpec> parse_item() {
        std::vector<LayerSpec> unit = parse_unit();
        skip_space();
        const std::size_t star = pos_;
        if (!consume('*')) return unit;
        skip_space();
        const std::size_t count = parse_int("repetition count");
        if (count == 0) fail("repetition count must be positive", star);
        if (unit.size() * count > kMaxExpandedLayers) fail("architecture expands past the layer limit", star);
        std::vector<LayerSpec> out;
        out.reserve(unit.size() * count);
        for (std::size_t i = 0; i < count; ++i) out.insert(out.end(), unit.begin(), unit.end());
        return out;
    }

    std::vector<LayerSpec> parse_unit() {
        skip_space();
        const std::size_t start = pos_;
        if (at_end()) fail("expected Conv(k), Pool or '('");
        if (consume('(')) {
            auto inner = parse_arch();
            skip_space();
            if (!consume(')')) fail("expected ')' to close group opened at byte " + std::to_string(start));
            return inner;
        }
        if (consume_word("Conv")) {
            skip_space();
            if (!consume('(')) fail("expected '(' after Conv");
            skip_space();
            const std::size_t kpos = pos_;
            const std::size_t k = parse_int("kernel size");
            if (k < 1 || k > kMaxConvKernel) {
                fail("conv kernel must be in [1, " + std::to_string(kMaxConvKernel) + "]", kpos);
            }
            skip_space();
            if (!consume(')')) fail("expected ')' after kernel size");
            return {LayerSpec::conv(k)};
        }
        if (consume_word("Pool")) return {LayerSpec::pool()};
        std::size_t end = pos_;
        while (end < text_.size() && std::isalnum(static_cast<unsigned char>(text_[end]))) ++end;
        if (end == pos_) ++end;
        fail("unknown token '" + std::string(text_.substr(pos_, end - pos_)) + "'");
    }

    std::size_t parse_int(const char* what) {
        const std::size_t start = pos_;
        std::size_t value = 0;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            value = value * 10 + static_cast<std::size_t>(text_[pos_] - '0');
            if (value > 1'000'000) fail(std::string(what) + " too large", start);
            ++pos_;
        }
        if (pos_ == start) fail(std::string("expected ") + what);
        return value;
    }

    bool consume(char c) {
        if (!at_end() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    bool consume_word(std::string_view word) {
        if (text_.substr(pos_, word.size()) != word) return false;
        const std::size_t next = pos_ + word.size();
        if (next < text_.size() && std::isalnum(static_cast<unsigned char>(text_[next]))) return false;
        pos_ = next;
        return true;
    }

    void skip_space() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool at_end() const { return pos_ >= text_.size(); }

    static void append(std::vector<LayerSpec>& dst, const std::vector<LayerSpec>& src) {
        if (dst.size() + src.size() > kMaxExpandedLayers) {
            throw ArchParseError("syntax error: architecture expands past the layer limit", 0);
        }
        dst.insert(dst.end(), src.begin(), src.end());
    }

    [[noreturn]] void fail(const std::string& message) const { fail(message, pos_); }
    [[noreturn]] static void fail(const std::string& message, std::size_t offset) {
        throw ArchParseError("syntax error: " + message, offset);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

std::string render_layer(const LayerSpec& l) {
    return l.kind == LayerSpec::Kind::conv ? "Conv(" + std::to_string(l.kernel) + ")" : "Pool";
}

} // namespace

ArchSpec parse_arch(std::string_view text, std::string name) {
    ArchSpec spec;
    spec.layers = Parser(text).parse();
    spec.name = std::move(name);
    spec.source_text = std::string(text);
    return spec;
}

std::string render_arch(const ArchSpec& arch) {
    std::string out;
    for (std::size_t i = 0; i < arch.layers.size();) {
        std::size_t run = 1;
        while (i + run < arch.layers.size() && arch.layers[i + run] == arch.layers[i]) ++run;
        if (!out.empty()) out += '-';
        out += render_layer(arch.layers[i]);
        if (run > 1) out += "*" + std::to_string(run);
        i += run;
    }
    return out;
}

ArchSpec resolve_arch(std::string_view name_or_text) {
    for (const auto& preset : kArchPresets) {
        if (name_or_text == preset.name || name_or_text == preset.text) {
            return parse_arch(preset.text, std::string(preset.name));
        }
    }
    return parse_arch(name_or_text);
}

ChannelPlan default_channel_plan(const ArchSpec& arch, std::size_t input_channels) {
    ChannelPlan plan;
    plan.input_channels = input_channels;
    if (arch.layers == parse_arch(kBigFilters.text).layers) {
        plan.conv_channels = {16, 32, 64, 64, 64};
        return plan;
    }
    std::size_t width = 16;
    for (const auto& layer : arch.layers) {
        if (layer.kind == LayerSpec::Kind::pool) {
            width = std::min<std::size_t>(width * 2, 128);
        } else {
            plan.conv_channels.push_back(width);
        }
    }
    return plan;
}

FeatureShape output_shape(const ArchSpec& arch, FeatureShape input, const ChannelPlan* plan) {
    if (input.height == 0 || input.width == 0 || input.channels == 0) {
        throw ShapeError("input dimensions must be positive");
    }
    if (plan && plan->conv_channels.size() != arch.conv_count()) {
        throw ShapeError("channel plan has " + std::to_string(plan->conv_channels.size()) + " entries for " +
                         std::to_string(arch.conv_count()) + " conv layers");
    }
    FeatureShape s = input;
    std::size_t conv_index = 0;
    for (std::size_t i = 0; i < arch.layers.size(); ++i) {
        const auto& layer = arch.layers[i];
        if (layer.kind == LayerSpec::Kind::conv) {
            if (plan) s.channels = plan->conv_channels[conv_index];
            ++conv_index;
            continue;
        }
        if (s.height % 2 != 0 || s.width % 2 != 0) {
            throw ShapeError("pool at layer " + std::to_string(i) + " sees odd dimensions " +
                             std::to_string(s.height) + "x" + std::to_string(s.width));
        }
        s.height /= 2;
        s.width /= 2;
        if (s.height == 0 || s.width == 0) {
            throw ShapeError("spatial dimensions reach zero at layer " + std::to_string(i));
        }
    }
    return s;
}

} // namespace printkind
