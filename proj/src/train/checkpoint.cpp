#include "printkind/checkpoint.hpp"

#include <bit>
#include <map>

#include "printkind/io.hpp"

namespace printkind {

namespace {

constexpr std::string_view kMagic = "PKCK";

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_str(std::string& out, std::string_view s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.append(s);
}

void put_tensor(std::string& out, std::string_view name, const Tensor& t) {
    put_str(out, name);
    put_u32(out, static_cast<std::uint32_t>(t.shape().size()));
    for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::string str(const char* what) {
        const std::uint32_t n = u32(what);
        need(n, what);
        std::string s(bytes_.substr(pos_, n));
        pos_ += n;
        return s;
    }

    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) {
            throw CheckpointError(CheckpointError::Kind::truncated,
                                  std::string("truncated checkpoint while reading ") + what + " at byte " +
                                      std::to_string(pos_));
        }
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

Tensor vector_tensor(const std::vector<float>& v) { return Tensor({v.size()}, v); }

} // namespace

std::string encode_checkpoint(Model& model) {
    std::string out(kMagic);
    put_u32(out, kCheckpointVersion);
    put_str(out, model.arch().source_text.empty() ? render_arch(model.arch()) : model.arch().source_text);
    put_u32(out, static_cast<std::uint32_t>(model.plan().conv_channels.size()));
    for (std::size_t c : model.plan().conv_channels) put_u32(out, static_cast<std::uint32_t>(c));
    const auto params = model.parameters();
    put_u32(out, static_cast<std::uint32_t>(params.size() + 2));
    for (const auto* p : params) put_tensor(out, p->name, p->value);
    put_tensor(out, "input.mean", vector_tensor(model.normalization().mean));
    put_tensor(out, "input.std", vector_tensor(model.normalization().stddev));
    return out;
}

Model decode_checkpoint(std::string_view bytes) {
    using Kind = CheckpointError::Kind;
    if (bytes.substr(0, kMagic.size()) != kMagic.substr(0, std::min(bytes.size(), kMagic.size()))) {
        throw CheckpointError(Kind::bad_magic, "bad magic: not a printkind checkpoint");
    }
    Reader in(bytes);
    in.need(kMagic.size(), "magic");
    (void)in.u32("magic");
    const std::uint32_t version = in.u32("version");
    if (version != kCheckpointVersion) {
        throw CheckpointError(Kind::version_mismatch, "checkpoint version " + std::to_string(version) +
                                                          " is not supported (expected " +
                                                          std::to_string(kCheckpointVersion) + ")");
    }
    const std::string arch_text = in.str("arch text");
    ChannelPlan plan;
    const std::uint32_t plan_len = in.u32("channel plan");
    for (std::uint32_t i = 0; i < plan_len; ++i) plan.conv_channels.push_back(in.u32("channel plan"));

    std::map<std::string, Tensor> tensors;
    const std::uint32_t count = in.u32("tensor count");
    for (std::uint32_t t = 0; t < count; ++t) {
        std::string name = in.str("tensor name");
        const std::uint32_t ndim = in.u32("tensor rank");
        Shape shape;
        for (std::uint32_t d = 0; d < ndim; ++d) shape.push_back(in.u32("tensor dims"));
        const std::size_t n = shape_size(shape);
        in.need(n * 4, "tensor data");
        std::vector<float> data(n);
        for (auto& v : data) v = std::bit_cast<float>(in.u32("tensor data"));
        tensors.insert_or_assign(std::move(name), Tensor(std::move(shape), std::move(data)));
    }
    if (!in.done()) throw CheckpointError(Kind::shape_mismatch, "trailing bytes after the last tensor");

    const auto mean = tensors.find("input.mean");
    const auto sd = tensors.find("input.std");
    if (mean == tensors.end() || sd == tensors.end() || mean->second.size() != sd->second.size() ||
        mean->second.shape().size() != 1) {
        throw CheckpointError(Kind::shape_mismatch, "checkpoint lacks matching input.mean/input.std tensors");
    }
    plan.input_channels = mean->second.size();

    try {
        Model model(resolve_arch(arch_text), plan);
        std::size_t matched = 2;
        for (auto* p : model.parameters()) {
            const auto it = tensors.find(p->name);
            if (it == tensors.end()) throw CheckpointError(Kind::shape_mismatch, "missing tensor " + p->name);
            if (it->second.shape() != p->value.shape()) {
                throw CheckpointError(Kind::shape_mismatch, "tensor " + p->name + " has shape " +
                                                                shape_string(it->second.shape()) + ", model expects " +
                                                                shape_string(p->value.shape()));
            }
            p->value = it->second;
            ++matched;
        }
        if (matched != tensors.size()) throw CheckpointError(Kind::shape_mismatch, "checkpoint has unknown tensors");
        const auto m = mean->second.data();
        const auto s = sd->second.data();
        model.normalization() = {std::vector<float>(m.begin(), m.end()), std::vector<float>(s.begin(), s.end())};
        return model;
    } catch (const CheckpointError&) {
        throw;
    } catch (const DataError& e) {
        throw CheckpointError(Kind::shape_mismatch, std::string("checkpoint does not describe a valid model: ") + e.what());
    }
}

void save_checkpoint(Model& model, const std::filesystem::path& path) {
    write_file_atomic(path, encode_checkpoint(model));
}

Model load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

} // namespace printkind
