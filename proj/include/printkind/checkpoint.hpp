#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "printkind/errors.hpp"
#include "printkind/model.hpp"

namespace printkind {

class CheckpointError : public DataError {
public:
    enum class Kind { bad_magic, version_mismatch, truncated, shape_mismatch };

    CheckpointError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (little-endian): "PKCK", u32 version, u32 length + arch DSL text, u32 count + u32
// conv channels, u32 tensor count, then per tensor u32 length + name, u32 ndim, u32 dims,
// f32 data. Tensors are the model parameters followed by input.mean and input.std.
std::string encode_checkpoint(Model& model);
Model decode_checkpoint(std::string_view bytes);

void save_checkpoint(Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

} // namespace printkind
