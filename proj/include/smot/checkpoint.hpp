#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "smot/mat.hpp"

namespace smot::ckpt {

// Little-endian binary parameter container:
//
//   bytes 0..7   magic "SMOTCKPT"
//   u32          format version (1)
//   u32          tensor count
//   per tensor:  u32 name length, name bytes, u32 ndim, u32 dim[ndim]
//   payload:     all tensors' f64 data, row-major, in table order
//
// Identical parameters serialize to identical bytes; used for checkpoints,
// adapters, and the freeze-integrity comparisons.

std::string serialize(const std::vector<TensorRef>& tensors);

struct LoadedTensor {
    std::vector<std::uint32_t> shape;
    Vec data;
};

std::map<std::string, LoadedTensor> deserialize(const std::string& bytes);

// Copies loaded values into matching refs; every ref must be present with an
// identical shape. When `subset` is true, tensors in the file without a
// matching ref are an error, but refs without file entries are left alone.
void load_into(const std::map<std::string, LoadedTensor>& loaded,
               const std::vector<TensorRef>& refs, bool subset = false);

void save_file(const std::string& path, const std::vector<TensorRef>& tensors);
std::map<std::string, LoadedTensor> load_file(const std::string& path);

}  // namespace smot::ckpt
