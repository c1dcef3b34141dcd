// SPDX-License-Identifier: Apache-2.0
#pragma once
//
// Binary layout (little-endian):
//   "SCVZ" | u32 version | u64 metadata length | metadata (UTF-8 JSON)
//   then per blob: u32 name length | name | u64 byte length | f32 payload
// The metadata lists every blob with its shape, in file order.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tabgen/dataprep/schema.hpp"
#include "tabgen/model/cvae.hpp"
#include "tabgen/training/config.hpp"

namespace tabgen {

inline constexpr char kCheckpointMagic[4] = {'S', 'C', 'V', 'Z'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TrainingConfig config;
  std::shared_ptr<const Schema> schema;
  CvaeModel model;
  int epoch = 0;  // last epoch run
  int best_epoch = 0;
  double best_loss = 0.0;
  /// Additional named tensors stored after the model weights.
  std::vector<std::pair<std::string, Tensor>> extras;

  const Tensor* extra(const std::string& name) const;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws MagicError, VersionError, SchemaMismatchError or TruncatedError;
/// other structural problems raise CheckpointError.
Checkpoint parse_checkpoint(std::string_view bytes,
                            const std::optional<std::string>& expected_schema_hash = std::nullopt);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<std::string>& expected_schema_hash = std::nullopt);

/// Rounds every value to the nearest f32, the precision a checkpoint keeps.
void round_to_f32(CvaeModel& model);

}  // namespace tabgen
