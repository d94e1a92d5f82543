#include "lssim/types.hpp"

namespace lssim {

void VolumeConfig::validate() const {
  if (block_size == 0) {
    throw ConfigError("block_size must be positive");
  }
  if (segment_size == 0 || segment_size % block_size != 0) {
    throw ConfigError("segment_size must be a positive multiple of block_size");
  }
  if (!(gp_threshold > 0.0 && gp_threshold < 1.0)) {
    throw ConfigError("gp_threshold must lie in (0, 1)");
  }
  const std::uint64_t retrieval = retrieval_bytes();
  if (retrieval % segment_size != 0 && segment_size % retrieval != 0) {
    throw ConfigError(
        "gc_retrieval_bytes must be a multiple of segment_size or vice versa");
  }
  if (num_classes == 0) {
    throw ConfigError("num_classes must be positive");
  }
}

}  // namespace lssim
