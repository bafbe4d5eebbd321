#pragma once

#include <map>
#include <string>

#include "clr/params.hpp"

namespace clr {

/// Flat binary checkpoint. Layout: magic "CLRCKPT1", then per parameter:
/// u32 LE name length, UTF-8 name, u32 LE rank, u32 LE dims, raw float32 LE
/// payload. Parameters appear in ParamSet order.
void save_checkpoint(const ParamSet& params, const std::string& path);
ParamSet load_checkpoint(const std::string& path);

/// UTF-8 key=value sidecar (one pair per line) used for model metadata.
void save_sidecar(const std::map<std::string, std::string>& kv, const std::string& path);
std::map<std::string, std::string> load_sidecar(const std::string& path);

}  // namespace clr
