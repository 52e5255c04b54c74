#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "toolseq/degrade.hpp"
#include "toolseq/raster.hpp"

namespace toolseq {

// Discrete action: a restoration operator, or STOP (always the last index).
struct ToolSpec {
  int index = 0;
  std::string name;
  std::optional<DegradationKind> target;  // nullopt for STOP
  std::string description;
  // optional external executable, invoked as `cmd <in.png> <out.png>`
  std::optional<std::string> command;

  bool is_stop() const { return !target.has_value() && name == "stop"; }
};

class ToolRegistry {
 public:
  static ToolRegistry standard();  // 10 classical operators + STOP

  int n_actions() const { return static_cast<int>(tools_.size()); }
  int stop_index() const { return n_actions() - 1; }
  const ToolSpec& tool(int index) const;
  const std::vector<ToolSpec>& tools() const { return tools_; }

  // Deterministic; throws if index is STOP or out of range.
  Raster apply(int index, const Raster& img) const;

  std::string serialize() const;
  static ToolRegistry deserialize(const std::string& text);
  // FNV-1a over the serialized registry; stored in checkpoints.
  std::uint64_t fingerprint() const;

  void add_external_tool(const std::string& name, const std::string& command,
                         DegradationKind target);

 private:
  std::vector<ToolSpec> tools_;
};

// Classical operators, exposed for unit tests.
Raster tool_brighten_gamma(const Raster& img);          // V^(2/3)
Raster tool_brighten_const(const Raster& img);          // V + 40/255
Raster tool_clahe(const Raster& img);                   // 8x8 tiles, clip 2.0
Raster tool_unsharp(const Raster& img, double radius, double amount);
Raster tool_median(const Raster& img, int size);
Raster tool_gauss_denoise(const Raster& img);           // sigma 1.0
Raster tool_deblock(const Raster& img);                 // 8-aligned boundary smoothing
Raster dcp_dehaze(const Raster& img);                   // dark channel prior

struct ToolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace toolseq
