// Trope pattern detection over narrative graphs.
//
// Micro-patterns classify single nodes, meso-patterns capture multi-node
// narrative structure, and auxiliary patterns mark nodes and edges that take
// part in no meso-pattern at all.

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "story/graph.hpp"

namespace story {

enum class PatternKind : std::uint8_t {
  // micro
  Structure,   // SP
  Character,   // CP
  PlotDevice,  // PDP
  // meso
  Conflict,      // ConfP
  Derivative,    // DerP
  Reveal,        // RevP
  ActiveDevice,  // APD
  PlotPoint,     // PP
  PlotTwist,     // PT
  // auxiliary
  Nothing,
  BrokenLink,
};

inline constexpr std::size_t kPatternKindCount = 11;

enum class PatternLevel : std::uint8_t { Micro, Meso, Auxiliary };

PatternLevel level_of(PatternKind k) noexcept;

/// Short wire name: SP, CP, PDP, ConfP, DerP, RevP, APD, PP, PT, Nothing,
/// BrokenLink.
std::string_view pattern_name(PatternKind k) noexcept;

struct PatternInstance {
  PatternKind kind;
  /// Node indices into the graph, in a kind-specific order:
  ///   ConfP  [source, conflict, target]
  ///   DerP   [root, derivatives ascending]
  ///   RevP   [source, target]
  ///   APD    [device, triggering nodes ascending]
  ///   others [node]
  std::vector<std::size_t> nodes;
  /// Edge indices into the graph.
  std::vector<std::size_t> edges;
  double quality = 0.0;
  bool self_conflict = false;  // ConfP only
  bool fake = false;           // ConfP only
};

class PatternSet {
 public:
  PatternSet() = default;
  PatternSet(std::vector<PatternInstance> instances, std::size_t node_count,
             std::size_t edge_count);

  const std::vector<PatternInstance>& instances() const noexcept {
    return instances_;
  }
  std::size_t count(PatternKind k) const noexcept {
    return counts_[static_cast<std::size_t>(k)];
  }
  std::vector<const PatternInstance*> of(PatternKind k) const;

  /// Whether node/edge index appears in any meso-pattern instance.
  bool node_in_meso(std::size_t node) const noexcept;
  bool edge_in_meso(std::size_t edge) const noexcept;

  void set_quality(std::size_t instance, double q) {
    instances_[instance].quality = q;
  }

 private:
  std::vector<PatternInstance> instances_;
  std::array<std::size_t, kPatternKindCount> counts_{};
  std::vector<bool> node_meso_;
  std::vector<bool> edge_meso_;
};

/// Pure function of the graph; instances come back in canonical order
/// (kind, node indices, edge indices).
PatternSet detect_patterns(const NarrativeGraph& g);

/// Quality of one detected instance in [0, 1].
double instance_quality(const PatternInstance& inst, const NarrativeGraph& g,
                        const PatternSet& patterns);

/// Instance list as documents: kind, anchor node ids, anchor edges, quality,
/// and the ConfP flags.
nlohmann::ordered_json patterns_to_json(const PatternSet& patterns,
                                        const NarrativeGraph& g);

/// Count per pattern name, every kind present (zero included).
nlohmann::ordered_json pattern_summary(const PatternSet& patterns);

}  // namespace story
