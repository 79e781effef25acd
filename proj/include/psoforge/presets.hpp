#pragma once

#include "psoforge/world.hpp"

#include <string>

namespace psoforge {

/// Named world presets.
///   default   - 1000 identities, well-separated clusters, grouped predicate
///               combos; the standard benchmark population.
///   paperlike - identity clusters tuned so a cosine filter lands in the
///               mid-nineties re-identification AUCROC regime.
///   tight     - adversarially cramped identities; most candidates get
///               flagged, exercising the guidance fallback path.
///   diversity - small grouped world used for retrieval-coverage contrasts.
WorldSpec world_preset(const std::string& name);

}  // namespace psoforge
