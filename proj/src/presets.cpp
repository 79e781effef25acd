#include "psoforge/presets.hpp"

#include "psoforge/errors.hpp"

namespace psoforge {

WorldSpec world_preset(const std::string& name) {
  WorldSpec spec;
  spec.n_classes = 8;
  spec.dim = 16;  // 8 predicate + 2 spare + 6 identity coordinates
  spec.predicate_delta = 3.0;
  spec.identity_separation = 4.0;
  spec.identity_radius = 12.0;
  spec.combo_group = 4;

  if (name == "default") {
    spec.n_identities = 1000;
    spec.cluster_std = 0.35;
    spec.seed = 1;
    return spec;
  }
  if (name == "paperlike") {
    spec.n_identities = 1000;
    spec.cluster_std = 2.6;
    spec.seed = 2;
    return spec;
  }
  if (name == "tight") {
    spec.n_identities = 64;
    spec.cluster_std = 0.4;
    spec.identity_separation = 0.05;
    spec.identity_radius = 0.4;
    spec.seed = 3;
    return spec;
  }
  if (name == "diversity") {
    spec.n_identities = 128;
    spec.combo_group = 2;
    spec.cluster_std = 0.4;
    spec.predicate_delta = 2.5;
    spec.seed = 4;
    return spec;
  }
  throw ConfigError("unknown world preset '" + name + "'");
}

}  // namespace psoforge
