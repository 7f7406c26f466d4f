#pragma once

#include <map>
#include <string>
#include <vector>

#include "brachi/geometry.hpp"

namespace brachi {

// Shipped fixtures. Coordinates put the Killing time last:
//   minkowski3        (x, y, z)        dx^2 + dy^2 - dz^2,             Y = d_z
//   minkowski4        (x, y, z, t)     dx^2 + dy^2 + dz^2 - dt^2,      Y = d_t
//   einstein_cylinder (theta, phi, t)  -dt^2 + dtheta^2 + sin^2 dphi^2, Y = d_t
//   static_well       (x, y, t)        dx^2 + dy^2 - (1 + a x^2) dt^2, Y = d_t
//   rotating_frame    (x, y, t)        flat metric seen from a frame rotating at omega, Y = d_t
struct ModelSpec {
  std::string name;
  std::map<std::string, double> params;
};

SpacetimeModel make_model(const ModelSpec& spec);
const std::vector<std::string>& model_names();

}  // namespace brachi
