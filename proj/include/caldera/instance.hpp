#ifndef CALDERA_INSTANCE_HPP
#define CALDERA_INSTANCE_HPP

// Instance files and seeded random instances (double precision).

#include "caldera/lattice.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace caldera {

struct Instance {
  Coupled couple;
  LatticeVectord f;
  std::optional<LatticeVectord> g;
  double p = 2.0;  // convexification exponent, may be infinite in a file
};

/// A number or the string "inf".
double parse_real(const nlohmann::json& j);
nlohmann::json real_to_json(double x);

NormSpecd parse_norm_spec(const nlohmann::json& j);
nlohmann::json to_json(const NormSpecd& spec);

/// Missing "couple" means (L^1_w, L^inf); missing "weights" means counting measure.
Instance parse_instance(const nlohmann::json& j);
nlohmann::json to_json(const Instance& inst);

Instance read_instance(const std::string& path);
void write_instance(const Instance& inst, const std::string& path);

/// Random f (and g) with magnitudes log-uniform on [1e-2, 1e2] on the counting
/// measure of n atoms, base couple (L^1, L^inf). With k_ordered, g = s M|f|
/// with random signs, M an average of three permutations and s in [1/2, 1];
/// K-domination on the p-convexified couple is then checked, shrinking g
/// until it holds.
Instance generate_instance(std::uint64_t seed, Index n, double p, bool positivity, bool k_ordered);

}  // namespace caldera

#endif  // CALDERA_INSTANCE_HPP
