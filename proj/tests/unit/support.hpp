#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tsbdd/bench.hpp"
#include "tsbdd/formula.hpp"
#include "tsbdd/ts_model.hpp"

namespace tsbdd::testing {

inline std::string data_path(const std::string& name) { return std::string(TSBDD_SOURCE_DIR) + "/" + name; }

inline std::vector<std::string> var_names(int n, const std::string& prefix = "x") {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

/// Random formula over `vars` using every connective.
inline Formula random_formula(Rng& rng, const std::vector<std::string>& vars, int depth) {
  if (depth == 0 || rng.uniform_int(0, 5) == 0) {
    if (rng.uniform_int(0, 12) == 0) return Formula::constant(rng.coin());
    return Formula::var(vars[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(vars.size()) - 1))]);
  }
  auto sub = [&] { return random_formula(rng, vars, depth - 1); };
  switch (rng.uniform_int(0, 7)) {
    case 0: return Formula::negate(sub());
    case 1: return Formula::all_of({sub(), sub(), sub()});
    case 2: return Formula::any_of({sub(), sub()});
    case 3: return Formula::parity({sub(), sub()});
    case 4: return Formula::implies(sub(), sub());
    case 5: return Formula::iff(sub(), sub());
    case 6: return Formula::ite(sub(), sub(), sub());
    default: return Formula::exactly_one({sub(), sub(), sub()});
  }
}

/// Random partial assignment over `vars`.
inline std::map<std::string, bool> random_partial(Rng& rng, const std::vector<std::string>& vars) {
  std::map<std::string, bool> out;
  for (const auto& v : vars)
    if (rng.uniform_int(0, 3) == 0) out[v] = rng.coin();
  return out;
}

/// Random model small enough for exhaustive enumeration.
inline TroubleshootingModel small_model(std::uint64_t seed, int max_kernel = 14) {
  Rng rng(seed);
  GenSpec spec;
  spec.n_system = static_cast<int>(rng.uniform_int(1, 8));
  spec.n_cause = static_cast<int>(rng.uniform_int(1, std::min(5, max_kernel - spec.n_system)));
  spec.n_action = static_cast<int>(rng.uniform_int(0, 2));
  spec.seed = seed;
  return generate_model(spec);
}

}  // namespace tsbdd::testing
