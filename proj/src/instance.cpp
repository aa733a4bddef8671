#include "caldera/instance.hpp"

#include "caldera/inequalities.hpp"
#include "caldera/rng.hpp"

#include <fstream>
#include <limits>
#include <numeric>

namespace caldera {

using nlohmann::json;

double parse_real(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "Infinity") return std::numeric_limits<double>::infinity();
    throw DomainError("expected a number or \"inf\", got \"" + s + "\"");
  }
  if (!j.is_number()) throw DomainError("expected a number");
  return j.get<double>();
}

json real_to_json(double x) {
  if (std::isinf(x) && x > 0) return "inf";
  return x;
}

NormSpecd parse_norm_spec(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "weighted_p") {
    const double p = parse_real(j.at("p"));
    return std::isinf(p) ? NormSpecd::weighted_inf() : NormSpecd::weighted_p(p);
  }
  if (type == "convexified") return NormSpecd::convexified(parse_norm_spec(j.at("base")), parse_real(j.at("p")));
  throw DomainError("unknown norm type \"" + type + "\"");
}

json to_json(const NormSpecd& spec) {
  if (spec.kind() == NormSpecd::Kind::WeightedP) {
    const auto& e = spec.p();
    return {{"type", "weighted_p"}, {"p", e.is_infinite() ? json("inf") : json(e.value())}};
  }
  return {{"type", "convexified"}, {"base", to_json(spec.base())}, {"p", spec.p().value()}};
}

namespace {

Vector<double> to_vector(const json& arr) {
  if (!arr.is_array()) throw StructuralError("expected an array of numbers");
  Vector<double> v(static_cast<Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Index>(i)] = parse_real(arr[i]);
  return v;
}

json to_array(const Vector<double>& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

Instance parse_instance(const json& j) {
  const Vector<double> f = to_vector(j.at("f"));
  const Vector<double> w = j.contains("weights") ? to_vector(j.at("weights")) : Vector<double>::Ones(f.size());
  if (w.size() != f.size()) throw StructuralError("weights and f differ in length");
  const auto space = MeasureSpaced::make(w);
  Coupled couple = Coupled::l1_linf(space);
  if (j.contains("couple")) {
    const auto& c = j.at("couple");
    std::optional<double> cc;
    if (c.contains("c_constant")) cc = parse_real(c.at("c_constant"));
    couple = Coupled(space, parse_norm_spec(c.at("norm0")), parse_norm_spec(c.at("norm1")), cc);
  }
  Instance inst{couple, LatticeVector<double>(space, f), std::nullopt, 2.0};
  if (j.contains("g") && !j.at("g").is_null()) {
    const Vector<double> g = to_vector(j.at("g"));
    if (g.size() != f.size()) throw StructuralError("g and f differ in length");
    inst.g = LatticeVector<double>(space, g);
  }
  if (j.contains("p")) inst.p = parse_real(j.at("p"));
  return inst;
}

json to_json(const Instance& inst) {
  json j;
  j["weights"] = to_array(inst.couple.space->weights());
  j["f"] = to_array(inst.f.values());
  if (inst.g) j["g"] = to_array(inst.g->values());
  j["p"] = real_to_json(inst.p);
  j["couple"] = {{"norm0", to_json(inst.couple.norm0)}, {"norm1", to_json(inst.couple.norm1)}};
  if (inst.couple.c_constant) j["couple"]["c_constant"] = *inst.couple.c_constant;
  return j;
}

Instance read_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open instance file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw StructuralError(path + ": " + e.what());
  }
  return parse_instance(j);
}

void write_instance(const Instance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path);
  out << to_json(inst).dump(2) << '\n';
}

Instance generate_instance(std::uint64_t seed, Index n, double p, bool positivity, bool k_ordered) {
  if (n < 1) throw DomainError("an instance needs at least one atom");
  Rng rng(seed);
  const auto space = MeasureSpaced::counting(n);
  Vector<double> f(n);
  for (Index i = 0; i < n; ++i) f[i] = (positivity ? 1.0 : rng.sign()) * rng.log_uniform(1e-2, 1e2);

  Vector<double> g(n);
  if (k_ordered) {
    Vector<double> mixed = Vector<double>::Zero(n);
    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (int k = 0; k < 3; ++k) {
      std::iota(perm.begin(), perm.end(), Index{0});
      for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
      for (Index i = 0; i < n; ++i) mixed[i] += std::abs(f[perm[static_cast<std::size_t>(i)]]) / 3.0;
    }
    const double s = rng.uniform(0.5, 1.0);
    for (Index i = 0; i < n; ++i) g[i] = (positivity ? 1.0 : rng.sign()) * s * mixed[i];
  } else {
    for (Index i = 0; i < n; ++i) g[i] = (positivity ? 1.0 : rng.sign()) * rng.log_uniform(1e-2, 1e2);
  }

  Instance inst{Coupled::l1_linf(space), LatticeVector<double>(space, f), LatticeVector<double>(space, g), p};
  if (k_ordered) {
    const auto target = std::isinf(p) ? inst.couple : convexify(inst.couple, p);
    for (int attempt = 0; !k_order_dominates(target, inst.f, *inst.g); ++attempt) {
      if (attempt == 60) throw InternalConsistencyError("could not produce a K-ordered pair");
      inst.g = LatticeVector<double>(space, Vector<double>(0.9 * inst.g->values()));
    }
  }
  return inst;
}

}  // namespace caldera
