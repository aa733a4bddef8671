// caldera: K/D profiles, positive operators, lifts and campaigns from the
// command line. Exit status: 0 success, 1 a certificate or property failed,
// 2 bad input or a module error.

#include "caldera/campaign.hpp"
#include "caldera/instance.hpp"
#include "caldera/lift.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <locale>

using namespace caldera;
using nlohmann::json;

namespace {

json matrix_json(const Matrix<double>& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path);
  return out;
}

void write_json(const json& j, const std::string& path) {
  if (path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

LatticeVectord require_g(const Instance& inst) {
  if (!inst.g) throw DomainError("instance has no \"g\"");
  return *inst.g;
}

int kprofile(const std::string& instance, const std::string& kind, const std::string& grid, const std::string& out) {
  const auto inst = read_instance(instance);
  if (kind != "K" && kind != "D") throw DomainError("--kind must be K or D");
  const auto prof = profile(kind == "K" ? FunctionalKind::K : FunctionalKind::D, inst.couple, inst.f, parse_grid(grid));
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << "t,value,a0_norm,a1_norm\n";
  for (std::size_t i = 0; i < prof.t_grid.size(); ++i) {
    os << prof.t_grid[i] << ',' << prof.values[i] << ',' << prof.a0_norms[i] << ',' << prof.a1_norms[i] << '\n';
  }
  if (out == "-") {
    std::cout << os.str();
  } else {
    open_out(out) << os.str();
  }
  return 0;
}

int construct_operator(const std::string& instance, const std::string& out) {
  const auto inst = read_instance(instance);
  const auto c = construct_positive_operator(inst.f, require_g(inst));
  write_json({{"entries", matrix_json(c.op.entries())},
              {"cert", {{"norm1", c.norm1}, {"norminf", c.norminf}, {"residual", c.residual}}},
              {"fill_strategy", c.fill_strategy},
              {"t_transforms", c.chain.factors.size()}},
             out);
  return 0;
}

int lift(const std::string& instance, const std::string& method, const std::string& alpha, std::size_t samples,
         std::uint64_t seed, const std::string& out) {
  const auto inst = read_instance(instance);
  std::optional<double> a;
  if (alpha != "auto") {
    try {
      a = std::stod(alpha);
    } catch (const std::exception&) {
      throw DomainError("--alpha must be auto or a positive real");
    }
  }
  LiftOptions opt;
  opt.audit_samples = samples;
  opt.seed = seed;
  const auto r = lift_operator(inst.couple, inst.f, require_g(inst), inst.p, parse_lift_method(method), a, opt);
  const auto& c = r.certificates;
  json norms = json::array();
  for (const auto& s : c.norm_samples) {
    norms.push_back({{"norm", s.norm},
                     {"samples", s.samples},
                     {"max_ratio", s.max_ratio},
                     {"bound", s.bound},
                     {"operator_bound", s.operator_bound},
                     {"violations", s.violations}});
  }
  write_json({{"L", matrix_json(r.L.entries())},
              {"method", to_string(r.method)},
              {"alpha", r.alpha},
              {"p", r.p},
              {"T", matrix_json(r.H.op().entries())},
              {"t_norm1", r.t_norm1},
              {"t_norminf", r.t_norminf},
              {"certificates",
               {{"residual", c.residual},
                {"domination_checks", c.domination_checks},
                {"domination_violations", c.domination_violations},
                {"max_domination_excess", c.max_domination_excess},
                {"norm_samples", norms},
                {"passed", c.passed()}}}},
             out);
  return c.passed() ? 0 : 1;
}

int campaign(const std::string& config, const std::string& report_path, const std::string& json_path) {
  const auto report = run_campaign(read_campaign_config(config));
  auto csv = open_out(report_path);
  write_csv(report, csv);
  if (!json_path.empty()) write_json(to_json(report), json_path);
  std::cerr << report.rows.size() << " rows, " << report.violations() << " violations, " << report.errors()
            << " errors\n";
  return report.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"K/D functionals, positive operators and lifts on finite atomic lattices"};
  app.require_subcommand(1);

  std::string instance, out, kind = "K", grid = "geometric:1e-3,1e3,61";
  auto* kp = app.add_subcommand("kprofile", "K or D functional over a t-grid, as CSV");
  kp->add_option("--instance", instance, "instance JSON")->required();
  kp->add_option("--kind", kind, "K or D")->check(CLI::IsMember({"K", "D"}));
  kp->add_option("--t-grid", grid, "geometric:<lo>,<hi>,<count>");
  kp->add_option("--out", out, "CSV path, - for stdout")->required();

  auto* co = app.add_subcommand("construct-operator", "positive T with Tf = g, as JSON");
  co->add_option("--instance", instance, "instance JSON with f and g")->required();
  co->add_option("--out", out, "JSON path, - for stdout")->required();

  std::string method = "holder", alpha = "auto";
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  auto* li = app.add_subcommand("lift", "linear L with Lf = g on the p-convexified couple");
  li->add_option("--instance", instance, "instance JSON with f, g and p")->required();
  li->add_option("--method", method, "holder or greedy")->check(CLI::IsMember({"holder", "greedy"}));
  li->add_option("--alpha", alpha, "auto (2^(p-1)) or a positive real");
  li->add_option("--audit-samples", samples, "audit sample count");
  li->add_option("--seed", seed, "audit seed");
  li->add_option("--out", out, "JSON path, - for stdout")->required();

  std::string config, report, json_path;
  auto* ca = app.add_subcommand("campaign", "run suites over random instances");
  ca->add_option("--config", config, "key-value config file")->required();
  ca->add_option("--report", report, "CSV report path")->required();
  ca->add_option("--json", json_path, "JSON report path");

  CLI11_PARSE(app, argc, argv);
  try {
    if (kp->parsed()) return kprofile(instance, kind, grid, out);
    if (co->parsed()) return construct_operator(instance, out);
    if (li->parsed()) return lift(instance, method, alpha, samples, seed, out);
    return campaign(config, report, json_path);
  } catch (const OrderedPairError& e) {
    std::cerr << "error: " << e.what() << " (t = " << e.t << ")\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return 2;
}
