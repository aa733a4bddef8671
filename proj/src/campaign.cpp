#include "caldera/campaign.hpp"

#include "caldera/instance.hpp"
#include "caldera/lift.hpp"
#include "caldera/lub_constructions.hpp"
#include "caldera/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <locale>
#include <mutex>
#include <sstream>
#include <thread>

namespace caldera {

const std::vector<std::string>& known_suites() {
  static const std::vector<std::string> suites{"sandwich",    "claim1",      "maligranda",   "minkowski",
                                               "lift-holder", "lift-greedy", "lattice-props"};
  return suites;
}

namespace {

std::size_t suite_id(const std::string& s) {
  const auto& all = known_suites();
  const auto it = std::find(all.begin(), all.end(), s);
  if (it == all.end()) throw DomainError("unknown suite \"" + s + "\"");
  return static_cast<std::size_t>(it - all.begin());
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s) {
  std::istringstream in(s);
  in.imbue(std::locale::classic());
  double x;
  if (!(in >> x) || !(in >> std::ws).eof()) throw DomainError("not a number: \"" + s + "\"");
  return x;
}

std::uint64_t to_u64(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw DomainError("not an unsigned integer: \"" + s + "\"");
  }
  return std::stoull(s);
}

bool uses_d(const std::string& suite) { return suite == "sandwich" || suite == "claim1"; }
bool uses_p(const std::string& suite) { return suite != "sandwich" && suite != "lattice-props"; }

}  // namespace

void CampaignConfig::validate() const {
  for (const auto& s : suites) suite_id(s);
  for (const double p : p_set) {
    if (!std::isfinite(p) || !(p > 1.0)) throw DomainError("p_set values must lie in (1, inf)");
  }
  if (n_min < 1 || n_max < n_min) throw DomainError("need 1 <= n_min <= n_max");
  if (std::any_of(suites.begin(), suites.end(), uses_d) && n_max > 22) {
    throw DomainError("n_max must be <= 22 when a D-based suite is enabled");
  }
  if (p_set.empty() && std::any_of(suites.begin(), suites.end(), uses_p)) throw DomainError("p_set is empty");
  parse_grid(t_grid);
}

CampaignConfig parse_campaign_config(std::istream& in) {
  CampaignConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DomainError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key == "seed") {
      c.seed = to_u64(value);
    } else if (key == "instance_count") {
      c.instance_count = to_u64(value);
    } else if (key == "n_min") {
      c.n_min = static_cast<Index>(to_u64(value));
    } else if (key == "n_max") {
      c.n_max = static_cast<Index>(to_u64(value));
    } else if (key == "n_range") {
      const auto parts = split_list(value);
      if (parts.size() != 2) throw DomainError("n_range needs two values");
      c.n_min = static_cast<Index>(to_u64(parts[0]));
      c.n_max = static_cast<Index>(to_u64(parts[1]));
    } else if (key == "p_set") {
      c.p_set.clear();
      for (const auto& s : split_list(value)) c.p_set.push_back(to_double(s));
    } else if (key == "t_grid") {
      c.t_grid = value;
    } else if (key == "suites") {
      c.suites = split_list(value);
    } else if (key == "audit_samples") {
      c.audit_samples = to_u64(value);
    } else {
      throw DomainError("config line " + std::to_string(lineno) + ": unknown key \"" + key + "\"");
    }
  }
  c.validate();
  return c;
}

CampaignConfig read_campaign_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open config file " + path);
  return parse_campaign_config(in);
}

std::size_t CampaignReport::violations() const {
  std::size_t k = 0;
  for (const auto& r : rows) k += r.violations;
  return k;
}

std::size_t CampaignReport::errors() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r.error.empty(); }));
}

int CampaignReport::exit_code() const {
  if (violations() > 0) return 1;
  return errors() > 0 ? 2 : 0;
}

unsigned campaign_threads() {
  if (const char* env = std::getenv("CALDERA_THREADS")) {
    try {
      const auto k = to_u64(trim(env));
      if (k > 0) return static_cast<unsigned>(k);
    } catch (const DomainError&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

namespace {

struct Draw {
  std::uint64_t seed;
  Index n;
};

Draw draw_instance(const CampaignConfig& c, std::size_t index) {
  const std::uint64_t seed = Rng::stream_seed(c.seed, index);
  Rng rng(seed);
  const Index n = c.n_min + static_cast<Index>(rng.below(static_cast<std::uint64_t>(c.n_max - c.n_min + 1)));
  return {seed, n};
}

/// (L^1_w, L^inf_w) with weights log-uniform on [0.1, 10].
Coupled random_weight_couple(Rng& rng, Index n) {
  Vector<double> w(n);
  for (Index i = 0; i < n; ++i) w[i] = rng.log_uniform(0.1, 10.0);
  return Coupled::l1_linf(MeasureSpaced::make(w));
}

LatticeVectord random_signed(Rng& rng, const SpacePtr<double>& space) {
  Vector<double> v(space->size());
  for (Index i = 0; i < v.size(); ++i) v[i] = rng.sign() * rng.log_uniform(1e-2, 1e2);
  return LatticeVectord(space, v);
}

template <typename Report>
void absorb(CampaignRow& row, const Report& rep) {
  row.max_ratio = static_cast<double>(rep.max_ratio);
  row.bound = static_cast<double>(rep.bound);
  row.checks = rep.checks;
  row.violations = rep.math_violations();
  row.solver_gaps = rep.solver_gaps();
}

void lattice_props(Rng& rng, Index n, CampaignRow& row) {
  const auto space = MeasureSpaced::counting(n);
  const std::size_t m = 2 + rng.below(5);
  std::vector<LatticeVectord> family, nonneg, local, powers;
  Vector<double> f0(n);
  for (Index i = 0; i < n; ++i) f0[i] = rng.below(4) == 0 ? 0.0 : rng.log_uniform(1e-2, 1e2);
  std::vector<bool> mask(static_cast<std::size_t>(n));
  for (auto&& b : mask) b = rng.below(2) == 1;
  const double p = rng.uniform(1.1, 4.0);
  for (std::size_t k = 0; k < m; ++k) {
    family.push_back(random_signed(rng, space));
    nonneg.push_back(abs(family.back()));
    Vector<double> u(n);
    for (Index i = 0; i < n; ++i) u[i] = f0[i] * rng.uniform(0.0, 3.0);
    local.emplace_back(space, u);
  }
  const auto exact = [](const LatticeVectord& a, const LatticeVectord& b) {
    for (Index i = 0; i < a.size(); ++i) {
      if (!close_rel(a[i], b[i], 1e-12)) return false;
    }
    return true;
  };
  const auto top = lub(family);
  const auto top_nonneg = lub(nonneg);
  const std::size_t anchor = rng.below(m);
  const bool ok[] = {
      is_upper_bound(std::span<const LatticeVectord>(family), top),
      exact(lub_by_nonnegative_shift(family, anchor), top),
      exact(lub_by_splitting(nonneg, mask), top_nonneg),
      exact(lub_by_localization(local, LatticeVectord(space, f0)), lub(local)),
      exact(lub_of_powers(nonneg, p), abs_pow(top_nonneg, p)),
      support(abs_pow(family.front(), p)) == support(family.front()),
  };
  for (const bool b : ok) {
    ++row.checks;
    if (!b) ++row.violations;
  }
}

void minkowski(Rng& rng, Index n, double p, std::size_t samples, std::uint64_t seed, CampaignRow& row) {
  const auto space = MeasureSpaced::counting(n);
  Matrix<double> g(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) g(i, j) = rng.below(4) == 0 ? 0.0 : rng.uniform(0.0, 1.0);
  }
  const MatrixOperator<double> op(space, g, true);
  for (std::size_t s = 0; s < samples; ++s) {
    Vector<double> h1(n), h2(n);
    for (Index i = 0; i < n; ++i) {
      h1[i] = rng.uniform(-1.0, 1.0);
      h2[i] = rng.uniform(-1.0, 1.0);
    }
    const auto rep = check_minkowski(op, h1, h2, p);
    row.checks += rep.checks;
    row.violations += rep.violations;
  }
  const auto sub = check_sublinear(SublinearMajorant<double>(op, std::pow(2.0, p - 1.0), p), samples, seed);
  row.checks += sub.checks;
  row.violations += sub.violations;
}

void lift(const CampaignConfig& c, std::uint64_t seed, Index n, double p, LiftMethod method, CampaignRow& row) {
  const auto inst = generate_instance(seed, n, p, false, true);
  LiftOptions opt;
  opt.audit_samples = c.audit_samples;
  opt.seed = seed;
  const auto r = lift_operator(inst.couple, inst.f, *inst.g, p, method, std::nullopt, opt);
  const auto& cert = r.certificates;
  row.residual = cert.residual;
  row.bound = std::pow(2.0, 1.0 - 1.0 / p);
  row.checks = cert.domination_checks + 1;
  row.violations = cert.domination_violations + (cert.residual <= 1e-8 ? 0 : 1);
  for (const auto& s : cert.norm_samples) {
    row.max_ratio = std::max(row.max_ratio, s.max_ratio);
    row.checks += s.samples;
    row.violations += s.violations;
  }
}

}  // namespace

std::vector<CampaignRow> run_suite(const CampaignConfig& config, const std::string& suite, std::size_t index) {
  const std::size_t id = suite_id(suite);
  const auto draw = draw_instance(config, index);
  const auto grid = parse_grid(config.t_grid);
  std::vector<std::optional<double>> ps;
  if (uses_p(suite)) {
    ps.assign(config.p_set.begin(), config.p_set.end());
  } else {
    ps.push_back(std::nullopt);
  }
  std::vector<CampaignRow> rows;
  for (std::size_t k = 0; k < ps.size(); ++k) {
    CampaignRow row;
    row.suite = suite;
    row.index = index;
    row.seed = draw.seed;
    row.n = draw.n;
    row.p = ps[k];
    const std::uint64_t sub_seed = Rng::stream_seed(draw.seed, 64 * id + k);
    Rng rng(sub_seed);
    const auto start = std::chrono::steady_clock::now();
    try {
      if (suite == "sandwich") {
        const auto couple = random_weight_couple(rng, draw.n);
        absorb(row, check_k_d_sandwich(couple, random_signed(rng, couple.space), grid));
      } else if (suite == "claim1") {
        const auto couple = random_weight_couple(rng, draw.n);
        absorb(row, check_claim1(couple, random_signed(rng, couple.space), *row.p, grid));
      } else if (suite == "maligranda") {
        const auto couple = random_weight_couple(rng, draw.n);
        KSolverOptions opt;
        opt.relative_gap = 1e-6;
        const auto rep = check_maligranda(couple, random_signed(rng, couple.space), *row.p, grid, 2e-6, opt);
        absorb(row, rep);
        if (!(rep.max_ratio <= rep.bound + 2e-6)) ++row.violations;
      } else if (suite == "minkowski") {
        minkowski(rng, draw.n, *row.p, 100, sub_seed, row);
      } else if (suite == "lift-holder") {
        lift(config, sub_seed, draw.n, *row.p, LiftMethod::Holder, row);
      } else if (suite == "lift-greedy") {
        lift(config, sub_seed, draw.n, *row.p, LiftMethod::Greedy, row);
      } else {
        lattice_props(rng, draw.n, row);
      }
    } catch (const Error& e) {
      row.error = e.what();
    }
    row.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

CampaignReport run_campaign(const CampaignConfig& config, unsigned threads) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t count = config.instance_count;
  // results[index][suite] keeps rows in index order whatever the completion order.
  std::vector<std::vector<std::vector<CampaignRow>>> results(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        for (const auto& s : config.suites) results[i].push_back(run_suite(config, s, i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned k = std::max(1u, std::min<unsigned>(threads ? threads : campaign_threads(),
                                                     static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < k; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  CampaignReport report{config, {}, 0};
  for (std::size_t s = 0; s < config.suites.size(); ++s) {
    for (std::size_t i = 0; i < count; ++i) {
      for (auto& row : results[i][s]) report.rows.push_back(std::move(row));
    }
  }
  report.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

}  // namespace

void write_csv(const CampaignReport& report, std::ostream& out) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17);
  os << "suite,index,seed,n,p,max_ratio,bound,checks,violations,solver_gaps,residual,errors,message\n";
  std::size_t checks = 0, gaps = 0;
  double max_residual = 0;
  for (const auto& r : report.rows) {
    os << r.suite << ',' << r.index << ',' << r.seed << ',' << r.n << ',';
    if (r.p) os << *r.p;
    os << ',' << r.max_ratio << ',' << r.bound << ',' << r.checks << ',' << r.violations << ',' << r.solver_gaps << ','
       << r.residual << ',' << (r.error.empty() ? 0 : 1) << ',' << csv_field(r.error) << '\n';
    checks += r.checks;
    gaps += r.solver_gaps;
    max_residual = std::max(max_residual, r.residual);
  }
  os << "summary," << report.rows.size() << ',' << report.config.seed << ",,,,," << checks << ','
     << report.violations() << ',' << gaps << ',' << max_residual << ',' << report.errors() << ",\n";
  out << os.str();
}

nlohmann::json to_json(const CampaignReport& report) {
  using nlohmann::json;
  const auto& c = report.config;
  json j;
  j["config"] = {{"seed", c.seed},   {"instance_count", c.instance_count}, {"n_min", c.n_min},
                 {"n_max", c.n_max}, {"p_set", c.p_set},                   {"t_grid", c.t_grid},
                 {"suites", c.suites}, {"audit_samples", c.audit_samples}};
  json rows = json::array();
  std::map<std::string, double> per_suite;
  json row_times = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"suite", r.suite},
                    {"index", r.index},
                    {"seed", r.seed},
                    {"n", r.n},
                    {"p", r.p ? json(*r.p) : json(nullptr)},
                    {"max_ratio", r.max_ratio},
                    {"bound", r.bound},
                    {"checks", r.checks},
                    {"violations", r.violations},
                    {"solver_gaps", r.solver_gaps},
                    {"residual", r.residual},
                    {"error", r.error.empty() ? json(nullptr) : json(r.error)}});
    per_suite[r.suite] += r.runtime;
    row_times.push_back(r.runtime);
  }
  j["rows"] = std::move(rows);
  j["summary"] = {{"rows", report.rows.size()},
                  {"violations", report.violations()},
                  {"errors", report.errors()},
                  {"exit_code", report.exit_code()}};
  j["timing"] = {{"total_seconds", report.total_seconds}, {"suite_seconds", per_suite}, {"row_seconds", row_times}};
  return j;
}

}  // namespace caldera
