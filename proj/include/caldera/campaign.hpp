#ifndef CALDERA_CAMPAIGN_HPP
#define CALDERA_CAMPAIGN_HPP

// Campaigns: every enabled suite over seeded random instances, reported as a
// CSV table (one row per suite, instance and p) plus an optional JSON file.

#include "caldera/core.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace caldera {

const std::vector<std::string>& known_suites();

struct CampaignConfig {
  std::uint64_t seed = 0;
  std::size_t instance_count = 10;
  Index n_min = 2;
  Index n_max = 8;
  std::vector<double> p_set{2.0};
  std::string t_grid = "geometric:1e-3,1e3,61";
  std::vector<std::string> suites;
  std::size_t audit_samples = 10000;

  /// Throws DomainError on an unknown suite, bad p or n range.
  void validate() const;
};

/// Key-value text: one `key = value` per line, lists comma separated, `#`
/// starts a comment. Keys are the CampaignConfig field names.
CampaignConfig parse_campaign_config(std::istream& in);
CampaignConfig read_campaign_config(const std::string& path);

struct CampaignRow {
  std::string suite;
  std::size_t index = 0;
  std::uint64_t seed = 0;
  Index n = 0;
  std::optional<double> p;  // absent for suites that do not depend on p
  double max_ratio = 0;
  double bound = 0;
  std::size_t checks = 0;
  std::size_t violations = 0;
  std::size_t solver_gaps = 0;
  double residual = 0;
  std::string error;        // module error, distinct from a violation
  double runtime = 0;       // seconds; reported only in the JSON timing block
};

struct CampaignReport {
  CampaignConfig config;
  std::vector<CampaignRow> rows;
  double total_seconds = 0;

  std::size_t violations() const;
  std::size_t errors() const;
  /// 0 when clean, 1 with any violation, 2 with module errors only.
  int exit_code() const;
};

/// Number of worker threads: CALDERA_THREADS when set, else the hardware count.
unsigned campaign_threads();

/// One instance's rows for one suite. Exposed for tests.
std::vector<CampaignRow> run_suite(const CampaignConfig& config, const std::string& suite, std::size_t index);

CampaignReport run_campaign(const CampaignConfig& config, unsigned threads = 0);

void write_csv(const CampaignReport& report, std::ostream& out);
nlohmann::json to_json(const CampaignReport& report);

}  // namespace caldera

#endif  // CALDERA_CAMPAIGN_HPP
