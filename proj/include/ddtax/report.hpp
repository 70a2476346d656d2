// Config-driven evaluation runs: parse a JSON job description, compute the
// requested functionals, optionally cross-check each against the Monte Carlo
// oracle, and write a deterministic CSV (fixed schema tag, %.12g numbers, no
// timestamps) so same-seed runs are byte-identical.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ddtax {

struct ReportOptions {
  std::string out_dir;       // created if missing
  bool mc_enabled = true;    // master switch over the config's mc.enabled
  int jobs = 0;              // OpenMP worker cap for the oracle
  bool force_serial = false; // use the serial reference oracle loop
  std::optional<std::uint64_t> seed_override;
};

struct RunSummary {
  int rows = 0;
  int failures = 0;  // failed comparisons plus rows that threw
  std::vector<std::string> outputs;  // files written
};

// Evaluates config["queries"] (see README for the schema).  Per-row errors
// are captured into the CSV rather than aborting the run.
RunSummary run_report(const std::string& config_text, const ReportOptions& opt,
                      std::ostream& log);

// Evaluates config["table"]: one functional on a grid of upper levels,
// sharing a single cumulative hazard integral across the grid.
RunSummary run_table(const std::string& config_text, const ReportOptions& opt,
                     std::ostream& log);

// Checks the model/boundary/tax blocks over the working domain and prints
// every issue found; returns 0 when everything is consistent.
int run_validate(const std::string& config_text, std::ostream& log);

}  // namespace ddtax
