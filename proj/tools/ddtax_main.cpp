#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "ddtax/report.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read config file: " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "ddtax: drawdown / tax first-passage functionals with a Monte Carlo "
      "cross-check"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  std::string mc_switch = "on";
  int jobs = 0;
  bool serial = false;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* sub, bool with_out) {
    sub->add_option("--config", config_path, "JSON job description")
        ->required()
        ->check(CLI::ExistingFile);
    if (with_out) sub->add_option("--out", out_dir, "output directory");
  };

  CLI::App* run = app.add_subcommand(
      "run", "evaluate the queries and write the comparison CSV");
  add_common(run, true);
  run->add_option("--mc", mc_switch, "Monte Carlo cross-check: on|off")
      ->check(CLI::IsMember({"on", "off"}));
  run->add_option("--jobs", jobs, "worker cap for the oracle (0 = default)");
  run->add_flag("--serial", serial, "use the serial reference oracle loop");
  run->add_option("--seed", seed, "override the oracle seed")
      ->each([&](const std::string&) { seed_set = true; });

  CLI::App* table = app.add_subcommand(
      "table", "evaluate one functional over a grid of upper levels");
  add_common(table, true);

  CLI::App* validate = app.add_subcommand(
      "validate", "check the model/boundary/tax blocks for consistency");
  add_common(validate, false);

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string text = slurp(config_path);
    if (validate->parsed()) return ddtax::run_validate(text, std::cout) ? 2 : 0;

    ddtax::ReportOptions opt;
    opt.out_dir = out_dir;
    opt.mc_enabled = mc_switch != "off";
    opt.jobs = jobs;
    opt.force_serial = serial;
    if (seed_set) opt.seed_override = seed;

    const ddtax::RunSummary sum = table->parsed()
                                      ? ddtax::run_table(text, opt, std::cout)
                                      : ddtax::run_report(text, opt, std::cout);
    return sum.failures == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
