// Batch front end: runs one verification suite and writes its report.
// Exits 0 only when every check passes; failed checks exit 1 and usage errors exit 2.

#include "ncsym/suites.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace ncsym;

struct Options {
  std::uint64_t seed = 1;
  std::optional<double> tol;
  std::optional<int> samples;
  std::string out;
  std::string format = "json";
  std::vector<std::string> algebras;
  std::string left, right;
  std::string preset = "paper";
  std::string data_csv;
};

void add_options(CLI::App* cmd, Options& o)
{
  cmd->add_option("--seed", o.seed, "random seed; equal seeds give byte-identical reports");
  cmd->add_option("--tol", o.tol, "override every check tolerance of the suite")->check(CLI::PositiveNumber);
  cmd->add_option("--samples", o.samples, "random sample count (triples, pairs or systems)")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "report path (default: stdout)");
  cmd->add_option("--format", o.format, "report format")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--algebra", o.algebras, "algebras m<n>, m<p>|<q>, g<n> (verify, gns)")->delimiter(',');
  cmd->add_option("--left", o.left, "left factor: quantum:<hbar>[:<alg>], canonical[:<alg>], commutative[:g<n>]");
  cmd->add_option("--right", o.right, "right factor, same syntax as --left");
  cmd->add_option("--preset", o.preset, "scenario preset (stern-gerlach: paper)");
  cmd->add_option("--data-csv", o.data_csv, "plot-ready table (decoherence, evolve, moyal-limit)");
}

void write_data_csv(const SuiteConfig& cfg, const Report& r, std::ostream& os)
{
  if (cfg.suite == "decoherence") {
    write_sweep_csv(os, default_sweep());
  } else if (cfg.suite == "evolve") {
    write_trace_csv(os, {"schroedinger", "heisenberg"}, evolve_trace(cfg.seed));
  } else if (cfg.suite == "moyal-limit") {
    os << "hbar,remainder\n";
    os.precision(17);
    const auto& hb = r.data.at("hbars");
    const auto& rem = r.data.at("pairs").at(0).at("remainders");
    for (std::size_t k = 0; k < hb.size(); ++k) os << hb.at(k).get<double>() << ',' << rem.at(k).get<double>() << '\n';
  } else {
    throw UsageError("--data-csv is not available for " + cfg.suite);
  }
}

int run(const std::string& name, const Options& o)
{
  SuiteConfig cfg;
  cfg.suite = name;
  cfg.seed = o.seed;
  cfg.tol = o.tol;
  cfg.samples = o.samples;
  cfg.algebras = o.algebras;
  cfg.left = o.left;
  cfg.right = o.right;
  cfg.preset = o.preset;

  const Report r = run_suite(cfg);
  std::ostringstream text;
  if (o.format == "csv")
    write_report_csv(text, r);
  else
    text << report_text(r);
  if (o.out.empty()) {
    std::cout << text.str();
  } else {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw UsageError("cannot write " + o.out);
    f << text.str();
  }
  if (!o.data_csv.empty()) {
    std::ofstream f(o.data_csv, std::ios::binary);
    if (!f) throw UsageError("cannot write " + o.data_csv);
    write_data_csv(cfg, r, f);
  }

  const auto failed = r.failures();
  std::cerr << name << ": " << r.checks.size() - failed.size() << "/" << r.checks.size() << " checks passed\n";
  for (const auto& id : failed) {
    const Check* c = r.find(id);
    std::cerr << "FAIL " << id << " value=" << c->value << " " << relation_name(c->relation) << " " << c->bound;
    if (c->relation == Relation::Within) std::cerr << ".." << c->upper;
    std::cerr << '\n';
  }
  return failed.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"ncsym: verification suites for noncommutative symplectic mechanics"};
  app.require_subcommand(1);
  Options o;
  std::string chosen;
  for (const auto& name : suite_names()) {
    auto* cmd = app.add_subcommand(name, "run the " + name + " suite");
    add_options(cmd, o);
    cmd->callback([&chosen, name] { chosen = name; });
  }
  if (argc > 1 && argv[1][0] != '-') {
    const auto& names = suite_names();
    if (std::find(names.begin(), names.end(), std::string(argv[1])) == names.end()) {
      std::cerr << "error: unknown command '" << argv[1] << "'\n" << app.help();
      return 2;
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    return run(chosen, o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << chosen << " aborted: " << e.what() << '\n';
    return 1;
  }
}
