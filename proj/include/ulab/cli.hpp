#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "ulab/common.hpp"

namespace ulab::cli {

constexpr int kSchemaVersion = 1;

// bad configuration: exit status 2
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::vector<std::string>& subcommands();
std::string usage();

struct ExperimentConfig {
  std::string subcommand;
  std::filesystem::path out = "ulab_out";
  std::uint64_t seed = 1;
  int threads = 0;  // 0 leaves the pool size alone
  bool strict = false;
  // "section.key" -> raw value; sections are subcommand names
  std::map<std::string, std::string> params;
  bool empty() const { return subcommand.empty() && params.empty(); }
};

// key = value lines, [section] headers, # comments; top level keys are
// command, out, seed, threads, strict. Unknown keys and sections throw ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
// throws ConfigError unless every key of cfg.params belongs to its section
void validate_keys(const ExperimentConfig& cfg);

// RFC 4180 field and record (CRLF terminated)
std::string csv_field(const std::string& s);
std::string csv_record(const std::vector<std::string>& fields);
// shortest round-trip decimal form; nan and inf spelled out
std::string fmt(double v);

struct Column {
  std::string name, doc;
};
struct Table {
  std::string name;
  std::vector<Column> columns;
  std::vector<std::vector<std::string>> rows;
  void add(std::vector<std::string> row);  // throws on a width mismatch
  std::string csv() const;
};

struct Check {
  std::string name;
  std::string anchor;  // statement the check exercises
  double measured = 0, threshold = 0;
  std::string relation;  // "<=", ">=", "==" (booleans as 0 / 1)
  bool pass = false;
  bool warning = false;  // only fails the run under --strict
};
Check check_le(std::string name, std::string anchor, double measured, double threshold,
               bool warning = false);
Check check_ge(std::string name, std::string anchor, double measured, double threshold,
               bool warning = false);
Check check_true(std::string name, std::string anchor, bool ok, bool warning = false);

struct RunResult {
  int status = 0;
  std::vector<Check> checks;
  std::vector<Table> tables;
  std::vector<std::string> failed;
  std::vector<std::filesystem::path> files;
};

// runs cfg.subcommand, writes <out>/<subcommand>_<table>.csv and
// <out>/<subcommand>_summary.json; status 0 pass, 1 failed checks
// (names in failed), 2 config errors
RunResult run(const ExperimentConfig& cfg, std::ostream& log);

// entry point shared by the tool: parses argv with CLI11 and calls run
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace ulab::cli
