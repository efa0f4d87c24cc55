#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "provex/abstraction.hpp"
#include "provex/explain.hpp"
#include "provex/io.hpp"

namespace provex::cli {

// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kError = 1,
  kEarlyStop = 2,
  kInsufficient = 3,
  kUncertain = 4,
  kEquivalenceFailure = 5,
};

enum class Algorithm { AbstractionRefinement, Baseline };
enum class GroupMode { None, Rgb };

struct RunConfig {
  std::filesystem::path network;
  std::vector<std::filesystem::path> inputs;
  double epsilon = 0.01;
  OrderingPolicy order = OrderingPolicy::SensitivityAscending;
  GroupMode groups = GroupMode::None;
  std::vector<double> schedule{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::optional<double> timeout_seconds;
  Backend backend = Backend::Enclosure;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = ".";
  std::size_t workers = 1;
  Algorithm algorithm = Algorithm::AbstractionRefinement;
  std::size_t bounds_window = 16;
  std::size_t oracle_budget = std::size_t{1} << 16;
  std::size_t instance_index = 0;

  // Throws ValidationError naming the offending field.
  void validate() const;
  ExplainOptions explain_options() const;
  nlohmann::json to_json() const;
};

// Runs one explanation and writes report.json plus one mask per snapshot and
// a final mask into out_dir. 0 ok, 2 early stop, 1 error.
int cmd_explain(const RunConfig& config, std::ostream& out, std::ostream& err);

struct VerifyConfig {
  std::filesystem::path network;
  std::filesystem::path input;
  std::vector<std::size_t> subset;  // 1-based group labels
  double epsilon = 0.01;
  Backend backend = Backend::Enclosure;
  GroupMode groups = GroupMode::None;
  std::size_t oracle_budget = std::size_t{1} << 16;
  std::uint64_t seed = 0;
  std::size_t instance_index = 0;
};

// Prints sufficient / insufficient (+ witness) / uncertain; 0 / 3 / 4.
int cmd_verify(const VerifyConfig& config, std::ostream& out, std::ostream& err);

// Runs both algorithms on every instance and writes bench.csv and
// bench_rho.csv. 5 when explanation sizes differ for some instance.
int cmd_bench(const RunConfig& config, std::ostream& out, std::ostream& err);

enum class Layout { Panels, Grid };

struct RenderConfig {
  std::filesystem::path report;
  Layout layout = Layout::Grid;
  std::filesystem::path out_dir = ".";
  std::uint8_t flag_gray = 128;
};

// PGM/PPM masks from a report.json: explanation pixels keep their value,
// freed pixels take the flag colour.
int cmd_render(const RenderConfig& config, std::ostream& out, std::ostream& err);

struct FixtureConfig {
  std::string kind = "running-example";
  std::uint64_t seed = 0;
  std::size_t inputs = 4;
  std::vector<std::size_t> widths{8, 8};
  std::size_t outputs = 3;
  std::string activation = "relu";
  std::size_t instances = 1;
  bool images = false;
  std::filesystem::path out_dir = ".";
};

int cmd_fixture(const FixtureConfig& config, std::ostream& out, std::ostream& err);

// Shared helpers, exposed for tests.
nlohmann::json build_report(const RunConfig& config, const ExplanationResult& result,
                            const std::optional<Image>& image);
std::vector<double> parse_real_list(const std::string& text);
std::vector<std::size_t> parse_index_list(const std::string& text);
// Flag values: sensitivity|in-order|random, none|rgb, enclosure|oracle.
// Throw ValidationError on anything else.
OrderingPolicy parse_order_flag(const std::string& text);
GroupMode parse_groups_flag(const std::string& text);
Backend parse_backend_flag(const std::string& text);

}  // namespace provex::cli
