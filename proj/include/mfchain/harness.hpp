#ifndef MFCHAIN_HARNESS_HPP
#define MFCHAIN_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace mfchain::harness {

inline constexpr const char* kToolName = "mfchain";
inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

enum ExitCode : int {
  kExitPass = 0,
  kExitError = 1,
  kExitInconclusive = 2,
  kExitFailure = 3,
};

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

/// Every recognised key with its default.
const std::vector<ConfigKey>& config_keys();

/// Flat experiment configuration.  Grammar, one entry per line:
///   section.key = value      # comment
/// Blank lines and lines starting with '#' are ignored.  Lists are comma
/// separated.  Unknown keys are rejected.
class Config {
 public:
  /// All keys at their defaults.
  Config();

  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& file);

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::uint32_t> get_counts(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  /// Execution-only settings; kept out of the config echo and the hash.
  unsigned threads = 1;
  bool force = false;

  /// Every key except run.out, which only says where files go.
  std::map<std::string, std::string> echo() const;
  /// "key = value" lines of echo() in key order.
  std::string canonical_text() const;

 private:
  std::map<std::string, std::string> values_;
};

struct OutputFile {
  std::string name;
  std::string content;
};

struct RunResult {
  nlohmann::json report;
  int exit_code = kExitPass;
  std::vector<OutputFile> files;  // includes the serialized report

  /// The serialized report (the "<command>.json" entry of files).
  const std::string& report_text() const;
};

RunResult run_solve(const Config& config);
RunResult run_simulate(const Config& config);
RunResult run_weak_error(const Config& config);
RunResult run_stationary_gap(const Config& config);
RunResult run_certify(const Config& config);
RunResult run_master_check(const Config& config);
RunResult run_decay_fit(const Config& config);

const std::vector<std::string>& command_names();
RunResult run_command(const std::string& command, const Config& config);

/// Writes every output file into dir (created if needed).
void write_outputs(const RunResult& result, const std::filesystem::path& dir);

}  // namespace mfchain::harness

#endif  // MFCHAIN_HARNESS_HPP
