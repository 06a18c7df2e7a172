#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vitlens/bundle.hpp"
#include "vitlens/error.hpp"

namespace vitlens::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitContract = 2;
inline constexpr int kExitEmpty = 3;
inline constexpr int kExitNumerical = 4;

int exit_code(ErrorCode code);

/// Provenance record written next to every output: re-running `arguments`
/// from `working_directory` must reproduce every listed hash.
struct Manifest {
  std::string command;
  std::vector<std::string> arguments;
  nlohmann::json seeds = nlohmann::json::object();
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;

  void write(const std::filesystem::path& path) const;
};

/// Shortest round-trip decimal form of a double.
std::string format_number(double value);

class Csv {
 public:
  explicit Csv(std::vector<std::string> header);
  void row(const std::vector<std::string>& fields);
  void save(const std::filesystem::path& path) const;
  std::size_t rows() const noexcept { return rows_; }

 private:
  std::string text_;
  std::size_t columns_;
  std::size_t rows_ = 0;
};

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal SVG line chart: one polyline per series, labeled axes, legend.
void write_svg(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
               const std::string& y_label, const std::vector<Series>& series);

void write_text(const std::filesystem::path& path, const std::string& text);

/// Bundles in `dir` (EmptyRun when there are none), loaded in parallel and
/// checked for a shared ModelConfig (MixedBundles otherwise).
std::vector<ActivationBundle> load_dataset(const std::filesystem::path& dir,
                                           std::vector<std::filesystem::path>* paths = nullptr);

/// Labels for `paths` keyed by file stem. Missing entries are a contract error.
std::vector<int> labels_for(const std::vector<std::filesystem::path>& paths, const std::filesystem::path& csv);

}  // namespace vitlens::cli
