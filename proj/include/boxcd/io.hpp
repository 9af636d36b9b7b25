#pragma once

#include "boxcd/harness.hpp"
#include "boxcd/regions.hpp"
#include "boxcd/sampler.hpp"
#include "boxcd/types.hpp"

#include "json.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace boxcd {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Json = nlohmann::ordered_json;

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Numeric table with a one-line header.
struct CsvTable {
  std::vector<std::string> header;
  Matrix<double> values;

  /// Column index by name; throws IoError when absent.
  Eigen::Index column(const std::string& name) const;
};

std::string to_csv(const std::vector<std::string>& header, const Matrix<double>& values);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Matrix<double>& values);
CsvTable parse_csv(const std::string& text, const std::string& origin = "<string>");
CsvTable read_csv(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const Json& json);

Json to_json(const Vector<double>& v);
Json to_json(const Support& support);
Json to_json(const SupportDiagnostic& diagnostic);
Json to_json(const CoverageReport& report);
Json to_json(const LengthReport& report);
Json to_json(const MedianUnbiasednessReport& report);

/// Aligned-column summary of a coverage report.
std::string coverage_text(const CoverageReport& report);
std::string lengths_text(const LengthReport& report);

/// Accepted draws as rows (theta_1..theta_p, trial).
void write_accepted_draws(const std::filesystem::path& path, const SamplerOutput& output);
/// Dataset rows with columns y_1..y_k (or y for one column).
void write_dataset(const std::filesystem::path& path, const DataSet& data);

}  // namespace boxcd
