#include "boxcd/io.hpp"

#include <boost/algorithm/string.hpp>

#include <array>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace boxcd {

namespace fs = std::filesystem;

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw IoError("cannot format floating-point value");
  return std::string(buf.data(), ptr);
}

Eigen::Index CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return static_cast<Eigen::Index>(j);
  throw IoError("CSV has no column '" + name + "'");
}

std::string to_csv(const std::vector<std::string>& header, const Matrix<double>& values) {
  require(values.cols() == static_cast<Eigen::Index>(header.size()) || values.rows() == 0,
          "to_csv: header and column count differ");
  std::string out = boost::algorithm::join(header, ",");
  out += '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(values(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const Matrix<double>& values) {
  write_text(path, to_csv(header, values));
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  CsvTable table;
  if (!std::getline(in, line) || boost::algorithm::trim_copy(line).empty())
    throw IoError(origin + ": empty CSV file");
  boost::algorithm::trim(line);
  boost::algorithm::split(table.header, line, boost::is_any_of(","));
  for (auto& h : table.header) boost::algorithm::trim(h);

  std::vector<double> cells;
  Eigen::Index rows = 0;
  const std::size_t width = table.header.size();
  std::vector<std::string> parts;
  while (std::getline(in, line)) {
    boost::algorithm::trim(line);
    if (line.empty()) continue;
    boost::algorithm::split(parts, line, boost::is_any_of(","));
    if (parts.size() != width)
      throw IoError(origin + ": row " + std::to_string(rows + 1) + " has " +
                    std::to_string(parts.size()) + " fields, expected " + std::to_string(width));
    for (auto& p : parts) {
      boost::algorithm::trim(p);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), v);
      if (ec != std::errc() || ptr != p.data() + p.size() || p.empty())
        throw IoError(origin + ": row " + std::to_string(rows + 1) + ": cannot parse '" + p + "'");
      cells.push_back(v);
    }
    ++rows;
  }
  table.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                Eigen::RowMajor>>(
      cells.data(), rows, static_cast<Eigen::Index>(width));
  return table;
}

CsvTable read_csv(const fs::path& path) { return parse_csv(read_text(path), path.string()); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_json(const fs::path& path, const Json& json) { write_text(path, json.dump(2) + "\n"); }

Json to_json(const Vector<double>& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json to_json(const Support& support) {
  return Json{{"lower", to_json(support.lower)}, {"upper", to_json(support.upper)}};
}

Json to_json(const SupportDiagnostic& diagnostic) {
  Json coords = Json::array();
  for (const auto& c : diagnostic.coordinates)
    coords.push_back(Json{{"lower_fraction", c.lower_fraction},
                          {"upper_fraction", c.upper_fraction},
                          {"lower_flag", c.lower_flag},
                          {"upper_flag", c.upper_flag}});
  return Json{{"band", diagnostic.band},
              {"threshold", diagnostic.threshold},
              {"flagged", diagnostic.any_flag()},
              {"coordinates", coords}};
}

Json to_json(const CoverageReport& report) {
  Json rules = Json::array();
  for (const auto& rule : report.rules) {
    Json levels = Json::array();
    for (const auto& l : rule.levels)
      levels.push_back(Json{{"level", l.level},
                            {"covered", l.covered},
                            {"coverage", l.coverage},
                            {"standard_error", l.standard_error}});
    rules.push_back(Json{{"rule", rule.rule}, {"levels", levels}});
  }
  Json outcomes = Json::array();
  for (std::size_t b = 0; b < report.outcomes.size(); ++b) {
    const auto& o = report.outcomes[b];
    Json row{{"replicate", b}, {"valid", o.valid}};
    if (!o.valid) {
      row["failure"] = o.failure;
    } else {
      row["n_accepted"] = o.n_accepted;
      row["estimate"] = to_json(o.estimate);
      row["statistic"] = o.depth_at_theta0;
      row["max_depth"] = o.max_depth;
      Json covered = Json::array();
      for (const auto& flags : o.covered) {
        Json f = Json::array();
        for (bool c : flags) f.push_back(c);
        covered.push_back(f);
      }
      row["covered"] = covered;
    }
    outcomes.push_back(row);
  }
  return Json{{"method", report.method},
              {"model", report.model},
              {"levels", report.levels},
              {"replicates", report.replicates},
              {"valid", report.valid},
              {"failed", report.failed},
              {"mean_accepted", report.mean_accepted},
              {"rules", rules},
              {"outcomes", outcomes}};
}

Json to_json(const LengthReport& report) {
  return Json{{"levels", report.levels},
              {"replicates", report.replicates},
              {"valid", report.valid},
              {"failed", report.failed},
              {"boxcd_mean_length", report.boxcd_mean_length},
              {"alpham_mean_length", report.alpham_mean_length},
              {"lrt_mean_length", report.lrt_mean_length},
              {"multimodal_intervals", report.multimodal_intervals}};
}

Json to_json(const MedianUnbiasednessReport& report) {
  return Json{{"replicates", report.replicates},
              {"valid", report.valid},
              {"at_or_below", report.at_or_below},
              {"fraction", report.fraction},
              {"standard_error", report.standard_error},
              {"estimates", report.estimates}};
}

namespace {

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

std::string coverage_text(const CoverageReport& report) {
  std::ostringstream out;
  out << "method " << report.method << "  model " << report.model << "  replicates "
      << report.replicates << "  valid " << report.valid << "  failed " << report.failed.size()
      << "\n";
  out << std::left << std::setw(24) << "rule";
  for (double l : report.levels) out << std::right << std::setw(18) << fixed(l, 2);
  out << "\n";
  for (const auto& rule : report.rules) {
    out << std::left << std::setw(24) << rule.rule;
    for (const auto& l : rule.levels)
      out << std::right << std::setw(18)
          << (fixed(l.coverage, 3) + " (" + fixed(l.standard_error, 3) + ")");
    out << "\n";
  }
  return out.str();
}

std::string lengths_text(const LengthReport& report) {
  std::ostringstream out;
  out << "replicates " << report.replicates << "  valid " << report.valid
      << "  multimodal " << report.multimodal_intervals << "\n";
  out << std::left << std::setw(10) << "level" << std::right << std::setw(12) << "box-cd"
      << std::setw(12) << "alpha-m" << std::setw(12) << "lrt" << "\n";
  for (std::size_t l = 0; l < report.levels.size(); ++l) {
    out << std::left << std::setw(10) << fixed(report.levels[l], 2) << std::right
        << std::setw(12) << fixed(report.boxcd_mean_length[l]) << std::setw(12)
        << fixed(report.alpham_mean_length[l]) << std::setw(12)
        << fixed(report.lrt_mean_length[l]) << "\n";
  }
  return out.str();
}

void write_accepted_draws(const fs::path& path, const SamplerOutput& output) {
  const Eigen::Index p = output.accepted.cols();
  std::vector<std::string> header;
  for (Eigen::Index j = 0; j < p; ++j) header.push_back("theta_" + std::to_string(j + 1));
  header.push_back("trial");
  Matrix<double> values(output.n_accepted(), p + 1);
  values.leftCols(p) = output.accepted;
  for (Eigen::Index i = 0; i < output.n_accepted(); ++i)
    values(i, p) = static_cast<double>(output.trial_index[static_cast<std::size_t>(i)]);
  write_csv(path, header, values);
}

void write_dataset(const fs::path& path, const DataSet& data) {
  std::vector<std::string> header;
  if (data.cols() == 1) {
    header.push_back("y");
  } else {
    for (Eigen::Index j = 0; j < data.cols(); ++j) header.push_back("y_" + std::to_string(j + 1));
  }
  write_csv(path, header, data);
}

}  // namespace boxcd
