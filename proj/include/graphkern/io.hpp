#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "graphkern/experiment.hpp"
#include "graphkern/graph.hpp"
#include "graphkern/krg.hpp"

namespace graphkern::io {

/// Numeric CSV with a header row.
struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

/// Throws ParseError (with line and column) or MissingValue for empty cells.
CsvTable parse_csv(std::istream& in, const std::string& source = "<stream>");
CsvTable read_csv(const std::filesystem::path& path);

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);

/// Measurements (one column per node, one row per step) and aligned node coordinates.
struct MeasurementData {
  std::vector<std::string> node_names;
  Eigen::MatrixXd series;  // steps x M
  NodeCoordinates coords;
};

/// Measurements CSV: header of node names, numeric rows. Coordinates CSV: header
/// `node,lat,lon` and one row per node, in any order. Throws ParseError, MissingValue,
/// NameMismatch, IoError.
MeasurementData ingest_dataset(const std::filesystem::path& measurements,
                               const std::filesystem::path& coordinates);

/// Reads the coordinates CSV alone, keyed by node name.
std::vector<std::pair<std::string, std::pair<double, double>>> read_coordinates(
    const std::filesystem::path& path);

inline constexpr int kModelVersion = 1;

/// Serialized model: everything predict() needs plus the fit settings.
nlohmann::json model_to_json(const KrgModel& model);

struct LoadedModel {
  std::shared_ptr<const KernelDictionary> dict;
  Eigen::VectorXd rho;
  Eigen::MatrixXd psi;
  Regularization reg;

  Eigen::MatrixXd predict_rows(const Eigen::MatrixXd& inputs) const;
};

/// Throws ParseError for a malformed document or unsupported version.
LoadedModel model_from_json(const nlohmann::json& doc);

void save_model(const std::filesystem::path& path, const KrgModel& model);
LoadedModel load_model(const std::filesystem::path& path);

nlohmann::json report_to_json(const AggregateReport& report);

}  // namespace graphkern::io
