#include "graphkern/io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "graphkern/error.hpp"

namespace graphkern::io {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(const std::string& cell, double& value) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows, const char* what) {
  if (!rows.is_array()) throw Error(ErrorCode::ParseError, std::string(what) + " must be an array");
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto m = n == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.at(0).size());
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m) {
      throw Error(ErrorCode::ParseError, std::string(what) + " rows have unequal lengths");
    }
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
  }
  return out;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

CsvTable parse_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw Error(ErrorCode::ParseError, source + ":" + std::to_string(line_no) + ": expected " +
                                             std::to_string(table.header.size()) + " fields, got " +
                                             std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const std::string where = source + ":" + std::to_string(line_no) + ", column " +
                                std::to_string(j + 1) + " (" + table.header[j] + ")";
      if (fields[j].empty()) throw Error(ErrorCode::MissingValue, where + ": empty cell");
      if (!parse_double(fields[j], row[j])) {
        throw Error(ErrorCode::ParseError, where + ": '" + fields[j] + "' is not a number");
      }
    }
    rows.push_back(std::move(row));
  }
  if (!have_header) throw Error(ErrorCode::ParseError, source + ": no header row");

  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_csv(in, path.string());
}

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      out << (j ? "," : "") << format_double(values(i, j));
    }
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
  auto out = open_output(path);
  write_csv(out, header, values);
}

std::vector<std::pair<std::string, std::pair<double, double>>> read_coordinates(
    const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<std::pair<std::string, std::pair<double, double>>> out;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 3) throw Error(ErrorCode::ParseError, where + ": expected node,lat,lon");
    if (!header) {
      header = true;
      continue;
    }
    double lat = 0.0;
    double lon = 0.0;
    if (fields[1].empty() || fields[2].empty()) {
      throw Error(ErrorCode::MissingValue, where + ": empty coordinate");
    }
    if (!parse_double(fields[1], lat) || !parse_double(fields[2], lon)) {
      throw Error(ErrorCode::ParseError, where + ": coordinates are not numbers");
    }
    out.push_back({fields[0], {lat, lon}});
  }
  return out;
}

MeasurementData ingest_dataset(const std::filesystem::path& measurements,
                               const std::filesystem::path& coordinates) {
  CsvTable table = read_csv(measurements);
  if (table.values.rows() < 2) {
    throw Error(ErrorCode::ParseError, measurements.string() + ": need at least two rows of data");
  }
  const auto coords = read_coordinates(coordinates);

  std::map<std::string, std::pair<double, double>> by_name;
  for (const auto& [name, pos] : coords) {
    if (!by_name.emplace(name, pos).second) {
      throw Error(ErrorCode::NameMismatch, "duplicate node '" + name + "' in " + coordinates.string());
    }
  }
  std::set<std::string> seen;
  for (const auto& name : table.header) {
    if (!seen.insert(name).second) {
      throw Error(ErrorCode::NameMismatch, "duplicate column '" + name + "' in " + measurements.string());
    }
    if (!by_name.count(name)) {
      throw Error(ErrorCode::NameMismatch, "node '" + name + "' has no coordinates");
    }
  }
  if (by_name.size() != table.header.size()) {
    for (const auto& [name, pos] : by_name) {
      if (!seen.count(name)) {
        throw Error(ErrorCode::NameMismatch, "coordinates list node '" + name + "' with no measurements");
      }
    }
  }

  MeasurementData out;
  out.node_names = table.header;
  out.series = std::move(table.values);
  out.coords.metric = NodeCoordinates::Metric::Geodesic;
  out.coords.positions.resize(static_cast<Eigen::Index>(out.node_names.size()), 2);
  for (std::size_t i = 0; i < out.node_names.size(); ++i) {
    const auto& pos = by_name.at(out.node_names[i]);
    out.coords.positions(static_cast<Eigen::Index>(i), 0) = pos.first;
    out.coords.positions(static_cast<Eigen::Index>(i), 1) = pos.second;
  }
  return out;
}

nlohmann::json model_to_json(const KrgModel& model) {
  const auto& dict = model.dictionary();
  auto kernels = nlohmann::json::array();
  for (const auto& spec : dict.specs()) {
    kernels.push_back({{"family", to_string(spec.family)}, {"parameter", spec.parameter}});
  }
  return {
      {"format", "graphkern-model"},
      {"version", kModelVersion},
      {"alpha", model.regularization().alpha},
      {"beta", model.regularization().beta},
      {"num_nodes", model.psi().cols()},
      {"kernels", std::move(kernels)},
      {"rho", std::vector<double>(model.rho().data(), model.rho().data() + model.rho().size())},
      {"training_inputs", matrix_to_json(dict.inputs())},
      {"psi", matrix_to_json(model.psi())},
  };
}

LoadedModel model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "graphkern-model") {
      throw Error(ErrorCode::ParseError, "not a graphkern model file");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelVersion) {
      throw Error(ErrorCode::ParseError, "unsupported model version " + std::to_string(version));
    }
    std::vector<KernelSpec> specs;
    for (const auto& k : doc.at("kernels")) {
      specs.push_back({kernel_family_from_string(k.at("family").get<std::string>()),
                       k.at("parameter").get<double>()});
    }
    LoadedModel out;
    out.dict = std::make_shared<const KernelDictionary>(
        KernelDictionary::build(matrix_from_json(doc.at("training_inputs"), "training_inputs"),
                                std::move(specs)));
    const auto rho = doc.at("rho").get<std::vector<double>>();
    out.rho = Eigen::Map<const Eigen::VectorXd>(rho.data(), static_cast<Eigen::Index>(rho.size()));
    out.psi = matrix_from_json(doc.at("psi"), "psi");
    out.reg = {doc.at("alpha").get<double>(), doc.at("beta").get<double>()};
    if (out.rho.size() != out.dict->size() || out.psi.rows() != out.dict->num_samples() ||
        out.psi.cols() != doc.at("num_nodes").get<Eigen::Index>()) {
      throw Error(ErrorCode::ParseError, "model arrays have inconsistent sizes");
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed model file: ") + e.what());
  }
}

Eigen::MatrixXd LoadedModel::predict_rows(const Eigen::MatrixXd& inputs) const {
  return dict->cross_kernel(rho, inputs).transpose() * psi;
}

void save_model(const std::filesystem::path& path, const KrgModel& model) {
  auto out = open_output(path);
  out << model_to_json(model).dump(2) << '\n';
}

LoadedModel load_model(const std::filesystem::path& path) {
  auto in = open_input(path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return model_from_json(doc);
}

nlohmann::json report_to_json(const AggregateReport& report) {
  nlohmann::json methods = nlohmann::json::object();
  for (Method m : kMethods) {
    const auto& s = report.summary(m);
    methods[std::string(to_string(m))] = {
        {"mean_nmse", s.mean}, {"std_nmse", s.stddev}, {"successes", s.successes}};
  }
  auto trials = nlohmann::json::array();
  for (const auto& t : report.trials) {
    nlohmann::json nmse = nlohmann::json::object();
    for (Method m : kMethods) {
      const auto& o = t.outcome(m);
      nmse[std::string(to_string(m))] =
          o.ok ? nlohmann::json(o.nmse) : nlohmann::json{{"error", o.error}};
    }
    trials.push_back({{"seed", t.seed},
                      {"nmse", std::move(nmse)},
                      {"linear_alpha", t.linear_alpha},
                      {"single_alpha", t.single.alpha},
                      {"single_beta", t.single.beta},
                      {"iterations", t.iterations},
                      {"converged", t.converged}});
  }
  const auto& rho = report.representative_rho;
  return {
      {"n_train", report.n_train},
      {"n_realizations", report.n_realizations},
      {"methods", std::move(methods)},
      {"mean_iterations", report.mean_iterations},
      {"converged_fraction", report.converged_fraction},
      {"kernel_parameters", report.kernel_parameters},
      {"representative_rho", std::vector<double>(rho.data(), rho.data() + rho.size())},
      {"trials", std::move(trials)},
  };
}

}  // namespace graphkern::io
