#include "clr/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "json.hpp"

namespace clr::io {

using json = nlohmann::ordered_json;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(
        start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
    return s.substr(1, s.size() - 2);
  return s;
}

[[noreturn]] void malformed(const std::string& path, std::size_t line,
                            const std::string& what) {
  throw MalformedInput(path + ":" + std::to_string(line) + ": " + what);
}

json matrix_to_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::MatrixXd matrix_from_json(const json& j, Index rows, Index cols,
                                 const char* name) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows)
    throw MalformedInput(std::string(name) + " must have " +
                         std::to_string(rows) + " rows");
  Eigen::MatrixXd M(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw MalformedInput(std::string(name) + " row " + std::to_string(i) +
                           " must have " + std::to_string(cols) + " entries");
    for (Index c = 0; c < cols; ++c)
      M(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return M;
}

Eigen::VectorXd vector_from_json(const json& j, Index size, const char* name) {
  if (!j.is_array() || static_cast<Index>(j.size()) != size)
    throw MalformedInput(std::string(name) + " must have " +
                         std::to_string(size) + " entries");
  Eigen::VectorXd v(size);
  for (Index i = 0; i < size; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedInput(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw MalformedInput(path + ": cannot open file for writing");
  out << text;
  if (!out) throw MalformedInput(path + ": write failed");
}

Table read_csv(const std::string& path) {
  const std::string text = read_text(path);
  Table table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      if (line_no == 1) malformed(path, line_no, "empty header row");
      continue;
    }
    std::vector<std::string> cells = split_line(line);
    if (line_no == 1) {
      for (auto& c : cells) table.header.push_back(unquote(std::move(c)));
      continue;
    }
    if (cells.size() != table.header.size())
      malformed(path, line_no,
                "expected " + std::to_string(table.header.size()) +
                    " columns, found " + std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      const char* begin = cell.data();
      if (!cell.empty() && cell.front() == '+') ++begin;
      const char* end = cell.data() + cell.size();
      const auto res = std::from_chars(begin, end, row[c]);
      if (cell.empty() || res.ec != std::errc() || res.ptr != end ||
          !std::isfinite(row[c]))
        malformed(path, line_no,
                  "column '" + table.header[c] + "': '" + cell +
                      "' is not a finite decimal number");
    }
    rows.push_back(std::move(row));
  }
  table.values.resize(static_cast<Index>(rows.size()),
                      static_cast<Index>(table.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < rows[i].size(); ++c)
      table.values(static_cast<Index>(i), static_cast<Index>(c)) = rows[i][c];
  return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
  if (static_cast<Index>(header.size()) != values.cols())
    throw ShapeMismatch("header and value column counts differ");
  std::string text;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) text += ',';
    text += header[c];
  }
  text += '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index c = 0; c < values.cols(); ++c) {
      if (c) text += ',';
      text += format_double(values(i, c));
    }
    text += '\n';
  }
  write_text(path, text);
}

Dataset<double> read_dataset(const std::string& foreground_path,
                             const std::string& background_path,
                             const std::string& response_col) {
  const Table fg = read_csv(foreground_path);
  if (fg.header.empty()) throw MalformedInput(foreground_path + ": empty file");
  Index response_idx = -1;
  for (std::size_t c = 0; c < fg.header.size(); ++c)
    if (fg.header[c] == response_col) {
      if (response_idx >= 0)
        throw MalformedInput(foreground_path + ":1: response column '" +
                             response_col + "' appears twice");
      response_idx = static_cast<Index>(c);
    }
  if (response_idx < 0)
    throw MalformedInput(foreground_path + ":1: no column named '" +
                         response_col + "'");

  Dataset<double> data;
  const Index p = static_cast<Index>(fg.header.size()) - 1;
  data.X.resize(fg.values.rows(), p);
  for (Index c = 0, out = 0; c < static_cast<Index>(fg.header.size()); ++c) {
    if (c == response_idx) continue;
    data.X.col(out++) = fg.values.col(c);
    data.feature_names.push_back(fg.header[static_cast<std::size_t>(c)]);
  }
  data.r = fg.values.col(response_idx);

  data.Y.resize(0, p);
  if (!background_path.empty()) {
    const Table bg = read_csv(background_path);
    if (!bg.header.empty()) {
      if (bg.header != data.feature_names)
        throw ShapeMismatch(
            "background feature columns differ from foreground features "
            "(by name or order): " +
            background_path);
      data.Y = bg.values;
    }
  }
  return data;
}

void write_dataset(const Dataset<double>& data,
                   const std::string& foreground_path,
                   const std::string& background_path,
                   const std::string& response_col) {
  std::vector<std::string> names = data.feature_names;
  if (names.empty())
    for (Index j = 0; j < data.p(); ++j) names.push_back("f" + std::to_string(j));
  std::vector<std::string> fg_header = names;
  fg_header.push_back(response_col);
  Eigen::MatrixXd fg(data.n(), data.p() + 1);
  fg << data.X, data.r;
  write_csv(foreground_path, fg_header, fg);
  write_csv(background_path, names, data.Y);
}

ModelFile ModelFile::from_fit(const FitResult& fit,
                              std::vector<std::string> feature_names) {
  ModelFile out;
  out.params = fit.params;
  out.center_x = fit.center_x;
  out.center_r = fit.center_r;
  out.alpha = fit.alpha;
  out.seed = fit.seed;
  out.iterations = fit.iterations;
  out.final_ll = fit.final_ll;
  out.converged = fit.converged;
  out.feature_names = std::move(feature_names);
  return out;
}

ModelFile ModelFile::from_params(const ModelParams<double>& params,
                                 std::vector<std::string> feature_names) {
  ModelFile out;
  out.params = params;
  out.center_x = Eigen::VectorXd::Zero(params.p());
  out.feature_names = std::move(feature_names);
  return out;
}

FitResult ModelFile::to_fit_result() const {
  FitResult fit;
  fit.params = params;
  fit.center_x = center_x;
  fit.center_r = center_r;
  fit.alpha = alpha;
  fit.seed = seed;
  fit.iterations = iterations;
  fit.final_ll = final_ll;
  fit.converged = converged;
  return fit;
}

std::string model_to_string(const ModelFile& model) {
  json j;
  j["schema_version"] = ModelFile::kSchemaVersion;
  j["p"] = model.params.p();
  j["d"] = model.params.d();
  j["S"] = matrix_to_json(model.params.S);
  j["W"] = matrix_to_json(model.params.W);
  j["beta"] = vector_to_json(model.params.beta);
  j["sigma2"] = model.params.sigma2;
  j["tau2"] = model.params.tau2;
  j["center_x"] = vector_to_json(model.center_x);
  j["center_r"] = model.center_r;
  j["alpha"] = model.alpha;
  j["fit"] = {{"seed", model.seed},
              {"iterations", model.iterations},
              {"final_ll", model.final_ll},
              {"converged", model.converged}};
  if (!model.feature_names.empty()) j["feature_names"] = model.feature_names;
  return j.dump(2) + "\n";
}

ModelFile model_from_string(const std::string& text, const std::string& origin) {
  try {
    const json j = json::parse(text);
    if (j.at("schema_version").get<int>() != ModelFile::kSchemaVersion)
      throw MalformedInput(origin + ": unsupported schema_version");
    const Index p = j.at("p").get<Index>();
    const Index d = j.at("d").get<Index>();
    if (p < 1 || d < 1 || d > p)
      throw MalformedInput(origin + ": invalid (p, d)");
    ModelFile model;
    model.params.S = matrix_from_json(j.at("S"), p, d, "S");
    model.params.W = matrix_from_json(j.at("W"), p, d, "W");
    model.params.beta = vector_from_json(j.at("beta"), d, "beta");
    model.params.sigma2 = j.at("sigma2").get<double>();
    model.params.tau2 = j.at("tau2").get<double>();
    model.center_x = vector_from_json(j.at("center_x"), p, "center_x");
    model.center_r = j.at("center_r").get<double>();
    model.alpha = j.at("alpha").get<double>();
    const json& meta = j.at("fit");
    model.seed = meta.at("seed").get<std::uint64_t>();
    model.iterations = meta.at("iterations").get<int>();
    model.final_ll = meta.at("final_ll").get<double>();
    model.converged = meta.at("converged").get<bool>();
    if (j.contains("feature_names")) {
      model.feature_names = j["feature_names"].get<std::vector<std::string>>();
      if (static_cast<Index>(model.feature_names.size()) != p)
        throw MalformedInput(origin + ": feature_names must have p entries");
    }
    // Truth files may be noiseless; consumers that need P > 0 check again.
    model.params.validate_shapes();
    if (model.params.sigma2 < 0 || model.params.tau2 < 0)
      throw MalformedInput(origin + ": variances must be nonnegative");
    return model;
  } catch (const json::exception& e) {
    throw MalformedInput(origin + ": " + e.what());
  } catch (const InvalidParams& e) {
    throw MalformedInput(origin + ": " + e.what());
  } catch (const ShapeMismatch& e) {
    throw MalformedInput(origin + ": " + e.what());
  }
}

void write_model(const std::string& path, const ModelFile& model) {
  write_text(path, model_to_string(model));
}

ModelFile read_model(const std::string& path) {
  return model_from_string(read_text(path), path);
}

}  // namespace clr::io
