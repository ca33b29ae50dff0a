#ifndef CLR_IO_HPP
#define CLR_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "clr/optimizer.hpp"
#include "clr/types.hpp"

namespace clr::io {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

struct Table {
  std::vector<std::string> header;
  Eigen::MatrixXd values;  // rows x header.size()
};

/// Comma-separated, header row first, every cell a decimal number. A
/// zero-byte file yields an empty table. Throws MalformedInput naming the
/// file and line.
Table read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);

/// Foreground (features + response column) and background (features only).
/// Feature columns must agree by name and order; ShapeMismatch otherwise.
/// An empty background path or a zero-byte file means m = 0.
Dataset<double> read_dataset(const std::string& foreground_path,
                             const std::string& background_path,
                             const std::string& response_col);

void write_dataset(const Dataset<double>& data,
                   const std::string& foreground_path,
                   const std::string& background_path,
                   const std::string& response_col = "r");

// ModelFile (schema_version 1): a fitted or ground-truth model as JSON.
struct ModelFile {
  static constexpr int kSchemaVersion = 1;
  ModelParams<double> params;
  Eigen::VectorXd center_x;
  double center_r = 0;
  double alpha = 1;
  std::uint64_t seed = 0;
  int iterations = 0;
  double final_ll = 0;
  bool converged = false;
  std::vector<std::string> feature_names;  // optional

  static ModelFile from_fit(const FitResult& fit,
                            std::vector<std::string> feature_names = {});
  /// Zero centering, for ground-truth parameters.
  static ModelFile from_params(const ModelParams<double>& params,
                               std::vector<std::string> feature_names = {});
  FitResult to_fit_result() const;
};

std::string model_to_string(const ModelFile& model);
ModelFile model_from_string(const std::string& text,
                            const std::string& origin = "<string>");
void write_model(const std::string& path, const ModelFile& model);
ModelFile read_model(const std::string& path);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace clr::io

#endif  // CLR_IO_HPP
