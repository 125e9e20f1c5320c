/*
 * Copyright 2026 The pcfsl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pcfsl/harness/report.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace pcfsl {
namespace {

std::string toggles(const AblationRow& r) {
  return std::string(r.spf ? "SPF " : "    ") + (r.sci ? "SCI+ " : "     ") + (r.cif ? "CIF+" : "    ");
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

}  // namespace

std::vector<AblationRow> ablation_rows(const std::vector<EvalReport>& reports) {
  std::vector<AblationRow> rows;
  for (const auto& r : reports)
    rows.push_back({r.spf, r.sci, r.cif, r.label, r.mean, r.ci95, r.accuracies.size()});
  std::stable_sort(rows.begin(), rows.end(), [](const AblationRow& a, const AblationRow& b) {
    return std::tie(a.spf, a.sci, a.cif, a.label) < std::tie(b.spf, b.sci, b.cif, b.label);
  });
  return rows;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "modules            label            accuracy (%)       episodes\n";
  os << std::fixed << std::setprecision(2);
  for (const auto& r : rows)
    os << std::left << std::setw(19) << toggles(r) << std::setw(17) << r.label << std::right << std::setw(6) << r.mean
       << " +- " << std::setw(5) << r.ci95 << std::setw(15) << r.episodes << '\n';
  return os.str();
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "spf,sci,cif,label,mean,ci95,episodes\n" << std::setprecision(17);
  for (const auto& r : rows)
    os << r.spf << ',' << r.sci << ',' << r.cif << ',' << r.label << ',' << r.mean << ',' << r.ci95 << ','
       << r.episodes << '\n';
  return os.str();
}

std::vector<AblationRow> parse_ablation_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "spf,sci,cif,label,mean,ci95,episodes")
    fail(ErrorCode::kFormat, "ablation csv: bad header");
  std::vector<AblationRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) fail(ErrorCode::kFormat, "ablation csv: bad row");
    rows.push_back({f[0] == "1", f[1] == "1", f[2] == "1", f[3], std::stod(f[4]), std::stod(f[5]),
                    static_cast<std::size_t>(std::stoull(f[6]))});
  }
  return rows;
}

EmbeddingSet episode_embeddings(FewShotModel& model, const EpisodeBatch& batch,
                                const std::vector<std::string>& class_map) {
  const EpisodeFeatures f = model.forward(batch, Mode::kEval);
  EmbeddingSet set;
  set.features = f.final_queries;
  for (int y : batch.query_labels) set.labels.push_back(class_map[static_cast<std::size_t>(y)]);
  return set;
}

Matrix pca_project(const Matrix& features, int dims) {
  require(dims >= 1 && dims <= features.cols(), ErrorCode::kInvalidArgument, "pca: bad dimension count");
  if (features.rows() == 0) return Matrix(0, dims);
  const Matrix centered = features.rowwise() - features.colwise().mean();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / std::max<Eigen::Index>(1, features.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // Eigenvalues ascend; take the last `dims` columns, largest first.
  Matrix basis(features.cols(), dims);
  for (int i = 0; i < dims; ++i) basis.col(i) = eig.eigenvectors().col(features.cols() - 1 - i);
  // Fix the sign so the largest-magnitude loading is positive.
  for (int i = 0; i < dims; ++i) {
    Eigen::Index r;
    basis.col(i).cwiseAbs().maxCoeff(&r);
    if (basis(r, i) < 0) basis.col(i) *= -1.0;
  }
  return centered * basis;
}

void write_embeddings_csv(const EmbeddingSet& set, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << "label";
  for (Eigen::Index c = 0; c < set.features.cols(); ++c) out << ",f" << c;
  out << '\n' << std::setprecision(10);
  for (Eigen::Index r = 0; r < set.features.rows(); ++r) {
    out << set.labels[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < set.features.cols(); ++c) out << ',' << set.features(r, c);
    out << '\n';
  }
}

EmbeddingSet read_embeddings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kNotFound, "embeddings not found: " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kFormat, path.string() + ": empty");
  const std::size_t cols = split(line, ',').size() - 1;
  std::vector<std::vector<double>> rows;
  EmbeddingSet set;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != cols + 1) fail(ErrorCode::kFormat, path.string() + ": ragged row");
    set.labels.push_back(f[0]);
    std::vector<double> v;
    for (std::size_t i = 1; i < f.size(); ++i) v.push_back(std::stod(f[i]));
    rows.push_back(std::move(v));
  }
  set.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c) set.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return set;
}

std::string scatter_svg(const Matrix& points2d, const std::vector<std::string>& labels, const std::string& title) {
  static constexpr std::array<const char*, 10> kColors = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  const double w = 480, h = 480, pad = 40;
  std::map<std::string, std::size_t> color_of;
  for (const auto& l : labels) color_of.emplace(l, color_of.size());
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (points2d.rows() > 0) {
    x0 = points2d.col(0).minCoeff();
    x1 = points2d.col(0).maxCoeff();
    y0 = points2d.col(1).minCoeff();
    y1 = points2d.col(1).maxCoeff();
  }
  const double sx = (w - 2 * pad) / std::max(x1 - x0, 1e-12), sy = (h - 2 * pad) / std::max(y1 - y0, 1e-12);
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h + 20 * color_of.size()
     << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << pad << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  for (Eigen::Index i = 0; i < points2d.rows(); ++i) {
    const double x = pad + (points2d(i, 0) - x0) * sx, y = h - pad - (points2d(i, 1) - y0) * sy;
    os << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"3\" fill=\""
       << kColors[color_of[labels[static_cast<std::size_t>(i)]] % kColors.size()] << "\"/>\n";
  }
  for (const auto& [label, idx] : color_of) {
    const double y = h + 20.0 * static_cast<double>(idx);
    os << "<circle cx=\"" << pad << "\" cy=\"" << y - 4 << "\" r=\"4\" fill=\"" << kColors[idx % kColors.size()]
       << "\"/><text x=\"" << pad + 10 << "\" y=\"" << y << "\" font-family=\"sans-serif\" font-size=\"12\">" << label
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::size_t write_report_dir(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir) {
  if (!std::filesystem::is_directory(in_dir)) fail(ErrorCode::kNotFound, "report input not found: " + in_dir.string());
  std::vector<std::filesystem::path> evals, embeddings;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(in_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() > 9 && name.ends_with(".eval.csv")) evals.push_back(entry.path());
    if (name.starts_with("embeddings") && name.ends_with(".csv") && !name.ends_with(".pca.csv"))
      embeddings.push_back(entry.path());
  }
  std::sort(evals.begin(), evals.end());
  std::sort(embeddings.begin(), embeddings.end());
  std::vector<EvalReport> reports;
  for (const auto& p : evals) {
    EvalReport r = read_report(p);
    // Label rows by their path relative to the input so folds stay distinct.
    std::string rel = std::filesystem::relative(p, in_dir).string();
    rel.resize(rel.size() - std::string(".eval.csv").size());
    r.label = rel;
    reports.push_back(std::move(r));
  }
  std::filesystem::create_directories(out_dir);
  const auto rows = ablation_rows(reports);
  std::ofstream(out_dir / "ablation.txt", std::ios::trunc) << format_ablation_table(rows);
  std::ofstream(out_dir / "ablation.csv", std::ios::trunc) << ablation_csv(rows);
  for (const auto& p : embeddings) {
    const EmbeddingSet set = read_embeddings_csv(p);
    if (set.features.rows() == 0 || set.features.cols() < 2) continue;
    EmbeddingSet projected{pca_project(set.features, 2), set.labels};
    const std::string stem = p.stem().string();
    write_embeddings_csv(projected, out_dir / (stem + ".pca.csv"));
    std::ofstream(out_dir / (stem + ".svg"), std::ios::trunc) << scatter_svg(projected.features, set.labels, stem);
  }
  return reports.size();
}

}  // namespace pcfsl
