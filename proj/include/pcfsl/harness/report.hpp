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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pcfsl/harness/evaluator.hpp"

namespace pcfsl {

struct AblationRow {
  bool spf = false, sci = false, cif = false;
  std::string label;
  double mean = 0.0;  // percent
  double ci95 = 0.0;
  std::size_t episodes = 0;
};

/// One row per report, sorted by module toggles then label.
std::vector<AblationRow> ablation_rows(const std::vector<EvalReport>& reports);
std::string format_ablation_table(const std::vector<AblationRow>& rows);
std::string ablation_csv(const std::vector<AblationRow>& rows);
std::vector<AblationRow> parse_ablation_csv(const std::string& text);

/// Feature vectors with their episode class labels, one row per vector.
struct EmbeddingSet {
  Matrix features;
  std::vector<std::string> labels;
};

/// Query features of one evaluation-mode episode after every enabled module.
EmbeddingSet episode_embeddings(FewShotModel& model, const EpisodeBatch& batch, const std::vector<std::string>& class_map);

/// Principal-component projection to `dims` columns (centered).
Matrix pca_project(const Matrix& features, int dims);

void write_embeddings_csv(const EmbeddingSet& set, const std::filesystem::path& path);
EmbeddingSet read_embeddings_csv(const std::filesystem::path& path);
/// Scatter plot of a two-column projection colored by label.
std::string scatter_svg(const Matrix& points2d, const std::vector<std::string>& labels, const std::string& title);

/// Collects every *.eval.csv under `in_dir`, writes ablation.txt and
/// ablation.csv to `out_dir`, and for every embeddings*.csv writes a PCA
/// projection (<name>.pca.csv) and scatter plot (<name>.svg).
/// Returns the number of reports found.
std::size_t write_report_dir(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir);

}  // namespace pcfsl
