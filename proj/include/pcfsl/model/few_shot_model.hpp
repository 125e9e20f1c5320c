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

#include <memory>
#include <string>
#include <vector>

#include "pcfsl/model/backbone.hpp"
#include "pcfsl/model/cif_plus.hpp"
#include "pcfsl/model/metric_head.hpp"
#include "pcfsl/model/sci_plus.hpp"
#include "pcfsl/model/spf.hpp"

namespace pcfsl {

struct ModelOptions {
  BackboneOptions backbone;
  bool spf_enabled = true;
  SpfOptions spf;
  bool sci_enabled = true;
  SciOptions sci;
  bool cif_enabled = true;
  CifOptions cif;
  /// Run the cross-instance module at evaluation time too; when false the
  /// evaluation graph skips it.
  bool cif_transductive_test = true;
  Metric metric = Metric::kSqEuclid;
  Real tau_init = 10.0;
  int n_way = 5;
  int k_shot = 1;
};

/// One episode's point clouds, already sampled to a common size, stacked
/// class-major: support rows first (n_way*k_shot clouds), then queries.
struct EpisodeBatch {
  Matrix xyz;  // (support + query clouds) * points x 3
  int points = 0;
  int support_clouds = 0;
  int query_clouds = 0;
  std::vector<int> query_labels;
};

/// Intermediate features of one forward pass.
struct EpisodeFeatures {
  Matrix global;            // per-cloud descriptors, support then query
  Matrix prototypes;        // before the interaction modules
  Matrix queries;
  Matrix final_prototypes;  // as scored by the head
  Matrix final_queries;
  Matrix logits;
};

struct StepResult {
  Real loss = 0.0;
  Real accuracy = 0.0;
};

/// Backbone -> salient-part fusion (or max pooling) -> prototypes ->
/// self-channel interaction -> cross-instance fusion -> metric head.
class FewShotModel {
 public:
  FewShotModel(const ModelOptions& options, std::uint64_t seed);
  ~FewShotModel();
  FewShotModel(const FewShotModel&) = delete;
  FewShotModel& operator=(const FewShotModel&) = delete;

  EpisodeFeatures forward(const EpisodeBatch& batch, Mode mode);
  /// Forward in training mode, loss, backward. Gradients are accumulated into
  /// the registry; the caller zeroes them and steps the optimizer.
  StepResult train_step(const EpisodeBatch& batch);

  const ModelOptions& options() const { return options_; }
  ParamRegistry& params() { return registry_; }
  const ParamRegistry& params() const { return registry_; }

  Backbone backbone;
  SalientPartFusion spf;
  SelfChannelInteraction sci;
  CrossInstanceFusion cif;
  MetricHead head;

 private:
  struct Caches;
  EpisodeFeatures run(const EpisodeBatch& batch, Mode mode, Caches* caches);

  ModelOptions options_;
  ParamRegistry registry_;
};

}  // namespace pcfsl
