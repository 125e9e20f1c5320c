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

#include "pcfsl/model/few_shot_model.hpp"

#include <cmath>

namespace pcfsl {

struct FewShotModel::Caches {
  BackboneCache backbone;
  SpfCache spf;
  IndexMatrix pool_argmax;
  SciCache sci;
  CifCache cif;
};

FewShotModel::FewShotModel(const ModelOptions& options, std::uint64_t seed) : options_(options) {
  require(options.n_way >= 2 && options.k_shot >= 1, ErrorCode::kConfig, "model: n_way >= 2 and k_shot >= 1 required");
  Rng rng(derive_seed(seed, seed_tag::kInit));
  backbone = Backbone(options.backbone, rng);
  const int d = backbone.output_dim();
  if (options.spf_enabled) spf = SalientPartFusion(d, options.spf, rng);
  if (options.sci_enabled) sci = SelfChannelInteraction(options.n_way, options.sci, rng);
  if (options.cif_enabled) cif = CrossInstanceFusion(options.n_way, options.cif, rng);
  head = MetricHead(options.metric, options.tau_init);

  backbone.register_params(registry_, "backbone");
  if (options.spf_enabled) spf.register_params(registry_, "spf");
  if (options.sci_enabled) sci.register_params(registry_, "sci");
  if (options.cif_enabled) cif.register_params(registry_, "cif");
  head.register_params(registry_, "head");
}

FewShotModel::~FewShotModel() = default;

EpisodeFeatures FewShotModel::run(const EpisodeBatch& batch, Mode mode, Caches* c) {
  const int clouds = batch.support_clouds + batch.query_clouds;
  require(batch.points > 0 && batch.xyz.rows() == static_cast<Eigen::Index>(clouds) * batch.points &&
              batch.xyz.cols() == 3,
          ErrorCode::kInvalidArgument, "episode batch: xyz shape does not match cloud counts");
  require(batch.support_clouds == options_.n_way * options_.k_shot, ErrorCode::kConfig,
          "episode batch: support size does not match the model's n_way * k_shot");

  EpisodeFeatures f;
  const Matrix fmap = backbone.forward(batch.xyz, clouds, mode, c ? &c->backbone : nullptr);
  if (options_.spf_enabled)
    f.global = spf.forward(fmap, clouds, &batch.xyz, mode, c ? &c->spf : nullptr);
  else
    f.global = global_max_pool(fmap, clouds, c ? &c->pool_argmax : nullptr);

  f.prototypes = prototypes_from_support(f.global.topRows(batch.support_clouds), options_.n_way, options_.k_shot);
  f.queries = f.global.bottomRows(batch.query_clouds);

  Matrix p = f.prototypes, q = f.queries;
  if (options_.sci_enabled) {
    Matrix p2, q2;
    sci.forward(p, q, p2, q2, c ? &c->sci : nullptr);
    p = std::move(p2);
    q = std::move(q2);
  }
  const bool run_cif = options_.cif_enabled && (mode == Mode::kTrain || options_.cif_transductive_test);
  if (run_cif) {
    Matrix p2, q2;
    cif.forward(p, q, p2, q2, c ? &c->cif : nullptr);
    p = std::move(p2);
    q = std::move(q2);
  }
  f.final_prototypes = std::move(p);
  f.final_queries = std::move(q);
  f.logits = head.forward(f.final_queries, f.final_prototypes);
  return f;
}

EpisodeFeatures FewShotModel::forward(const EpisodeBatch& batch, Mode mode) { return run(batch, mode, nullptr); }

StepResult FewShotModel::train_step(const EpisodeBatch& batch) {
  Caches c;
  const EpisodeFeatures f = run(batch, Mode::kTrain, &c);
  StepResult r;
  r.loss = episode_loss(f.logits, batch.query_labels);
  if (!std::isfinite(r.loss)) fail(ErrorCode::kNumeric, "non-finite training loss");
  const std::vector<int> pred = predict(f.logits);
  int correct = 0;
  for (std::size_t j = 0; j < pred.size(); ++j) correct += pred[j] == batch.query_labels[j];
  r.accuracy = static_cast<Real>(correct) / static_cast<Real>(pred.size());

  const Matrix dlogits = episode_loss_backward(f.logits, batch.query_labels);
  ScoreGrad g = head.backward(f.final_queries, f.final_prototypes, dlogits);
  Matrix dp = std::move(g.dprototypes), dq = std::move(g.dqueries);
  if (options_.cif_enabled) {
    Matrix dp2, dq2;
    cif.backward(c.cif, dp, dq, dp2, dq2);
    dp = std::move(dp2);
    dq = std::move(dq2);
  }
  if (options_.sci_enabled) {
    Matrix dp2, dq2;
    sci.backward(c.sci, dp, dq, dp2, dq2);
    dp = std::move(dp2);
    dq = std::move(dq2);
  }
  Matrix dglobal(f.global.rows(), f.global.cols());
  dglobal.topRows(batch.support_clouds) = prototypes_backward(dp, options_.k_shot);
  dglobal.bottomRows(batch.query_clouds) = dq;

  const Matrix dfmap = options_.spf_enabled ? spf.backward(c.spf, dglobal)
                                            : global_max_pool_backward(c.pool_argmax, batch.points, dglobal);
  backbone.backward(c.backbone, dfmap);
  return r;
}

}  // namespace pcfsl
