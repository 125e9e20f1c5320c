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

#include "pcfsl/verify/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>

#include "pcfsl/data/benchmark.hpp"
#include "pcfsl/data/episode.hpp"
#include "pcfsl/data/sampling.hpp"
#include "pcfsl/data/toy.hpp"
#include "pcfsl/harness/config.hpp"
#include "pcfsl/harness/evaluator.hpp"
#include "pcfsl/harness/experiment_data.hpp"
#include "pcfsl/harness/trainer.hpp"
#include "pcfsl/model/few_shot_model.hpp"
#include "pcfsl/model/knn.hpp"
#include "pcfsl/verify/gradcheck.hpp"
#include "pcfsl/verify/oracles.hpp"

namespace pcfsl {

bool SuiteResult::passed() const { return failures() == 0 && !checks.empty(); }

std::size_t SuiteResult::failures() const {
  return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.passed; }));
}

namespace {

using Clock = std::chrono::steady_clock;

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Matrix unit_ball(Eigen::Index rows, Rng& rng) {
  Matrix m = gaussian(rows, 3, rng);
  for (Eigen::Index i = 0; i < rows; ++i) m.row(i) *= std::cbrt(uniform01(rng)) / m.row(i).norm();
  return m;
}

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

double max_rel_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double x = a.data()[i], y = b.data()[i];
    worst = std::max(worst, std::abs(x - y) / std::max({1.0, std::abs(x), std::abs(y)}));
  }
  return worst;
}

std::vector<double> to_vector(const Param& p) { return {p.value.data(), p.value.data() + p.value.size()}; }

void randomize_norm(BatchNorm& norm, Rng& rng) {
  std::uniform_real_distribution<double> g(-1.5, 1.5), b(-0.5, 0.5);
  for (Eigen::Index i = 0; i < norm.gamma.value.size(); ++i) {
    norm.gamma.value(0, i) = g(rng);
    norm.beta.value(0, i) = b(rng);
  }
}

oracle::NormParams norm_params(const BatchNorm& norm) { return {to_vector(norm.gamma), to_vector(norm.beta), norm.eps()}; }

std::vector<int> random_permutation(int n, Rng& rng) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

Matrix permute_rows(const Matrix& m, const std::vector<int>& perm) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(perm[i]);
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

/// Runs `body`, turning exceptions into a failed check.
template <class F>
void add_check(SuiteResult& suite, const std::string& name, F&& body) {
  CheckResult r;
  r.name = name;
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  suite.checks.push_back(std::move(r));
}

// ---------------------------------------------------------------- invariants

void data_invariants(SuiteResult& suite, Rng& rng) {
  add_check(suite, "split.disjoint", [&](CheckResult& r) {
    int splits = 0;
    for (Benchmark b : {Benchmark::kModelNet40FS, Benchmark::kShapeNet70FS, Benchmark::kScanObjectNNFS, Benchmark::kToy})
      for (int fold = 0; fold < (b == Benchmark::kScanObjectNNFS ? 3 : 1); ++fold) {
        const BenchmarkSplit s = make_split(b, fold);
        const std::set<std::string> train(s.train_classes.begin(), s.train_classes.end());
        for (const auto& c : s.test_classes)
          if (train.count(c)) {
            r.detail = std::string(benchmark_name(b)) + " shares class " + c;
            return;
          }
        ++splits;
      }
    r.passed = true;
    r.detail = std::to_string(splits) + " splits";
  });

  ToyParams toy;
  toy.instances_per_class = 24;
  toy.points_per_instance = 64;
  const auto instances = generate_toy(toy);

  add_check(suite, "episode.composition", [&](CheckResult& r) {
    const ClassPool pool = make_pool(instances);
    const EpisodeSpec spec{5, 2, 6};
    for (int e = 0; e < 100; ++e) {
      const Episode ep = sample_episode(pool, spec, rng);
      std::vector<int> support_count(5, 0), query_count(5, 0);
      std::set<std::string> support_ids;
      for (std::size_t i = 0; i < ep.support.size(); ++i) {
        ++support_count[static_cast<std::size_t>(ep.support_labels[i])];
        if (ep.support_labels[i] != static_cast<int>(i) / spec.k_shot) return;
        support_ids.insert(instances[ep.support[i]].source_id);
      }
      for (std::size_t i = 0; i < ep.query.size(); ++i) {
        ++query_count[static_cast<std::size_t>(ep.query_labels[i])];
        if (support_ids.count(instances[ep.query[i]].source_id)) {
          r.detail = "support and query share an instance";
          return;
        }
      }
      for (int c = 0; c < 5; ++c)
        if (support_count[static_cast<std::size_t>(c)] != spec.k_shot || query_count[static_cast<std::size_t>(c)] != spec.q_query) {
          r.detail = "wrong per-class counts";
          return;
        }
    }
    r.passed = true;
    r.detail = "100 episodes";
  });

  add_check(suite, "sampling.reproducible", [&](CheckResult& r) {
    const PointCloud& cloud = instances.front().cloud;
    Rng a(99), b(99);
    const PointCloud x = sample_points(cloud, 48, a), y = sample_points(cloud, 48, b);
    std::set<std::tuple<float, float, float>> rows;
    for (Eigen::Index i = 0; i < x.points.rows(); ++i) rows.insert({x.points(i, 0), x.points(i, 1), x.points(i, 2)});
    r.passed = x.points == y.points && rows.size() == 48;
    r.detail = r.passed ? "bitwise equal, no repeats" : "mismatch";
  });

  add_check(suite, "folds.near_even", [&](CheckResult& r) {
    const auto folds = partition_folds(instances, 5, 3);
    const ClassPool pool = make_pool(instances);
    std::vector<std::string> label_of(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) label_of[i] = instances[i].label;
    std::size_t total = 0;
    for (const auto& cls : pool.classes) {
      std::vector<std::size_t> sizes;
      for (const auto& f : folds) sizes.push_back(static_cast<std::size_t>(
          std::count_if(f.begin(), f.end(), [&](std::size_t i) { return label_of[i] == cls; })));
      if (*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) > 1) {
        r.detail = "uneven fold sizes for " + cls;
        return;
      }
    }
    for (const auto& f : folds) total += f.size();
    r.passed = total == instances.size();
    r.detail = std::to_string(total) + " instances in 5 folds";
  });
}

void backbone_invariants(SuiteResult& suite, Rng& rng) {
  add_check(suite, "backbone.permutation_equivariance", [&](CheckResult& r) {
    double worst = 0.0, pool_worst = 0.0;
    bool finite = true;
    for (auto variant : {BackboneVariant::kDgcnn, BackboneVariant::kPointNet}) {
      BackboneOptions opt;
      opt.variant = variant;
      opt.k = 6;
      opt.edge_widths = {8, 8, 12, 16};
      opt.embed_dim = 24;
      opt.pointnet_widths = {8, 8, 12, 24};
      Backbone net(opt, rng);
      const Matrix x = unit_ball(40, rng);
      const auto perm = random_permutation(40, rng);
      const Matrix y = net.forward(x, 1, Mode::kTrain, nullptr);
      const Matrix yp = net.forward(permute_rows(x, perm), 1, Mode::kTrain, nullptr);
      finite = finite && y.allFinite();
      worst = std::max(worst, max_rel_diff(permute_rows(y, perm), yp));
      pool_worst = std::max(pool_worst, max_rel_diff(global_max_pool(y, 1, nullptr), global_max_pool(yp, 1, nullptr)));
    }
    r.passed = finite && worst < 1e-5 && pool_worst < 1e-5;
    r.detail = "rows " + fmt(worst) + ", pooled " + fmt(pool_worst);
  });
}

void spf_invariants(SuiteResult& suite, Rng& rng) {
  add_check(suite, "spf.permutation_invariance", [&](CheckResult& r) {
    double worst = 0.0;
    for (auto space : {NeighborhoodSpace::kFeature, NeighborhoodSpace::kCoordinate}) {
      SalientPartFusion spf(8, {5, 4, space}, rng);
      randomize_norm(spf.encoder_norm, rng);
      const Matrix fmap = gaussian(40, 8, rng), coords = unit_ball(40, rng);
      const auto perm = random_permutation(40, rng);
      const Matrix pf = permute_rows(fmap, perm), pc = permute_rows(coords, perm);
      const Matrix a = spf.forward(fmap, 1, &coords, Mode::kTrain, nullptr);
      const Matrix b = spf.forward(pf, 1, &pc, Mode::kTrain, nullptr);
      worst = std::max(worst, max_rel_diff(a, b));
    }
    r.passed = worst < 1e-5;
    r.detail = "max rel diff " + fmt(worst);
  });

  add_check(suite, "spf.scores_and_selection", [&](CheckResult& r) {
    for (int t = 0; t < 50; ++t) {
      Matrix fmap = gaussian(uniform_int(rng, 6, 30), uniform_int(rng, 2, 8), rng);
      if (t % 5 == 0) fmap.row(0).setZero();
      const SpfOptions opt{uniform_int(rng, 1, static_cast<int>(fmap.rows())), 2};
      const SalientPartSet set = select_salient_parts(fmap, coarse_global(fmap), opt, nullptr);
      const auto ref = oracle::salient_scores(fmap);
      std::vector<int> order(ref.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return ref[static_cast<std::size_t>(a)] > ref[static_cast<std::size_t>(b)]; });
      order.resize(static_cast<std::size_t>(opt.k_s));
      for (Eigen::Index i = 0; i < set.scores.size(); ++i)
        if (set.scores(i) < -1.0 || set.scores(i) > 1.0 || std::abs(set.scores(i) - ref[static_cast<std::size_t>(i)]) > 1e-12) {
          r.detail = "score out of range or off the oracle";
          return;
        }
      if (set.selected != order) {
        r.detail = "selection differs from the sort oracle";
        return;
      }
    }
    r.passed = true;
    r.detail = "50 instances";
  });
}

void sci_invariants(SuiteResult& suite, Rng& rng) {
  add_check(suite, "sci.residual_identity", [&](CheckResult& r) {
    SelfChannelInteraction sci(5, {8}, rng);
    sci.meta.weight.value = gaussian(1, 5, rng);
    const Matrix p = gaussian(5, 16, rng, 3.0), q = gaussian(20, 16, rng, 3.0);
    Matrix po, qo;
    sci.forward(p, q, po, qo, nullptr);
    r.passed = po == p && qo == q;
    r.detail = r.passed ? "exact" : "output differs from input";
  });

  SelfChannelInteraction sci(5, {8}, rng);
  sci.block.compress.weight.value = gaussian(1, 8, rng);
  sci.block.compress.bias.value = gaussian(1, 1, rng);

  add_check(suite, "sci.attention_rows", [&](CheckResult& r) {
    double worst = 0.0;
    for (double scale : {0.1, 1.0, 30.0}) {
      CibCache cache;
      sci.block.forward(gaussian(1, 16, rng, scale), gaussian(1, 16, rng, scale), &cache);
      worst = std::max(worst, (cache.attn.rowwise().sum().array() - 1.0).abs().maxCoeff());
      if ((cache.attn.array() < 0).any()) worst = 1.0;
    }
    r.passed = worst < 1e-6;
    r.detail = "max |row sum - 1| " + fmt(worst);
  });

  add_check(suite, "sci.query_independence", [&](CheckResult& r) {
    const Matrix p = gaussian(5, 16, rng);
    Matrix q = gaussian(6, 16, rng);
    Matrix po, qo, po2, qo2;
    sci.forward(p, q, po, qo, nullptr);
    q.row(2) = gaussian(1, 16, rng);
    sci.forward(p, q, po2, qo2, nullptr);
    bool same = po == po2;
    for (Eigen::Index j = 0; j < q.rows(); ++j)
      if (j != 2) same = same && qo.row(j) == qo2.row(j);
    r.passed = same && qo.row(2) != qo2.row(2);
    r.detail = r.passed ? "exact" : "refined query depends on another query";
  });
}

void cif_invariants(SuiteResult& suite, Rng& rng) {
  const int n = 5, nq = 10, d = 12;
  CrossInstanceFusion cif(n, {3, 8}, rng);
  const Matrix p = gaussian(n, d, rng), q = gaussian(nq, d, rng);

  add_check(suite, "cif.convex_hull", [&](CheckResult& r) {
    CifCache cache;
    Matrix po, qo;
    cif.forward(p, q, po, qo, &cache);
    double worst = 0.0;
    auto check_weights = [&](const Matrix& w) {
      if ((w.array() < 0).any()) worst = 1.0;
      worst = std::max(worst, (w.rowwise().sum().array() - 1.0).abs().maxCoeff());
    };
    for (const CifSideCache* side : {&cache.proto_side, &cache.query_side}) {
      check_weights(side->attn);
      for (const auto& uc : side->upper) {
        check_weights(uc.weights);
        // e_u is recovered from its weights: sum over the stack of w * Z.
        const Matrix recomposed = (uc.weights.array() * uc.stack.array()).rowwise().sum();
        const ChannelFuseBranch& branch = side == &cache.proto_side ? cif.proto_branch : cif.query_branch;
        worst = std::max(worst, max_rel_diff(recomposed.transpose(), branch.forward(uc.stack, nullptr)));
      }
    }
    r.passed = worst < 1e-6;
    r.detail = "max weight deviation " + fmt(worst);
  });

  add_check(suite, "cif.transpose_symmetry", [&](CheckResult& r) {
    CifCache cache;
    Matrix po, qo;
    cif.forward(p, q, po, qo, &cache);
    const Matrix swapped = cross_logits(q, p);
    r.passed = swapped == cache.logits.transpose() && cache.query_side.attn == softmax_rows(swapped);
    r.detail = r.passed ? "exact" : "M_qp differs from M_pq^T";
  });

  add_check(suite, "cif.pre_update_snapshot", [&](CheckResult& r) {
    Matrix po, qo;
    cif.forward(p, q, po, qo, nullptr);
    // Two-phase oracle: each side is refined from the raw features only.
    auto refine = [](const ChannelFuseBranch& branch, const Matrix& anchors, const Matrix& pool) {
      Matrix out = anchors + instance_fuse(anchors, pool, nullptr);
      for (Eigen::Index i = 0; i < anchors.rows(); ++i)
        out.row(i) += branch.forward(fusion_stack(anchors.row(i), pool, top_k_similar(anchors.row(i), pool, branch.k1())), nullptr);
      return out;
    };
    const Matrix p_ref = refine(cif.proto_branch, p, q);
    const Matrix q_ref = refine(cif.query_branch, q, p);
    const Matrix q_sequential = refine(cif.query_branch, q, p_ref);
    r.passed = max_rel_diff(po, p_ref) < 1e-12 && max_rel_diff(qo, q_ref) < 1e-12 && max_rel_diff(qo, q_sequential) > 1e-6;
    r.detail = "raw-feature oracle diff " + fmt(std::max(max_rel_diff(po, p_ref), max_rel_diff(qo, q_ref)));
  });

  add_check(suite, "cif.query_independence", [&](CheckResult& r) {
    Matrix po, qo, po2, qo2;
    cif.forward(p, q, po, qo, nullptr);
    Matrix q2 = q;
    q2.row(4) += gaussian(1, d, rng);
    cif.forward(p, q2, po2, qo2, nullptr);
    bool same = true;
    for (Eigen::Index j = 0; j < nq; ++j)
      if (j != 4) same = same && qo.row(j) == qo2.row(j);
    r.passed = same;
    r.detail = same ? "exact" : "refined query depends on another query";
  });
}

void head_invariants(SuiteResult& suite, Rng& rng) {
  add_check(suite, "head.softmax_and_loss", [&](CheckResult& r) {
    double worst = 0.0;
    bool ok = true;
    for (int t = 0; t < 50; ++t) {
      const int n = uniform_int(rng, 2, 10), rows = uniform_int(rng, 1, 12);
      const Matrix logits = gaussian(rows, n, rng, t % 2 ? 40.0 : 1.0);
      std::vector<int> labels(static_cast<std::size_t>(rows));
      for (auto& l : labels) l = uniform_int(rng, 0, n - 1);
      worst = std::max(worst, (softmax_rows(logits).rowwise().sum().array() - 1.0).abs().maxCoeff());
      ok = ok && episode_loss(logits, labels) >= 0.0;
      const Matrix flat = Matrix::Constant(rows, n, 0.0) + gaussian(rows, 1, rng).replicate(1, n);
      ok = ok && std::abs(episode_loss(flat, labels) - std::log(static_cast<double>(n))) < 1e-12;
      ok = ok && std::abs(episode_loss(logits, labels) - std::log(static_cast<double>(n))) > 1e-9;
    }
    r.passed = ok && worst < 1e-6;
    r.detail = "max |row sum - 1| " + fmt(worst);
  });

  add_check(suite, "head.shift_invariance", [&](CheckResult& r) {
    double worst = 0.0;
    bool same_pred = true;
    for (int t = 0; t < 50; ++t) {
      const Matrix logits = gaussian(8, 5, rng, 5.0);
      const Matrix shifted = logits + gaussian(8, 1, rng, 100.0).replicate(1, 5);
      std::vector<int> labels(8);
      for (auto& l : labels) l = uniform_int(rng, 0, 4);
      worst = std::max({worst, std::abs(episode_loss(logits, labels) - episode_loss(shifted, labels)),
                        max_rel_diff(softmax_rows(logits), softmax_rows(shifted))});
      same_pred = same_pred && predict(logits) == predict(shifted);
    }
    r.passed = same_pred && worst < 1e-6;
    r.detail = "max diff " + fmt(worst);
  });

  add_check(suite, "head.sqeuclid_oracle", [&](CheckResult& r) {
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      const Matrix q = gaussian(uniform_int(rng, 1, 10), 7, rng), p = gaussian(uniform_int(rng, 2, 6), 7, rng);
      worst = std::max(worst, max_rel_diff(score(q, p, Metric::kSqEuclid, 1.0), oracle::score(q, p, Metric::kSqEuclid, 1.0)));
    }
    r.passed = worst < 1e-6;
    r.detail = "max rel diff " + fmt(worst);
  });
}

class StubPredictor : public EpisodePredictor {
 public:
  enum Kind { kAllCorrect, kRandom, kGeometry };
  StubPredictor(Kind kind, std::uint64_t seed) : kind_(kind), rng_(seed) {}
  std::vector<int> predict(const EpisodeBatch& batch) override {
    std::vector<int> out(batch.query_labels.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
      if (kind_ == kAllCorrect) out[j] = batch.query_labels[j];
      if (kind_ == kRandom) out[j] = uniform_int(rng_, 0, batch.support_clouds - 1);
      if (kind_ == kGeometry) {
        // Nearest support cloud by mean radius: deterministic in the batch.
        auto radius = [&](int cloud) {
          return batch.xyz.middleRows(static_cast<Eigen::Index>(cloud) * batch.points, batch.points).rowwise().norm().mean();
        };
        const double rq = radius(batch.support_clouds + static_cast<int>(j));
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < batch.support_clouds; ++c)
          if (std::abs(radius(c) - rq) < best) best = std::abs(radius(c) - rq), out[j] = c;
      }
    }
    return out;
  }

 private:
  Kind kind_;
  Rng rng_;
};

void harness_invariants(SuiteResult& suite, Rng& rng, std::uint64_t seed) {
  add_check(suite, "eval.ci_arithmetic", [&](CheckResult& r) {
    EvalReport rep;
    rep.accuracies.assign(350, 0.8);
    rep.accuracies.insert(rep.accuracies.end(), 350, 0.9);
    summarize(rep);
    double sum = 0.0;
    for (double a : rep.accuracies) sum += 100.0 * a;
    const double mean = sum / 700.0;
    double ss = 0.0;
    for (double a : rep.accuracies) ss += (100.0 * a - mean) * (100.0 * a - mean);
    const double half = 1.96 * std::sqrt(ss / 699.0) / std::sqrt(700.0);
    EvalReport perfect;
    perfect.accuracies.assign(700, 1.0);
    summarize(perfect);
    r.passed = std::abs(rep.mean - 85.0) < 1e-9 && std::abs(rep.ci95 - half) < 1e-9 && perfect.mean == 100.0 &&
               perfect.ci95 == 0.0;
    r.detail = "85 +- " + fmt(rep.ci95);
  });

  ExperimentConfig cfg = toy_config();
  cfg.toy.instances_per_class = 40;
  cfg.toy.points_per_instance = 48;
  cfg.points = 24;
  cfg.episode = {5, 1, 3};
  cfg.model.n_way = 5;
  cfg.model.k_shot = 1;
  cfg.model.backbone.k = 4;
  cfg.model.backbone.edge_widths = {4, 4, 4, 4};
  cfg.model.backbone.embed_dim = 8;
  cfg.model.spf = {3, 3, NeighborhoodSpace::kFeature};
  cfg.model.sci.h_r = 4;
  cfg.model.cif = {2, 4};
  cfg.epochs = 4;
  cfg.train_episodes = 4;
  cfg.val_episodes = 6;
  cfg.seed = seed;
  const ExperimentData data = assemble_data(generate_toy(cfg.toy), cfg);

  add_check(suite, "eval.stub_predictors", [&](CheckResult& r) {
    StubPredictor perfect(StubPredictor::kAllCorrect, 1), random(StubPredictor::kRandom, rng());
    const EvalReport a = evaluate_predictor(perfect, data.test, data.test_pool, cfg.episode, 50, cfg.points, 5);
    const EvalReport b = evaluate_predictor(random, data.test, data.test_pool, cfg.episode, 300, cfg.points, 5);
    r.passed = a.mean == 100.0 && a.ci95 == 0.0 && std::abs(b.mean - 20.0) <= 3.0 * b.ci95;
    r.detail = "random stub " + fmt(b.mean) + " +- " + fmt(b.ci95);
  });

  add_check(suite, "eval.reproducible", [&](CheckResult& r) {
    StubPredictor a(StubPredictor::kGeometry, 0), b(StubPredictor::kGeometry, 0);
    const EvalReport x = evaluate_predictor(a, data.test, data.test_pool, cfg.episode, 40, cfg.points, 17);
    const EvalReport y = evaluate_predictor(b, data.test, data.test_pool, cfg.episode, 40, cfg.points, 17);
    r.passed = x.accuracies == y.accuracies;
    r.detail = r.passed ? "identical accuracies" : "accuracies differ";
  });

  add_check(suite, "train.best_validation", [&](CheckResult& r) {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("pcfsl-selftest-" + std::to_string(derive_seed(seed, 99, static_cast<std::uint64_t>(Clock::now().time_since_epoch().count()))));
    cfg.out_dir = dir.string();
    const TrainResult result = train(cfg, data);
    bool ok = std::filesystem::exists(result.best_checkpoint) && std::filesystem::exists(result.last_checkpoint);
    for (const auto& e : result.epochs) ok = ok && result.best_val_accuracy >= e.val_accuracy;
    std::set<std::string> train_classes(data.split.train_classes.begin(), data.split.train_classes.end());
    for (const auto& c : data.split.test_classes) ok = ok && !train_classes.count(c);
    std::filesystem::remove_all(dir);
    r.passed = ok;
    r.detail = "best epoch " + std::to_string(result.best_epoch) + " of " + std::to_string(result.epochs.size());
  });
}

// ----------------------------------------------------------------- gradients

std::vector<GradTarget> registry_targets(const ParamRegistry& reg) {
  std::vector<GradTarget> out;
  for (const auto& [name, p] : reg.entries())
    if (p->trainable) out.push_back({name, &p->value, p->grad});
  return out;
}

void record(SuiteResult& suite, const GradCheckResult& g) {
  add_check(suite, "grad." + g.name, [&](CheckResult& r) {
    r.passed = g.passed;
    r.detail = "max rel err " + fmt(g.max_rel_error) + " over " + std::to_string(g.checked) + " entries";
    if (g.skipped) r.detail += ", " + std::to_string(g.skipped) + " at kinks";
    if (!g.passed) r.detail += "; worst " + g.worst_entry;
  });
}

void grad_edge_conv(SuiteResult& suite, Rng& rng) {
  EdgeConv ec(3, 5, rng);
  randomize_norm(ec.norm, rng);
  Matrix x = gaussian(10, 3, rng);
  const IndexMatrix nb = knn_graph(x, 3).indices;
  const Matrix w = gaussian(10, 5, rng);
  ParamRegistry reg;
  ec.register_params(reg, "edge");
  reg.zero_grad();
  EdgeConvCache cache;
  ec.forward(x, nb, Mode::kTrain, &cache);
  const Matrix dx = ec.backward(cache, w);
  auto targets = registry_targets(reg);
  targets.push_back({"features", &x, dx});
  record(suite, check_gradients("edge_conv", [&] { return (ec.forward(x, nb, Mode::kTrain, nullptr).array() * w.array()).sum(); }, targets));
}

void grad_spf(SuiteResult& suite, Rng& rng) {
  SalientPartFusion spf(6, {3, 3, NeighborhoodSpace::kFeature}, rng);
  randomize_norm(spf.encoder_norm, rng);
  Matrix fmap = gaussian(16, 6, rng);  // two instances of 8 rows
  const Matrix w = gaussian(2, 6, rng);
  ParamRegistry reg;
  spf.register_params(reg, "spf");
  reg.zero_grad();
  SpfCache cache;
  spf.forward(fmap, 2, nullptr, Mode::kTrain, &cache);
  const Matrix dfmap = spf.backward(cache, w);
  auto targets = registry_targets(reg);
  targets.push_back({"fmap", &fmap, dfmap});
  record(suite, check_gradients("spf", [&] { return (spf.forward(fmap, 2, nullptr, Mode::kTrain, nullptr).array() * w.array()).sum(); }, targets));
}

void grad_cib(SuiteResult& suite, Rng& rng) {
  ChannelInteractionBlock block(4, rng);
  block.compress.weight.value = gaussian(1, 4, rng);
  block.compress.bias.value = gaussian(1, 1, rng);
  Matrix feature = gaussian(1, 8, rng), task = gaussian(1, 8, rng);
  const RowVector w = gaussian(1, 8, rng);
  ParamRegistry reg;
  block.register_params(reg, "cib");
  reg.zero_grad();
  CibCache cache;
  block.forward(feature, task, &cache);
  RowVector df = RowVector::Zero(8), dt = RowVector::Zero(8);
  block.backward(cache, w, df, dt);
  auto targets = registry_targets(reg);
  targets.push_back({"feature", &feature, df});
  targets.push_back({"task", &task, dt});
  record(suite, check_gradients("cib", [&] { return block.forward(feature, task, nullptr).dot(w); }, targets));

  SelfChannelInteraction sci(3, {4}, rng);
  sci.block.compress.weight.value = gaussian(1, 4, rng);
  sci.meta.weight.value = gaussian(1, 3, rng);
  Matrix p = gaussian(3, 6, rng), q = gaussian(4, 6, rng);
  const Matrix wp = gaussian(3, 6, rng), wq = gaussian(4, 6, rng);
  ParamRegistry sreg;
  sci.register_params(sreg, "sci");
  sreg.zero_grad();
  SciCache scache;
  Matrix po, qo, dp, dq;
  sci.forward(p, q, po, qo, &scache);
  sci.backward(scache, wp, wq, dp, dq);
  auto stargets = registry_targets(sreg);
  stargets.push_back({"prototypes", &p, dp});
  stargets.push_back({"queries", &q, dq});
  record(suite, check_gradients("sci", [&] {
    Matrix a, b;
    sci.forward(p, q, a, b, nullptr);
    return (a.array() * wp.array()).sum() + (b.array() * wq.array()).sum();
  }, stargets));
}

void grad_cif(SuiteResult& suite, Rng& rng) {
  for (int k1 : {2, 3}) {
    CrossInstanceFusion cif(3, {k1, 4}, rng);
    Matrix p = gaussian(3, 6, rng), q = gaussian(4, 6, rng);
    const Matrix wp = gaussian(3, 6, rng), wq = gaussian(4, 6, rng);
    ParamRegistry reg;
    cif.register_params(reg, "cif");
    reg.zero_grad();
    CifCache cache;
    Matrix po, qo, dp, dq;
    cif.forward(p, q, po, qo, &cache);
    cif.backward(cache, wp, wq, dp, dq);
    auto targets = registry_targets(reg);
    targets.push_back({"prototypes", &p, dp});
    targets.push_back({"queries", &q, dq});
    record(suite, check_gradients("cif_k1_" + std::to_string(k1), [&] {
      Matrix a, b;
      cif.forward(p, q, a, b, nullptr);
      return (a.array() * wp.array()).sum() + (b.array() * wq.array()).sum();
    }, targets));
  }
}

void grad_head(SuiteResult& suite, Rng& rng) {
  for (Metric metric : {Metric::kSqEuclid, Metric::kCosine}) {
    MetricHead head(metric, 3.0);
    Matrix q = gaussian(4, 6, rng, 0.5), p = gaussian(3, 6, rng, 0.5);
    const std::vector<int> labels = {0, 2, 1, 2};
    ParamRegistry reg;
    head.register_params(reg, "head");
    reg.zero_grad();
    const Matrix logits = head.forward(q, p);
    const ScoreGrad g = head.backward(q, p, episode_loss_backward(logits, labels));
    auto targets = registry_targets(reg);
    targets.push_back({"queries", &q, g.dqueries});
    targets.push_back({"prototypes", &p, g.dprototypes});
    record(suite, check_gradients("head_" + std::string(metric_name(metric)),
                                  [&] { return episode_loss(head.forward(q, p), labels); }, targets));
  }
}

void grad_model(SuiteResult& suite, Rng& rng) {
  ModelOptions opt;
  opt.n_way = 3;
  opt.k_shot = 1;
  opt.backbone.k = 4;
  opt.backbone.edge_widths = {4, 4, 4, 4};
  opt.backbone.embed_dim = 6;
  opt.spf = {3, 3, NeighborhoodSpace::kFeature};
  opt.sci.h_r = 3;
  opt.cif = {2, 3};
  FewShotModel model(opt, rng());
  model.sci.block.compress.weight.value = gaussian(1, 3, rng);
  EpisodeBatch batch;
  batch.points = 12;
  batch.support_clouds = 3;
  batch.query_clouds = 6;
  batch.query_labels = {0, 0, 1, 1, 2, 2};
  batch.xyz = unit_ball(9 * 12, rng);
  model.params().zero_grad();
  model.train_step(batch);
  // Biases feeding a normalization have an exactly zero gradient; the larger
  // step keeps the cancellation noise of the O(100) loss below the floor.
  GradCheckOptions options;
  options.step = 1e-5;
  record(suite, check_gradients("full_model", [&] {
    return episode_loss(model.forward(batch, Mode::kTrain).logits, batch.query_labels);
  }, registry_targets(model.params()), options));
}

// ------------------------------------------------------------------- oracles

template <class F>
void oracle_check(SuiteResult& suite, const std::string& name, int trials, F&& trial) {
  add_check(suite, "oracle." + name, [&](CheckResult& r) {
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) worst = std::max(worst, trial());
    r.passed = worst < 1e-6;
    r.detail = std::to_string(trials) + " instances, max rel diff " + fmt(worst);
  });
}

}  // namespace

SuiteResult run_invariant_suite(std::uint64_t seed) {
  const auto t0 = Clock::now();
  SuiteResult suite;
  suite.suite = "invariants";
  Rng rng(seed);
  data_invariants(suite, rng);
  backbone_invariants(suite, rng);
  spf_invariants(suite, rng);
  sci_invariants(suite, rng);
  cif_invariants(suite, rng);
  head_invariants(suite, rng);
  harness_invariants(suite, rng, seed);
  suite.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return suite;
}

SuiteResult run_gradient_suite(std::uint64_t seed) {
  const auto t0 = Clock::now();
  SuiteResult suite;
  suite.suite = "gradients";
  Rng rng(seed);
  grad_edge_conv(suite, rng);
  grad_spf(suite, rng);
  grad_cib(suite, rng);
  grad_cif(suite, rng);
  grad_head(suite, rng);
  grad_model(suite, rng);
  suite.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return suite;
}

SuiteResult run_oracle_suite(int trials, std::uint64_t seed) {
  const auto t0 = Clock::now();
  SuiteResult suite;
  suite.suite = "oracles";
  Rng rng(seed);

  oracle_check(suite, "knn", trials, [&] {
    const Matrix x = gaussian(uniform_int(rng, 4, 16), uniform_int(rng, 1, 5), rng);
    const int k = uniform_int(rng, 1, static_cast<int>(x.rows()) - 1);
    return knn_graph(x, k).indices == oracle::knn(x, k) ? 0.0 : 1.0;
  });
  oracle_check(suite, "edge_conv", trials, [&] {
    const int n = uniform_int(rng, 4, 16), c = uniform_int(rng, 1, 5), out = uniform_int(rng, 1, 6);
    EdgeConv ec(c, out, rng);
    randomize_norm(ec.norm, rng);
    const Matrix x = gaussian(n, c, rng);
    const IndexMatrix nb = oracle::knn(x, uniform_int(rng, 1, std::min(6, n - 1)));
    const Matrix ref = oracle::edge_conv(x, nb, ec.linear.weight.value, to_vector(ec.linear.bias), norm_params(ec.norm));
    return max_rel_diff(ec.forward(x, nb, Mode::kTrain, nullptr), ref);
  });
  oracle_check(suite, "spf_forward", trials, [&] {
    const int n = uniform_int(rng, 4, 16), d = uniform_int(rng, 1, 6);
    const SpfOptions opt{uniform_int(rng, 1, n), uniform_int(rng, 1, n - 1)};
    SalientPartFusion spf(d, opt, rng);
    randomize_norm(spf.encoder_norm, rng);
    const Matrix fmap = gaussian(n, d, rng);
    const RowVector ref =
        oracle::spf(fmap, opt.k_s, opt.k, spf.encoder.weight.value, to_vector(spf.encoder.bias), norm_params(spf.encoder_norm));
    return max_rel_diff(spf.forward(fmap, 1, nullptr, Mode::kTrain, nullptr), ref);
  });
  oracle_check(suite, "channel_fuse_branch", trials, [&] {
    const int k1 = uniform_int(rng, 1, 5), h = uniform_int(rng, 1, 8), d = uniform_int(rng, 1, 12);
    ChannelFuseBranch branch(k1, h, rng);
    const Matrix stack = gaussian(d, k1 + 1, rng, 2.0);
    const RowVector ref = oracle::channel_fuse(stack, branch.f1.weight.value, to_vector(branch.f1.bias),
                                               branch.f2.weight.value, to_vector(branch.f2.bias));
    return max_rel_diff(branch.forward(stack, nullptr), ref);
  });
  oracle_check(suite, "instance_fuse_branch", trials, [&] {
    const int d = uniform_int(rng, 1, 10);
    const Matrix a = gaussian(uniform_int(rng, 1, 8), d, rng), b = gaussian(uniform_int(rng, 1, 12), d, rng);
    return max_rel_diff(instance_fuse(a, b, nullptr), oracle::instance_fuse(a, b));
  });
  oracle_check(suite, "score", trials, [&] {
    const int d = uniform_int(rng, 1, 10);
    Matrix q = gaussian(uniform_int(rng, 1, 12), d, rng), p = gaussian(uniform_int(rng, 1, 6), d, rng);
    if (uniform_int(rng, 0, 4) == 0) q.row(0).setZero();
    const double tau = 0.5 + 10.0 * uniform01(rng);
    return std::max(max_rel_diff(score(q, p, Metric::kSqEuclid, tau), oracle::score(q, p, Metric::kSqEuclid, tau)),
                    max_rel_diff(score(q, p, Metric::kCosine, tau), oracle::score(q, p, Metric::kCosine, tau)));
  });
  oracle_check(suite, "prototypes_from_support", trials, [&] {
    const int n = uniform_int(rng, 1, 6), k = uniform_int(rng, 1, 5);
    const Matrix s = gaussian(n * k, uniform_int(rng, 1, 10), rng);
    return max_rel_diff(prototypes_from_support(s, n, k), oracle::prototypes(s, n, k));
  });
  oracle_check(suite, "episode_loss", trials, [&] {
    const int n = uniform_int(rng, 2, 6), rows = uniform_int(rng, 1, 10);
    const Matrix logits = gaussian(rows, n, rng, 3.0);
    std::vector<int> labels(static_cast<std::size_t>(rows));
    for (auto& l : labels) l = uniform_int(rng, 0, n - 1);
    return std::abs(episode_loss(logits, labels) - oracle::episode_loss(logits, labels));
  });

  suite.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return suite;
}

}  // namespace pcfsl
