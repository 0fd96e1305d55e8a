#ifndef SYMDEF_TRAIN_HPP
#define SYMDEF_TRAIN_HPP

#include <cmath>
#include <exception>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "symdef/encode.hpp"
#include "symdef/error.hpp"
#include "symdef/eval.hpp"
#include "symdef/tagger.hpp"
#include "symdef/targeting.hpp"
#include "symdef/threadpool.hpp"

namespace symdef {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 12;
  int max_seq_len = 100;      // longer samples are truncated with a warning
  double learning_rate = 0.1; // per-coordinate adaptive scaling, see below
  double l2_lambda = 1e-4;
  double classifier_loss_weight = 1.0;  // lambda of the multi-task loss
  std::uint64_t seed = 42;
  int threads = 1;

  void validate_or_throw() const {
    if (epochs < 1) throw Error(errc::kConfig, "epochs must be >= 1");
    if (batch_size < 1) throw Error(errc::kConfig, "batch_size must be >= 1");
    if (max_seq_len < 1) throw Error(errc::kConfig, "max_seq_len must be >= 1");
    if (!(learning_rate > 0.0)) throw Error(errc::kConfig, "learning_rate must be > 0");
    if (l2_lambda < 0.0) throw Error(errc::kConfig, "l2_lambda must be >= 0");
    if (classifier_loss_weight < 0.0)
      throw Error(errc::kConfig, "classifier_loss_weight must be >= 0");
    if (threads < 1) throw Error(errc::kConfig, "threads must be >= 1");
  }
};

using LogFn = std::function<void(const std::string&)>;

inline void log_to_stderr(const std::string& line) {
  std::cerr << line << "\n";
}

// Clips a sample to the first max_len tokens. A target beyond the cut is
// dropped (the sample keeps training signal for the visible prefix);
// has_definition is recomputed from the surviving gold labels.
inline TargetSample truncate_sample(const TargetSample& sample, int max_len,
                                    bool* truncated = nullptr) {
  if (static_cast<int>(sample.tokens.size()) <= max_len) {
    if (truncated != nullptr) *truncated = false;
    return sample;
  }
  if (truncated != nullptr) *truncated = true;
  TargetSample out = sample;
  out.tokens.resize(static_cast<std::size_t>(max_len));
  out.origin_map.resize(static_cast<std::size_t>(max_len));
  out.symbol_positions.clear();
  for (int p : sample.symbol_positions)
    if (p < max_len) out.symbol_positions.push_back(p);
  if (out.target_position.has_value() && *out.target_position >= max_len)
    out.target_position.reset();
  if (out.gold_labels.has_value()) {
    out.gold_labels->resize(static_cast<std::size_t>(max_len));
    out.has_definition = false;
    for (TagLabel l : *out.gold_labels)
      if (l == TagLabel::BDef) out.has_definition = true;
  }
  return out;
}

struct Prediction {
  std::vector<TagLabel> labels;
  double has_definition_prob = 0.0;
};

// Constrained Viterbi labels for every sample. With gating enabled, samples
// the classifier scores below 0.5 get their DEF labels replaced by O
// (TERM labels are retained). Tokens beyond max_seq_len come back as O.
inline std::vector<Prediction> predict(const CrfModel& model,
                                       const std::vector<TargetSample>& samples,
                                       const TokenEncoder& encoder,
                                       bool gate_with_classifier = false,
                                       int max_seq_len = 100, int threads = 1) {
  if (model.feature_dim != encoder.dim())
    throw Error(errc::kMismatch,
                "model feature_dim " + std::to_string(model.feature_dim) +
                    " does not match encoder dim " +
                    std::to_string(encoder.dim()));
  std::vector<Prediction> out(samples.size());
  std::vector<std::exception_ptr> errors(samples.size());
  ThreadPool pool(threads);
  pool.parallel_for(samples.size(), [&](std::size_t i) {
    try {
      const TargetSample sample = truncate_sample(samples[i], max_seq_len);
      TokenFeatures features = encoder.encode(sample);
      auto [labels, score] = viterbi_decode(model, features, true);
      Prediction p;
      const double logit = model.classifier_logit(features.pooled);
      p.has_definition_prob = 1.0 / (1.0 + std::exp(-logit));
      if (gate_with_classifier && p.has_definition_prob < 0.5) {
        for (auto& l : labels)
          if (is_def(l)) l = TagLabel::O;
      }
      labels.resize(samples[i].tokens.size(), TagLabel::O);
      p.labels = std::move(labels);
      out[i] = std::move(p);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

struct TrainResult {
  CrfModel model;       // best dev-F1 snapshot
  int best_epoch = -1;  // 1-based; -1 if dev never improved over 0
  double best_dev_macro_f1 = -1.0;
  std::vector<double> epoch_mean_loss;
  std::vector<double> epoch_dev_macro_f1;
};

// Mini-batch training of the joint objective with per-coordinate adaptive
// scaling (accumulated squared gradients). After each epoch the model is
// scored on the dev set and the best macro-F1 snapshot is kept. Fully
// deterministic given the seed and thread-count independent: per-sample
// statistics are computed in parallel but reduced in sample order.
inline TrainResult train(const std::vector<TargetSample>& train_samples,
                         const std::vector<TargetSample>& dev_samples,
                         const TokenEncoder& encoder, const TrainConfig& config,
                         const LogFn& log = log_to_stderr) {
  config.validate_or_throw();
  if (train_samples.empty())
    throw Error(errc::kEmpty, "training set is empty");

  const int F = encoder.dim();

  // Truncate up front; features are static per sample.
  std::vector<TargetSample> train_set;
  train_set.reserve(train_samples.size());
  long truncated_count = 0;
  for (const auto& s : train_samples) {
    bool truncated = false;
    train_set.push_back(truncate_sample(s, config.max_seq_len, &truncated));
    if (truncated) {
      ++truncated_count;
      log("warn: sample '" + s.sentence_id + "#" +
          std::to_string(s.sample_index) + "' truncated to " +
          std::to_string(config.max_seq_len) + " tokens");
    }
    if (!train_set.back().gold_labels.has_value())
      throw Error(errc::kInvariant,
                  "training sample '" + s.sentence_id +
                      "' has no gold labels");
  }
  if (truncated_count > 0)
    log("warn: " + std::to_string(truncated_count) + " training samples truncated");

  ThreadPool pool(config.threads);

  std::vector<TokenFeatures> features(train_set.size());
  {
    std::vector<std::exception_ptr> errors(train_set.size());
    pool.parallel_for(train_set.size(), [&](std::size_t i) {
      try {
        features[i] = encoder.encode(train_set[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  // Dev predictions are padded back to full length, so score against the
  // untruncated gold: tokens beyond the cut count against the model.
  std::vector<std::vector<TagLabel>> dev_gold;
  std::vector<int> dev_symbol_counts;
  for (const auto& s : dev_samples) {
    if (!s.gold_labels.has_value())
      throw Error(errc::kInvariant,
                  "dev sample '" + s.sentence_id + "' has no gold labels");
    dev_gold.push_back(*s.gold_labels);
    dev_symbol_counts.push_back(static_cast<int>(s.symbol_positions.size()));
  }
  auto dev_macro_f1 = [&](const CrfModel& model) {
    if (dev_samples.empty()) return 0.0;
    std::vector<Prediction> preds =
        predict(model, dev_samples, encoder, false, config.max_seq_len,
                config.threads);
    std::vector<std::vector<TagLabel>> pred_labels;
    pred_labels.reserve(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
      preds[i].labels.resize(dev_gold[i].size(), TagLabel::O);
      pred_labels.push_back(std::move(preds[i].labels));
    }
    return evaluate(dev_gold, pred_labels, dev_symbol_counts).macro_f1;
  };

  CrfModel model = CrfModel::zeros(F);
  CrfGradient accum = CrfGradient::zeros(F);  // squared-gradient history
  CrfGradient grad = CrfGradient::zeros(F);

  // Per-sample sufficient statistics, computed in parallel per batch.
  struct Item {
    ForwardBackward fb;
    double gold_score = 0.0;
    double logit = 0.0;
  };

  TrainResult result;
  result.model = model;

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const double lambda = config.classifier_loss_weight;
  const double l2 = config.l2_lambda;
  const double kAdaEps = 1e-8;

  auto update_block = [&](std::vector<double>& w, std::vector<double>& g,
                          std::vector<double>& h) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      double gi = g[i];
      if (gi == 0.0) continue;
      h[i] += gi * gi;
      w[i] -= config.learning_rate * gi / (std::sqrt(h[i]) + kAdaEps);
      g[i] = 0.0;
    }
  };

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    long batches = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(
          order.size(), begin + static_cast<std::size_t>(config.batch_size));
      const std::size_t batch_n = end - begin;

      std::vector<Item> items(batch_n);
      std::vector<std::exception_ptr> errors(batch_n);
      pool.parallel_for(batch_n, [&](std::size_t k) {
        try {
          const std::size_t idx = order[begin + k];
          Item item;
          item.fb = forward_backward(model, features[idx]);
          item.gold_score = score_path(model, features[idx],
                                       *train_set[idx].gold_labels);
          item.logit = model.classifier_logit(features[idx].pooled);
          items[k] = std::move(item);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      });
      for (std::size_t k = 0; k < batch_n; ++k) {
        if (!errors[k]) continue;
        try {
          std::rethrow_exception(errors[k]);
        } catch (const Error& e) {
          throw Error(e.code(), "epoch " + std::to_string(epoch) + " batch " +
                                    std::to_string(batches + 1) + ": " +
                                    e.what());
        }
      }

      // Deterministic reduce in batch order.
      const double inv_n = 1.0 / static_cast<double>(batch_n);
      double batch_loss = 0.0;
      for (std::size_t k = 0; k < batch_n; ++k) {
        const std::size_t idx = order[begin + k];
        const Item& item = items[k];
        const TokenFeatures& x = features[idx];
        const std::vector<TagLabel>& gold = *train_set[idx].gold_labels;
        const int T = static_cast<int>(gold.size());

        batch_loss += (item.fb.log_z - item.gold_score) * inv_n;
        for (int t = 0; t < T; ++t) {
          const int gy = static_cast<int>(gold[static_cast<std::size_t>(t)]);
          for (int f : x.tokens[static_cast<std::size_t>(t)]) {
            double* row =
                grad.emission.data() + static_cast<std::size_t>(f) * kNumLabels;
            for (int y = 0; y < kNumLabels; ++y)
              row[y] += inv_n * item.fb.unary[static_cast<std::size_t>(t)]
                                             [static_cast<std::size_t>(y)];
            row[gy] -= inv_n;
          }
        }
        for (int y = 0; y < kNumLabels; ++y)
          for (int q = 0; q < kNumLabels; ++q)
            grad.transition[static_cast<std::size_t>(y) * kNumLabels +
                            static_cast<std::size_t>(q)] +=
                inv_n * item.fb.pairwise_expected[static_cast<std::size_t>(y)]
                                                 [static_cast<std::size_t>(q)];
        for (int t = 1; t < T; ++t)
          grad.transition[static_cast<std::size_t>(gold[static_cast<std::size_t>(t - 1)]) *
                              kNumLabels +
                          static_cast<std::size_t>(gold[static_cast<std::size_t>(t)])] -=
              inv_n;
        for (int y = 0; y < kNumLabels; ++y) {
          grad.start[static_cast<std::size_t>(y)] +=
              inv_n * item.fb.start_posterior[static_cast<std::size_t>(y)];
          grad.stop[static_cast<std::size_t>(y)] +=
              inv_n * item.fb.stop_posterior[static_cast<std::size_t>(y)];
        }
        grad.start[static_cast<std::size_t>(gold.front())] -= inv_n;
        grad.stop[static_cast<std::size_t>(gold.back())] -= inv_n;

        const double ygold = train_set[idx].has_definition ? 1.0 : 0.0;
        const double prob = 1.0 / (1.0 + std::exp(-item.logit));
        batch_loss += lambda * (std::max(item.logit, 0.0) - item.logit * ygold +
                                std::log1p(std::exp(-std::abs(item.logit)))) *
                      inv_n;
        const double residual = lambda * (prob - ygold) * inv_n;
        for (int f : x.pooled)
          grad.classifier[static_cast<std::size_t>(f)] += residual;
        grad.classifier.back() += residual;
      }

      if (l2 > 0.0) {
        double sq = 0.0;
        auto add_l2 = [&](const std::vector<double>& w, std::vector<double>& g,
                          bool skip_last) {
          std::size_t n = w.size() - (skip_last ? 1 : 0);
          for (std::size_t i = 0; i < n; ++i) {
            sq += w[i] * w[i];
            g[i] += l2 * w[i];
          }
        };
        add_l2(model.emission, grad.emission, false);
        add_l2(model.transition, grad.transition, false);
        add_l2(model.start, grad.start, false);
        add_l2(model.stop, grad.stop, false);
        add_l2(model.classifier, grad.classifier, true);
        batch_loss += 0.5 * l2 * sq;
      }

      if (!std::isfinite(batch_loss))
        throw Error(errc::kDiverged,
                    "training diverged (non-finite loss) at epoch " +
                        std::to_string(epoch) + " batch " +
                        std::to_string(batches + 1));

      update_block(model.emission, grad.emission, accum.emission);
      update_block(model.transition, grad.transition, accum.transition);
      update_block(model.start, grad.start, accum.start);
      update_block(model.stop, grad.stop, accum.stop);
      update_block(model.classifier, grad.classifier, accum.classifier);

      loss_sum += batch_loss;
      ++batches;
    }

    const double mean_loss = loss_sum / static_cast<double>(std::max(1L, batches));
    const double dev_f1 = dev_macro_f1(model);
    result.epoch_mean_loss.push_back(mean_loss);
    result.epoch_dev_macro_f1.push_back(dev_f1);
    char line[160];
    std::snprintf(line, sizeof(line),
                  "epoch %d/%d  mean-loss %.6f  dev-macro-f1 %.4f", epoch,
                  config.epochs, mean_loss, dev_f1);
    log(line);
    // "Improved performance" on dev keeps the snapshot; without a dev set
    // the final model wins.
    if (dev_samples.empty() || dev_f1 > result.best_dev_macro_f1) {
      result.best_dev_macro_f1 = dev_f1;
      result.best_epoch = epoch;
      result.model = model;
    }
  }
  if (result.best_epoch < 0) result.model = model;
  return result;
}

}  // namespace symdef

#endif  // SYMDEF_TRAIN_HPP
