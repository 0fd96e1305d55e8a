#ifndef SYMDEF_TAGGER_HPP
#define SYMDEF_TAGGER_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "symdef/encode.hpp"
#include "symdef/error.hpp"
#include "symdef/targeting.hpp"

namespace symdef {

// Linear-chain CRF over the five slot tags plus a logistic
// sentence-contains-definition head on the pooled feature vector.
// Emission weights are F x L (row per feature), transitions L x L
// (from-major), classifier F + 1 with the bias last.
struct CrfModel {
  int feature_dim = 0;
  std::vector<double> emission;    // feature_dim * kNumLabels
  std::vector<double> transition;  // kNumLabels * kNumLabels
  std::vector<double> start;       // kNumLabels
  std::vector<double> stop;        // kNumLabels
  std::vector<double> classifier;  // feature_dim + 1
  std::string dictionary_hash;

  static CrfModel zeros(int feature_dim, std::string dictionary_hash = "") {
    CrfModel m;
    m.feature_dim = feature_dim;
    m.emission.assign(static_cast<std::size_t>(feature_dim) * kNumLabels, 0.0);
    m.transition.assign(kNumLabels * kNumLabels, 0.0);
    m.start.assign(kNumLabels, 0.0);
    m.stop.assign(kNumLabels, 0.0);
    m.classifier.assign(static_cast<std::size_t>(feature_dim) + 1, 0.0);
    m.dictionary_hash = std::move(dictionary_hash);
    return m;
  }

  double emission_score(const std::vector<int>& active, int label) const {
    double s = 0.0;
    for (int f : active)
      s += emission[static_cast<std::size_t>(f) * kNumLabels +
                    static_cast<std::size_t>(label)];
    return s;
  }

  double classifier_logit(const std::vector<int>& pooled) const {
    double s = classifier.back();
    for (int f : pooled) s += classifier[static_cast<std::size_t>(f)];
    return s;
  }

  std::size_t parameter_count() const {
    return emission.size() + transition.size() + start.size() + stop.size() +
           classifier.size();
  }

  bool operator==(const CrfModel&) const = default;
};

// Gradient with the same layout as the model.
struct CrfGradient {
  std::vector<double> emission;
  std::vector<double> transition;
  std::vector<double> start;
  std::vector<double> stop;
  std::vector<double> classifier;

  static CrfGradient zeros(int feature_dim) {
    CrfGradient g;
    g.emission.assign(static_cast<std::size_t>(feature_dim) * kNumLabels, 0.0);
    g.transition.assign(kNumLabels * kNumLabels, 0.0);
    g.start.assign(kNumLabels, 0.0);
    g.stop.assign(kNumLabels, 0.0);
    g.classifier.assign(static_cast<std::size_t>(feature_dim) + 1, 0.0);
    return g;
  }
};

namespace detail {

inline double log_sum_exp(const double* v, int n) {
  double m = v[0];
  for (int i = 1; i < n; ++i) m = std::max(m, v[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

inline void check_lengths(std::size_t features, std::size_t labels,
                          const char* op) {
  if (features != labels)
    throw Error(errc::kDimension,
                std::string(op) + ": " + std::to_string(features) +
                    " feature vectors vs " + std::to_string(labels) +
                    " labels");
}

}  // namespace detail

// Unnormalized log potential of one label path.
inline double score_path(const CrfModel& model, const TokenFeatures& features,
                         const std::vector<TagLabel>& labels) {
  detail::check_lengths(features.tokens.size(), labels.size(), "score_path");
  if (labels.empty()) return 0.0;
  const int T = static_cast<int>(labels.size());
  double s = model.start[static_cast<std::size_t>(labels[0])];
  for (int t = 0; t < T; ++t) {
    s += model.emission_score(features.tokens[static_cast<std::size_t>(t)],
                              static_cast<int>(labels[static_cast<std::size_t>(t)]));
    if (t > 0)
      s += model.transition[static_cast<std::size_t>(labels[static_cast<std::size_t>(t - 1)]) *
                                kNumLabels +
                            static_cast<std::size_t>(labels[static_cast<std::size_t>(t)])];
  }
  s += model.stop[static_cast<std::size_t>(labels[static_cast<std::size_t>(T - 1)])];
  return s;
}

// log sum over all label paths of exp(score_path), by the forward recursion
// in log space.
inline double log_partition(const CrfModel& model,
                            const TokenFeatures& features) {
  const int T = static_cast<int>(features.tokens.size());
  if (T == 0)
    throw Error(errc::kDimension, "log_partition: empty sequence");
  const int L = kNumLabels;
  std::vector<double> alpha(static_cast<std::size_t>(L));
  std::vector<double> next(static_cast<std::size_t>(L));
  for (int y = 0; y < L; ++y)
    alpha[static_cast<std::size_t>(y)] =
        model.start[static_cast<std::size_t>(y)] +
        model.emission_score(features.tokens[0], y);
  std::array<double, kNumLabels> tmp{};
  for (int t = 1; t < T; ++t) {
    for (int y = 0; y < L; ++y) {
      for (int p = 0; p < L; ++p)
        tmp[static_cast<std::size_t>(p)] =
            alpha[static_cast<std::size_t>(p)] +
            model.transition[static_cast<std::size_t>(p) * L +
                             static_cast<std::size_t>(y)];
      next[static_cast<std::size_t>(y)] =
          detail::log_sum_exp(tmp.data(), L) +
          model.emission_score(features.tokens[static_cast<std::size_t>(t)], y);
    }
    alpha.swap(next);
  }
  for (int y = 0; y < L; ++y)
    alpha[static_cast<std::size_t>(y)] += model.stop[static_cast<std::size_t>(y)];
  return detail::log_sum_exp(alpha.data(), L);
}

// Forward-backward quantities needed for the gradient and for marginal
// checks. Posteriors are proper probabilities (already normalized).
struct ForwardBackward {
  double log_z = 0.0;
  std::vector<std::array<double, kNumLabels>> unary;  // p_t(y)
  // Expected transition counts summed over positions: E[y -> y'].
  std::array<std::array<double, kNumLabels>, kNumLabels> pairwise_expected{};
  std::array<double, kNumLabels> start_posterior{};
  std::array<double, kNumLabels> stop_posterior{};
};

inline ForwardBackward forward_backward(const CrfModel& model,
                                        const TokenFeatures& features) {
  const int T = static_cast<int>(features.tokens.size());
  if (T == 0)
    throw Error(errc::kDimension, "forward_backward: empty sequence");
  const int L = kNumLabels;

  std::vector<std::array<double, kNumLabels>> em(
      static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t)
    for (int y = 0; y < L; ++y)
      em[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)] =
          model.emission_score(features.tokens[static_cast<std::size_t>(t)], y);

  std::vector<std::array<double, kNumLabels>> alpha(
      static_cast<std::size_t>(T));
  std::vector<std::array<double, kNumLabels>> beta(
      static_cast<std::size_t>(T));
  std::array<double, kNumLabels> tmp{};

  for (int y = 0; y < L; ++y)
    alpha[0][static_cast<std::size_t>(y)] =
        model.start[static_cast<std::size_t>(y)] + em[0][static_cast<std::size_t>(y)];
  for (int t = 1; t < T; ++t) {
    for (int y = 0; y < L; ++y) {
      for (int p = 0; p < L; ++p)
        tmp[static_cast<std::size_t>(p)] =
            alpha[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(p)] +
            model.transition[static_cast<std::size_t>(p) * L +
                             static_cast<std::size_t>(y)];
      alpha[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)] =
          detail::log_sum_exp(tmp.data(), L) +
          em[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)];
    }
  }

  for (int y = 0; y < L; ++y)
    beta[static_cast<std::size_t>(T - 1)][static_cast<std::size_t>(y)] =
        model.stop[static_cast<std::size_t>(y)];
  for (int t = T - 2; t >= 0; --t) {
    for (int y = 0; y < L; ++y) {
      for (int q = 0; q < L; ++q)
        tmp[static_cast<std::size_t>(q)] =
            model.transition[static_cast<std::size_t>(y) * L +
                             static_cast<std::size_t>(q)] +
            em[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(q)] +
            beta[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(q)];
      beta[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)] =
          detail::log_sum_exp(tmp.data(), L);
    }
  }

  ForwardBackward fb;
  for (int y = 0; y < L; ++y)
    tmp[static_cast<std::size_t>(y)] =
        alpha[static_cast<std::size_t>(T - 1)][static_cast<std::size_t>(y)] +
        model.stop[static_cast<std::size_t>(y)];
  fb.log_z = detail::log_sum_exp(tmp.data(), L);
  if (!std::isfinite(fb.log_z))
    throw Error(errc::kDiverged, "forward_backward: non-finite log partition");

  fb.unary.resize(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    for (int y = 0; y < L; ++y) {
      double lp = alpha[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)] +
                  beta[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)] -
                  fb.log_z;
      if (!std::isfinite(lp))
        throw Error(errc::kDiverged,
                    "forward_backward: non-finite posterior at position " +
                        std::to_string(t));
      fb.unary[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)] =
          std::exp(lp);
    }
  }
  for (int t = 0; t + 1 < T; ++t) {
    for (int y = 0; y < L; ++y) {
      for (int q = 0; q < L; ++q) {
        double lp =
            alpha[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)] +
            model.transition[static_cast<std::size_t>(y) * L +
                             static_cast<std::size_t>(q)] +
            em[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(q)] +
            beta[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(q)] -
            fb.log_z;
        fb.pairwise_expected[static_cast<std::size_t>(y)]
                            [static_cast<std::size_t>(q)] += std::exp(lp);
      }
    }
  }
  fb.start_posterior = fb.unary.front();
  fb.stop_posterior = fb.unary.back();
  return fb;
}

struct LossTerms {
  double total = 0.0;
  double crf = 0.0;
  double classifier = 0.0;
  double l2 = 0.0;
  double classifier_prob = 0.0;
};

// Joint negative log likelihood: CRF NLL + lambda * BCE of the classifier
// head + 0.5 * l2 * ||w||^2 (classifier bias excluded from the penalty).
// The gradient is accumulated into `grad` (callers zero it as needed), which
// lets a batch reuse one accumulator.
inline LossTerms add_loss_and_gradient(const CrfModel& model,
                                       const TokenFeatures& features,
                                       const std::vector<TagLabel>& gold,
                                       bool has_definition_gold, double lambda,
                                       double l2, CrfGradient& grad) {
  detail::check_lengths(features.tokens.size(), gold.size(),
                        "neg_log_likelihood");
  if (!bio_valid(gold))
    throw Error(errc::kInvariant, "gold label sequence is not BIO-valid");
  const int T = static_cast<int>(gold.size());
  const int L = kNumLabels;

  LossTerms loss;
  ForwardBackward fb = forward_backward(model, features);
  const double gold_score = score_path(model, features, gold);
  loss.crf = fb.log_z - gold_score;

  // Expected minus observed feature counts.
  for (int t = 0; t < T; ++t) {
    const auto& active = features.tokens[static_cast<std::size_t>(t)];
    const int gy = static_cast<int>(gold[static_cast<std::size_t>(t)]);
    for (int f : active) {
      double* row = grad.emission.data() + static_cast<std::size_t>(f) * L;
      for (int y = 0; y < L; ++y)
        row[y] += fb.unary[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)];
      row[gy] -= 1.0;
    }
  }
  for (int y = 0; y < L; ++y)
    for (int q = 0; q < L; ++q)
      grad.transition[static_cast<std::size_t>(y) * L +
                      static_cast<std::size_t>(q)] +=
          fb.pairwise_expected[static_cast<std::size_t>(y)]
                              [static_cast<std::size_t>(q)];
  for (int t = 1; t < T; ++t)
    grad.transition[static_cast<std::size_t>(gold[static_cast<std::size_t>(t - 1)]) * L +
                    static_cast<std::size_t>(gold[static_cast<std::size_t>(t)])] -= 1.0;
  for (int y = 0; y < L; ++y) {
    grad.start[static_cast<std::size_t>(y)] +=
        fb.start_posterior[static_cast<std::size_t>(y)];
    grad.stop[static_cast<std::size_t>(y)] +=
        fb.stop_posterior[static_cast<std::size_t>(y)];
  }
  grad.start[static_cast<std::size_t>(gold.front())] -= 1.0;
  grad.stop[static_cast<std::size_t>(gold.back())] -= 1.0;

  // Classifier head: stable BCE on the logit.
  const double logit = model.classifier_logit(features.pooled);
  const double y = has_definition_gold ? 1.0 : 0.0;
  const double prob = 1.0 / (1.0 + std::exp(-logit));
  loss.classifier = std::max(logit, 0.0) - logit * y +
                    std::log1p(std::exp(-std::abs(logit)));
  loss.classifier_prob = prob;
  const double residual = lambda * (prob - y);
  for (int f : features.pooled)
    grad.classifier[static_cast<std::size_t>(f)] += residual;
  grad.classifier.back() += residual;

  // L2 over all weights except the classifier bias.
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
    loss.l2 = 0.5 * l2 * sq;
  }

  loss.total = loss.crf + lambda * loss.classifier + loss.l2;
  if (!std::isfinite(loss.total))
    throw Error(errc::kDiverged, "non-finite loss");
  return loss;
}

inline std::pair<LossTerms, CrfGradient> neg_log_likelihood_and_gradient(
    const CrfModel& model, const TokenFeatures& features,
    const std::vector<TagLabel>& gold, bool has_definition_gold,
    double lambda = 1.0, double l2 = 0.0) {
  CrfGradient grad = CrfGradient::zeros(model.feature_dim);
  LossTerms loss = add_loss_and_gradient(model, features, gold,
                                         has_definition_gold, lambda, l2, grad);
  return {loss, std::move(grad)};
}

// Max-sum decoding. When constrained, transitions into I-X from anything
// other than B-X/I-X and sequence-initial I-X score -inf, so the output is
// always BIO-valid. Ties break toward the lowest label enum value.
inline std::pair<std::vector<TagLabel>, double> viterbi_decode(
    const CrfModel& model, const TokenFeatures& features,
    bool constrained = true) {
  const int T = static_cast<int>(features.tokens.size());
  if (T == 0) throw Error(errc::kDimension, "viterbi_decode: empty sequence");
  const int L = kNumLabels;
  const double kNegInf = -std::numeric_limits<double>::infinity();

  auto allowed_initial = [&](int y) {
    if (!constrained) return true;
    return y != static_cast<int>(TagLabel::ITerm) &&
           y != static_cast<int>(TagLabel::IDef);
  };
  auto allowed_transition = [&](int from, int to) {
    if (!constrained) return true;
    if (to == static_cast<int>(TagLabel::ITerm))
      return from == static_cast<int>(TagLabel::BTerm) ||
             from == static_cast<int>(TagLabel::ITerm);
    if (to == static_cast<int>(TagLabel::IDef))
      return from == static_cast<int>(TagLabel::BDef) ||
             from == static_cast<int>(TagLabel::IDef);
    return true;
  };

  std::vector<std::array<double, kNumLabels>> delta(
      static_cast<std::size_t>(T));
  std::vector<std::array<int, kNumLabels>> back(static_cast<std::size_t>(T));
  for (int y = 0; y < L; ++y)
    delta[0][static_cast<std::size_t>(y)] =
        allowed_initial(y)
            ? model.start[static_cast<std::size_t>(y)] +
                  model.emission_score(features.tokens[0], y)
            : kNegInf;
  for (int t = 1; t < T; ++t) {
    for (int y = 0; y < L; ++y) {
      double best = kNegInf;
      int best_prev = 0;
      for (int p = 0; p < L; ++p) {
        if (!allowed_transition(p, y)) continue;
        double cand =
            delta[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(p)] +
            model.transition[static_cast<std::size_t>(p) * L +
                             static_cast<std::size_t>(y)];
        if (cand > best) {  // strict: first (lowest) label wins ties
          best = cand;
          best_prev = p;
        }
      }
      delta[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)] =
          best == kNegInf
              ? kNegInf
              : best + model.emission_score(
                           features.tokens[static_cast<std::size_t>(t)], y);
      back[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)] = best_prev;
    }
  }

  double best = kNegInf;
  int best_y = 0;
  for (int y = 0; y < L; ++y) {
    double cand = delta[static_cast<std::size_t>(T - 1)][static_cast<std::size_t>(y)];
    if (cand == kNegInf) continue;
    cand += model.stop[static_cast<std::size_t>(y)];
    if (cand > best) {
      best = cand;
      best_y = y;
    }
  }

  std::vector<TagLabel> labels(static_cast<std::size_t>(T));
  int y = best_y;
  for (int t = T - 1; t >= 0; --t) {
    labels[static_cast<std::size_t>(t)] = static_cast<TagLabel>(y);
    if (t > 0) y = back[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)];
  }
  return {std::move(labels), best};
}

// ---------------------------------------------------------------------------
// Model file: a single-line JSON envelope followed by the raw little-endian
// float64 weight arrays in a fixed order (emission, transition, start, stop,
// classifier). The loader verifies the stored dictionary hash against the
// dictionary it is paired with.
// ---------------------------------------------------------------------------

inline void save_model(const CrfModel& model, const std::string& path) {
  static_assert(sizeof(double) == 8);
  if (std::endian::native != std::endian::little)
    throw Error(errc::kConfig, "model files require a little-endian host");
  nlohmann::json header;
  header["format"] = "symdef-crf";
  header["version"] = 1;
  header["labels"] = nlohmann::json::array();
  for (int y = 0; y < kNumLabels; ++y)
    header["labels"].push_back(to_string(static_cast<TagLabel>(y)));
  header["feature_dim"] = model.feature_dim;
  header["dictionary_hash"] = model.dictionary_hash;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::kIo, "cannot open '" + path + "' for writing");
  out << header.dump() << "\n";
  auto write_array = [&](const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  write_array(model.emission);
  write_array(model.transition);
  write_array(model.start);
  write_array(model.stop);
  write_array(model.classifier);
  if (!out) throw Error(errc::kIo, "write failed for '" + path + "'");
}

inline CrfModel load_model(const std::string& path) {
  if (std::endian::native != std::endian::little)
    throw Error(errc::kConfig, "model files require a little-endian host");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::kIo, "cannot open '" + path + "' for reading");
  std::string header_line;
  if (!std::getline(in, header_line))
    throw Error(errc::kParse, path + ": missing model header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::kParse, path + ": bad model header: " + e.what());
  }
  if (header.value("format", "") != "symdef-crf")
    throw Error(errc::kParse, path + ": not a symdef model file");
  if (header.value("version", 0) != 1)
    throw Error(errc::kParse, path + ": unsupported model version");
  CrfModel model = CrfModel::zeros(header.at("feature_dim").get<int>(),
                                   header.value("dictionary_hash", ""));
  auto read_array = [&](std::vector<double>& v) {
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != v.size() * sizeof(double))
      throw Error(errc::kParse, path + ": truncated weight section");
  };
  read_array(model.emission);
  read_array(model.transition);
  read_array(model.start);
  read_array(model.stop);
  read_array(model.classifier);
  return model;
}

}  // namespace symdef

#endif  // SYMDEF_TAGGER_HPP
