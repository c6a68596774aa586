#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hatebench/common.hpp"
#include "hatebench/feature_matrix.hpp"

namespace hatebench::classifiers {

// ------------------------------------------------------- logistic regression

struct LRParams {
  double learning_rate = 0.1;
  std::size_t epochs = 300;
  double l2 = 1e-4;
  std::uint64_t seed = 0;  // unused: weights start at zero
};

/// Weights act on standardized inputs z_j = (x_j - mean_j) / scale_j.
/// Zero-variance columns keep scale 1.
struct LRModel {
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<double> weights;
  double bias = 0.0;

  std::size_t width() const { return weights.size(); }
  friend bool operator==(const LRModel&, const LRModel&) = default;
};

/// Full-batch gradient descent on
///   L(w, b) = mean_i BCE(sigmoid(w . z_i + b), y_i) + l2/2 * |w|^2.
/// Throws Error on NaN input, fewer than 2 rows, or a single class.
LRModel lr_fit(const FeatureMatrix& x, std::span<const Label> y, const LRParams& params = {});

/// Loss and gradient of the objective above at (weights, bias) for
/// already-standardized rows `z`.
struct LRGradient {
  double loss = 0.0;
  std::vector<double> d_weights;
  double d_bias = 0.0;
};
LRGradient lr_loss_grad(const FeatureMatrix& z, std::span<const Label> y, std::span<const double> weights,
                        double bias, double l2);

/// Column mean and population std; std 0 becomes 1.
void standardization(const FeatureMatrix& x, std::vector<double>& mean, std::vector<double>& scale);

std::vector<double> lr_predict_proba(const LRModel& model, const FeatureMatrix& x);
/// Hate iff P(Hate) >= threshold.
std::vector<Label> lr_predict(const LRModel& model, const FeatureMatrix& x, double threshold = 0.5);

// ------------------------------------------------------------ decision tree

inline constexpr std::size_t kUnlimitedDepth = std::numeric_limits<std::size_t>::max();

struct DTParams {
  std::size_t max_depth = kUnlimitedDepth;
  std::size_t min_samples_split = 2;
  double min_impurity_decrease = 0.0;
};

/// Leaves have feature == -1. counts are training rows routed to the node
/// (bootstrap duplicates counted with multiplicity).
struct DTNode {
  int feature = -1;
  double threshold = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  std::size_t count_nonhate = 0;
  std::size_t count_hate = 0;
  Label label = Label::NonHate;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const DTNode&, const DTNode&) = default;
};

/// nodes[0] is the root.
struct DTModel {
  std::size_t width = 0;
  std::vector<DTNode> nodes;

  std::size_t internal_nodes() const;
  friend bool operator==(const DTModel&, const DTModel&) = default;
};

/// CART with Gini impurity. Candidate thresholds are midpoints between
/// consecutive distinct values; the best split maximizes the impurity
/// decrease, ties going to the lowest feature index and then the lowest
/// threshold. An impure node splits even when the best decrease is zero
/// (XOR), unless min_impurity_decrease is positive. Leaf class is the
/// majority, NonHate on a tie.
/// Throws Error on NaN input or zero rows.
DTModel dt_fit(const FeatureMatrix& x, std::span<const Label> y, const DTParams& params = {});

/// value <= threshold goes left.
std::vector<Label> dt_predict(const DTModel& model, const FeatureMatrix& x);
/// Hate fraction of the training rows in the reached leaf.
std::vector<double> dt_predict_proba(const DTModel& model, const FeatureMatrix& x);

// ------------------------------------------------------------ random forest

enum class MaxFeatures { Sqrt, All };

struct RFParams {
  std::size_t n_trees = 100;
  MaxFeatures max_features = MaxFeatures::Sqrt;
  bool bootstrap = true;
  std::uint64_t seed = 1;
  DTParams tree;
  std::size_t threads = 1;  // does not affect the result
};

struct RFModel {
  std::size_t width = 0;
  MaxFeatures max_features = MaxFeatures::Sqrt;
  std::vector<std::uint64_t> tree_seeds;
  std::vector<DTModel> trees;

  friend bool operator==(const RFModel&, const RFModel&) = default;
};

/// Tree t draws its bootstrap sample (N rows with replacement) and, at every
/// split, a subset of ceil(sqrt(d)) features from SplitMix64(tree_seeds[t]),
/// tree_seeds[t] = substream(seed, t).next().
RFModel rf_fit(const FeatureMatrix& x, std::span<const Label> y, const RFParams& params = {});

/// Majority vote; an even split goes to NonHate.
std::vector<Label> rf_predict(const RFModel& model, const FeatureMatrix& x);
/// Fraction of trees voting Hate.
std::vector<double> rf_predict_proba(const RFModel& model, const FeatureMatrix& x);

Label majority_vote(std::span<const Label> votes);

// -------------------------------------------------------------- naive Bayes

enum class NBVariant { Auto, Gaussian, Multinomial };

/// Gaussian: per-class mean and variance, every variance raised by
/// 1e-9 * (largest column variance of the training matrix); 1e-9 if all
/// columns are constant. Multinomial: rates (count + 1) / (total + d).
struct NBModel {
  NBVariant variant = NBVariant::Gaussian;
  std::size_t width = 0;
  std::array<double, 2> prior{0.5, 0.5};
  std::array<std::vector<double>, 2> mean;
  std::array<std::vector<double>, 2> variance;
  std::array<std::vector<double>, 2> rate;

  friend bool operator==(const NBModel&, const NBModel&) = default;
};

/// Auto picks Multinomial when every value is a nonnegative integer.
NBVariant resolve_variant(const FeatureMatrix& x);

/// Throws Error on NaN input, negative values for Multinomial, or zero rows.
NBModel nb_fit(const FeatureMatrix& x, std::span<const Label> y, NBVariant variant = NBVariant::Auto);

/// Log prior + log likelihood per class.
std::vector<std::array<double, 2>> nb_log_posterior(const NBModel& model, const FeatureMatrix& x);
/// Larger log posterior; a tie goes to NonHate.
std::vector<Label> nb_predict(const NBModel& model, const FeatureMatrix& x);
std::vector<double> nb_predict_proba(const NBModel& model, const FeatureMatrix& x);

// ---------------------------------------------------------- uniform access

enum class ClassifierKind { LR, DT, RF, NB };

std::string_view to_string(ClassifierKind kind);
/// Accepts "LR"/"lr", "DT", "RF", "NB". Throws ConfigError otherwise.
ClassifierKind parse_classifier(std::string_view name);

struct ClassifierConfig {
  LRParams lr;
  DTParams dt;
  RFParams rf;
  NBVariant nb = NBVariant::Auto;
};

using TrainedClassifier = std::variant<LRModel, DTModel, RFModel, NBModel>;

ClassifierKind kind_of(const TrainedClassifier& model);
std::size_t width_of(const TrainedClassifier& model);

TrainedClassifier fit(ClassifierKind kind, const FeatureMatrix& x, std::span<const Label> y,
                      const ClassifierConfig& config = {});
/// Throws Error when the matrix width differs from the training width.
std::vector<Label> predict(const TrainedClassifier& model, const FeatureMatrix& x);
std::vector<double> predict_proba(const TrainedClassifier& model, const FeatureMatrix& x);

/// Flat text, first line "hatebench-model v1", then "kind <lr|dt|rf|nb>" and
/// whitespace-separated fields (layout in docs/model-format.md). Doubles are
/// written in shortest round-trip form, so load(save(m)) == m.
void save_model(std::ostream& out, const TrainedClassifier& model);
TrainedClassifier load_model(std::istream& in);

}  // namespace hatebench::classifiers
