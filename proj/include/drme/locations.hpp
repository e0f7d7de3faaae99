#pragma once

#include "drme/drscore.hpp"
#include "drme/types.hpp"

#include <random>
#include <string>
#include <vector>

namespace drme::locations {

/// whitened   : mean' (S + tau I)^{-1} mean, the local-power criterion
/// raw_witness: |mean|^2, the unwhitened ablation
enum class CriterionKind { whitened, raw_witness };

std::string to_string(CriterionKind kind);
CriterionKind parse_criterion_kind(const std::string& name);

struct CriterionValue {
  double value = 0.0;
  Vector mean;
  Matrix covariance;
  double tau = 0.0;
};

CriterionValue criterion_from_features(const Matrix& features, double tau,
                                       CriterionKind kind = CriterionKind::whitened);

/// Criterion of `locations` on the engine's (training) split.
CriterionValue criterion(const FeatureEngine& engine, const Matrix& locations, double tau,
                         CriterionKind kind = CriterionKind::whitened);

/// Analytic gradient with respect to every location (J x d_Y).
///
/// With u = (S + tau I)^{-1} mean and the centered training features Zc,
/// dP/dz_rj = u_j (2/m - 2 (Zc u)_r / (m - 1)); the chain rule through the
/// kernel columns and the regression fits is delegated to the engine.
Matrix criterion_gradient(const FeatureEngine& engine, const Matrix& locations, double tau,
                          CriterionKind kind = CriterionKind::whitened);

/// 1e-3 * (tr(S) / J), floored at 1e-8.
double default_learning_ridge(const Matrix& covariance);

/// Candidate locations c_1..c_M, one per row.
struct Dictionary {
  enum class Source { training_outcomes, user };

  Matrix candidates;
  Source source = Source::user;
  std::vector<Index> source_rows; // rows of the training split, when sampled from it

  Index size() const { return candidates.rows(); }
};

/// M outcomes drawn uniformly without replacement (M is capped at the number of rows).
Dictionary sample_dictionary(const Matrix& outcomes, Index size, std::mt19937_64& rng);

/// Features for every dictionary candidate, computed once; any candidate tuple
/// is scored by selecting columns of the mean and covariance.
class DictionaryScorer {
 public:
  DictionaryScorer(const Dictionary& dictionary, const FeatureEngine& engine);

  Index size() const { return mean_.size(); }
  double value(const std::vector<Index>& selection, double tau, CriterionKind kind) const;
  /// Average feature variance over the dictionary, used for the tau policy.
  double mean_variance() const { return covariance_.trace() / static_cast<double>(size()); }
  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return covariance_; }

 private:
  Vector mean_;
  Matrix covariance_;
};

LocationSet make_dictionary_set(const Dictionary& dictionary, const std::vector<Index>& selection,
                                LocationSet::Provenance provenance);

/// Forward selection: each step adds the candidate maximizing the criterion of
/// the enlarged set; ties go to the lowest index.
LocationSet greedy_dictionary_select(const Dictionary& dictionary, Index count,
                                     const FeatureEngine& engine, double tau,
                                     CriterionKind kind = CriterionKind::whitened);
LocationSet greedy_dictionary_select(const Dictionary& dictionary, Index count,
                                     const DictionaryScorer& scorer, double tau,
                                     CriterionKind kind = CriterionKind::whitened);

/// Exhaustive search over distinct candidate subsets; requires C(M, J) <= 1e5.
LocationSet exhaustive_dictionary_select(const Dictionary& dictionary, Index count,
                                         const DictionaryScorer& scorer, double tau,
                                         CriterionKind kind = CriterionKind::whitened);

struct AscentResult {
  LocationSet locations;
  std::vector<double> trace; // criterion at the start and after each accepted step
};

/// Gradient ascent on the locations. Each step moves by `step_size` along the
/// normalized gradient and is accepted only if the criterion does not decrease,
/// halving the step up to 20 times.
AscentResult gradient_ascent_optimize(const LocationSet& initial, int steps, double step_size,
                                      const FeatureEngine& engine, double tau,
                                      CriterionKind kind = CriterionKind::whitened);

/// J distinct candidates drawn uniformly without replacement.
LocationSet random_select(const Dictionary& dictionary, Index count, std::mt19937_64& rng);

} // namespace drme::locations
