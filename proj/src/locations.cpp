#include "drme/locations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace drme::locations {

namespace {

double quadratic_form(const Vector& mean, const Matrix& cov, double tau, CriterionKind kind) {
  if (kind == CriterionKind::raw_witness) {
    return mean.squaredNorm();
  }
  if (!(tau > 0.0)) {
    throw InputError("criterion: tau must be positive");
  }
  Matrix a = cov;
  a.diagonal().array() += tau;
  const Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success || !a.allFinite()) {
    throw NumericError("non-PSD covariance input");
  }
  return std::max(0.0, mean.dot(llt.solve(mean)));
}

void check_count(Index count, Index available) {
  if (count < 1) {
    throw InputError("location count J must be at least 1");
  }
  if (available < count) {
    throw InputError("dictionary smaller than the requested number of locations (M < J)");
  }
}

} // namespace

std::string to_string(CriterionKind kind) {
  return kind == CriterionKind::whitened ? "whitened" : "raw_witness";
}

CriterionKind parse_criterion_kind(const std::string& name) {
  if (name == "whitened") return CriterionKind::whitened;
  if (name == "raw_witness" || name == "raw") return CriterionKind::raw_witness;
  throw InputError("unknown criterion '" + name + "'");
}

CriterionValue criterion_from_features(const Matrix& features, double tau, CriterionKind kind) {
  const MeanCov mc = mean_and_cov(features);
  CriterionValue out;
  out.value = quadratic_form(mc.mean, mc.covariance, tau, kind);
  out.mean = mc.mean;
  out.covariance = mc.covariance;
  out.tau = tau;
  return out;
}

CriterionValue criterion(const FeatureEngine& engine, const Matrix& locations, double tau,
                         CriterionKind kind) {
  return criterion_from_features(engine.features(locations), tau, kind);
}

Matrix criterion_gradient(const FeatureEngine& engine, const Matrix& locations, double tau,
                          CriterionKind kind) {
  const Matrix z = engine.features(locations);
  const MeanCov mc = mean_and_cov(z);
  const auto m = static_cast<double>(z.rows());

  Vector u;
  Vector row_weights = Vector::Constant(z.rows(), 2.0 / m);
  if (kind == CriterionKind::raw_witness) {
    u = mc.mean;
  } else {
    if (!(tau > 0.0)) {
      throw InputError("criterion_gradient: tau must be positive");
    }
    Matrix a = mc.covariance;
    a.diagonal().array() += tau;
    const Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) {
      throw NumericError("non-PSD covariance input");
    }
    u = llt.solve(mc.mean);
    const Vector centered_u = (z.rowwise() - mc.mean.transpose()) * u;
    row_weights -= (2.0 / (m - 1.0)) * centered_u;
  }
  Matrix grad = engine.weighted_jacobian(locations, row_weights);
  return u.asDiagonal() * grad;
}

double default_learning_ridge(const Matrix& covariance) {
  const double avg_var = covariance.trace() / static_cast<double>(covariance.rows());
  return std::max(1e-3 * avg_var, 1e-8);
}

Dictionary sample_dictionary(const Matrix& outcomes, Index size, std::mt19937_64& rng) {
  if (size < 1) {
    throw InputError("dictionary size must be positive");
  }
  std::vector<Index> rows(static_cast<std::size_t>(outcomes.rows()));
  std::iota(rows.begin(), rows.end(), Index{0});
  std::shuffle(rows.begin(), rows.end(), rng);
  rows.resize(static_cast<std::size_t>(std::min(size, outcomes.rows())));
  Dictionary dict;
  dict.candidates = outcomes(rows, Eigen::all);
  dict.source = Dictionary::Source::training_outcomes;
  dict.source_rows = std::move(rows);
  return dict;
}

DictionaryScorer::DictionaryScorer(const Dictionary& dictionary, const FeatureEngine& engine) {
  if (dictionary.size() == 0) {
    throw InputError("empty dictionary");
  }
  const MeanCov mc = mean_and_cov(engine.features(dictionary.candidates));
  mean_ = mc.mean;
  covariance_ = mc.covariance;
}

double DictionaryScorer::value(const std::vector<Index>& selection, double tau,
                               CriterionKind kind) const {
  const Vector mean = mean_(selection);
  if (kind == CriterionKind::raw_witness) {
    return mean.squaredNorm();
  }
  const Matrix cov = covariance_(selection, selection);
  return quadratic_form(mean, cov, tau, kind);
}

LocationSet make_dictionary_set(const Dictionary& dictionary, const std::vector<Index>& selection,
                                LocationSet::Provenance provenance) {
  LocationSet out;
  out.points = dictionary.candidates(selection, Eigen::all);
  out.provenance = provenance;
  out.indices = selection;
  return out;
}

LocationSet greedy_dictionary_select(const Dictionary& dictionary, Index count,
                                     const FeatureEngine& engine, double tau, CriterionKind kind) {
  check_count(count, dictionary.size());
  const DictionaryScorer scorer(dictionary, engine);
  return greedy_dictionary_select(dictionary, count, scorer, tau, kind);
}

LocationSet greedy_dictionary_select(const Dictionary& dictionary, Index count,
                                     const DictionaryScorer& scorer, double tau,
                                     CriterionKind kind) {
  check_count(count, dictionary.size());
  std::vector<Index> selected;
  std::vector<bool> used(static_cast<std::size_t>(dictionary.size()), false);
  for (Index step = 0; step < count; ++step) {
    Index best = -1;
    double best_value = -1.0;
    std::vector<Index> trial = selected;
    trial.push_back(0);
    for (Index c = 0; c < dictionary.size(); ++c) {
      if (used[static_cast<std::size_t>(c)]) {
        continue;
      }
      trial.back() = c;
      const double value = scorer.value(trial, tau, kind);
      if (value > best_value) {
        best_value = value;
        best = c;
      }
    }
    selected.push_back(best);
    used[static_cast<std::size_t>(best)] = true;
  }
  return make_dictionary_set(dictionary, selected, LocationSet::Provenance::dictionary);
}

LocationSet exhaustive_dictionary_select(const Dictionary& dictionary, Index count,
                                         const DictionaryScorer& scorer, double tau,
                                         CriterionKind kind) {
  check_count(count, dictionary.size());
  double combos = 1.0;
  for (Index k = 0; k < count; ++k) {
    combos *= static_cast<double>(dictionary.size() - k) / static_cast<double>(k + 1);
  }
  if (combos > 1e5) {
    throw InputError("exhaustive selection limited to at most 1e5 candidate subsets");
  }
  std::vector<Index> current(static_cast<std::size_t>(count));
  std::iota(current.begin(), current.end(), Index{0});
  std::vector<Index> best = current;
  double best_value = -1.0;
  const Index M = dictionary.size();
  while (true) {
    const double value = scorer.value(current, tau, kind);
    if (value > best_value) {
      best_value = value;
      best = current;
    }
    // Next combination in lexicographic order.
    Index pos = count - 1;
    while (pos >= 0 && current[static_cast<std::size_t>(pos)] == M - count + pos) {
      --pos;
    }
    if (pos < 0) {
      break;
    }
    ++current[static_cast<std::size_t>(pos)];
    for (Index k = pos + 1; k < count; ++k) {
      current[static_cast<std::size_t>(k)] = current[static_cast<std::size_t>(k - 1)] + 1;
    }
  }
  return make_dictionary_set(dictionary, best, LocationSet::Provenance::dictionary);
}

AscentResult gradient_ascent_optimize(const LocationSet& initial, int steps, double step_size,
                                      const FeatureEngine& engine, double tau, CriterionKind kind) {
  if (!(step_size > 0.0)) {
    throw InputError("gradient ascent: step size must be positive");
  }
  AscentResult out;
  out.locations = initial;
  Matrix current = initial.points;
  double value = criterion(engine, current, tau, kind).value;
  out.trace.push_back(value);

  for (int step = 0; step < steps; ++step) {
    const Matrix grad = criterion_gradient(engine, current, tau, kind);
    const double norm = grad.norm();
    if (!(norm >= 1e-8)) {
      break;
    }
    const Matrix direction = grad / norm;
    double scale = step_size;
    bool accepted = false;
    for (int halving = 0; halving <= 20; ++halving) {
      const Matrix candidate = current + scale * direction;
      const double candidate_value = criterion(engine, candidate, tau, kind).value;
      if (candidate_value >= value) {
        current = candidate;
        value = candidate_value;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) {
      break;
    }
    out.trace.push_back(value);
  }

  if (out.trace.size() > 1) {
    out.locations.points = current;
    out.locations.provenance = LocationSet::Provenance::continuous;
    out.locations.indices.clear();
  }
  return out;
}

LocationSet random_select(const Dictionary& dictionary, Index count, std::mt19937_64& rng) {
  check_count(count, dictionary.size());
  std::vector<Index> order(static_cast<std::size_t>(dictionary.size()));
  std::iota(order.begin(), order.end(), Index{0});
  // Partial Fisher-Yates: the first `count` entries are a uniform draw without replacement.
  for (Index k = 0; k < count; ++k) {
    std::uniform_int_distribution<Index> pick(k, dictionary.size() - 1);
    std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(pick(rng))]);
  }
  order.resize(static_cast<std::size_t>(count));
  return make_dictionary_set(dictionary, order, LocationSet::Provenance::random);
}

} // namespace drme::locations
