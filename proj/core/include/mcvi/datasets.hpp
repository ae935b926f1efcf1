#pragma once

#include "mcvi/numerics.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcvi {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Stop counts and arrest exposures on an ethnicity x precinct grid.
struct FriskDataset {
  int ethnicities = 0;
  int precincts = 0;
  /// Row-major ethnicities x precincts.
  std::vector<long> stops;     // Y_ep >= 0
  std::vector<long> arrests;   // N_ep >= 1
  std::optional<std::uint64_t> seed;
  double hyper_scale = 10.0;
  /// Latents the synthetic generator drew, laid out like the model's z.
  std::optional<Vec> truth;

  long stop(int e, int p) const { return stops[static_cast<std::size_t>(e * precincts + p)]; }
  long arrest(int e, int p) const { return arrests[static_cast<std::size_t>(e * precincts + p)]; }
  void validate() const;
};

/// Draws a dataset from the hierarchical Poisson prior with the given
/// hyper-prior scale (1 keeps prior-sampled rates finite). Arrest counts are
/// uniform on [20, 200].
FriskDataset generate_frisk_synthetic(int ethnicities, int precincts, std::uint64_t seed, double hyper_scale = 1.0);

void write_frisk_csv(const FriskDataset& data, const std::filesystem::path& path);
FriskDataset read_frisk_csv(const std::filesystem::path& path);

/// Standardized regression data: every column of X and y has zero mean and
/// unit (population) variance.
struct RegressionDataset {
  Mat x;  // N x P
  Vec y;  // N
  std::vector<std::string> feature_names;
  std::string target_name;

  std::size_t rows() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t features() const { return static_cast<std::size_t>(x.cols()); }
};

/// Reads a headered CSV (';' or ',' delimited, last column is the target),
/// shuffles rows with `seed`, keeps the first `max_rows` (0 = all), and
/// standardizes.
RegressionDataset load_regression_csv(const std::filesystem::path& path, std::size_t max_rows, std::uint64_t seed);

/// Centers and scales every column; throws DataError on constant columns.
void standardize(RegressionDataset& data);

/// Synthetic nonlinear regression data with `features` inputs, already
/// standardized.
RegressionDataset generate_regression_synthetic(std::size_t rows, std::size_t features, std::uint64_t seed);

void write_regression_csv(const RegressionDataset& data, const std::filesystem::path& path, char delimiter = ';');

}  // namespace mcvi
