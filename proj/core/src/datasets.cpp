#include "mcvi/datasets.hpp"

#include "mcvi/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

namespace mcvi {

void FriskDataset::validate() const {
  if (ethnicities < 1 || precincts < 1) throw DataError("frisk data: need at least one ethnicity and one precinct");
  const auto cells = static_cast<std::size_t>(ethnicities) * static_cast<std::size_t>(precincts);
  if (stops.size() != cells || arrests.size() != cells) throw DataError("frisk data: array shapes inconsistent");
  for (std::size_t i = 0; i < cells; ++i) {
    if (stops[i] < 0) throw DataError("frisk data: negative stop count");
    if (arrests[i] < 1) throw DataError("frisk data: arrest exposure must be >= 1");
  }
}

FriskDataset generate_frisk_synthetic(int ethnicities, int precincts, std::uint64_t seed, double hyper_scale) {
  if (ethnicities < 1 || precincts < 1) throw std::invalid_argument("generate_frisk_synthetic: E and P must be >= 1");
  RngStream latent_rng(seed, {0, 0, Purpose::kData});
  const double mu = hyper_scale * latent_rng.normal();
  const double log_var_alpha = hyper_scale * latent_rng.normal();
  const double log_var_beta = hyper_scale * latent_rng.normal();
  const double sd_alpha = std::exp(0.5 * log_var_alpha);
  const double sd_beta = std::exp(0.5 * log_var_beta);

  Vec truth(3 + ethnicities + precincts);
  truth[0] = mu;
  truth[1] = log_var_alpha;
  truth[2] = log_var_beta;
  for (int e = 0; e < ethnicities; ++e) truth[3 + e] = sd_alpha * latent_rng.normal();
  for (int p = 0; p < precincts; ++p) truth[3 + ethnicities + p] = sd_beta * latent_rng.normal();

  FriskDataset data;
  data.ethnicities = ethnicities;
  data.precincts = precincts;
  data.seed = seed;
  data.hyper_scale = hyper_scale;
  const auto cells = static_cast<std::size_t>(ethnicities * precincts);
  data.stops.resize(cells);
  data.arrests.resize(cells);

  RngStream count_rng(seed, {0, 1, Purpose::kData});
  std::uniform_int_distribution<long> exposure(20, 200);
  for (int e = 0; e < ethnicities; ++e) {
    for (int p = 0; p < precincts; ++p) {
      const auto i = static_cast<std::size_t>(e * precincts + p);
      data.arrests[i] = exposure(count_rng);
      const double rate = static_cast<double>(data.arrests[i]) * std::exp(mu + truth[3 + e] + truth[3 + ethnicities + p]);
      std::poisson_distribution<long> poisson(rate);
      data.stops[i] = poisson(count_rng);
    }
  }
  data.truth = std::move(truth);
  data.validate();
  return data;
}

void write_frisk_csv(const FriskDataset& data, const std::filesystem::path& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "# seed=" << (data.seed ? std::to_string(*data.seed) : std::string("none"))
      << ", hyper_scale=" << std::setprecision(17) << data.hyper_scale << '\n';
  out << "ethnicity_index,precinct_index,arrests,stops\n";
  for (int e = 0; e < data.ethnicities; ++e)
    for (int p = 0; p < data.precincts; ++p)
      out << e << ',' << p << ',' << data.arrest(e, p) << ',' << data.stop(e, p) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, delimiter)) fields.push_back(trim(field));
  if (!line.empty() && line.back() == delimiter) fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(context + ": cannot parse '" + s + "' as a number");
  }
}

long parse_long(const std::string& s, const std::string& context) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(context + ": cannot parse '" + s + "' as an integer");
  }
}

}  // namespace

FriskDataset read_frisk_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  FriskDataset data;
  std::string line;
  bool header_seen = false;
  struct Row {
    long e, p, n, y;
  };
  std::vector<Row> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (line.front() == '#') {
      const auto seed_pos = line.find("seed=");
      if (seed_pos != std::string::npos) {
        const auto value = trim(line.substr(seed_pos + 5, line.find(',', seed_pos) - seed_pos - 5));
        if (value != "none") data.seed = std::stoull(value);
      }
      const auto scale_pos = line.find("hyper_scale=");
      if (scale_pos != std::string::npos) data.hyper_scale = std::stod(line.substr(scale_pos + 12));
      continue;
    }
    const auto fields = split(line, ',');
    if (!header_seen) {
      header_seen = true;
      if (fields.size() != 4 || fields[0] != "ethnicity_index") {
        throw DataError(path.string() + ": expected header ethnicity_index,precinct_index,arrests,stops");
      }
      continue;
    }
    if (fields.size() != 4) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 4 columns");
    const std::string ctx = path.string() + ":" + std::to_string(line_no);
    rows.push_back({parse_long(fields[0], ctx), parse_long(fields[1], ctx), parse_long(fields[2], ctx),
                    parse_long(fields[3], ctx)});
  }
  if (rows.empty()) throw DataError(path.string() + ": no data rows");
  long max_e = 0;
  long max_p = 0;
  for (const auto& r : rows) {
    if (r.e < 0 || r.p < 0) throw DataError(path.string() + ": negative index");
    max_e = std::max(max_e, r.e);
    max_p = std::max(max_p, r.p);
  }
  data.ethnicities = static_cast<int>(max_e + 1);
  data.precincts = static_cast<int>(max_p + 1);
  const auto cells = static_cast<std::size_t>(data.ethnicities * data.precincts);
  data.stops.assign(cells, -1);
  data.arrests.assign(cells, 0);
  std::vector<bool> seen(cells, false);
  for (const auto& r : rows) {
    const auto i = static_cast<std::size_t>(r.e * data.precincts + r.p);
    if (seen[i]) throw DataError(path.string() + ": duplicate cell");
    seen[i] = true;
    data.arrests[i] = r.n;
    data.stops[i] = r.y;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw DataError(path.string() + ": grid is incomplete");
  }
  data.validate();
  return data;
}

void standardize(RegressionDataset& data) {
  const auto n = static_cast<double>(data.x.rows());
  if (data.x.rows() < 2) throw DataError("standardize: need at least 2 rows");
  auto scale_column = [&](auto&& col, const std::string& name) {
    const double mean = col.sum() / n;
    col.array() -= mean;
    const double sd = std::sqrt(col.squaredNorm() / n);
    if (!(sd > 0.0)) throw DataError("standardize: column '" + name + "' is constant");
    col /= sd;
  };
  for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
    const auto name = static_cast<std::size_t>(j) < data.feature_names.size() ? data.feature_names[j]
                                                                                 : std::to_string(j);
    scale_column(data.x.col(j), name);
  }
  scale_column(data.y, data.target_name);
}

RegressionDataset load_regression_csv(const std::filesystem::path& path, std::size_t max_rows, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw DataError(path.string() + ": empty file");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const char delimiter = header.find(';') != std::string::npos ? ';' : ',';
  const auto names = split(header, delimiter);
  if (names.size() < 2) throw DataError(path.string() + ": need at least one feature and a target column");

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split(line, delimiter);
    const std::string ctx = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != names.size()) throw DataError(ctx + ": expected " + std::to_string(names.size()) + " columns");
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      if (f.empty() || f == "NA" || f == "nan") throw DataError(ctx + ": missing value");
      row.push_back(parse_double(f, ctx));
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw DataError(path.string() + ": need at least 2 data rows");

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  RngStream rng(seed, {0, 0, Purpose::kShuffle});
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(order[i], order[j]);
  }
  const std::size_t keep = max_rows == 0 ? rows.size() : std::min(max_rows, rows.size());

  RegressionDataset data;
  const auto p = static_cast<Eigen::Index>(names.size() - 1);
  data.feature_names.assign(names.begin(), names.end() - 1);
  data.target_name = names.back();
  data.x.resize(static_cast<Eigen::Index>(keep), p);
  data.y.resize(static_cast<Eigen::Index>(keep));
  for (std::size_t r = 0; r < keep; ++r) {
    const auto& row = rows[order[r]];
    for (Eigen::Index j = 0; j < p; ++j) data.x(static_cast<Eigen::Index>(r), j) = row[static_cast<std::size_t>(j)];
    data.y[static_cast<Eigen::Index>(r)] = row.back();
  }
  standardize(data);
  return data;
}

RegressionDataset generate_regression_synthetic(std::size_t rows, std::size_t features, std::uint64_t seed) {
  if (rows < 2 || features < 1) throw std::invalid_argument("generate_regression_synthetic: need rows >= 2, features >= 1");
  RngStream rng(seed, {0, 2, Purpose::kData});
  const auto n = static_cast<Eigen::Index>(rows);
  const auto p = static_cast<Eigen::Index>(features);
  RegressionDataset data;
  data.x.resize(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) data.x(i, j) = rng.normal();
  Vec coef(p);
  for (Eigen::Index j = 0; j < p; ++j) coef[j] = rng.normal() / std::sqrt(static_cast<double>(p));
  data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lin = data.x.row(i).dot(coef);
    data.y[i] = lin + 0.5 * std::tanh(2.0 * data.x(i, 0)) + 0.3 * rng.normal();
  }
  for (Eigen::Index j = 0; j < p; ++j) data.feature_names.push_back("x" + std::to_string(j + 1));
  data.target_name = "y";
  standardize(data);
  return data;
}

void write_regression_csv(const RegressionDataset& data, const std::filesystem::path& path, char delimiter) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
    const auto name = static_cast<std::size_t>(j) < data.feature_names.size() ? data.feature_names[j]
                                                                                 : "x" + std::to_string(j + 1);
    out << '"' << name << '"' << delimiter;
  }
  out << '"' << (data.target_name.empty() ? "y" : data.target_name) << "\"\n";
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) out << data.x(i, j) << delimiter;
    out << data.y[i] << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace mcvi
