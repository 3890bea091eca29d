// Copyright 2026 The Nightlights Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nightlights/models.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>
#include <sstream>

#include "nightlights/csv.h"
#include "nightlights/errors.h"
#include "nightlights/random.h"

namespace nightlights {
namespace {

static_assert(std::endian::native == std::endian::little,
              "model I/O assumes a little-endian host");

constexpr char kMagic[4] = {'L', 'F', 'M', '1'};
constexpr uint32_t kVersion = 1;

class ByteWriter {
 public:
  template <typename T>
  void Put(T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    buf_.append(b, sizeof(T));
  }
  void PutString(const std::string& s) {
    Put<uint32_t>(static_cast<uint32_t>(s.size()));
    buf_ += s;
  }
  template <typename T>
  void PutArray(const std::vector<T>& v) {
    Put<uint32_t>(static_cast<uint32_t>(v.size()));
    for (const T& x : v) Put<T>(x);
  }
  const std::string& data() const { return buf_; }
  void Append(std::string_view raw) { buf_.append(raw); }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string data, std::string path)
      : data_(std::move(data)), path_(std::move(path)) {}

  template <typename T>
  T Get() {
    Need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string GetString() {
    const uint32_t n = Get<uint32_t>();
    Need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename T>
  std::vector<T> GetArray() {
    const uint32_t n = Get<uint32_t>();
    Need(static_cast<std::size_t>(n) * sizeof(T));
    std::vector<T> v(n);
    for (auto& x : v) x = Get<T>();
    return v;
  }
  std::string_view Raw(std::size_t n) {
    Need(n);
    std::string_view s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }
  [[noreturn]] void Fail(const std::string& what) const {
    throw FormatError(path_, 0, what);
  }

 private:
  void Need(std::size_t n) const {
    if (data_.size() - pos_ < n) Fail("truncated model file");
  }
  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

void PutVector(ByteWriter& w, const Eigen::VectorXd& v) {
  w.PutArray(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd GetVector(ByteReader& r) {
  const std::vector<double> v = r.GetArray<double>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd SelectRows(const Eigen::MatrixXd& x,
                           std::span<const Eigen::Index> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  }
  return out;
}

Eigen::VectorXd SelectRows(const Eigen::VectorXd& y,
                           std::span<const Eigen::Index> rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = y(rows[i]);
  }
  return out;
}

}  // namespace

std::string_view ModelKindName(ModelKind kind) {
  return kind == ModelKind::kLinear ? "linear" : "forest";
}

ModelKind ParseModelKind(std::string_view name) {
  if (name == "linear") return ModelKind::kLinear;
  if (name == "forest") return ModelKind::kForest;
  throw InvalidArgumentError("unknown model kind '" + std::string(name) + "'");
}

Eigen::VectorXd TrainedModel::Predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out =
      kind == ModelKind::kLinear ? linear.Predict(x) : forest.Predict(x);
  if (log_target) out = out.array().unaryExpr([](double v) {
    return std::expm1(v);
  });
  return out;
}

TrainedModel TrainModel(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const ModelSpec& spec, uint64_t seed,
                        std::span<const std::string> columns) {
  TrainedModel m;
  m.kind = spec.kind;
  m.log_target = spec.log_target;
  m.columns.assign(columns.begin(), columns.end());
  Eigen::VectorXd target = y;
  if (spec.log_target) {
    if ((y.array() <= -1).any()) {
      throw InvalidArgumentError("log1p target requires y > -1");
    }
    target = y.array().log1p();
  }
  if (spec.kind == ModelKind::kLinear) {
    m.linear = FitLinear(x, target, columns);
  } else {
    m.forest = FitForest(x, target, spec.forest, seed);
  }
  return m;
}

void WriteModel(const TrainedModel& model, const std::string& path) {
  ByteWriter w;
  w.Append(std::string_view(kMagic, 4));
  w.Put<uint32_t>(kVersion);
  w.Put<uint8_t>(model.kind == ModelKind::kLinear ? 0 : 1);
  w.Put<uint8_t>(model.log_target ? 1 : 0);
  w.Put<uint32_t>(static_cast<uint32_t>(model.columns.size()));
  for (const auto& c : model.columns) w.PutString(c);
  if (model.kind == ModelKind::kLinear) {
    w.Put<double>(model.linear.intercept);
    w.Put<double>(model.linear.intercept_p_value);
    PutVector(w, model.linear.coefficients);
    PutVector(w, model.linear.p_values);
  } else {
    const ForestModel& f = model.forest;
    w.Put<int32_t>(f.params.n_trees);
    w.Put<int32_t>(f.params.max_depth);
    w.Put<int32_t>(f.params.min_leaf);
    w.Put<int32_t>(f.params.features_per_split);
    w.Put<uint8_t>(f.params.bootstrap ? 1 : 0);
    w.Put<uint64_t>(f.seed);
    w.Put<int32_t>(f.n_features);
    w.Put<uint32_t>(static_cast<uint32_t>(f.trees.size()));
    for (const RegressionTree& t : f.trees) {
      w.PutArray(t.feature);
      w.PutArray(t.threshold);
      w.PutArray(t.left);
      w.PutArray(t.right);
      w.PutArray(t.value);
      w.PutArray(t.count);
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot create " + path);
  out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
  out.close();
  if (!out) throw Error("write failed: " + path);
}

TrainedModel ReadModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError(path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  ByteReader r(std::move(data), path);
  if (r.Raw(4) != std::string_view(kMagic, 4)) r.Fail("not an LFM1 model");
  if (r.Get<uint32_t>() != kVersion) r.Fail("unsupported model version");
  TrainedModel m;
  const uint8_t kind = r.Get<uint8_t>();
  if (kind > 1) r.Fail("unknown model kind");
  m.kind = kind == 0 ? ModelKind::kLinear : ModelKind::kForest;
  m.log_target = r.Get<uint8_t>() != 0;
  const uint32_t n_cols = r.Get<uint32_t>();
  for (uint32_t i = 0; i < n_cols; ++i) m.columns.push_back(r.GetString());
  if (m.kind == ModelKind::kLinear) {
    m.linear.intercept = r.Get<double>();
    m.linear.intercept_p_value = r.Get<double>();
    m.linear.coefficients = GetVector(r);
    m.linear.p_values = GetVector(r);
    if (m.linear.p_values.size() != m.linear.coefficients.size()) {
      r.Fail("coefficient and p-value counts differ");
    }
  } else {
    ForestModel& f = m.forest;
    f.params.n_trees = r.Get<int32_t>();
    f.params.max_depth = r.Get<int32_t>();
    f.params.min_leaf = r.Get<int32_t>();
    f.params.features_per_split = r.Get<int32_t>();
    f.params.bootstrap = r.Get<uint8_t>() != 0;
    f.seed = r.Get<uint64_t>();
    f.n_features = r.Get<int32_t>();
    const uint32_t n_trees = r.Get<uint32_t>();
    for (uint32_t i = 0; i < n_trees; ++i) {
      RegressionTree t;
      t.feature = r.GetArray<int32_t>();
      t.threshold = r.GetArray<double>();
      t.left = r.GetArray<int32_t>();
      t.right = r.GetArray<int32_t>();
      t.value = r.GetArray<double>();
      t.count = r.GetArray<int32_t>();
      const std::size_t nodes = t.feature.size();
      if (nodes == 0 || t.threshold.size() != nodes || t.left.size() != nodes ||
          t.right.size() != nodes || t.value.size() != nodes ||
          t.count.size() != nodes) {
        r.Fail("inconsistent tree arrays");
      }
      for (std::size_t k = 0; k < nodes; ++k) {
        if (t.feature[k] >= f.n_features) r.Fail("feature index out of range");
        if (t.feature[k] < 0) continue;
        // Children always follow their parent, which rules out cycles.
        const auto ok = [&](int32_t c) {
          return c > static_cast<int32_t>(k) &&
                 c < static_cast<int32_t>(nodes);
        };
        if (!ok(t.left[k]) || !ok(t.right[k])) r.Fail("bad child index");
      }
      f.trees.push_back(std::move(t));
    }
  }
  if (!r.done()) r.Fail("trailing bytes in model file");
  return m;
}

BlockKey BlockOf(const LatLng& p, double block_size_deg) {
  const int n_lng = LngBlockCount(block_size_deg);
  int lng = static_cast<int>(std::floor((p.lng() + 180.0) / block_size_deg));
  lng = ((lng % n_lng) + n_lng) % n_lng;
  return {static_cast<int>(std::floor(p.lat() / block_size_deg)), lng};
}

int LngBlockCount(double block_size_deg) {
  return std::max(1, static_cast<int>(std::ceil(360.0 / block_size_deg - 1e-9)));
}

bool BlocksAdjacent(const BlockKey& a, const BlockKey& b,
                    double block_size_deg) {
  if (std::abs(a.lat - b.lat) > 1) return false;
  const int n_lng = LngBlockCount(block_size_deg);
  const int d = ((a.lng - b.lng) % n_lng + n_lng) % n_lng;
  return d <= 1 || d >= n_lng - 1;
}

void FoldScheme::Validate() const {
  if (k < 2) throw InvalidArgumentError("fold count k must be >= 2");
  if (!(block_size_deg > 0) || block_size_deg > 180) {
    throw InvalidArgumentError("block size must be in (0, 180] degrees");
  }
}

std::string_view FoldKindName(FoldScheme::Kind kind) {
  switch (kind) {
    case FoldScheme::Kind::kRandomK:
      return "random";
    case FoldScheme::Kind::kBlock:
      return "block";
    case FoldScheme::Kind::kBlockBuffered:
      return "block-buffered";
  }
  return "unknown";
}

FoldScheme::Kind ParseFoldKind(std::string_view name) {
  if (name == "random" || name == "random-k") return FoldScheme::Kind::kRandomK;
  if (name == "block") return FoldScheme::Kind::kBlock;
  if (name == "block-buffered") return FoldScheme::Kind::kBlockBuffered;
  throw InvalidArgumentError("unknown fold scheme '" + std::string(name) + "'");
}

std::vector<int> AssignFolds(std::size_t n, std::span<const LatLng> coords,
                             const FoldScheme& scheme, uint64_t seed) {
  scheme.Validate();
  std::vector<int> folds(n, 0);
  if (scheme.kind == FoldScheme::Kind::kRandomK) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    CounterRng rng({seed, 0x666f6c6473ULL});
    Shuffle(std::span<std::size_t>(order), rng);
    for (std::size_t i = 0; i < n; ++i) {
      folds[order[i]] = static_cast<int>(i % static_cast<std::size_t>(scheme.k));
    }
    return folds;
  }
  if (coords.size() != n) {
    throw InvalidArgumentError("block folds need one coordinate per row");
  }
  std::set<BlockKey> blocks;
  for (const LatLng& c : coords) blocks.insert(BlockOf(c, scheme.block_size_deg));
  if (blocks.size() < static_cast<std::size_t>(scheme.k)) {
    throw InvalidArgumentError(
        "block scheme needs at least " + std::to_string(scheme.k) +
        " populated blocks, found " + std::to_string(blocks.size()));
  }
  std::vector<std::pair<uint64_t, BlockKey>> order;
  for (const BlockKey& b : blocks) {
    order.emplace_back(HashWords({seed, static_cast<uint64_t>(b.lat),
                                  static_cast<uint64_t>(b.lng)}),
                       b);
  }
  std::sort(order.begin(), order.end());
  std::map<BlockKey, int> block_fold;
  for (std::size_t i = 0; i < order.size(); ++i) {
    block_fold[order[i].second] =
        static_cast<int>(i % static_cast<std::size_t>(scheme.k));
  }
  for (std::size_t i = 0; i < n; ++i) {
    folds[i] = block_fold.at(BlockOf(coords[i], scheme.block_size_deg));
  }
  return folds;
}

std::vector<Eigen::Index> TrainingRows(std::span<const int> folds, int fold,
                                       std::span<const LatLng> coords,
                                       const FoldScheme& scheme) {
  std::vector<Eigen::Index> rows;
  if (scheme.kind != FoldScheme::Kind::kBlockBuffered) {
    for (std::size_t i = 0; i < folds.size(); ++i) {
      if (folds[i] != fold) rows.push_back(static_cast<Eigen::Index>(i));
    }
    return rows;
  }
  std::set<BlockKey> held_out;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    if (folds[i] == fold) {
      held_out.insert(BlockOf(coords[i], scheme.block_size_deg));
    }
  }
  const int n_lng = LngBlockCount(scheme.block_size_deg);
  std::set<BlockKey> excluded;
  for (const BlockKey& b : held_out) {
    for (int dlat = -1; dlat <= 1; ++dlat) {
      for (int dlng = -1; dlng <= 1; ++dlng) {
        excluded.insert({b.lat + dlat, ((b.lng + dlng) % n_lng + n_lng) % n_lng});
      }
    }
  }
  for (std::size_t i = 0; i < folds.size(); ++i) {
    if (folds[i] == fold) continue;
    if (excluded.contains(BlockOf(coords[i], scheme.block_size_deg))) continue;
    rows.push_back(static_cast<Eigen::Index>(i));
  }
  return rows;
}

CvReport MakeCvReport(const Eigen::VectorXd& y, const Eigen::VectorXd& pred,
                      std::span<const int> folds, int n_folds) {
  CvReport r;
  r.fold_sizes.assign(static_cast<std::size_t>(n_folds), 0);
  r.fold_mae.assign(static_cast<std::size_t>(n_folds), 0.0);
  r.fold_mse.assign(static_cast<std::size_t>(n_folds), 0.0);
  for (std::size_t i = 0; i < folds.size(); ++i) {
    const int f = folds[i];
    if (f < 0) continue;
    const double e = pred(static_cast<Eigen::Index>(i)) -
                     y(static_cast<Eigen::Index>(i));
    r.fold_sizes[f] += 1;
    r.fold_mae[f] += std::abs(e);
    r.fold_mse[f] += e * e;
  }
  double abs_total = 0, sq_total = 0;
  for (int f = 0; f < n_folds; ++f) {
    abs_total += r.fold_mae[f];
    sq_total += r.fold_mse[f];
    r.rows += r.fold_sizes[f];
    if (r.fold_sizes[f] > 0) {
      r.fold_mae[f] /= static_cast<double>(r.fold_sizes[f]);
      r.fold_mse[f] /= static_cast<double>(r.fold_sizes[f]);
    }
  }
  if (r.rows > 0) {
    r.mae = abs_total / static_cast<double>(r.rows);
    r.mse = sq_total / static_cast<double>(r.rows);
  }
  return r;
}

CvResult CrossValidate(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       std::span<const LatLng> coords, const ModelSpec& spec,
                       const FoldScheme& scheme, uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  if (static_cast<std::size_t>(y.size()) != n) {
    throw InvalidArgumentError("design and target row counts differ");
  }
  if (n < static_cast<std::size_t>(scheme.k)) {
    throw InvalidArgumentError("fewer rows than folds");
  }
  CvResult result;
  result.folds = AssignFolds(n, coords, scheme, seed);
  result.predictions = Eigen::VectorXd::Zero(x.rows());
  for (int f = 0; f < scheme.k; ++f) {
    const std::vector<Eigen::Index> train =
        TrainingRows(result.folds, f, coords, scheme);
    std::vector<Eigen::Index> test;
    for (std::size_t i = 0; i < n; ++i) {
      if (result.folds[i] == f) test.push_back(static_cast<Eigen::Index>(i));
    }
    if (test.empty()) continue;
    if (train.empty()) {
      throw InvalidArgumentError("fold " + std::to_string(f) +
                                 " has no training rows");
    }
    const TrainedModel model =
        TrainModel(SelectRows(x, train), SelectRows(y, train), spec,
                   HashWords({seed, static_cast<uint64_t>(f)}));
    const Eigen::VectorXd pred = model.Predict(SelectRows(x, test));
    for (std::size_t i = 0; i < test.size(); ++i) {
      result.predictions(test[i]) = pred(static_cast<Eigen::Index>(i));
    }
  }
  result.report = MakeCvReport(y, result.predictions, result.folds, scheme.k);
  return result;
}

void WriteCvReport(const CvReport& report, const std::string& path) {
  TextWriter out(path);
  out.WriteLine("fold,rows,mae,mse");
  for (std::size_t f = 0; f < report.fold_sizes.size(); ++f) {
    out.WriteLine(std::to_string(f) + "," +
                  std::to_string(report.fold_sizes[f]) + "," +
                  FormatDouble(report.fold_mae[f]) + "," +
                  FormatDouble(report.fold_mse[f]));
  }
  out.WriteLine("all," + std::to_string(report.rows) + "," +
                FormatDouble(report.mae) + "," + FormatDouble(report.mse));
  out.Close();
}

std::string FormatCvReport(const CvReport& report, std::string_view title) {
  std::ostringstream s;
  s << title << "\n";
  char line[128];
  std::snprintf(line, sizeof(line), "  %-6s %8s %14s %14s\n", "fold", "rows",
                "MAE", "MSE");
  s << line;
  for (std::size_t f = 0; f < report.fold_sizes.size(); ++f) {
    std::snprintf(line, sizeof(line), "  %-6zu %8zu %14.6g %14.6g\n", f,
                  report.fold_sizes[f], report.fold_mae[f], report.fold_mse[f]);
    s << line;
  }
  std::snprintf(line, sizeof(line), "  %-6s %8zu %14.6g %14.6g\n", "all",
                report.rows, report.mae, report.mse);
  s << line;
  return s.str();
}

RegionalResult FitRegional(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           std::span<const std::string> regions,
                           const ForestParams& forest, int k, uint64_t seed,
                           std::span<const std::string> columns) {
  if (regions.empty()) throw InvalidArgumentError("empty region set");
  if (static_cast<Eigen::Index>(regions.size()) != x.rows() ||
      y.size() != x.rows()) {
    throw InvalidArgumentError("region labels misaligned with rows");
  }
  std::map<std::string, std::vector<Eigen::Index>> by_region;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    by_region[regions[i]].push_back(static_cast<Eigen::Index>(i));
  }
  RegionalResult result;
  const std::size_t min_rows =
      static_cast<std::size_t>(k) * static_cast<std::size_t>(forest.min_leaf);
  std::vector<std::pair<std::string, std::vector<Eigen::Index>>> usable;
  for (auto& [region, rows] : by_region) {
    if (rows.size() < min_rows) {
      result.warnings.push_back("region '" + region + "' skipped: " +
                                std::to_string(rows.size()) + " rows < " +
                                std::to_string(min_rows));
      continue;
    }
    usable.emplace_back(region, std::move(rows));
  }
  const FoldScheme scheme{FoldScheme::Kind::kRandomK, k, 1.0};
  result.fits.resize(usable.size());
  for (std::size_t r = 0; r < usable.size(); ++r) {
    const auto& [region, rows] = usable[r];
    const Eigen::MatrixXd xr = SelectRows(x, rows);
    const Eigen::VectorXd yr = SelectRows(y, rows);
    RegionalFit& fit = result.fits[r];
    fit.region = region;
    fit.rows = rows.size();
    ModelSpec lin{ModelKind::kLinear, forest, false};
    ModelSpec fst{ModelKind::kForest, forest, false};
    fit.linear_cv = CrossValidate(xr, yr, {}, lin, scheme, seed).report;
    fit.forest_cv = CrossValidate(xr, yr, {}, fst, scheme, seed).report;
    fit.linear = TrainModel(xr, yr, lin, seed, columns);
    fit.forest = TrainModel(xr, yr, fst, seed, columns);
  }
  return result;
}

}  // namespace nightlights
