// Synthetic nearest-neighbor-network generator, Gaussian sampling, sample
// covariances, the (w1, w2) penalty reparameterization, and problem
// ingestion from manifest files.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <utility>

#include <json.hpp>

#include "ggl/io.hpp"

namespace ggl {

using json = nlohmann::json;

// Deterministic draws on top of mt19937_64; the mapping from raw 64-bit
// words to doubles is pinned here so outputs are bit-reproducible from the
// seed alone.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // unbiased integer in [0, n)
  std::uint64_t bounded(std::uint64_t n) {
    const std::uint64_t lim = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= lim);
    return x % n;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  // value uniform on [-1,-0.5] U [0.5,1]
  double edge_value() {
    const double mag = uniform(0.5, 1.0);
    return uniform01() < 0.5 ? -mag : mag;
  }

private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

struct EdgeEntry {
  int i, j;  // i < j
  double value;
};

// Planted precision matrices: a common mutual-kNN network shared by all
// classes plus per-class extra edges, diagonals set by diagonal dominance.
struct GroundTruth {
  std::vector<Matrix> precisions;           // K symmetric PD p x p
  std::vector<EdgeEntry> common_edges;      // shared positions and values
  std::vector<std::vector<EdgeEntry>> extra_edges;  // per class
  int common_edge_count = 0;                // N

  int classes() const { return static_cast<int>(precisions.size()); }
  int dim() const { return precisions.empty() ? 0 : static_cast<int>(precisions.front().rows()); }
};

// S = (1/n) W^T W (rows are observations, no centering).
inline Matrix sample_covariance(const Matrix& w) {
  if (w.rows() < 1 || w.cols() < 1) throw std::invalid_argument("sample_covariance: empty input");
  Matrix s = (w.transpose() * w) / static_cast<double>(w.rows());
  return ((s + s.transpose()) * 0.5).eval();
}

// p uniform points on the unit square; link two points iff each is among
// the other's `neighbors` nearest (ties broken by point index). Each class
// then receives ceil(N / extra_denom) extra symmetric entries at positions
// free in the common network (extra_denom <= 0 disables extras). All edge
// values are uniform on [-1,-0.5] U [0.5,1]; common-edge values are drawn
// once and shared across classes. The diagonal is the uniform shift
// |lambda_min(off-diagonal part)| + 0.1, so every block is PD with smallest
// eigenvalue exactly 0.1 and the planted sparsity pattern untouched.
inline GroundTruth gen_nn_network(int p, int k_classes, int neighbors, int extra_denom,
                                  std::uint64_t seed) {
  if (k_classes < 1) throw std::invalid_argument("gen_nn_network: K must be positive");
  if (neighbors < 1 || p < neighbors + 1)
    throw std::invalid_argument("gen_nn_network: need p >= neighbors + 1");
  Rng rng(seed);
  std::vector<std::pair<double, double>> pts(static_cast<size_t>(p));
  for (auto& pt : pts) {
    pt.first = rng.uniform01();
    pt.second = rng.uniform01();
  }
  auto dist2 = [&pts](int a, int b) {
    const double dx = pts[static_cast<size_t>(a)].first - pts[static_cast<size_t>(b)].first;
    const double dy = pts[static_cast<size_t>(a)].second - pts[static_cast<size_t>(b)].second;
    return dx * dx + dy * dy;
  };
  // nearest-neighbor lists
  std::vector<std::set<int>> nn(static_cast<size_t>(p));
  std::vector<std::pair<double, int>> order(static_cast<size_t>(p) - 1);
  for (int a = 0; a < p; ++a) {
    order.clear();
    for (int b = 0; b < p; ++b)
      if (b != a) order.emplace_back(dist2(a, b), b);
    std::sort(order.begin(), order.end());
    for (int m = 0; m < neighbors; ++m) nn[static_cast<size_t>(a)].insert(order[static_cast<size_t>(m)].second);
  }
  GroundTruth gt;
  std::vector<std::vector<bool>> common(static_cast<size_t>(p), std::vector<bool>(static_cast<size_t>(p), false));
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (nn[static_cast<size_t>(i)].count(j) && nn[static_cast<size_t>(j)].count(i)) {
        common[static_cast<size_t>(i)][static_cast<size_t>(j)] = true;
        gt.common_edges.push_back({i, j, rng.edge_value()});
      }
  gt.common_edge_count = static_cast<int>(gt.common_edges.size());

  const long extras = extra_denom > 0
                          ? static_cast<long>(std::ceil(static_cast<double>(gt.common_edge_count) /
                                                        static_cast<double>(extra_denom)))
                          : 0;
  const long free_positions =
      static_cast<long>(p) * (p - 1) / 2 - gt.common_edge_count;
  if (extras > free_positions)
    throw std::invalid_argument("gen_nn_network: not enough free positions for extra edges");

  gt.extra_edges.resize(static_cast<size_t>(k_classes));
  for (int k = 0; k < k_classes; ++k) {
    std::set<std::pair<int, int>> used;
    while (static_cast<long>(used.size()) < extras) {
      int i = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(p)));
      int j = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(p)));
      if (i == j) continue;
      if (i > j) std::swap(i, j);
      if (common[static_cast<size_t>(i)][static_cast<size_t>(j)]) continue;
      if (used.count({i, j})) continue;  // re-draw positions already used by this class
      used.insert({i, j});
      gt.extra_edges[static_cast<size_t>(k)].push_back({i, j, rng.edge_value()});
    }
  }

  gt.precisions.assign(static_cast<size_t>(k_classes), Matrix::Zero(p, p));
  for (int k = 0; k < k_classes; ++k) {
    Matrix& m = gt.precisions[static_cast<size_t>(k)];
    for (const auto& e : gt.common_edges) {
      m(e.i, e.j) = e.value;
      m(e.j, e.i) = e.value;
    }
    for (const auto& e : gt.extra_edges[static_cast<size_t>(k)]) {
      m(e.i, e.j) = e.value;
      m(e.j, e.i) = e.value;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    m.diagonal().array() += std::abs(es.eigenvalues().minCoeff()) + 1.0;
  }
  return gt;
}

// Per-class observation matrices: n rows i.i.d. N(0, (Sigma^(k))^{-1})
// drawn through the Cholesky factor of the covariance; class k uses the
// derived seed (seed + k).
inline std::vector<Matrix> sample_gaussian(const GroundTruth& truth, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_gaussian: n must be positive");
  const int p = truth.dim();
  std::vector<Matrix> out;
  out.reserve(truth.precisions.size());
  for (size_t k = 0; k < truth.precisions.size(); ++k) {
    Eigen::LLT<Matrix> prec_llt(truth.precisions[k]);
    if (prec_llt.info() != Eigen::Success)
      throw std::invalid_argument("sample_gaussian: precision block not PD");
    Matrix cov = prec_llt.solve(Matrix::Identity(p, p));
    cov = ((cov + cov.transpose()) * 0.5).eval();
    Eigen::LLT<Matrix> cov_llt(cov);
    if (cov_llt.info() != Eigen::Success)
      throw std::invalid_argument("sample_gaussian: covariance not PD");
    const Matrix l = cov_llt.matrixL();
    Rng rng(seed + k);
    Matrix w(n, p);
    Vector z(p);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < p; ++c) z[c] = rng.normal();
      w.row(r) = (l * z).transpose();
    }
    out.push_back(std::move(w));
  }
  return out;
}

// Sparsity/similarity controls:
//   w1 = lambda1 + lambda2/sqrt(2),  w2 = (lambda2/sqrt(2)) / w1.
inline GglParams reparam_to_lambda(double w1, double w2) {
  if (!(w1 > 0.0) || w2 < 0.0 || w2 >= 1.0)
    throw std::invalid_argument("reparam_to_lambda: need w1 > 0 and 0 <= w2 < 1");
  GglParams p;
  p.lambda2 = std::sqrt(2.0) * w1 * w2;
  p.lambda1 = w1 * (1.0 - w2);
  return p;
}

inline std::pair<double, double> reparam_from_lambda(const GglParams& p) {
  const double w1 = p.lambda1 + p.lambda2 / std::sqrt(2.0);
  if (!(w1 > 0.0)) throw std::invalid_argument("reparam_from_lambda: lambda1 = lambda2 = 0");
  return {w1, (p.lambda2 / std::sqrt(2.0)) / w1};
}

// Manifest schema:
//   { "mode": "covariance" | "observations", "p": int, "K": int,
//     "files": [path, ...], "n": [int, ...] }
// File paths are resolved relative to the manifest's directory. Covariance
// files are dense p x p CSVs; observation files are n_k x p CSVs with one
// header line (covariances are then computed here).
inline ProblemData load_problem(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest: " + manifest_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed manifest " + manifest_path + ": " + e.what());
  }
  for (const char* key : {"mode", "p", "K", "files"})
    if (!j.contains(key)) throw IoError("manifest " + manifest_path + " missing field '" + key + "'");
  const std::string mode = j["mode"];
  if (mode != "covariance" && mode != "observations")
    throw IoError("manifest " + manifest_path + ": unknown mode '" + mode + "'");
  const int p = j["p"];
  const int kk = j["K"];
  const auto files = j["files"].get<std::vector<std::string>>();
  if (static_cast<int>(files.size()) != kk)
    throw IoError("manifest " + manifest_path + ": expected " + std::to_string(kk) + " files, got " +
                  std::to_string(files.size()));
  const auto base = std::filesystem::path(manifest_path).parent_path();

  ProblemData data;
  std::vector<std::string> resolved;
  for (const auto& f : files) {
    std::filesystem::path fp(f);
    resolved.push_back(fp.is_absolute() ? fp.string() : (base / fp).string());
  }
  if (mode == "covariance") {
    if (!j.contains("n")) throw IoError("manifest " + manifest_path + " missing field 'n'");
    data.sample_counts = j["n"].get<std::vector<long>>();
    for (const auto& f : resolved) {
      Matrix s = read_csv_matrix(f);
      if (s.rows() != p || s.cols() != p)
        throw IoError("covariance file " + f + " is " + std::to_string(s.rows()) + "x" +
                      std::to_string(s.cols()) + ", expected " + std::to_string(p) + "x" +
                      std::to_string(p) + " (see manifest " + manifest_path + ")");
      const double scale = 1.0 + s.cwiseAbs().maxCoeff();
      if ((s - s.transpose()).cwiseAbs().maxCoeff() > kSymmetrizeTol * scale)
        throw IoError("covariance file " + f + " is not symmetric");
      data.covariances.push_back(((s + s.transpose()) * 0.5).eval());
    }
  } else {
    for (const auto& f : resolved) {
      Matrix w = read_csv_matrix(f, /*skip_header=*/true);
      if (w.cols() != p)
        throw IoError("observation file " + f + " has " + std::to_string(w.cols()) +
                      " columns, expected " + std::to_string(p));
      data.covariances.push_back(sample_covariance(w));
      data.sample_counts.push_back(w.rows());
    }
  }
  try {
    data.validate();
  } catch (const std::exception& e) {
    throw IoError(std::string("problem data validation failed (manifest ") + manifest_path +
                  "): " + e.what());
  }
  return data;
}

inline void write_manifest(const std::string& path, const std::string& mode, int p, int kk,
                           const std::vector<std::string>& files, const std::vector<long>& n) {
  json j;
  j["mode"] = mode;
  j["p"] = p;
  j["K"] = kk;
  j["files"] = files;
  j["n"] = n;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << j.dump(2) << '\n';
}

// Ground-truth export: per-class precision CSVs plus an edges JSON with the
// common and per-class extra (i, j, value) lists.
inline void write_ground_truth(const std::string& dir, const GroundTruth& gt) {
  namespace fs = std::filesystem;
  for (int k = 0; k < gt.classes(); ++k)
    write_csv_matrix((fs::path(dir) / ("truth_precision_" + std::to_string(k + 1) + ".csv")).string(),
                     gt.precisions[static_cast<size_t>(k)]);
  json j;
  j["p"] = gt.dim();
  j["K"] = gt.classes();
  j["common_edge_count"] = gt.common_edge_count;
  auto edges_json = [](const std::vector<EdgeEntry>& v) {
    json a = json::array();
    for (const auto& e : v) a.push_back({e.i, e.j, e.value});
    return a;
  };
  j["common"] = edges_json(gt.common_edges);
  json extras = json::array();
  for (const auto& v : gt.extra_edges) extras.push_back(edges_json(v));
  j["extra"] = extras;
  std::ofstream out(fs::path(dir) / "truth_edges.json");
  if (!out) throw IoError("cannot write truth_edges.json under " + dir);
  out << j.dump(2) << '\n';
}

inline GroundTruth load_ground_truth(const std::string& dir, int k_classes) {
  namespace fs = std::filesystem;
  GroundTruth gt;
  for (int k = 0; k < k_classes; ++k) {
    const std::string f = (fs::path(dir) / ("truth_precision_" + std::to_string(k + 1) + ".csv")).string();
    gt.precisions.push_back(read_csv_matrix(f));
  }
  gt.extra_edges.resize(static_cast<size_t>(k_classes));
  const std::string ef = (fs::path(dir) / "truth_edges.json").string();
  std::ifstream in(ef);
  if (in) {
    json j;
    try {
      in >> j;
      gt.common_edge_count = j.value("common_edge_count", 0);
      for (const auto& e : j["common"]) gt.common_edges.push_back({e[0], e[1], e[2]});
      for (size_t k = 0; k < j["extra"].size() && k < gt.extra_edges.size(); ++k)
        for (const auto& e : j["extra"][k]) gt.extra_edges[k].push_back({e[0], e[1], e[2]});
    } catch (const json::exception& e) {
      throw IoError("malformed truth edges file " + ef + ": " + e.what());
    }
  }
  return gt;
}

}  // namespace ggl
