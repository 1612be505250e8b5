#include "explink/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace explink {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& tok, const std::string& where) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": bad number '" + tok + "'");
  }
  if (pos != tok.size()) {
    throw std::runtime_error(where + ": bad number '" + tok + "'");
  }
  return v;
}

int parse_int(const std::string& tok, const std::string& where) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(tok, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": bad integer '" + tok + "'");
  }
  if (pos != tok.size()) {
    throw std::runtime_error(where + ": bad integer '" + tok + "'");
  }
  return v;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

// Label sets in files need not be contiguous; remap to {0..K-1} by first
// appearance.
std::vector<int> densify(const std::vector<int>& raw) {
  std::map<int, int> dense;
  std::vector<int> out;
  out.reserve(raw.size());
  for (int v : raw) {
    auto [it, _] = dense.emplace(v, static_cast<int>(dense.size()));
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

PointDataset load_point_dataset(const std::string& path) {
  auto in = open_or_throw(path);
  PointDataset data;
  std::vector<int> raw_labels;
  std::string line;
  int lineno = 0;
  std::size_t d = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto toks = split_ws(line);
    if (toks.empty() || toks[0][0] == '#') continue;
    const std::string where = path + ":" + std::to_string(lineno);
    if (toks.size() < 3) throw std::runtime_error(where + ": expected id label features");
    if (d == 0) d = toks.size() - 2;
    if (toks.size() - 2 != d) {
      throw std::runtime_error(where + ": expected " + std::to_string(d) +
                               " features, got " + std::to_string(toks.size() - 2));
    }
    parse_int(toks[0], where);  // ids are positional for point data
    raw_labels.push_back(parse_int(toks[1], where));
    Vec p(d);
    for (std::size_t k = 0; k < d; ++k) p[k] = parse_double(toks[k + 2], where);
    data.points.push_back(std::move(p));
  }
  data.labels = densify(raw_labels);
  data.validate();
  return data;
}

void save_point_dataset(const PointDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << i << '\t' << data.labels[i];
    for (double v : data.points[i]) out << '\t' << v;
    out << '\n';
  }
}

PairDataset load_pair_dataset(const std::string& entities_path,
                              const std::string& pairs_path) {
  PairDataset data;
  std::map<int, int> index_of;  // external id -> internal index
  {
    auto in = open_or_throw(entities_path);
    std::string line;
    int lineno = 0;
    std::vector<int> raw_labels;
    while (std::getline(in, line)) {
      ++lineno;
      const auto toks = split_ws(line);
      if (toks.empty() || toks[0][0] == '#') continue;
      const std::string where = entities_path + ":" + std::to_string(lineno);
      if (toks.size() != 3) throw std::runtime_error(where + ": expected id block label");
      const int id = parse_int(toks[0], where);
      if (index_of.count(id)) throw std::runtime_error(where + ": duplicate id " + toks[0]);
      index_of[id] = static_cast<int>(data.point_ids.size());
      data.point_ids.push_back(id);
      data.blocks.push_back(parse_int(toks[1], where));
      raw_labels.push_back(parse_int(toks[2], where));
    }
    data.labels = densify(raw_labels);
  }
  {
    auto in = open_or_throw(pairs_path);
    std::string line;
    int lineno = 0;
    std::size_t d = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto toks = split_ws(line);
      if (toks.empty() || toks[0][0] == '#') continue;
      const std::string where = pairs_path + ":" + std::to_string(lineno);
      if (toks.size() < 3) throw std::runtime_error(where + ": expected id_a id_b features");
      if (d == 0) d = toks.size() - 2;
      if (toks.size() - 2 != d) {
        throw std::runtime_error(where + ": expected " + std::to_string(d) +
                                 " features, got " + std::to_string(toks.size() - 2));
      }
      const int ea = parse_int(toks[0], where);
      const int eb = parse_int(toks[1], where);
      auto ia = index_of.find(ea), ib = index_of.find(eb);
      if (ia == index_of.end() || ib == index_of.end()) {
        throw std::runtime_error(where + ": unknown id in pair (" + toks[0] + "," + toks[1] + ")");
      }
      Vec phi(d);
      for (std::size_t k = 0; k < d; ++k) phi[k] = parse_double(toks[k + 2], where);
      const int a = std::min(ia->second, ib->second);
      const int b = std::max(ia->second, ib->second);
      data.pair_features[{a, b}] = std::move(phi);
    }
  }
  data.validate();
  return data;
}

void save_pair_dataset(const PairDataset& data, const std::string& entities_path,
                       const std::string& pairs_path) {
  std::ofstream ents(entities_path);
  std::ofstream prs(pairs_path);
  if (!ents || !prs) throw std::runtime_error("cannot write pair dataset");
  prs << std::setprecision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    ents << data.point_ids[i] << '\t' << data.blocks[i] << '\t' << data.labels[i] << '\n';
  }
  for (const auto& [key, phi] : data.pair_features) {
    prs << data.point_ids[key.first] << '\t' << data.point_ids[key.second];
    for (double v : phi) prs << '\t' << v;
    prs << '\n';
  }
}

void save_dendrograms(std::span<const Dendrogram> trees, std::ostream& os) {
  os << std::setprecision(17);
  for (const auto& tree : trees) {
    os << "T " << tree.n_leaves << '\n';
    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
      const auto& nd = tree.nodes[id];
      if (tree.is_leaf(static_cast<int>(id))) {
        os << "L " << id << ' ' << nd.point_id << '\n';
      } else {
        os << "I " << id << ' ' << nd.left << ' ' << nd.right << ' ' << nd.height << '\n';
      }
    }
  }
}

std::vector<Dendrogram> load_dendrograms(std::istream& is) {
  std::vector<Dendrogram> trees;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto toks = split_ws(line);
    if (toks.empty() || toks[0][0] == '#') continue;
    const std::string where = "dendrogram:" + std::to_string(lineno);
    if (toks[0] == "T") {
      if (toks.size() != 2) throw std::runtime_error(where + ": expected T n_leaves");
      trees.emplace_back();
      trees.back().n_leaves = parse_int(toks[1], where);
    } else if (toks[0] == "L") {
      if (trees.empty() || toks.size() != 3) throw std::runtime_error(where + ": bad leaf line");
      Dendrogram::Node nd;
      nd.point_id = parse_int(toks[2], where);
      if (parse_int(toks[1], where) != static_cast<int>(trees.back().nodes.size())) {
        throw std::runtime_error(where + ": node ids must be sequential");
      }
      trees.back().nodes.push_back(nd);
    } else if (toks[0] == "I") {
      if (trees.empty() || toks.size() != 5) throw std::runtime_error(where + ": bad internal line");
      Dendrogram::Node nd;
      if (parse_int(toks[1], where) != static_cast<int>(trees.back().nodes.size())) {
        throw std::runtime_error(where + ": node ids must be sequential");
      }
      nd.left = parse_int(toks[2], where);
      nd.right = parse_int(toks[3], where);
      nd.height = parse_double(toks[4], where);
      trees.back().nodes.push_back(nd);
    } else {
      throw std::runtime_error(where + ": unknown record '" + toks[0] + "'");
    }
  }
  for (const auto& tree : trees) {
    if (static_cast<int>(tree.nodes.size()) != std::max(1, 2 * tree.n_leaves - 1)) {
      throw std::runtime_error("dendrogram: wrong node count");
    }
  }
  return trees;
}

void save_model(const DissimilarityModel& model, std::optional<Alpha> alpha,
                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(17);
  out << "kind " << (model.kind() == ModelKind::LinearPair ? "linear" : "mahalanobis") << '\n';
  out << "dim " << model.dim() << '\n';
  out << "params";
  for (double v : model.params()) out << ' ' << v;
  out << '\n';
  if (alpha) {
    out << "alpha ";
    switch (alpha->kind) {
      case Alpha::Kind::NegInf: out << "neg-inf"; break;
      case Alpha::Kind::PosInf: out << "pos-inf"; break;
      case Alpha::Kind::Finite: out << alpha->value; break;
    }
    out << '\n';
  }
}

std::pair<DissimilarityModel, std::optional<Alpha>> load_model(
    const std::string& path) {
  auto in = open_or_throw(path);
  std::string kind;
  int dim = 0;
  Vec params;
  std::optional<Alpha> alpha;
  std::string line;
  while (std::getline(in, line)) {
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks[0] == "kind" && toks.size() == 2) {
      kind = toks[1];
    } else if (toks[0] == "dim" && toks.size() == 2) {
      dim = parse_int(toks[1], path);
    } else if (toks[0] == "params") {
      for (std::size_t k = 1; k < toks.size(); ++k) {
        params.push_back(parse_double(toks[k], path));
      }
    } else if (toks[0] == "alpha" && toks.size() == 2) {
      if (toks[1] == "neg-inf") {
        alpha = Alpha::neg_inf();
      } else if (toks[1] == "pos-inf") {
        alpha = Alpha::pos_inf();
      } else {
        alpha = Alpha::finite(parse_double(toks[1], path));
      }
    } else {
      throw std::runtime_error(path + ": bad model line '" + line + "'");
    }
  }
  if (kind == "linear") {
    if (static_cast<int>(params.size()) != dim + 1) {
      throw std::runtime_error(path + ": linear model needs dim+1 params");
    }
    const double bias = params.back();
    params.pop_back();
    return {DissimilarityModel::linear_from(std::move(params), bias), alpha};
  }
  if (kind == "mahalanobis") {
    return {DissimilarityModel::mahalanobis_from(std::move(params), dim), alpha};
  }
  throw std::runtime_error(path + ": unknown model kind '" + kind + "'");
}

std::vector<SplitSpec> make_splits(const std::vector<int>& units,
                                   SplitCounts counts, int n_splits,
                                   std::uint64_t seed) {
  if (counts.train < 1 || counts.dev < 1 || counts.test < 1 ||
      counts.train + counts.dev + counts.test != static_cast<int>(units.size())) {
    throw std::invalid_argument("split counts do not partition the units");
  }
  std::vector<SplitSpec> out;
  for (int i = 0; i < n_splits; ++i) {
    SplitSpec spec;
    spec.index = i;
    spec.seed = seed;
    std::vector<int> order = units;
    std::sort(order.begin(), order.end());
    std::mt19937_64 rng(seed ^ (0x5851f42d4c957f2dULL * (i + 1)));
    std::shuffle(order.begin(), order.end(), rng);
    spec.train_units.assign(order.begin(), order.begin() + counts.train);
    spec.dev_units.assign(order.begin() + counts.train,
                          order.begin() + counts.train + counts.dev);
    spec.test_units.assign(order.begin() + counts.train + counts.dev, order.end());
    out.push_back(std::move(spec));
  }
  return out;
}

std::vector<int> dataset_units(const AnyDataset& data) {
  std::set<int> s;
  if (const auto* pts = std::get_if<PointDataset>(&data)) {
    s.insert(pts->labels.begin(), pts->labels.end());
  } else {
    const auto& prs = std::get<PairDataset>(data);
    s.insert(prs.blocks.begin(), prs.blocks.end());
  }
  return {s.begin(), s.end()};
}

const std::vector<int>& dataset_labels(const AnyDataset& data) {
  if (const auto* pts = std::get_if<PointDataset>(&data)) return pts->labels;
  return std::get<PairDataset>(data).labels;
}

DatasetView unit_view(const AnyDataset& data, const std::vector<int>& units) {
  if (const auto* pts = std::get_if<PointDataset>(&data)) {
    std::set<int> wanted(units.begin(), units.end());
    std::vector<int> subset;
    for (std::size_t i = 0; i < pts->size(); ++i) {
      if (wanted.count(pts->labels[i])) subset.push_back(static_cast<int>(i));
    }
    return DatasetView(*pts, std::move(subset));
  }
  return DatasetView(std::get<PairDataset>(data), units);
}

PointDataset gen_two_cluster_synth(std::uint64_t seed, int n_per_cluster) {
  // Two interleaved noisy half-moons. No linear boundary on the pair
  // features separates every within pair from every across pair, so
  // all-pairs training compromises on the near-tangent across pairs,
  // while each moon stays chain-connected through short hops.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.06);
  PointDataset data;
  for (int i = 0; i < n_per_cluster; ++i) {
    const double t = std::numbers::pi * i / std::max(1, n_per_cluster - 1);
    data.points.push_back({std::cos(t) + noise(rng), std::sin(t) + noise(rng)});
    data.labels.push_back(0);
  }
  for (int i = 0; i < n_per_cluster; ++i) {
    const double t = std::numbers::pi * i / std::max(1, n_per_cluster - 1);
    data.points.push_back(
        {1.0 - std::cos(t) + noise(rng), 0.15 - std::sin(t) + noise(rng)});
    data.labels.push_back(1);
  }
  data.validate();
  return data;
}

PointDataset gen_path_synth(std::uint64_t seed) {
  // Two spherical blobs with noisy boundaries plus a dense curved path.
  // One blob carries a far outlier and the inter-blob corridor carries two
  // boundary points, so chaining breaks single linkage.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> blob(0.0, 0.30);
  std::normal_distribution<double> jitter(0.0, 0.02);
  PointDataset data;
  auto add = [&](double x, double y, int label) {
    data.points.push_back({x, y});
    data.labels.push_back(label);
  };
  const int blob_n = 30;
  for (int i = 0; i < blob_n; ++i) add(0.0 + blob(rng), 0.0 + blob(rng), 0);
  for (int i = 0; i < blob_n; ++i) add(4.4 + blob(rng), 0.0 + blob(rng), 1);
  // noisy boundary points in the corridor, one per blob
  add(1.45 + jitter(rng), jitter(rng), 0);
  add(2.85 + jitter(rng), jitter(rng), 1);
  // far outlier of blob 0, away from everything
  add(-2.4 + jitter(rng), -0.9 + jitter(rng), 0);
  // dense arc above the blobs
  const int path_n = 80;
  for (int i = 0; i < path_n; ++i) {
    const double t = static_cast<double>(i) / (path_n - 1);
    const double x = -1.2 + 6.8 * t;
    const double y = 2.3 + 1.1 * std::sin(std::numbers::pi * t);
    add(x + jitter(rng), y + jitter(rng), 2);
  }
  data.validate();
  return data;
}

std::string to_string(LinkageKind kind) {
  switch (kind) {
    case LinkageKind::Single: return "sl";
    case LinkageKind::Average: return "avg";
    case LinkageKind::Complete: return "comp";
    case LinkageKind::Exp: return "explink";
  }
  return "?";
}

LinkageKind linkage_kind_from_string(const std::string& s) {
  if (s == "sl" || s == "single") return LinkageKind::Single;
  if (s == "avg" || s == "average") return LinkageKind::Average;
  if (s == "comp" || s == "complete") return LinkageKind::Complete;
  if (s == "explink" || s == "exp") return LinkageKind::Exp;
  throw std::invalid_argument("unknown linkage: " + s);
}

TrainConfig default_config_for(ModelKind kind) {
  TrainConfig cfg;
  if (kind == ModelKind::Mahalanobis) {
    cfg.threshold = 100.0;
    cfg.margin = 10.0;
  } else {
    cfg.threshold = 0.0;
    cfg.margin = 2.0;
  }
  return cfg;
}

std::vector<Dendrogram> cluster_view(const DatasetView& view,
                                     const DissimilarityModel& model,
                                     const LinkageSpec& linkage) {
  std::vector<Dendrogram> trees;
  for (int b = 0; b < view.block_count(); ++b) {
    const auto& pts = view.block_points(b);
    trees.push_back(build_dendrogram(
        static_cast<int>(pts.size()),
        [&](int i, int j) { return view.dissim(model, pts[i], pts[j]); },
        linkage, pts));
  }
  return trees;
}

namespace {

DissimilarityModel initial_model(const AnyDataset& data, ModelKind kind,
                                 std::uint64_t seed) {
  if (std::holds_alternative<PairDataset>(data) && kind == ModelKind::Mahalanobis) {
    throw std::invalid_argument("Mahalanobis models need point data");
  }
  const int d = std::visit([](const auto& ds) { return ds.dim(); }, data);
  return kind == ModelKind::Mahalanobis ? DissimilarityModel::mahalanobis(d, seed)
                                        : DissimilarityModel::linear(d, seed);
}

}  // namespace

ExperimentResult run_experiment(const AnyDataset& data,
                                const ExperimentConfig& config) {
  if (config.methods.empty() || config.linkages.empty() || config.n_splits < 1) {
    throw std::invalid_argument("experiment needs methods, linkages and splits");
  }
  const auto units = dataset_units(data);
  const auto splits = make_splits(units, config.counts, config.n_splits,
                                  config.base.seed);
  const auto& labels = dataset_labels(data);

  ExperimentResult result;
  for (const auto& split : splits) {
    const DatasetView train_view = unit_view(data, split.train_units);
    const DatasetView dev_view = unit_view(data, split.dev_units);
    const DatasetView test_view = unit_view(data, split.test_units);
    for (TrainMethod method : config.methods) {
      TrainConfig cfg = config.base;
      cfg.method = method;
      cfg.seed = config.base.seed + 1000003ULL * static_cast<std::uint64_t>(split.index);
      auto trained = train(train_view, initial_model(data, config.model_kind, cfg.seed), cfg);
      for (LinkageKind kind : config.linkages) {
        ExperimentRow row;
        row.method = method;
        row.linkage = kind;
        row.split = split.index;
        LinkageSpec spec;
        switch (kind) {
          case LinkageKind::Single: spec = LinkageSpec::single(); break;
          case LinkageKind::Average: spec = LinkageSpec::average(); break;
          case LinkageKind::Complete: spec = LinkageSpec::complete(); break;
          case LinkageKind::Exp: {
            // joint training learned its alpha; other methods pick one
            // post hoc on the train part
            Alpha a = (method == TrainMethod::ExpAlpha && trained.alpha)
                          ? *trained.alpha
                          : fit_alpha(train_view, trained.model, cfg).alpha;
            spec = LinkageSpec::exp(a);
            row.alpha = a;
            break;
          }
        }
        const auto dev_trees = cluster_view(dev_view, trained.model, spec);
        const auto test_trees = cluster_view(test_view, trained.model, spec);
        row.dp = dendrogram_purity(test_trees, labels);
        row.xi = tune_threshold(dev_trees, labels);
        PairCounts counts;
        for (const auto& tree : test_trees) {
          counts += pair_counts(cut_tree(tree, row.xi), labels);
        }
        row.f1 = f1_from_counts(counts);
        result.rows.push_back(row);
      }
    }
  }

  // per-(method, linkage) means, then significance vs the column best
  for (TrainMethod method : config.methods) {
    for (LinkageKind kind : config.linkages) {
      ExperimentSummary s;
      s.method = method;
      s.linkage = kind;
      double dp = 0, f1 = 0;
      int n = 0;
      for (const auto& row : result.rows) {
        if (row.method == method && row.linkage == kind) {
          dp += row.dp;
          f1 += row.f1;
          ++n;
        }
      }
      s.mean_dp = dp / n;
      s.mean_f1 = f1 / n;
      result.summaries.push_back(s);
    }
  }
  auto scores = [&](TrainMethod method, LinkageKind kind, bool want_dp) {
    std::vector<double> out;
    for (const auto& row : result.rows) {
      if (row.method == method && row.linkage == kind) {
        out.push_back(want_dp ? row.dp : row.f1);
      }
    }
    return out;
  };
  for (LinkageKind kind : config.linkages) {
    TrainMethod best_dp = config.methods[0], best_f1 = config.methods[0];
    double top_dp = -1, top_f1 = -1;
    for (const auto& s : result.summaries) {
      if (s.linkage != kind) continue;
      if (s.mean_dp > top_dp) { top_dp = s.mean_dp; best_dp = s.method; }
      if (s.mean_f1 > top_f1) { top_f1 = s.mean_f1; best_f1 = s.method; }
    }
    for (auto& s : result.summaries) {
      if (s.linkage != kind) continue;
      if (config.n_splits >= 2) {
        s.p_dp = resampled_paired_t_test(scores(best_dp, kind, true),
                                         scores(s.method, kind, true));
        s.p_f1 = resampled_paired_t_test(scores(best_f1, kind, false),
                                         scores(s.method, kind, false));
      }
    }
  }
  return result;
}

void write_experiment_tsv(const ExperimentResult& result, std::ostream& os) {
  os << std::setprecision(12);
  os << "method\tlinkage\tsplit\tdp\tf1\txi\talpha\n";
  for (const auto& row : result.rows) {
    os << to_string(row.method) << '\t' << to_string(row.linkage) << '\t'
       << row.split << '\t' << row.dp << '\t' << row.f1 << '\t' << row.xi << '\t';
    if (row.alpha) {
      switch (row.alpha->kind) {
        case Alpha::Kind::NegInf: os << "neg-inf"; break;
        case Alpha::Kind::PosInf: os << "pos-inf"; break;
        case Alpha::Kind::Finite: os << row.alpha->value; break;
      }
    } else {
      os << "-";
    }
    os << '\n';
  }
  os << "#mean\tmethod\tlinkage\tdp\tf1\n";
  for (const auto& s : result.summaries) {
    os << "mean\t" << to_string(s.method) << '\t' << to_string(s.linkage) << '\t'
       << s.mean_dp << '\t' << s.mean_f1 << '\n';
  }
  os << "#pvalue\tmethod\tlinkage\tp_dp\tp_f1\n";
  for (const auto& s : result.summaries) {
    os << "pvalue\t" << to_string(s.method) << '\t' << to_string(s.linkage)
       << '\t' << s.p_dp << '\t' << s.p_f1 << '\n';
  }
}

}  // namespace explink
