#include <doctest.h>

#include <stdexcept>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "explink/harness.hpp"

using namespace explink;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/explink_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

PointDataset four_cluster_line(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.2);
  PointDataset data;
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < 4; ++i) {
      data.points.push_back({5.0 * c + noise(rng), noise(rng)});
      data.labels.push_back(c);
    }
  }
  return data;
}

}  // namespace

TEST_CASE("point dataset round-trips through disk") {
  TempFile f("points.txt");
  PointDataset data;
  data.points = {{1.5, -2.25}, {0.125, 3.0}, {4.0, 4.0}};
  data.labels = {0, 1, 1};
  save_point_dataset(data, f.path);
  const auto back = load_point_dataset(f.path);
  CHECK(back.points == data.points);
  CHECK(back.labels == data.labels);
}

TEST_CASE("point loading densifies labels and reports bad lines") {
  TempFile f("points_bad.txt");
  {
    std::ofstream out(f.path);
    out << "# comment\n0 10 1.0 2.0\n1 30 2.0 3.0\n2 10 0.0 0.0\n";
  }
  const auto data = load_point_dataset(f.path);
  CHECK(data.labels == std::vector<int>{0, 1, 0});

  {
    std::ofstream out(f.path);
    out << "0 0 1.0 2.0\n1 1 oops 3.0\n";
  }
  CHECK_THROWS_WITH_AS(load_point_dataset(f.path), doctest::Contains(":2"),
                       std::runtime_error);
  {
    std::ofstream out(f.path);
    out << "0 0 1.0 2.0\n1 1 3.0\n";  // ragged feature row
  }
  CHECK_THROWS_AS(load_point_dataset(f.path), std::runtime_error);
  CHECK_THROWS_AS(load_point_dataset("/tmp/definitely_missing_file_42"),
                  std::runtime_error);
}

TEST_CASE("pair dataset round-trips and flags unknown ids") {
  TempFile ents("ents.txt"), prs("pairs.txt");
  PairDataset data;
  data.point_ids = {10, 20, 30};
  data.labels = {0, 0, 1};
  data.blocks = {0, 0, 0};
  data.pair_features[{0, 1}] = {0.5, 1.5};
  data.pair_features[{0, 2}] = {2.0, 0.0};
  data.pair_features[{1, 2}] = {1.0, 1.0};
  save_pair_dataset(data, ents.path, prs.path);
  const auto back = load_pair_dataset(ents.path, prs.path);
  CHECK(back.point_ids == data.point_ids);
  CHECK(back.labels == data.labels);
  CHECK(back.pair_features == data.pair_features);

  {
    std::ofstream out(prs.path);
    out << "10 99 0.5 1.5\n";
  }
  CHECK_THROWS_WITH_AS(load_pair_dataset(ents.path, prs.path),
                       doctest::Contains("(10,99)"), std::runtime_error);
}

TEST_CASE("dendrograms round-trip through the text format") {
  std::vector<double> xs{0, 1, 10, 11, 12};
  const auto tree = build_dendrogram(
      5, [xs](int i, int j) { return std::abs(xs[i] - xs[j]); },
      LinkageSpec::average(), {7, 8, 9, 10, 11});
  const std::vector<Dendrogram> trees{tree, tree};
  std::stringstream ss;
  save_dendrograms(trees, ss);
  const auto back = load_dendrograms(ss);
  REQUIRE(back.size() == 2);
  for (const auto& t : back) {
    REQUIRE(t.nodes.size() == tree.nodes.size());
    CHECK(t.n_leaves == 5);
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      CHECK(t.nodes[i].left == tree.nodes[i].left);
      CHECK(t.nodes[i].right == tree.nodes[i].right);
      CHECK(t.nodes[i].point_id == tree.nodes[i].point_id);
      CHECK(t.nodes[i].height == tree.nodes[i].height);  // full precision
    }
  }
}

TEST_CASE("malformed dendrogram files are rejected") {
  std::stringstream missing_header("L 0 0\n");
  CHECK_THROWS_AS(load_dendrograms(missing_header), std::runtime_error);
  std::stringstream out_of_order("T 2\nL 1 0\n");
  CHECK_THROWS_AS(load_dendrograms(out_of_order), std::runtime_error);
  std::stringstream truncated("T 2\nL 0 0\nL 1 1\n");
  CHECK_THROWS_AS(load_dendrograms(truncated), std::runtime_error);
}

TEST_CASE("models round-trip with and without alpha") {
  TempFile f("model.txt");
  const auto lin = DissimilarityModel::linear_from({0.25, -1.5}, 2.0);
  save_model(lin, Alpha::finite(-0.75), f.path);
  auto [m1, a1] = load_model(f.path);
  CHECK(m1.kind() == ModelKind::LinearPair);
  CHECK(m1.params() == lin.params());
  REQUIRE(a1.has_value());
  CHECK(a1->value == -0.75);

  save_model(lin, Alpha::neg_inf(), f.path);
  CHECK(load_model(f.path).second->kind == Alpha::Kind::NegInf);
  save_model(lin, Alpha::pos_inf(), f.path);
  CHECK(load_model(f.path).second->kind == Alpha::Kind::PosInf);

  const auto mah = DissimilarityModel::mahalanobis_from({1, 0.5, -0.5, 2}, 2);
  save_model(mah, std::nullopt, f.path);
  auto [m2, a2] = load_model(f.path);
  CHECK(m2.kind() == ModelKind::Mahalanobis);
  CHECK(m2.params() == mah.params());
  CHECK(!a2.has_value());
}

TEST_CASE("splits partition the units and depend only on (seed, index)") {
  std::vector<int> units(10);
  for (int i = 0; i < 10; ++i) units[i] = i * 3;
  const SplitCounts counts{6, 2, 2};
  const auto a = make_splits(units, counts, 4, 42);
  REQUIRE(a.size() == 4);
  for (const auto& s : a) {
    CHECK(s.train_units.size() == 6);
    CHECK(s.dev_units.size() == 2);
    CHECK(s.test_units.size() == 2);
    std::vector<int> all = s.train_units;
    all.insert(all.end(), s.dev_units.begin(), s.dev_units.end());
    all.insert(all.end(), s.test_units.begin(), s.test_units.end());
    std::sort(all.begin(), all.end());
    std::vector<int> sorted = units;
    std::sort(sorted.begin(), sorted.end());
    CHECK(all == sorted);
  }
  // split i is the same whether 2 or 4 splits were requested
  const auto b = make_splits(units, counts, 2, 42);
  CHECK(b[0].train_units == a[0].train_units);
  CHECK(b[1].test_units == a[1].test_units);
  // different seeds reshuffle
  CHECK(make_splits(units, counts, 1, 43)[0].train_units != a[0].train_units);
}

TEST_CASE("infeasible split counts are rejected") {
  std::vector<int> units(100);
  for (int i = 0; i < 100; ++i) units[i] = i;
  CHECK_THROWS_AS(make_splits(units, {60, 10, 31}, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_splits(units, {99, 1, 0}, 1, 0), std::invalid_argument);
  CHECK_NOTHROW(make_splits(units, {60, 10, 30}, 1, 0));
}

TEST_CASE("dataset units and unit views") {
  const AnyDataset data = four_cluster_line(1);
  CHECK(dataset_units(data) == std::vector<int>{0, 1, 2, 3});
  const auto view = unit_view(data, {1, 3});
  CHECK(view.size() == 8);
  for (int b = 0; b < view.block_count(); ++b) {
    for (int p : view.block_points(b)) {
      const int l = view.label(p);
      CHECK((l == 1 || l == 3));
    }
  }
}

TEST_CASE("synthetic generators are deterministic and well formed") {
  const auto a = gen_two_cluster_synth(5, 40);
  CHECK(a.size() == 80);
  CHECK(std::count(a.labels.begin(), a.labels.end(), 0) == 40);
  CHECK(std::count(a.labels.begin(), a.labels.end(), 1) == 40);
  CHECK_NOTHROW(a.validate());
  const auto b = gen_two_cluster_synth(5, 40);
  CHECK(a.points == b.points);
  CHECK(gen_two_cluster_synth(6, 40).points != a.points);

  const auto p = gen_path_synth(5);
  CHECK_NOTHROW(p.validate());
  CHECK(std::count(p.labels.begin(), p.labels.end(), 2) > 0);
  CHECK(p.points == gen_path_synth(5).points);
}

TEST_CASE("linkage names round-trip") {
  for (LinkageKind k : {LinkageKind::Single, LinkageKind::Average,
                        LinkageKind::Complete, LinkageKind::Exp}) {
    CHECK(linkage_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(linkage_kind_from_string("ward"), std::invalid_argument);
}

TEST_CASE("default hinge parameters depend on the model class") {
  const auto lin = default_config_for(ModelKind::LinearPair);
  CHECK(lin.threshold == 0.0);
  CHECK(lin.margin == 2.0);
  const auto mah = default_config_for(ModelKind::Mahalanobis);
  CHECK(mah.threshold == 100.0);
  CHECK(mah.margin == 10.0);
}

TEST_CASE("cluster_view builds one tree per block with global leaf ids") {
  const AnyDataset data = four_cluster_line(2);
  const auto view = unit_view(data, {0, 2});
  const auto trees = cluster_view(view, DissimilarityModel::euclidean(2),
                                  LinkageSpec::single());
  REQUIRE(trees.size() == 1);  // point data is a single block
  CHECK(trees[0].n_leaves == 8);
  auto leaves = trees[0].leaf_ids(trees[0].root());
  std::sort(leaves.begin(), leaves.end());
  CHECK(leaves == std::vector<int>{0, 1, 2, 3, 8, 9, 10, 11});
}

TEST_CASE("experiment produces a full grid, consistent means, and p=1 vs self") {
  const AnyDataset data = four_cluster_line(3);
  ExperimentConfig cfg;
  cfg.methods = {TrainMethod::AP, TrainMethod::MST};
  cfg.linkages = {LinkageKind::Single, LinkageKind::Exp};
  cfg.n_splits = 2;
  cfg.counts = {2, 1, 1};
  cfg.base.epochs = 10;
  cfg.base.seed = 11;
  const auto result = run_experiment(data, cfg);
  REQUIRE(result.rows.size() == 8);  // 2 methods x 2 linkages x 2 splits
  REQUIRE(result.summaries.size() == 4);
  for (const auto& s : result.summaries) {
    double dp = 0, f1 = 0;
    int n = 0;
    for (const auto& row : result.rows) {
      if (row.method == s.method && row.linkage == s.linkage) {
        dp += row.dp;
        f1 += row.f1;
        ++n;
        CHECK(row.dp >= 0.0);
        CHECK(row.dp <= 1.0);
        CHECK(row.f1 >= 0.0);
        CHECK(row.f1 <= 1.0);
        CHECK(row.alpha.has_value() == (row.linkage == LinkageKind::Exp));
      }
    }
    CHECK(n == 2);
    CHECK(s.mean_dp == doctest::Approx(dp / 2).epsilon(1e-12));
    CHECK(s.mean_f1 == doctest::Approx(f1 / 2).epsilon(1e-12));
  }
  // the best-by-mean method compares against itself with p = 1
  for (LinkageKind kind : cfg.linkages) {
    double top = -1;
    const ExperimentSummary* best = nullptr;
    for (const auto& s : result.summaries) {
      if (s.linkage == kind && s.mean_dp > top) {
        top = s.mean_dp;
        best = &s;
      }
    }
    REQUIRE(best != nullptr);
    CHECK(best->p_dp == 1.0);
  }
  // identical reruns are identical
  const auto again = run_experiment(data, cfg);
  REQUIRE(again.rows.size() == result.rows.size());
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    CHECK(again.rows[i].dp == result.rows[i].dp);
    CHECK(again.rows[i].f1 == result.rows[i].f1);
    CHECK(again.rows[i].xi == result.rows[i].xi);
  }

  std::stringstream ss;
  write_experiment_tsv(result, ss);
  std::string line;
  int data_rows = 0, mean_rows = 0, p_rows = 0;
  bool header = false;
  while (std::getline(ss, line)) {
    if (line.rfind("method\t", 0) == 0) header = true;
    else if (line.rfind("mean\t", 0) == 0) ++mean_rows;
    else if (line.rfind("pvalue\t", 0) == 0) ++p_rows;
    else if (line[0] != '#') ++data_rows;
  }
  CHECK(header);
  CHECK(data_rows == 8);
  CHECK(mean_rows == 4);
  CHECK(p_rows == 4);
}
