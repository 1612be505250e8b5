#ifndef EXPLINK_HARNESS_HPP
#define EXPLINK_HARNESS_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "explink/core.hpp"
#include "explink/eval.hpp"
#include "explink/hac.hpp"
#include "explink/train.hpp"

namespace explink {

// ---------- dataset IO ----------
// Points: one row per point, whitespace separated: id label f0..f{d-1}.
// Pairs: an entity file (id block label) plus a pair-feature file
// (id_a id_b f0..f{d-1}).

PointDataset load_point_dataset(const std::string& path);
void save_point_dataset(const PointDataset& data, const std::string& path);

PairDataset load_pair_dataset(const std::string& entities_path,
                              const std::string& pairs_path);
void save_pair_dataset(const PairDataset& data, const std::string& entities_path,
                       const std::string& pairs_path);

// ---------- dendrogram IO ----------
// Line oriented: "T <n_leaves>" opens a tree, then "L <node-id> <point-id>"
// per leaf and "I <node-id> <left> <right> <height>" per internal node,
// root last. A file may hold several trees (one per block).

void save_dendrograms(std::span<const Dendrogram> trees, std::ostream& os);
std::vector<Dendrogram> load_dendrograms(std::istream& is);

// ---------- model IO ----------
void save_model(const DissimilarityModel& model, std::optional<Alpha> alpha,
                const std::string& path);
std::pair<DissimilarityModel, std::optional<Alpha>> load_model(
    const std::string& path);

// ---------- splits ----------
struct SplitCounts {
  int train = 0;
  int dev = 0;
  int test = 0;
};

// Train/dev/test assignment of clustering units (ground-truth cluster labels
// for point data, block ids for pair data).
struct SplitSpec {
  int index = 0;
  std::uint64_t seed = 0;
  std::vector<int> train_units;
  std::vector<int> dev_units;
  std::vector<int> test_units;
};

// Independent random partitions of the units; split i depends only on
// (seed, i).
std::vector<SplitSpec> make_splits(const std::vector<int>& units,
                                   SplitCounts counts, int n_splits,
                                   std::uint64_t seed);

using AnyDataset = std::variant<PointDataset, PairDataset>;

std::vector<int> dataset_units(const AnyDataset& data);
const std::vector<int>& dataset_labels(const AnyDataset& data);

// View over the points whose unit (label or block) is in the given list.
DatasetView unit_view(const AnyDataset& data, const std::vector<int>& units);

// ---------- synthetic generators ----------
// Two interleaved elongated clusters whose all-pairs-optimal linear boundary
// on |x - x'| differs from the chain-separable one.
PointDataset gen_two_cluster_synth(std::uint64_t seed, int n_per_cluster);

// Two noisy spherical blobs plus a dense curved path, three labels.
PointDataset gen_path_synth(std::uint64_t seed);

// ---------- experiment orchestration ----------
struct ExperimentRow {
  TrainMethod method;
  LinkageKind linkage;
  int split = 0;
  double dp = 0.0;
  double f1 = 0.0;
  double xi = 0.0;
  std::optional<Alpha> alpha;
};

struct ExperimentSummary {
  TrainMethod method;
  LinkageKind linkage;
  double mean_dp = 0.0;
  double mean_f1 = 0.0;
  double p_dp = 1.0;  // vs the column-best method, per linkage
  double p_f1 = 1.0;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  std::vector<ExperimentSummary> summaries;
};

struct ExperimentConfig {
  std::vector<TrainMethod> methods;
  std::vector<LinkageKind> linkages;
  int n_splits = 5;
  SplitCounts counts;
  ModelKind model_kind = ModelKind::LinearPair;
  TrainConfig base;  // method field is overridden per run
};

// Per (method, linkage, split): train on the train part, fit alpha post hoc
// where the linkage is Exp and the method did not learn one, tune xi on dev,
// and score DP / F1 on the test part.
ExperimentResult run_experiment(const AnyDataset& data,
                                const ExperimentConfig& config);

void write_experiment_tsv(const ExperimentResult& result, std::ostream& os);

std::string to_string(LinkageKind kind);
LinkageKind linkage_kind_from_string(const std::string& s);

// Threshold/margin defaults per model class.
TrainConfig default_config_for(ModelKind kind);

// Build one dendrogram per block of the view under the given model/linkage.
std::vector<Dendrogram> cluster_view(const DatasetView& view,
                                     const DissimilarityModel& model,
                                     const LinkageSpec& linkage);

}  // namespace explink

#endif
