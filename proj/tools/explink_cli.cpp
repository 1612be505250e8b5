#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "explink/harness.hpp"

using namespace explink;

namespace {

Alpha parse_alpha(const std::string& s) {
  if (s == "neg-inf") return Alpha::neg_inf();
  if (s == "pos-inf") return Alpha::pos_inf();
  return Alpha::finite(std::stod(s));
}

AnyDataset load_any(const std::string& dataset, const std::string& pairs,
                    const std::string& format) {
  if (format == "points") return load_point_dataset(dataset);
  if (format == "pairs") {
    if (pairs.empty()) {
      throw std::runtime_error("pairs format needs --pairs <feature file>");
    }
    return load_pair_dataset(dataset, pairs);
  }
  throw std::runtime_error("unknown format: " + format);
}

std::uint64_t env_seed_fallback(std::uint64_t seed, bool seed_given) {
  if (seed_given) return seed;
  if (const char* env = std::getenv("EXPLINK_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return seed;
}

SplitCounts parse_counts(const std::string& s, int n_units) {
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  if (vals.size() != 3) throw std::runtime_error("--counts needs 3 values");
  SplitCounts c;
  const double total = vals[0] + vals[1] + vals[2];
  if (total <= 1.5) {  // ratios
    c.train = static_cast<int>(std::lround(vals[0] * n_units));
    c.dev = static_cast<int>(std::lround(vals[1] * n_units));
    c.test = n_units - c.train - c.dev;
  } else {
    c.train = static_cast<int>(vals[0]);
    c.dev = static_cast<int>(vals[1]);
    c.test = static_cast<int>(vals[2]);
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"supervised hierarchical clustering with learnable linkage"};
  app.require_subcommand(1);
  app.set_config("--config");

  std::string dataset, pairs, out, format = "points";
  std::string method = "ap", linkage = "sl", alpha_str = "0";
  std::string model_path, trees_path, model_kind = "linear";
  std::string generator = "two-cluster", methods_csv = "ap,mst", linkages_csv = "sl,avg";
  std::string counts_str = "0.4,0.2,0.4";
  int epochs = 100, n_splits = 5, n_per_cluster = 40;
  double rate_theta = 0.01, rate_alpha = 0.05;
  double threshold = 0.0, margin = 2.0, xi = 0.0;
  bool have_threshold = false, have_margin = false, have_xi = false, raw_loss = false;
  std::uint64_t seed = 0;
  bool seed_given = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--dataset", dataset, "dataset file (entities file for pairs)")->required();
    cmd->add_option("--pairs", pairs, "pair feature file (pairs format)");
    cmd->add_option("--format", format, "points|pairs")->check(CLI::IsMember({"points", "pairs"}));
  };
  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "RNG seed (EXPLINK_SEED env as fallback)")
        ->each([&](const std::string&) { seed_given = true; });
  };
  auto add_train_flags = [&](CLI::App* cmd) {
    cmd->add_option("--epochs", epochs);
    cmd->add_option("--rate-theta", rate_theta);
    cmd->add_option("--rate-alpha", rate_alpha);
    cmd->add_option("--threshold", threshold)->each([&](const std::string&) { have_threshold = true; });
    cmd->add_option("--margin", margin)->each([&](const std::string&) { have_margin = true; });
    cmd->add_flag("--raw-loss", raw_loss, "disable the threshold/margin hinge");
    cmd->add_option("--model-kind", model_kind)->check(CLI::IsMember({"linear", "mahalanobis"}));
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--generator", generator)->check(CLI::IsMember({"two-cluster", "path"}));
  synth->add_option("--n-per-cluster", n_per_cluster);
  synth->add_option("--out", out)->required();
  add_seed(synth);

  auto* train_cmd = app.add_subcommand("train", "train a dissimilarity model");
  add_common(train_cmd);
  add_seed(train_cmd);
  add_train_flags(train_cmd);
  train_cmd->add_option("--method", method);
  train_cmd->add_option("--out", out, "model output file")->required();

  auto* cluster_cmd = app.add_subcommand("cluster", "build dendrograms");
  add_common(cluster_cmd);
  cluster_cmd->add_option("--model", model_path, "trained model file");
  cluster_cmd->add_option("--linkage", linkage);
  cluster_cmd->add_option("--alpha", alpha_str, "explink alpha: real|neg-inf|pos-inf");
  cluster_cmd->add_option("--out", out, "dendrogram output file")->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "score dendrograms");
  add_common(eval_cmd);
  eval_cmd->add_option("--trees", trees_path)->required();
  eval_cmd->add_option("--xi", xi, "flat-cut threshold; omit to tune-free DP only")
      ->each([&](const std::string&) { have_xi = true; });

  auto* exp_cmd = app.add_subcommand("experiment", "full split protocol");
  add_common(exp_cmd);
  add_seed(exp_cmd);
  add_train_flags(exp_cmd);
  exp_cmd->add_option("--methods", methods_csv, "comma separated training methods");
  exp_cmd->add_option("--linkages", linkages_csv, "comma separated linkages");
  exp_cmd->add_option("--splits", n_splits);
  exp_cmd->add_option("--counts", counts_str, "train,dev,test unit counts or ratios");
  exp_cmd->add_option("--out", out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    seed = env_seed_fallback(seed, seed_given);

    if (synth->parsed()) {
      PointDataset data = generator == "path"
                              ? gen_path_synth(seed)
                              : gen_two_cluster_synth(seed, n_per_cluster);
      save_point_dataset(data, out);
      return 0;
    }

    const ModelKind kind = model_kind == "mahalanobis" ? ModelKind::Mahalanobis
                                                       : ModelKind::LinearPair;
    auto make_config = [&] {
      TrainConfig cfg = default_config_for(kind);
      cfg.epochs = epochs;
      cfg.rate_theta = rate_theta;
      cfg.rate_alpha = rate_alpha;
      if (have_threshold) cfg.threshold = threshold;
      if (have_margin) cfg.margin = margin;
      cfg.use_margin = !raw_loss;
      cfg.seed = seed;
      return cfg;
    };

    if (train_cmd->parsed()) {
      const AnyDataset data = load_any(dataset, pairs, format);
      TrainConfig cfg = make_config();
      cfg.method = train_method_from_string(method);
      const DatasetView view = unit_view(data, dataset_units(data));
      const int d = std::visit([](const auto& ds) { return ds.dim(); }, data);
      DissimilarityModel init = kind == ModelKind::Mahalanobis
                                    ? DissimilarityModel::mahalanobis(d, seed)
                                    : DissimilarityModel::linear(d, seed);
      const TrainResult result = train(view, init, cfg);
      save_model(result.model, result.alpha, out);
      std::cout << "final epoch loss: " << result.loss_trace.back() << "\n";
      return 0;
    }

    if (cluster_cmd->parsed()) {
      const AnyDataset data = load_any(dataset, pairs, format);
      const DatasetView view = unit_view(data, dataset_units(data));
      std::optional<Alpha> model_alpha;
      DissimilarityModel model = DissimilarityModel::euclidean(view.dim());
      if (!model_path.empty()) {
        auto loaded = load_model(model_path);
        model = loaded.first;
        model_alpha = loaded.second;
      }
      LinkageSpec spec;
      switch (linkage_kind_from_string(linkage)) {
        case LinkageKind::Single: spec = LinkageSpec::single(); break;
        case LinkageKind::Average: spec = LinkageSpec::average(); break;
        case LinkageKind::Complete: spec = LinkageSpec::complete(); break;
        case LinkageKind::Exp:
          spec = LinkageSpec::exp(cluster_cmd->count("--alpha")
                                      ? parse_alpha(alpha_str)
                                      : model_alpha.value_or(parse_alpha(alpha_str)));
          break;
      }
      const auto trees = cluster_view(view, model, spec);
      std::ofstream os(out);
      if (!os) throw std::runtime_error("cannot write " + out);
      save_dendrograms(trees, os);
      return 0;
    }

    if (eval_cmd->parsed()) {
      const AnyDataset data = load_any(dataset, pairs, format);
      std::ifstream is(trees_path);
      if (!is) throw std::runtime_error("cannot open " + trees_path);
      const auto trees = load_dendrograms(is);
      const auto& labels = dataset_labels(data);
      std::cout << "dendrogram_purity\t"
                << dendrogram_purity(std::span(trees), labels) << "\n";
      if (have_xi) {
        PairCounts counts;
        for (const auto& tree : trees) counts += pair_counts(cut_tree(tree, xi), labels);
        std::cout << "pairwise_f1\t" << f1_from_counts(counts) << "\n";
      }
      return 0;
    }

    if (exp_cmd->parsed()) {
      const AnyDataset data = load_any(dataset, pairs, format);
      ExperimentConfig cfg;
      cfg.base = make_config();
      cfg.model_kind = kind;
      cfg.n_splits = n_splits;
      cfg.counts = parse_counts(counts_str, static_cast<int>(dataset_units(data).size()));
      std::stringstream ms(methods_csv), ls(linkages_csv);
      std::string tok;
      while (std::getline(ms, tok, ',')) cfg.methods.push_back(train_method_from_string(tok));
      while (std::getline(ls, tok, ',')) cfg.linkages.push_back(linkage_kind_from_string(tok));
      const ExperimentResult result = run_experiment(data, cfg);
      std::ofstream os(out);
      if (!os) throw std::runtime_error("cannot write " + out);
      write_experiment_tsv(result, os);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
