#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ecgnet/dataset.hpp"
#include "ecgnet/dsp.hpp"
#include "ecgnet/fusion.hpp"
#include "ecgnet/metrics.hpp"
#include "ecgnet/network.hpp"
#include "ecgnet/optim.hpp"
#include "ecgnet/serialize.hpp"
#include "ecgnet/synth.hpp"

namespace fs = std::filesystem;
using namespace ecgnet;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out_dir = ".";
};

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Collect the level-s segments of every record whose length supports level s.
std::vector<optim::TrainSample> level_samples(const data::Dataset& ds, int level,
                                              const dsp::StftConfig& cfg) {
  std::vector<optim::TrainSample> out;
  for (const auto& rec : ds.records) {
    const auto seg = data::segment(rec);
    if (seg.max_level < level) continue;
    for (const auto& piece : seg.per_level[static_cast<std::size_t>(level - 1)]) {
      optim::TrainSample s;
      s.input = dsp::preprocess<float>(piece.samples, piece.sample_rate_hz, level, cfg);
      s.label = piece.label;
      out.push_back(std::move(s));
    }
  }
  return out;
}

double accuracy_on(const nn::Model<float>& model, const std::vector<optim::TrainSample>& samples) {
  if (samples.empty()) return 0.0;
  int correct = 0;
  for (const auto& s : samples) {
    const auto p = nn::forward(model, s.input);
    int best = 0;
    for (std::size_t i = 1; i < p.size(); ++i)
      if (p[i] > p[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    if (best == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

data::Dataset subset(const data::Dataset& ds, const std::vector<std::size_t>& indices) {
  data::Dataset out;
  out.sample_rate_hz = ds.sample_rate_hz;
  out.num_classes = ds.num_classes;
  for (auto i : indices) out.records.push_back(ds.records[i]);
  return out;
}

// ---- gen --------------------------------------------------------------------

int cmd_gen(const GlobalOpts& g, const std::string& classes_arg, int per_class, double duration,
            int rate, double noise_baseline, double noise_gaussian, double noise_powerline,
            const std::string& out) {
  std::vector<synth::RhythmClass> classes;
  if (classes_arg == "all") {
    classes = synth::rhythm_catalog();
  } else {
    for (const auto& name : split_csv_list(classes_arg))
      classes.push_back(synth::class_by_name(name));
  }
  synth::NoiseConfig noise;
  noise.baseline_amp = noise_baseline;
  noise.gaussian_std = noise_gaussian;
  noise.powerline_amp = noise_powerline;

  data::Dataset ds;
  ds.sample_rate_hz = rate;
  ds.num_classes = static_cast<int>(classes.size());
  std::map<std::string, int> counts;
  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    for (int i = 0; i < per_class; ++i) {
      const std::uint64_t seed =
          g.seed * 1000003ULL + ci * 131071ULL + static_cast<std::uint64_t>(i);
      auto rec = synth::synth_record(classes[ci], duration, rate, seed, noise);
      rec.label = static_cast<int>(ci);  // dataset-local ids, catalog order
      ds.records.push_back(std::move(rec));
      ++counts[classes[ci].name];
    }
  }
  data::write_dataset(out, ds);
  std::cout << "class,count\n";
  for (const auto& c : classes) std::cout << c.name << "," << counts[c.name] << "\n";
  std::cerr << "wrote " << ds.records.size() << " records to " << out << "\n";
  return 0;
}

// ---- train ------------------------------------------------------------------

int cmd_train(const GlobalOpts& g, const std::string& data_path, int level, bool all_levels,
              const std::string& preset, optim::TrainConfig cfg) {
  const auto ds = data::read_dataset(data_path);
  if (ds.records.empty()) throw EmptyDataset("no records in " + data_path);
  cfg.threads = g.threads;
  cfg.seed = g.seed;
  fs::create_directories(g.out_dir);

  std::vector<int> levels;
  if (all_levels) {
    for (int s = 1; s <= 6; ++s) levels.push_back(s);
  } else {
    levels.push_back(level);
  }

  std::cout << "level,final_train_accuracy,model_file\n";
  for (int s : levels) {
    const auto samples = level_samples(ds, s, dsp::StftConfig{});
    if (samples.empty())
      throw EmptyDataset("no level-" + std::to_string(s) + " segments in " + data_path);
    nn::NetworkSpec spec;
    if (preset == "h") {
      spec = nn::build_h_level(s, ds.num_classes);
    } else if (preset == "deep") {
      if (s != 6) throw InvalidLevel("deep preset is a level-6 architecture");
      spec = nn::build_deep_variant(ds.num_classes);
    } else {
      spec = nn::build_preset(preset);
    }
    auto [model, hist] = optim::train(spec, samples, cfg);
    const auto model_path = (fs::path(g.out_dir) / ("h" + std::to_string(s) + ".ecgm")).string();
    io::save_model(model, model_path);
    hist.write_csv((fs::path(g.out_dir) / ("history_h" + std::to_string(s) + ".csv")).string());
    std::cout << s << "," << accuracy_on(model, samples) << "," << model_path << "\n";
  }
  return 0;
}

// ---- eval -------------------------------------------------------------------

int cmd_eval(const GlobalOpts& g, const std::string& data_path, const std::string& model_path,
             int level, int folds) {
  const auto ds = data::read_dataset(data_path);
  const auto model = io::load_model(model_path);

  std::vector<double> fold_acc;
  std::vector<int> all_preds, all_labels;
  const auto fold_indices = data::split_folds(ds, folds, g.seed);
  for (const auto& fold : fold_indices) {
    const auto fold_ds = subset(ds, fold);
    const auto samples = level_samples(fold_ds, level, dsp::StftConfig{});
    int correct = 0;
    for (const auto& s : samples) {
      const auto p = nn::forward(model, s.input);
      int best = 0;
      for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
      all_preds.push_back(best);
      all_labels.push_back(s.label);
      if (best == s.label) ++correct;
    }
    fold_acc.push_back(samples.empty() ? 0.0
                                       : static_cast<double>(correct) /
                                             static_cast<double>(samples.size()));
  }
  const double mean = std::accumulate(fold_acc.begin(), fold_acc.end(), 0.0) /
                      static_cast<double>(fold_acc.size());
  double var = 0.0;
  for (double a : fold_acc) var += (a - mean) * (a - mean);
  const double stddev = std::sqrt(var / static_cast<double>(fold_acc.size()));

  const auto cm = metrics::confusion(all_preds, all_labels, ds.num_classes);
  std::cout << "fold,accuracy\n";
  for (std::size_t i = 0; i < fold_acc.size(); ++i) std::cout << i << "," << fold_acc[i] << "\n";
  std::cout << "mean," << mean << "\n";
  std::cout << "std," << stddev << "\n";
  std::cout << metrics::report_csv(cm, 0);
  return 0;
}

// ---- fuse -------------------------------------------------------------------

fusion::ScaleBank load_bank(const std::string& bank_dir, int max_level, int num_classes) {
  fusion::ScaleBank bank;
  bank.num_classes = num_classes;
  for (int s = 1; s <= max_level; ++s) {
    const auto path = (fs::path(bank_dir) / ("h" + std::to_string(s) + ".ecgm")).string();
    bank.models.push_back(io::load_model(path));
  }
  return bank;
}

int cmd_fuse(const GlobalOpts& g, const std::string& data_path, const std::string& bank_dir,
             const std::string& scheme_arg, int max_level) {
  (void)g;
  const auto ds = data::read_dataset(data_path);
  const auto scheme = scheme_arg == "geometric" ? fusion::WeightScheme::Geometric
                                                : fusion::WeightScheme::Uniform;
  const auto bank = load_bank(bank_dir, max_level, ds.num_classes);

  const auto fw = fusion::fusion_weights(max_level, scheme);
  std::cerr << "fusion weights (" << fusion::scheme_name(scheme) << ", s_l=" << max_level << "): ";
  for (std::size_t i = 0; i < fw.w.size(); ++i) std::cerr << (i ? "," : "") << fw.w[i];
  std::cerr << "\n";

  const std::size_t target_len = static_cast<std::size_t>(data::kBaseLen) << (max_level - 1);
  std::vector<std::vector<int>> preds_per_level(static_cast<std::size_t>(max_level));
  std::vector<int> labels;
  for (const auto& rec : ds.records) {
    const auto fitted = data::fit_length(rec, target_len);
    const auto decisions = fusion::predict_progressive(bank, fitted, scheme);
    for (const auto& d : decisions)
      preds_per_level[static_cast<std::size_t>(d.level - 1)].push_back(d.predicted);
    labels.push_back(rec.label);
  }

  std::cout << "level,accuracy,mean_f1\n";
  for (int L = 1; L <= max_level; ++L) {
    const auto cm = metrics::confusion(preds_per_level[static_cast<std::size_t>(L - 1)], labels,
                                       ds.num_classes);
    std::cout << L << "," << metrics::accuracy(cm).value << ","
              << metrics::mean_f1(cm, metrics::all_classes(cm)).value << "\n";
  }
  return 0;
}

// ---- bench ------------------------------------------------------------------

int cmd_bench(const GlobalOpts& g, const std::string& model_path, const std::string& bank_dir,
              int max_level, int batch, int repeats) {
  std::vector<std::pair<int, nn::Model<float>>> models;
  if (!model_path.empty()) {
    auto m = io::load_model(model_path);
    int level = 1;
    if (m.spec.descriptor.size() >= 2 && m.spec.descriptor[0] == 'h')
      level = m.spec.descriptor[1] - '0';
    models.emplace_back(level, std::move(m));
  } else {
    for (int s = 1; s <= max_level; ++s) {
      const auto path = (fs::path(bank_dir) / ("h" + std::to_string(s) + ".ecgm")).string();
      models.emplace_back(s, io::load_model(path));
    }
  }

  std::cout << "level,flops,mean_ms,std_ms\n";
  for (auto& [level, model] : models) {
    SplitMix64 rng(g.seed + static_cast<std::uint64_t>(level));
    std::vector<Tensor<float>> inputs;
    for (int b = 0; b < batch; ++b) {
      Tensor<float> t({model.spec.input_dims[0], model.spec.input_dims[1],
                       model.spec.input_dims[2]});
      for (auto& v : t.data) v = static_cast<float>(rng.normal());
      inputs.push_back(std::move(t));
    }
    std::vector<double> per_inference_ms;
    for (int r = 0; r < repeats; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      for (const auto& in : inputs) {
        volatile float sink = nn::forward(model, in)[0];
        (void)sink;
      }
      const auto t1 = std::chrono::steady_clock::now();
      per_inference_ms.push_back(
          std::chrono::duration<double, std::milli>(t1 - t0).count() / batch);
    }
    const double mean = std::accumulate(per_inference_ms.begin(), per_inference_ms.end(), 0.0) /
                        static_cast<double>(repeats);
    double var = 0.0;
    for (double v : per_inference_ms) var += (v - mean) * (v - mean);
    const double stddev = std::sqrt(var / static_cast<double>(repeats));
    std::cout << level << "," << nn::count_flops(model.spec) << "," << mean << "," << stddev
              << "\n";
  }
  return 0;
}

// ---- inspect / export -------------------------------------------------------

const char* layer_name(const nn::LayerSpec& layer) {
  if (std::get_if<nn::Conv2dSpec>(&layer)) return "conv";
  if (std::get_if<nn::MaxPoolSpec>(&layer)) return "maxpool";
  if (std::get_if<nn::ReluSpec>(&layer)) return "relu";
  return "fc";
}

int cmd_inspect(const std::string& model_path, const std::string& data_path) {
  if (!model_path.empty()) {
    const auto model = io::load_model(model_path);
    const auto shapes = nn::infer_shapes(model.spec);
    std::cout << "preset," << model.spec.descriptor << "\n";
    std::cout << "input," << model.spec.input_dims[0] << "x" << model.spec.input_dims[1] << "x"
              << model.spec.input_dims[2] << "\n";
    std::cout << "layer,type,output\n";
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      std::cout << i << "," << layer_name(model.spec.layers[i]) << "," << shapes[i][0] << "x"
                << shapes[i][1] << "x" << shapes[i][2] << "\n";
    }
    std::cout << "params," << nn::count_params(model.spec) << "\n";
    std::cout << "flops," << nn::count_flops(model.spec) << "\n";
  } else {
    const auto ds = data::read_dataset(data_path);
    std::cout << "records," << ds.records.size() << "\n";
    std::cout << "sample_rate," << ds.sample_rate_hz << "\n";
    std::cout << "classes," << ds.num_classes << "\n";
    std::vector<int> counts(static_cast<std::size_t>(ds.num_classes), 0);
    for (const auto& r : ds.records)
      if (r.label >= 0) ++counts[static_cast<std::size_t>(r.label)];
    std::cout << "class,count\n";
    for (int i = 0; i < ds.num_classes; ++i) std::cout << i << "," << counts[static_cast<std::size_t>(i)] << "\n";
  }
  return 0;
}

int cmd_export(const std::string& record_path, int index, const std::string& out) {
  data::Dataset ds;
  if (record_path.size() > 4 && record_path.substr(record_path.size() - 4) == ".csv") {
    ds = data::import_csv(record_path, data::kCanonicalRate);
  } else {
    ds = data::read_dataset(record_path);
  }
  if (index < 0 || static_cast<std::size_t>(index) >= ds.records.size())
    throw Error("record index out of range");
  const auto& rec = ds.records[static_cast<std::size_t>(index)];
  const auto seg = data::segment(rec);  // validates the length, gives the level
  const auto input =
      dsp::preprocess<float>(rec.samples, rec.sample_rate_hz, seg.max_level, dsp::StftConfig{});
  std::ofstream os(out);
  if (!os) throw Error("cannot open " + out);
  const int rows = input.dims[1], cols = input.dims[2];
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c)
      os << (c ? "," : "") << input.data[static_cast<std::size_t>(r) * cols + c];
    os << "\n";
  }
  std::cerr << "wrote " << rows << "x" << cols << " spectrogram to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-scale ECG spectrogram classification pipeline"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "global RNG seed");
  app.add_option("--threads", g.threads, "parallel width for batch work")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "output directory");

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  std::string gen_classes = "all";
  int gen_per_class = 120;
  double gen_duration = 32.0;
  int gen_rate = 512;
  double noise_baseline = 0.05, noise_gaussian = 0.01, noise_powerline = 0.0;
  std::string gen_out = "dataset.ecgd";
  gen->add_option("--classes", gen_classes, "comma-separated class names, or 'all'");
  gen->add_option("--per-class", gen_per_class)->check(CLI::PositiveNumber);
  gen->add_option("--duration", gen_duration, "seconds per record");
  gen->add_option("--rate", gen_rate)->check(CLI::PositiveNumber);
  gen->add_option("--noise-baseline", noise_baseline);
  gen->add_option("--noise-gaussian", noise_gaussian);
  gen->add_option("--noise-powerline", noise_powerline);
  gen->add_option("--out", gen_out);

  // train
  auto* train = app.add_subcommand("train", "train scale-specific models");
  std::string train_data;
  int train_level = 1;
  bool all_levels = false;
  std::string train_preset = "h";
  optim::TrainConfig tcfg;
  train->add_option("--data", train_data)->required();
  auto* level_opt = train->add_option("--level", train_level)->check(CLI::Range(1, 6));
  train->add_flag("--all-levels", all_levels)->excludes(level_opt);
  train->add_option("--preset", train_preset, "h | deep | explicit preset string");
  train->add_option("--iters", tcfg.total_iters)->check(CLI::NonNegativeNumber);
  train->add_option("--batch", tcfg.batch_size)->check(CLI::PositiveNumber);
  train->add_option("--lr", tcfg.lr0);
  train->add_option("--halve-every", tcfg.lr_halve_every)->check(CLI::PositiveNumber);
  train->add_option("--lr-floor", tcfg.lr_floor);
  train->add_option("--momentum", tcfg.momentum);
  train->add_option("--decay", tcfg.weight_decay);

  // eval
  auto* eval = app.add_subcommand("eval", "score one model with k-fold splits");
  std::string eval_data, eval_model;
  int eval_level = 1, eval_folds = 3;
  eval->add_option("--data", eval_data)->required();
  eval->add_option("--model", eval_model)->required();
  eval->add_option("--level", eval_level)->check(CLI::Range(1, 6));
  eval->add_option("--folds", eval_folds)->check(CLI::PositiveNumber);

  // fuse
  auto* fuse_cmd = app.add_subcommand("fuse", "progressive fused scoring");
  std::string fuse_data, fuse_bank, fuse_scheme = "uniform";
  int fuse_max_level = 6;
  fuse_cmd->add_option("--data", fuse_data)->required();
  fuse_cmd->add_option("--bank-dir", fuse_bank)->required();
  fuse_cmd->add_option("--scheme", fuse_scheme)->check(CLI::IsMember({"uniform", "geometric"}));
  fuse_cmd->add_option("--max-level", fuse_max_level)->check(CLI::Range(1, 6));

  // bench
  auto* bench = app.add_subcommand("bench", "inference latency and FLOP report");
  std::string bench_model, bench_bank;
  int bench_level = 6, bench_batch = 8, bench_repeats = 5;
  auto* bm = bench->add_option("--model", bench_model);
  bench->add_option("--bank-dir", bench_bank)->excludes(bm);
  bench->add_option("--level", bench_level)->check(CLI::Range(1, 6));
  bench->add_option("--batch", bench_batch)->check(CLI::PositiveNumber);
  bench->add_option("--repeats", bench_repeats)->check(CLI::PositiveNumber);

  // inspect
  auto* inspect = app.add_subcommand("inspect", "describe a model or dataset file");
  std::string inspect_model, inspect_data;
  auto* im = inspect->add_option("--model", inspect_model);
  inspect->add_option("--data", inspect_data)->excludes(im);

  // export
  auto* exp = app.add_subcommand("export", "emit a record's spectrogram as CSV");
  std::string export_record, export_out = "spectrogram.csv";
  int export_index = 0;
  exp->add_option("--record", export_record, "ECGD or CSV file")->required();
  exp->add_option("--index", export_index)->check(CLI::NonNegativeNumber);
  exp->add_option("--out", export_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_gen(g, gen_classes, gen_per_class, gen_duration, gen_rate, noise_baseline,
                     noise_gaussian, noise_powerline, gen_out);
    if (train->parsed()) {
      if (!all_levels && level_opt->count() == 0) {
        std::cerr << "train: either --level or --all-levels is required\n";
        return 2;
      }
      return cmd_train(g, train_data, train_level, all_levels, train_preset, tcfg);
    }
    if (eval->parsed()) return cmd_eval(g, eval_data, eval_model, eval_level, eval_folds);
    if (fuse_cmd->parsed()) return cmd_fuse(g, fuse_data, fuse_bank, fuse_scheme, fuse_max_level);
    if (bench->parsed()) {
      if (bench_model.empty() && bench_bank.empty()) {
        std::cerr << "bench: --model or --bank-dir is required\n";
        return 2;
      }
      return cmd_bench(g, bench_model, bench_bank, bench_level, bench_batch, bench_repeats);
    }
    if (inspect->parsed()) {
      if (inspect_model.empty() && inspect_data.empty()) {
        std::cerr << "inspect: --model or --data is required\n";
        return 2;
      }
      return cmd_inspect(inspect_model, inspect_data);
    }
    if (exp->parsed()) return cmd_export(export_record, export_index, export_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
