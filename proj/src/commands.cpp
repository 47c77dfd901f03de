/*
 * Copyright 2026 The SHIELD-CL Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "shield/commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>

#include "shield/checkpoint.hpp"
#include "shield/errors.hpp"
#include "shield/metrics.hpp"
#include "shield/random.hpp"

namespace shield {

namespace fs = std::filesystem;

namespace {

// Re-raises library contract errors as configuration errors naming the key.
template <class F>
auto keyed(const char* key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const DataError&) {
    throw;
  } catch (const DivergenceError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(key, e.what());
  }
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::string& header) : out_(path) {
    if (!out_) throw DataError("cannot write " + path.string());
    out_ << header << "\n";
  }
  template <class... Cells>
  void row(const Cells&... cells) {
    std::size_t i = 0;
    ((out_ << (i++ ? "," : "") << cell(cells)), ...);
    out_ << "\n";
  }

 private:
  static std::string cell(double v) { return format_real(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(std::string_view s) { return std::string(s); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }

  std::ofstream out_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

Dataset limit(const Dataset& d, std::size_t count) { return count == 0 ? d : d.head(count); }

Config checkpoint_config(const Checkpoint& ckpt, const std::vector<std::string>& overrides) {
  Config cfg = Config::parse(ckpt.config);
  for (const auto& o : overrides) cfg.apply_override(o);
  return cfg;
}

TaskSequence tasks_for(const Checkpoint& ckpt, const Config& cfg) {
  TaskSequence tasks = build_tasks(cfg);
  if (tasks.sample_shape() != ckpt.model.spec.input_shape || tasks.classes() != ckpt.model.spec.classes) {
    throw DataError("configured data " + to_string(tasks.sample_shape()) + " does not match the checkpoint network " +
                    to_string(ckpt.model.spec.input_shape));
  }
  if (tasks.size() < ckpt.model.tasks_trained) throw DataError("configuration has fewer tasks than the checkpoint");
  tasks.tasks.resize(ckpt.model.tasks_trained);
  return tasks;
}

void write_log(CsvWriter& log, const TaskLog& tl) {
  for (const auto& s : tl.steps) {
    log.row(s.task, s.step, s.loss, s.fit_loss, s.reg_loss, s.kappa, s.eps, s.lambda, s.eps_virtual);
  }
}

constexpr const char* kLogHeader = "task,step,loss,fit_loss,reg_loss,kappa,eps,lambda,eps_virtual";

}  // namespace

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

TaskSequence build_tasks(const Config& cfg) {
  const std::string kind = cfg.get_string("data", "kind");
  const std::uint64_t seed = cfg.get_u64("data", "seed");
  const double val_fraction = cfg.get_double("data", "val_fraction");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("data.val_fraction", "must lie in [0, 1)");
  const TaskSplitConfig split{val_fraction, seed};
  if (kind == "blobs") {
    BlobsConfig b;
    b.tasks = cfg.get_size("data", "tasks");
    b.classes = cfg.get_size("data", "classes");
    b.dims = cfg.get_size("data", "dims");
    b.train_per_class = cfg.get_size("data", "train_per_class");
    b.test_per_class = cfg.get_size("data", "test_per_class");
    b.separation = cfg.get_double("data", "separation");
    b.std = cfg.get_double("data", "std");
    b.seed = seed;
    b.val_fraction = val_fraction;
    return keyed("data.kind", [&] { return gen_blobs_tasks(b); });
  }
  if (kind != "permuted" && kind != "rotated") throw ConfigError("data.kind", "unknown data kind '" + kind + "'");
  Dataset train, test;
  const std::string source = cfg.get_string("data", "source");
  if (source == "synthetic") {
    const std::size_t size = cfg.get_size("data", "synthetic_size");
    train = keyed("data.synthetic_size", [&] { return gen_synthetic_digits(cfg.get_size("data", "synthetic_train"), seed, size); });
    test = gen_synthetic_digits(cfg.get_size("data", "synthetic_test"), derive_seed(seed, 0x7e57), size);
  } else if (source == "idx") {
    train = load_idx(cfg.get_string("data", "train_images"), cfg.get_string("data", "train_labels"));
    test = load_idx(cfg.get_string("data", "test_images"), cfg.get_string("data", "test_labels"));
  } else {
    throw ConfigError("data.source", "unknown source '" + source + "'");
  }
  train = limit(train, cfg.get_size("data", "train_samples"));
  test = limit(test, cfg.get_size("data", "test_samples"));
  const std::size_t factor = cfg.get_size("data", "downsample");
  if (kind == "permuted") {
    return keyed("data.downsample", [&] {
      return build_permuted_tasks(train, test, cfg.get_size("data", "tasks"), seed, factor, split);
    });
  }
  const auto angles = cfg.get_doubles("data", "angles");
  if (angles.empty()) throw ConfigError("data.angles", "rotated tasks need one angle per task");
  const Interpolation interp = keyed("data.interpolation", [&] { return parse_interpolation(cfg.get_string("data", "interpolation")); });
  const Dataset tr = keyed("data.downsample", [&] { return downsample(train, factor); });
  return build_rotated_tasks(tr, downsample(test, factor), angles, interp, split);
}

NetworkSpec build_network(const Config& cfg, const Shape& input_shape, std::size_t classes) {
  std::string layers = cfg.get_string("net", "layers");
  const std::string act = cfg.get_string("net", "activation");
  keyed("net.activation", [&] { return parse_activation(act); });
  std::string expanded;
  std::size_t pos = 0;
  while (pos <= layers.size()) {
    const auto comma = layers.find(',', pos);
    std::string token = layers.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    const auto b = token.find_first_not_of(' ');
    const auto e = token.find_last_not_of(' ');
    token = b == std::string::npos ? "" : token.substr(b, e - b + 1);
    if (!token.empty()) expanded += (expanded.empty() ? "" : ",") + (token == "act" ? act : token);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  expanded += (expanded.empty() ? "" : ",") + std::string("dense:") + std::to_string(classes);
  NetworkSpec spec;
  spec.input_shape = input_shape;
  spec.classes = classes;
  spec.bn_stability = cfg.get_double("net", "bn_stability");
  if (!(spec.bn_stability > 0.0)) throw ConfigError("net.bn_stability", "must be positive");
  return keyed("net.layers", [&] {
    spec.layers = parse_layers(expanded);
    spec.validate();
    return spec;
  });
}

HypernetConfig build_hypernet(const Config& cfg) {
  HypernetConfig h;
  h.hidden = cfg.get_sizes("hypernet", "hidden");
  h.embedding_dim = cfg.get_size("hypernet", "embedding_dim");
  h.output_scale = cfg.get_double("hypernet", "output_scale");
  h.embedding_std = cfg.get_double("hypernet", "embedding_std");
  h.seed = cfg.get_u64("hypernet", "seed");
  if (h.embedding_dim == 0) throw ConfigError("hypernet.embedding_dim", "must be positive");
  for (std::size_t w : h.hidden) {
    if (w == 0) throw ConfigError("hypernet.hidden", "hidden widths must be positive");
  }
  return h;
}

TrainerConfig build_trainer(const Config& cfg) {
  TrainerConfig t;
  t.steps = cfg.get_size("train", "steps");
  t.batch = cfg.get_size("train", "batch");
  t.optimizer.learning_rate = cfg.get_double("train", "lr");
  t.optimizer.kind = keyed("train.optimizer", [&] { return parse_optimizer(cfg.get_string("train", "optimizer")); });
  t.loss.beta = cfg.get_double("train", "beta");
  t.loss.eps = cfg.get_double("train", "eps");
  t.loss.alpha = cfg.get_double("train", "alpha");
  t.loss.kappa = cfg.get_double("train", "kappa");
  t.loss.decay = keyed("train.decay", [&] { return parse_decay(cfg.get_string("train", "decay")); });
  t.kappa_schedule = cfg.get_bool("train", "kappa_schedule");
  t.eps_schedule = cfg.get_bool("train", "eps_schedule");
  t.interval_mixup = cfg.get_bool("train", "interval_mixup");
  t.seed = cfg.get_u64("train", "seed");
  t.val_every = cfg.get_size("train", "val_every");
  t.bn_momentum = cfg.get_double("train", "bn_momentum");
  if (!(t.optimizer.learning_rate > 0.0)) throw ConfigError("train.lr", "must be positive");
  keyed("train", [&] {
    t.validate();
    return 0;
  });
  return t;
}

AttackConfig build_attack(const Config& cfg) {
  AttackConfig a;
  a.kind = keyed("attack.kind", [&] { return parse_attack(cfg.get_string("attack", "kind")); });
  const std::string eps = cfg.get_string("attack", "eps");
  a.eps = eps == "auto" ? cfg.get_double("train", "eps") : cfg.get_double("attack", "eps");
  const std::string step = cfg.get_string("attack", "step");
  a.step = step == "auto" ? 0.0 : cfg.get_double("attack", "step");
  a.iterations = cfg.get_size("attack", "iterations");
  a.random_start = cfg.get_bool("attack", "random_start");
  a.seed = cfg.get_u64("attack", "seed");
  keyed("attack", [&] {
    a.validate();
    return 0;
  });
  return a;
}

fs::path output_directory(const Config& cfg) {
  fs::path dir = cfg.get_string("output", "dir");
  if (dir.empty()) throw ConfigError("output.dir", "must not be empty");
  if (dir.is_relative()) {
    if (const char* root = std::getenv(kOutputRootEnv); root && *root) dir = fs::path(root) / dir;
  }
  return dir;
}

fs::path cmd_train(const Config& cfg) {
  const TaskSequence tasks = build_tasks(cfg);
  const NetworkSpec spec = build_network(cfg, tasks.sample_shape(), tasks.classes());
  const TrainerConfig trainer = build_trainer(cfg);
  const HypernetConfig hcfg = build_hypernet(cfg);
  const fs::path dir = output_directory(cfg);
  fs::create_directories(dir);
  write_text(dir / "config.ini", cfg.text());
  write_text(dir / "config.resolved.ini", cfg.resolved());

  Model model = make_model(spec, hcfg, tasks.size());
  CsvWriter log(dir / "log.csv", kLogHeader);
  const SequenceResult result = train_sequence(model, tasks, trainer, [&](const Model& m, std::size_t t,
                                                                          const ResultMatrix& r) {
    Checkpoint ckpt{m, trainer.seed, r, cfg.resolved()};
    save_checkpoint(dir / ("checkpoint_task" + std::to_string(t) + ".json"), ckpt);
  });
  for (const auto& tl : result.logs) write_log(log, tl);

  CsvWriter results(dir / "results.csv", "trained_through,task,accuracy");
  for (std::size_t t = 1; t <= tasks.size(); ++t) {
    for (std::size_t s = 1; s <= t; ++s) results.row(t, s, result.accuracy.at(t, s));
  }
  CsvWriter metrics(dir / "metrics.csv", "metric,value");
  metrics.row("AA", average_accuracy(result.accuracy));
  if (tasks.size() >= 2) metrics.row("BWT", backward_transfer(result.accuracy));
  save_checkpoint(dir / "checkpoint.json", Checkpoint{model, trainer.seed, result.accuracy, cfg.resolved()});
  return dir;
}

fs::path cmd_eval(const fs::path& checkpoint, const std::vector<std::string>& overrides) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const Config cfg = checkpoint_config(ckpt, overrides);
  const TaskSequence tasks = tasks_for(ckpt, cfg);
  const AttackConfig base = build_attack(cfg);
  const Model& model = ckpt.model;
  const std::size_t T = model.tasks_trained;
  const fs::path dir = output_directory(cfg);
  fs::create_directories(dir);

  CsvWriter out(dir / "eval.csv", "task,attack,eps_attack,accuracy,verified_accuracy");
  ResultMatrix clean = ckpt.accuracy;
  for (AttackKind kind : {AttackKind::none, AttackKind::fgsm, AttackKind::pgd}) {
    AttackConfig a = base;
    a.kind = kind;
    double acc_sum = 0.0, ver_sum = 0.0;
    for (std::size_t t = 1; t <= T; ++t) {
      const ParamSet params = model.params(t);
      const Classifier head{model.spec, params, model.norm(t)};
      a.seed = derive_seed(base.seed, static_cast<std::uint64_t>(kind), t);
      const Dataset& test = tasks.tasks[t - 1].test;
      const EvalSummary s = summarize(evaluate_samples(head, test, a, a.eps), test.y);
      const double acc = kind == AttackKind::none ? s.accuracy : s.attacked_accuracy;
      out.row(t, to_string(kind), a.eps, acc, s.verified_accuracy);
      acc_sum += acc;
      ver_sum += s.verified_accuracy;
      if (kind == AttackKind::none) clean.set(T, t, s.accuracy);
    }
    out.row("AA", to_string(kind), a.eps, acc_sum / static_cast<double>(T), ver_sum / static_cast<double>(T));
  }
  if (T >= 2) out.row("BWT", "none", 0.0, backward_transfer(clean), std::string());
  const CilAccuracy cil = cil_evaluate(model, tasks);
  out.row("CIL-task", "none", 0.0, cil.task_accuracy, std::string());
  out.row("CIL", "none", 0.0, cil.accuracy, std::string());
  if (base.kind != AttackKind::none) {
    const CilAccuracy adv = cil_evaluate(model, tasks, base);
    out.row("CIL-task", to_string(base.kind), base.eps, adv.task_accuracy, std::string());
    out.row("CIL", to_string(base.kind), base.eps, adv.accuracy, std::string());
  }
  return dir;
}

fs::path cmd_certify(const fs::path& checkpoint, const std::vector<std::string>& overrides) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const Config cfg = checkpoint_config(ckpt, overrides);
  const TaskSequence tasks = tasks_for(ckpt, cfg);
  const auto grid = cfg.get_doubles("certify", "grid");
  if (grid.empty()) throw ConfigError("certify.grid", "needs at least one radius");
  for (double e : grid) {
    if (!(e >= 0.0)) throw ConfigError("certify.grid", "radii must be non-negative");
  }
  const Model& model = ckpt.model;
  const std::size_t T = model.tasks_trained;
  const fs::path dir = output_directory(cfg);
  fs::create_directories(dir);
  CsvWriter agg(dir / "certify.csv", "eps,clean_accuracy,verified_accuracy");
  CsvWriter per(dir / "certify_tasks.csv", "eps,task,clean_accuracy,verified_accuracy");
  for (double eps : grid) {
    double acc = 0.0, ver = 0.0;
    for (std::size_t t = 1; t <= T; ++t) {
      const ParamSet params = model.params(t);
      const Classifier head{model.spec, params, model.norm(t)};
      const Dataset& test = tasks.tasks[t - 1].test;
      const EvalSummary s = summarize(evaluate_samples(head, test, AttackConfig{}, eps), test.y);
      per.row(eps, t, s.accuracy, s.verified_accuracy);
      acc += s.accuracy;
      ver += s.verified_accuracy;
    }
    agg.row(eps, acc / static_cast<double>(T), ver / static_cast<double>(T));
  }
  return dir;
}

fs::path cmd_toy2d(const Config& cfg) {
  const std::size_t per_class = cfg.get_size("toy", "points_per_class");
  std::size_t pair_count = cfg.get_size("toy", "pairs");
  if (pair_count == 0) pair_count = per_class * per_class;
  const double eps = cfg.get_double("toy", "eps");
  const std::size_t resolution = cfg.get_size("toy", "grid");
  if (resolution < 2) throw ConfigError("toy.grid", "needs at least 2 points per axis");
  const Toy2D toy = keyed("toy.pairs", [&] {
    return gen_toy2d(per_class, cfg.get_u64("toy", "seed"), pair_count, cfg.get_double("toy", "min_gap"));
  });
  const NetworkSpec spec = build_network(cfg, Shape{2}, 2);
  TrainerConfig trainer = build_trainer(cfg);
  trainer.interval_mixup = true;
  trainer.loss.eps = eps;
  trainer.val_every = 0;
  Task task;
  task.name = "toy2d";
  task.classes = 2;
  task.train = toy.dataset();
  task.test = task.train;

  const fs::path dir = output_directory(cfg);
  fs::create_directories(dir);
  write_text(dir / "config.ini", cfg.text());
  write_text(dir / "config.resolved.ini", cfg.resolved());
  Model model = make_model(spec, build_hypernet(cfg), 1);
  const TaskLog tl = train_task(model, task, 1, trainer, toy.pairs);
  CsvWriter log(dir / "log.csv", kLogHeader);
  write_log(log, tl);

  const ParamSet params = model.params(1);
  const Classifier head{model.spec, params, model.norm(1)};
  {
    Tensor grid(Shape{resolution * resolution, 2});
    for (std::size_t i = 0; i < resolution; ++i) {
      for (std::size_t j = 0; j < resolution; ++j) {
        grid[(i * resolution + j) * 2] = static_cast<double>(j) / static_cast<double>(resolution - 1);
        grid[(i * resolution + j) * 2 + 1] = static_cast<double>(i) / static_cast<double>(resolution - 1);
      }
    }
    const Tensor logits = forward_point(spec, params, grid, model.norm(1));
    CsvWriter out(dir / "grid.csv", "x,y,logit_0,logit_1,predicted");
    for (std::size_t k = 0; k < resolution * resolution; ++k) {
      out.row(grid[2 * k], grid[2 * k + 1], logits[2 * k], logits[2 * k + 1],
              static_cast<std::size_t>(logits[2 * k + 1] > logits[2 * k]));
    }
  }
  const Dataset points = toy.dataset();
  const auto pred = predict(head, points.x);
  const auto cert = certify(head, points.x, points.y, eps);
  const auto cert0 = certify(head, points.x, points.y, 0.0);
  std::size_t correct = 0, certified_count = 0;
  {
    CsvWriter out(dir / "points.csv", "index,x,y,label,predicted,certified,certified_at_zero");
    for (std::size_t i = 0; i < points.size(); ++i) {
      out.row(i, points.x[2 * i], points.x[2 * i + 1], points.y[i], pred[i], bool(cert[i]), bool(cert0[i]));
      correct += pred[i] == points.y[i];
      certified_count += cert[i] && pred[i] == points.y[i];
    }
  }
  {
    CsvWriter out(dir / "virtual.csv", "pair,a,b,lambda,x,y,eps_virtual");
    const auto lambdas = cfg.get_doubles("toy", "lambda_grid");
    for (std::size_t p = 0; p < toy.pairs.size(); ++p) {
      const auto [a, b] = toy.pairs[p];
      for (double lambda : lambdas) {
        const double r = keyed("toy.lambda_grid", [&] { return scaled_radius(lambda, eps, trainer.loss.decay); });
        out.row(p, a, b, lambda, lambda * points.x[2 * a] + (1 - lambda) * points.x[2 * b],
                lambda * points.x[2 * a + 1] + (1 - lambda) * points.x[2 * b + 1], r);
      }
    }
  }
  const double n = static_cast<double>(points.size());
  CsvWriter summary(dir / "summary.csv", "metric,value");
  summary.row("clean_accuracy", static_cast<double>(correct) / n);
  summary.row("verified_accuracy", static_cast<double>(certified_count) / n);
  summary.row("eps", eps);
  ResultMatrix table(1);
  table.set(1, 1, static_cast<double>(correct) / n);
  save_checkpoint(dir / "checkpoint.json", Checkpoint{model, trainer.seed, table, cfg.resolved()});
  return dir;
}

}  // namespace shield
